// Copyright 2026 The TagComplete Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagcomplete/core.hpp"
#include "tagcomplete/metrics.hpp"
#include "tagcomplete/synth.hpp"

namespace tagcomplete::io {

namespace fs = std::filesystem;

// MatrixMarket coordinate format, 1-based indices. The field may be real,
// integer or pattern; symmetry must be general. Duplicate entries are summed.
SparseMatrix read_sparse_matrix(const fs::path& path);
SparseMatrix read_sparse_matrix(std::istream& in, const std::string& source);
void write_sparse_matrix(const fs::path& path, const SparseMatrix& m);
void write_sparse_matrix(std::ostream& out, const SparseMatrix& m);

// Comma separated, one row per line. A first line that does not parse as
// numbers is taken as a header and skipped.
DenseMatrix read_dense_matrix(const fs::path& path);
DenseMatrix read_dense_matrix(std::istream& in, const std::string& source);
void write_dense_matrix(const fs::path& path, const DenseMatrix& m);
void write_dense_matrix(std::ostream& out, const DenseMatrix& m);

// Fitted model plus the settings and trace that produced it.
struct ModelFile {
  FactorModel model;
  Hyperparams hp;
  std::vector<double> trace;
  bool converged = false;
  Index iterations = 0;
};

inline constexpr int kModelVersion = 1;
inline constexpr int kSplitVersion = 1;
inline constexpr int kManifestVersion = 1;

void write_model(const fs::path& path, const ModelFile& file);
void write_model(std::ostream& out, const ModelFile& file);
ModelFile read_model(const fs::path& path);
ModelFile read_model(std::istream& in, const std::string& source);

void write_split(const fs::path& path, const metrics::EvalSplit& split);
void write_split(std::ostream& out, const metrics::EvalSplit& split);
metrics::EvalSplit read_split(const fs::path& path);
metrics::EvalSplit read_split(std::istream& in, const std::string& source);

// Flat "key = value" file; '#' starts a comment.
std::map<std::string, std::string> read_key_values(const fs::path& path);
std::map<std::string, std::string> read_key_values(std::istream& in,
                                                   const std::string& source);

// Applies recognized keys; returns the keys that were not recognized.
std::vector<std::string> apply_hyperparams(
    const std::map<std::string, std::string>& kv, Hyperparams& hp);
std::vector<std::string> apply_synth_config(
    const std::map<std::string, std::string>& kv, synth::SynthConfig& cfg);

struct Manifest {
  int version = kManifestVersion;
  fs::path tags;
  std::optional<fs::path> features;
  std::optional<fs::path> s;
  std::optional<fs::path> t;
  std::optional<fs::path> overrides;
};

// Relative paths are resolved against the manifest's directory. Every
// referenced file must exist.
Manifest read_manifest(const fs::path& path);

// Writes through a temporary sibling file and renames it into place.
void write_atomically(const fs::path& path,
                      const std::function<void(std::ostream&)>& writer);

std::string format_double(double v);

}  // namespace tagcomplete::io
