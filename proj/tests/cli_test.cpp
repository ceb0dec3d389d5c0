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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "tagcomplete/io.hpp"
#include "tagcomplete/synth.hpp"

namespace {

namespace fs = std::filesystem;
using tagcomplete::DenseMatrix;
using tagcomplete::Index;
using tagcomplete::SparseMatrix;

struct Outcome {
  int code;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome run(const std::string& args) const {
    const std::string cmd = std::string(TAGCOMPLETE_CLI) + " " + args + " 2>" +
                            path("stderr.txt");
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
  }

  std::string stderr_text() const { return slurp(path("stderr.txt")); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  static std::map<std::string, std::string> report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  }

  // Dumps a small synthetic instance into the temp directory.
  void make_instance() {
    write("small.cfg", "n_images = 120\nn_tags = 30\nn_topics = 3\nK = 6\nknn = 15\n");
    ASSERT_EQ(run("synth-bench --config " + path("small.cfg") + " --seed 5 --out-dir " +
                  dir_.string()).code,
              0);
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("build-structure --mode q --out x").code, 2);
  EXPECT_EQ(run("complete --K 3").code, 2);
  write("bad.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 9 1\n");
  EXPECT_EQ(run("build-structure --mode t --tags " + path("bad.mtx") + " --out " +
                path("o.mtx")).code,
            2);
  EXPECT_NE(stderr_text().find(":3:"), std::string::npos);
  EXPECT_EQ(run("evaluate --scores " + path("missing.csv") + " --split " +
                path("missing.txt")).code,
            2);
}

TEST_F(CliTest, BuildStructureInvariantsAndDeterminism) {
  make_instance();
  const std::string s_args = "build-structure --mode s --features " + path("features.csv") +
                             " --knn 10 --alpha 0.5 --out ";
  const Outcome s1 = run(s_args + path("s1.mtx"));
  ASSERT_EQ(s1.code, 0);
  EXPECT_EQ(report(s1.out)["structure"], "S");
  ASSERT_EQ(run("build-structure --mode s --features " + path("features.csv") +
                " --knn 10 --alpha 0.5 --out " + path("s2.mtx")).code,
            0);
  EXPECT_EQ(slurp(path("s1.mtx")), slurp(path("s2.mtx")));

  const SparseMatrix s = tagcomplete::io::read_sparse_matrix(path("s1.mtx"));
  for (Index k = 0; k < s.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) EXPECT_NE(it.row(), it.col());

  const Outcome t = run("build-structure --mode t --tags " + path("observed.mtx") +
                    " --knn 4 --mu 0.2 --out " + path("t.mtx"));
  ASSERT_EQ(t.code, 0);
  EXPECT_LE(std::stoll(report(t.out)["max_item_nnz"]), 4);
  const SparseMatrix tm = tagcomplete::io::read_sparse_matrix(path("t.mtx"));
  for (Index j = 0; j < tm.outerSize(); ++j) {
    Index count = 0;
    for (SparseMatrix::InnerIterator it(tm, j); it; ++it) {
      EXPECT_NE(it.row(), it.col());
      ++count;
    }
    EXPECT_LE(count, 4);
  }
}

TEST_F(CliTest, ZeroTagsGiveZeroScores) {
  write("zero.mtx", "%%MatrixMarket matrix coordinate real general\n4 3 0\n");
  write("s.mtx", "%%MatrixMarket matrix coordinate real general\n4 4 0\n");
  write("t.mtx", "%%MatrixMarket matrix coordinate real general\n3 3 0\n");
  const Outcome r = run("complete --tags " + path("zero.mtx") + " --s " + path("s.mtx") +
                    " --t " + path("t.mtx") + " --K 2 --out-scores " + path("scores.csv"));
  ASSERT_EQ(r.code, 0);
  auto kv = report(r.out);
  EXPECT_EQ(kv["converged"], "1");
  EXPECT_EQ(kv["iterations"], "1");
  const DenseMatrix scores = tagcomplete::io::read_dense_matrix(path("scores.csv"));
  EXPECT_EQ(scores, DenseMatrix::Zero(4, 3));
}

TEST_F(CliTest, PlantedFactorizationResidualReported) {
  const auto planted = tagcomplete::synth::planted_factorization(30, 20, 3, 0.7, 2);
  tagcomplete::io::write_sparse_matrix(path("d.mtx"), planted.D.entries());
  write("s.mtx", "%%MatrixMarket matrix coordinate real general\n30 30 0\n");
  write("t.mtx", "%%MatrixMarket matrix coordinate real general\n20 20 0\n");
  const Outcome r = run("complete --tags " + path("d.mtx") + " --s " + path("s.mtx") + " --t " +
                    path("t.mtx") +
                    " --K 3 --gamma 0 --lambda 0 --eta 1e-7 --beta 10 --reinit false"
                    " --rel-tol 1e-14 --max-iters 3000 --out-trace " + path("trace.txt") +
                    " --out-model " + path("model.txt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_LE(std::stod(report(r.out)["relative_residual"]), 1e-3);
  std::istringstream trace(slurp(path("trace.txt")));
  double prev = std::numeric_limits<double>::infinity(), v = 0.0;
  int count = 0;
  while (trace >> v) {
    EXPECT_LE(v, prev + 1e-10 * std::abs(prev));
    prev = v;
    ++count;
  }
  EXPECT_GT(count, 0);
  EXPECT_EQ(tagcomplete::io::read_model(path("model.txt")).model.rank(), 3);
}

TEST_F(CliTest, ManifestAndExplicitFlagsCompose) {
  make_instance();
  write("hp.cfg", "K = 4\nlambda = 0.25\n");
  write("run.manifest", "version = 1\ntags = observed.mtx\ns = S.mtx\nt = T.mtx\n"
                        "overrides = hp.cfg\n");
  const Outcome r = run("complete --manifest " + path("run.manifest") + " --K 3 --out-model " +
                    path("m.txt"));
  ASSERT_EQ(r.code, 0) << stderr_text();
  const auto model = tagcomplete::io::read_model(path("m.txt"));
  EXPECT_EQ(model.model.rank(), 3);
  EXPECT_EQ(model.hp.lambda, 0.25);
  write("broken.manifest", "version = 1\ntags = nowhere.mtx\n");
  EXPECT_EQ(run("complete --manifest " + path("broken.manifest")).code, 2);
}

TEST_F(CliTest, NumericalBlowUpExitsWithThreeAndDumpsTrace) {
  write("huge.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1e200\n2 2 1e200\n");
  write("s.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 0\n");
  const Outcome r = run("complete --tags " + path("huge.mtx") + " --s " + path("s.mtx") + " --t " +
                    path("s.mtx") + " --K 1 --reinit false");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(stderr_text().find("trace[1]="), std::string::npos);
}

TEST_F(CliTest, EvaluateReportFormat) {
  write("split.txt",
        "%%TagCompleteSplit 1\ndims 2 5\n"
        "image 0 1 observed 1 0 deleted 2 1 2\n"
        "image 1 1 observed 1 0 deleted 1 3\n");
  write("scores.csv", "0,0.9,0.1,0.2,0.8\n0,0.9,0.8,0.1,0.2\n");
  const Outcome r = run("evaluate --scores " + path("scores.csv") + " --split " + path("split.txt") +
                    " --n 2 --out " + path("report.txt"));
  ASSERT_EQ(r.code, 0) << stderr_text();
  EXPECT_EQ(r.out, "AP@2=0.25\nAR@2=0.25\nC@2=0.5\n");
  EXPECT_EQ(slurp(path("report.txt")), r.out);
  EXPECT_FALSE(fs::exists(path("report.txt.tmp")));
}

TEST_F(CliTest, SynthBenchPerfectRecoveryAndDeterminism) {
  write("p.cfg", "n_images = 200\nn_tags = 50\nn_topics = 10\noff_topic_prob = 0\n"
                 "K = 10\nknn = 20\n");
  const Outcome a = run("synth-bench --config " + path("p.cfg") + " --seed 3 --out " + path("a.txt"));
  ASSERT_EQ(a.code, 0) << stderr_text();
  EXPECT_EQ(report(a.out)["AP@2"], "1");
  const Outcome b = run("synth-bench --config " + path("p.cfg") + " --seed 3 --out " + path("b.txt"));
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, SynthBenchBaselineNearChance) {
  write("c.cfg", "n_images = 1000\nn_tags = 20\nn_topics = 4\nK = 5\nknn = 30\n");
  const Outcome r = run("synth-bench --config " + path("c.cfg") + " --seed 3");
  ASSERT_EQ(r.code, 0) << stderr_text();
  auto kv = report(r.out);
  const double chance = std::stod(kv["chance_AR@2"]);
  EXPECT_NEAR(std::stod(kv["baseline_AR@2"]), chance, 0.2 * chance);
  EXPECT_GT(std::stod(kv["AR@2"]), 3.0 * chance);
}

TEST_F(CliTest, ThreadEnvironmentVariable) {
  make_instance();
  const std::string args = "build-structure --mode s --features " + path("features.csv") +
                           " --knn 10 --alpha 0.5 --out ";
  const std::string cli = TAGCOMPLETE_CLI;
  auto with_threads = [&](const std::string& t, const std::string& out) {
    const std::string cmd = "TAGCOMPLETE_THREADS=" + t + " " + cli + " " + args + path(out) +
                            " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(with_threads("1", "one.mtx"), 0);
  EXPECT_EQ(with_threads("4", "four.mtx"), 0);
  EXPECT_EQ(slurp(path("one.mtx")), slurp(path("four.mtx")));
  EXPECT_EQ(with_threads("lots", "bad.mtx"), 2);
}

}  // namespace
