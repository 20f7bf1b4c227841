// Copyright 2026 The LSG Attention Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "lsg/bench.h"
#include "lsg/check.h"
#include "lsg/dense_oracle.h"
#include "lsg/weight_bundle.h"

namespace lsg {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status;
  std::string out;
};

CliResult cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " LSG_CLI_PATH " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    out.append(buf.data(), got);
  }
  const int raw = ::pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lsg_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("check --bogus").status, 2);
  EXPECT_EQ(cli("check --strategy random").status, 2);
  EXPECT_EQ(cli("bench --lens 64 --repeats 2").status, 2);
  EXPECT_EQ(cli("bench --lens 0,64").status, 2);
  EXPECT_EQ(cli("bench").status, 2);
  EXPECT_EQ(cli("pattern --n 16 --bt 4 --f 3 --out " + path("x.pgm")).status, 2);
  EXPECT_EQ(cli("check --quick", "LSG_SEED=abc").status, 2);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST_F(Cli, RuntimeFailureExitsOne) {
  EXPECT_EQ(cli("convert --in " + path("missing.lsgw") + " --out " +
                path("o.lsgw"))
                .status,
            1);
}

TEST_F(Cli, CheckQuickPasses) {
  const CliResult r = cli("check --quick --strategy pooling");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("PASS oracle_equivalence"), std::string::npos);
  EXPECT_NE(r.out.find("PASS gradient_finite_difference"), std::string::npos);
}

TEST_F(Cli, CheckIsReproducible) {
  const CliResult a = cli("check --quick --strategy lsh --seed 7");
  const CliResult b = cli("check --quick --strategy lsh --seed 7");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, PatternMatchesAugmentedMask) {
  const CliResult r = cli("pattern --n 16 --bt 4 --f 2 --strategy pooling --seed 3 --out " +
                    path("p.pgm"));
  ASSERT_EQ(r.status, 0);
  LsgConfig cfg;
  cfg.block_size = 4;
  cfg.sparsity = 2;
  cfg.strategy = SparseStrategy::kPooling;
  cfg.heads = 2;
  cfg.head_dim = 4;
  cfg.precision = Precision::kDouble;
  cfg.seed = 3;
  const LsgAttention attn(cfg);
  const PatternRender expected =
      render_pattern(build_augmented(attn, random_inputs(cfg, 16, 3)), 0);
  EXPECT_EQ(read_file(path("p.pgm")), expected.pgm);
  EXPECT_EQ(read_file(path("p.csv")), expected.csv);
}

TEST_F(Cli, PatternSeedFallsBackToEnvironment) {
  const std::string args = "pattern --n 32 --bt 4 --f 2 --strategy norm --out ";
  ASSERT_EQ(cli(args + path("a.pgm") + " --seed 11").status, 0);
  ASSERT_EQ(cli(args + path("b.pgm"), "LSG_SEED=11").status, 0);
  ASSERT_EQ(cli(args + path("c.pgm"), "LSG_SEED=12").status, 0);
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  EXPECT_NE(read_file(path("a.csv")), read_file(path("c.csv")));
}

TEST_F(Cli, LocalOnlyPatternIsABand) {
  ASSERT_EQ(cli("pattern --n 12 --bt 4 --out " + path("band.pgm")).status, 0);
  const std::string pgm = read_file(path("band.pgm"));
  const std::string header = "P5\n12 12\n1\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  for (std::size_t q = 0; q < 12; ++q) {
    for (std::size_t k = 0; k < 12; ++k) {
      const long d = long(q / 4) - long(k / 4);
      EXPECT_EQ(pgm[header.size() + q * 12 + k], std::abs(d) <= 1 ? 1 : 0);
    }
  }
}

TEST_F(Cli, ToyThenConvert) {
  ASSERT_EQ(cli("toy --out " + path("toy.lsgw")).status, 0);
  ASSERT_EQ(cli("convert --in " + path("toy.lsgw") +
                " --target-len 4096 --globals 1 --out " + path("toy4k.lsgw"))
                .status,
            0);
  const WeightBundle out = load_bundle(path("toy4k.lsgw"));
  EXPECT_EQ(out.get("embeddings.position").dim(0), 4096u);
  EXPECT_EQ(out.get("global_embeddings").dim(0), 1u);
  EXPECT_FALSE(fs::exists(path("toy4k.lsgw.tmp")));
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream l(line);
    std::string cell;
    while (std::getline(l, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST_F(Cli, BenchRowsAndDeterministicColumns) {
  const std::string args =
      "bench --lens 128,256 --bt 16 --f 2 --g 1 --heads 2 --dh 8 --repeats 3 --out ";
  ASSERT_EQ(cli(args + path("a.csv")).status, 0);
  ASSERT_EQ(cli(args + path("b.csv")).status, 0);
  const auto a = parse_csv(read_file(path("a.csv")));
  const auto b = parse_csv(read_file(path("b.csv")));
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(read_file(path("a.csv")).substr(0, bench_csv_header().size()),
            bench_csv_header());
  for (std::size_t r = 1; r < a.size(); ++r) {
    ASSERT_EQ(a[r].size(), 12u);
    EXPECT_GT(std::stoull(a[r][8]), 0u);
    for (std::size_t c = 0; c < 12; ++c) {
      if (c != 8) {
        EXPECT_EQ(a[r][c], b[r][c]) << r << "," << c;
      }
    }
  }
  EXPECT_EQ(a[1][0], "full");
  EXPECT_EQ(a[1][9], "16641");  // (128 + 1)^2
  EXPECT_EQ(a[3][0], "lsg");
  EXPECT_EQ(a[3][11], "analytic");
}

TEST_F(Cli, BenchEntriesFollowCounter) {
  const CliResult r = cli("bench --attn lsg --lens 1024,2048 --bt 128 --f 2 --g 1 --heads 1 --dh 4");
  ASSERT_EQ(r.status, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][9], "657409");
  EXPECT_EQ(rows[2][9], "1314817");
}

}  // namespace
}  // namespace lsg
