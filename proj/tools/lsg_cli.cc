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

// lsg_cli: self-checks, scaling benchmarks, pattern rendering and checkpoint
// conversion.
//
// Exit status: 0 success, 1 failed property or runtime error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsg/bench.h"
#include "lsg/check.h"
#include "lsg/convert.h"
#include "lsg/dense_oracle.h"
#include "lsg/weight_bundle.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

uint64_t resolve_seed(const std::optional<uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("LSG_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const uint64_t v = std::stoull(env, &used, 10);
    if (used == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("LSG_SEED is not an unsigned integer: ") + env);
}

lsg::SparseStrategy resolve_strategy(const std::string& name, std::size_t f) {
  if (name.empty()) {
    return f == 0 ? lsg::SparseStrategy::kNone : lsg::SparseStrategy::kNorm;
  }
  return lsg::parse_strategy(name);
}

struct LayerFlags {
  std::size_t bt = 128;
  std::size_t f = 0;
  std::size_t g = 0;
  std::string strategy;
  bool causal = false;
  std::size_t heads = 1;
  std::size_t dh = 64;
  std::string precision = "single";

  void attach(CLI::App* cmd) {
    cmd->add_option("--bt", bt, "Block size")->capture_default_str();
    cmd->add_option("--f", f, "Sparsity factor (0 disables sparse keys)")
        ->capture_default_str();
    cmd->add_option("--g,--globals", g, "Number of global tokens")->capture_default_str();
    cmd->add_option("--strategy", strategy,
                    "none, strided, block_strided, pooling, norm, lsh "
                    "(default: norm when f > 0)");
    cmd->add_flag("--causal", causal, "Causal masking");
    cmd->add_option("--heads", heads, "Attention heads")->capture_default_str();
    cmd->add_option("--dh", dh, "Head dimension")->capture_default_str();
    cmd->add_option("--precision", precision, "single or double")
        ->capture_default_str();
  }

  lsg::LsgConfig config(uint64_t seed) const {
    lsg::LsgConfig cfg;
    cfg.block_size = bt;
    cfg.sparsity = f;
    cfg.globals = g;
    cfg.strategy = resolve_strategy(strategy, f);
    cfg.causal = causal;
    cfg.heads = heads;
    cfg.head_dim = dh;
    cfg.precision = lsg::parse_precision(precision);
    cfg.seed = seed;
    const lsg::ConfigStatus status = lsg::validate(cfg);
    if (status.nonstandard_sparsity) {
      std::cerr << "note: sparsity factor " << f
                << " is outside the usual {2, 4, 8}\n";
    }
    return cfg;
  }
};

int run_check(bool quick, const std::string& strategy,
              const std::optional<uint64_t>& seed, std::size_t threads) {
  lsg::CheckOptions opts;
  opts.quick = quick;
  if (!strategy.empty()) opts.strategy = lsg::parse_strategy(strategy);
  opts.seed = resolve_seed(seed);
  opts.threads = threads;
  const lsg::CheckReport report = lsg::run_checks(opts);
  std::cout << report.text();
  return report.passed() ? 0 : kExitFailure;
}

int run_bench(const std::string& attn, const std::vector<std::size_t>& lens,
              const LayerFlags& layer, std::size_t repeats,
              std::size_t threads, const std::optional<uint64_t>& seed,
              const std::string& out) {
  if (lens.empty()) throw UsageError("bench: --lens is required");
  for (std::size_t n : lens) {
    if (n == 0) throw UsageError("bench: lengths must be positive");
  }
  if (repeats < 3) throw UsageError("bench: --repeats must be at least 3");
  std::vector<lsg::AttentionKind> kinds;
  if (attn == "both") {
    kinds = {lsg::AttentionKind::kFull, lsg::AttentionKind::kLsg};
  } else {
    kinds = {lsg::parse_attention_kind(attn)};
  }
  lsg::BenchOptions opts;
  opts.repeats = repeats;
  opts.threads = threads;
  opts.seed = resolve_seed(seed);
  const lsg::LsgConfig cfg = layer.config(opts.seed);
  std::ostringstream csv;
  csv << lsg::bench_csv_header() << '\n';
  for (lsg::AttentionKind kind : kinds) {
    for (std::size_t n : lens) {
      csv << lsg::bench_csv_row(lsg::bench_one(kind, cfg, n, opts)) << '\n';
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    lsg::write_file_atomic(out, csv.str());
  }
  return 0;
}

int run_pattern(std::size_t n, const LayerFlags& layer, std::size_t head,
                const std::optional<uint64_t>& seed, const std::string& out) {
  if (n == 0) throw UsageError("pattern: --n must be positive");
  const lsg::LsgConfig cfg = layer.config(resolve_seed(seed));
  if (head >= cfg.heads) {
    throw UsageError("pattern: --head must be below --heads");
  }
  const lsg::LsgAttention attention(cfg);
  const lsg::AttentionInputs in = lsg::random_inputs(cfg, n, cfg.seed);
  const lsg::PatternRender render =
      lsg::render_pattern(lsg::build_augmented(attention, in), head);
  std::filesystem::path pgm(out);
  std::filesystem::path csv = pgm;
  csv.replace_extension(".csv");
  lsg::write_file_atomic(pgm, render.pgm);
  lsg::write_file_atomic(csv, render.csv);
  std::cout << "wrote " << pgm.string() << " and " << csv.string() << '\n';
  return 0;
}

int run_convert(const std::string& in_path, const std::string& out_path,
                std::size_t target_len, const LayerFlags& layer,
                const std::optional<uint64_t>& seed) {
  const lsg::LsgConfig cfg = layer.config(resolve_seed(seed));
  const lsg::WeightBundle src = lsg::load_bundle(in_path);
  const lsg::WeightBundle dst = lsg::convert(src, cfg, target_len);
  lsg::save_bundle(dst, out_path);
  std::cout << "wrote " << out_path << " (" << dst.size() << " tensors)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local, sparse and global attention toolkit"};
  app.require_subcommand(1);

  std::optional<uint64_t> seed;
  std::size_t threads = 1;

  auto* check = app.add_subcommand("check", "Run the property self-checks");
  bool quick = false;
  std::string check_strategy;
  std::size_t check_threads = 2;
  check->add_flag("--quick", quick, "Coarse grid");
  check->add_option("--strategy", check_strategy, "Restrict to one strategy");
  check->add_option("--seed", seed, "Seed (falls back to LSG_SEED)");
  check->add_option("--threads", check_threads,
                    "Worker count compared against the serial schedule")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Time full and blocked attention");
  std::string attn = "both";
  std::vector<std::size_t> lens;
  std::size_t repeats = 3;
  std::string bench_out;
  LayerFlags bench_layer;
  bench_layer.f = 2;
  bench_layer.g = 1;
  bench_layer.heads = 4;
  bench_layer.dh = 32;
  bench->add_option("--attn", attn, "full, lsg or both")->capture_default_str();
  bench->add_option("--lens", lens, "Comma-separated sequence lengths")
      ->delimiter(',');
  bench_layer.attach(bench);
  bench->add_option("--repeats", repeats, "Timed repeats (median is reported)")
      ->capture_default_str();
  bench->add_option("--threads", threads, "Worker threads")
      ->capture_default_str();
  bench->add_option("--seed", seed, "Seed (falls back to LSG_SEED)");
  bench->add_option("--out", bench_out, "CSV path (default stdout)");

  auto* pattern = app.add_subcommand("pattern", "Render an attention mask");
  std::size_t pattern_n = 16;
  std::size_t head = 0;
  std::string pattern_out;
  LayerFlags pattern_layer;
  pattern_layer.bt = 4;
  pattern_layer.heads = 2;
  pattern_layer.dh = 4;
  pattern_layer.precision = "double";
  pattern->add_option("--n", pattern_n, "Sequence length")
      ->capture_default_str();
  pattern_layer.attach(pattern);
  pattern->add_option("--head", head, "Head to render")->capture_default_str();
  pattern->add_option("--seed", seed, "Seed (falls back to LSG_SEED)");
  pattern->add_option("--out", pattern_out, "PGM path; a .csv goes beside it")
      ->required();

  auto* conv = app.add_subcommand("convert", "Convert a bundle for long inputs");
  std::string conv_in, conv_out;
  std::size_t target_len = 4096;
  LayerFlags conv_layer;
  conv->add_option("--in", conv_in, "Input LSGW bundle")->required();
  conv->add_option("--out", conv_out, "Output LSGW bundle")->required();
  conv->add_option("--target-len", target_len, "New maximum length")
      ->capture_default_str();
  conv_layer.attach(conv);
  conv->add_option("--seed", seed, "Seed (falls back to LSG_SEED)");

  auto* toy = app.add_subcommand("toy", "Write a small test bundle");
  lsg::ToyModelSpec toy_spec;
  std::string toy_out, toy_precision = "single";
  toy->add_option("--out", toy_out, "Output LSGW bundle")->required();
  toy->add_option("--layers", toy_spec.layers)->capture_default_str();
  toy->add_option("--max-positions", toy_spec.max_positions)
      ->capture_default_str();
  toy->add_option("--dim", toy_spec.dim)->capture_default_str();
  toy->add_option("--vocab", toy_spec.vocab)->capture_default_str();
  toy->add_option("--precision", toy_precision)->capture_default_str();
  toy->add_option("--seed", seed, "Seed (falls back to LSG_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*check) return run_check(quick, check_strategy, seed, check_threads);
    if (*bench) {
      return run_bench(attn, lens, bench_layer, repeats, threads, seed,
                       bench_out);
    }
    if (*pattern) {
      return run_pattern(pattern_n, pattern_layer, head, seed, pattern_out);
    }
    if (*conv) {
      return run_convert(conv_in, conv_out, target_len, conv_layer, seed);
    }
    if (*toy) {
      toy_spec.seed = resolve_seed(seed);
      toy_spec.precision = lsg::parse_precision(toy_precision);
      lsg::save_bundle(lsg::make_toy_bundle(toy_spec), toy_out);
      std::cout << "wrote " << toy_out << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const lsg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
