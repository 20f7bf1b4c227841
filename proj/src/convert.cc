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

#include "lsg/convert.h"

#include <charconv>
#include <string>

#include "lsg/rng.h"

namespace lsg {

namespace {

std::size_t parse_index(const WeightBundle& bundle, const char* key) {
  const auto it = bundle.metadata.find(key);
  if (it == bundle.metadata.end()) {
    throw FormatError(std::string("convert: metadata lacks '") + key + "'");
  }
  std::size_t value = 0;
  const std::string& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError(std::string("convert: metadata '") + key +
                      "' is not an index: '" + s + "'");
  }
  return value;
}

const std::string& require_key(const WeightBundle& bundle, const char* key) {
  const auto it = bundle.metadata.find(key);
  if (it == bundle.metadata.end()) {
    throw FormatError(std::string("convert: metadata lacks '") + key + "'");
  }
  return it->second;
}

Tensor row_of(const Tensor& matrix, std::size_t row) {
  if (matrix.rank() != 2 || row >= matrix.dim(0)) {
    throw ShapeError("row " + std::to_string(row) + " outside " +
                     shape_str(matrix.shape()));
  }
  const std::size_t d = matrix.dim(1);
  if (matrix.precision() == Precision::kSingle) {
    auto src = matrix.data<float>().subspan(row * d, d);
    return Tensor::from_buffer<float>({d}, {src.begin(), src.end()});
  }
  auto src = matrix.data<double>().subspan(row * d, d);
  return Tensor::from_buffer<double>({d}, {src.begin(), src.end()});
}

template <Scalar T>
Tensor extend_typed(const Tensor& positions, std::size_t target_len) {
  const std::size_t L = positions.dim(0), d = positions.dim(1);
  auto src = positions.data<T>();
  std::vector<T> out(target_len * d);
  for (std::size_t i = 0; i < target_len; ++i) {
    std::copy_n(src.data() + (i % L) * d, d, out.data() + i * d);
  }
  return Tensor::from_buffer<T>({target_len, d}, std::move(out));
}

template <Scalar T>
Tensor globals_typed(const Tensor& cls, const Tensor& mask,
                     const Tensor& positions, std::size_t g) {
  const std::size_t d = positions.dim(1);
  auto p = positions.data<T>();
  auto c = cls.data<T>();
  auto m = mask.data<T>();
  std::vector<T> out(g * d);
  for (std::size_t i = 0; i < g; ++i) {
    const auto& base = i == 0 ? c : m;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = base[j] + p[i * d + j];
  }
  return Tensor::from_buffer<T>({g, d}, std::move(out));
}

}  // namespace

Tensor extend_positional(const Tensor& positions, std::size_t target_len) {
  if (positions.rank() != 2 || positions.dim(0) < 1) {
    throw ShapeError("extend_positional: expected [L x d] with L >= 1, got " +
                     shape_str(positions.shape()));
  }
  if (target_len < positions.dim(0)) {
    throw ShapeError("extend_positional: target length " +
                     std::to_string(target_len) + " is below " +
                     std::to_string(positions.dim(0)));
  }
  if (positions.precision() == Precision::kSingle) {
    return extend_typed<float>(positions, target_len);
  }
  return extend_typed<double>(positions, target_len);
}

Tensor init_globals(const Tensor& cls_embedding, const Tensor& mask_embedding,
                    const Tensor& positions, std::size_t globals) {
  if (positions.rank() != 2) {
    throw ShapeError("init_globals: positions must be [L x d]");
  }
  const std::size_t d = positions.dim(1);
  if (globals < 1) throw ShapeError("init_globals: need at least one global");
  if (globals > positions.dim(0)) {
    throw ShapeError("init_globals: " + std::to_string(globals) +
                     " globals exceed " + std::to_string(positions.dim(0)) +
                     " positions");
  }
  if (cls_embedding.size() != d || mask_embedding.size() != d) {
    throw ShapeError("init_globals: token embeddings must have dim " +
                     std::to_string(d));
  }
  if (cls_embedding.precision() != positions.precision() ||
      mask_embedding.precision() != positions.precision()) {
    throw ShapeError("init_globals: precision mismatch");
  }
  Tensor out = positions.precision() == Precision::kSingle
                   ? globals_typed<float>(cls_embedding, mask_embedding,
                                          positions, globals)
                   : globals_typed<double>(cls_embedding, mask_embedding,
                                           positions, globals);
  out.require_finite("init_globals");
  return out;
}

WeightBundle convert(const WeightBundle& bundle, const LsgConfig& cfg,
                     std::size_t target_len) {
  validate(cfg);
  const std::string& pos_name = require_key(bundle, kPositionalEntryKey);
  const std::string& emb_name = require_key(bundle, kEmbeddingEntryKey);
  const std::size_t cls_id = parse_index(bundle, kClsIdKey);
  const std::size_t mask_id = parse_index(bundle, kMaskIdKey);
  const Tensor& positions = bundle.get(pos_name);
  const Tensor& embeddings = bundle.get(emb_name);

  WeightBundle out = bundle;
  out.set(pos_name, extend_positional(positions, target_len));
  if (cfg.globals > 0) {
    out.set(kGlobalEntryName,
            init_globals(row_of(embeddings, cls_id), row_of(embeddings, mask_id),
                         positions, cfg.globals));
  } else {
    out.erase(kGlobalEntryName);
  }
  out.metadata["max_positions"] = std::to_string(target_len);
  out.metadata["lsg.block_size"] = std::to_string(cfg.block_size);
  out.metadata["lsg.sparsity"] = std::to_string(cfg.sparsity);
  out.metadata["lsg.globals"] = std::to_string(cfg.globals);
  out.metadata["lsg.strategy"] = strategy_name(cfg.strategy);
  out.metadata["lsg.causal"] = cfg.causal ? "1" : "0";
  out.metadata["lsg.seed"] = std::to_string(cfg.seed);
  return out;
}

WeightBundle make_toy_bundle(const ToyModelSpec& spec) {
  Rng rng(spec.seed);
  const std::size_t d = spec.dim;
  WeightBundle b;
  b.add("embeddings.word", rng_normal(rng, {spec.vocab, d}, spec.precision));
  b.add("embeddings.position",
        rng_normal(rng, {spec.max_positions, d}, spec.precision));
  for (std::size_t l = 0; l < spec.layers; ++l) {
    const std::string prefix = "layers." + std::to_string(l) + ".";
    for (const char* proj : {"query", "key", "value", "output"}) {
      b.add(prefix + "attention." + proj + ".weight",
            rng_normal(rng, {d, d}, spec.precision));
      b.add(prefix + "attention." + proj + ".bias",
            rng_normal(rng, {d}, spec.precision));
    }
    b.add(prefix + "ffn.in.weight", rng_normal(rng, {d, 4 * d}, spec.precision));
    b.add(prefix + "ffn.out.weight",
          rng_normal(rng, {4 * d, d}, spec.precision));
  }
  b.metadata[kPositionalEntryKey] = "embeddings.position";
  b.metadata[kEmbeddingEntryKey] = "embeddings.word";
  b.metadata[kClsIdKey] = "0";
  b.metadata[kMaskIdKey] = std::to_string(spec.vocab > 1 ? spec.vocab - 1 : 0);
  b.metadata["max_positions"] = std::to_string(spec.max_positions);
  b.metadata["hidden_size"] = std::to_string(d);
  b.metadata["num_layers"] = std::to_string(spec.layers);
  return b;
}

}  // namespace lsg
