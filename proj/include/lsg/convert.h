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

#ifndef LSG_CONVERT_H_
#define LSG_CONVERT_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "lsg/config.h"
#include "lsg/tensor.h"
#include "lsg/weight_bundle.h"

namespace lsg {

// Metadata keys a bundle must carry to be converted.
inline constexpr const char* kPositionalEntryKey = "positional_entry";
inline constexpr const char* kEmbeddingEntryKey = "embedding_entry";
inline constexpr const char* kClsIdKey = "cls_id";
inline constexpr const char* kMaskIdKey = "mask_id";
inline constexpr const char* kGlobalEntryName = "global_embeddings";

// Row i of the result is row (i mod L) of positions[L x d].
Tensor extend_positional(const Tensor& positions, std::size_t target_len);

// Row 0 = cls + positions[0]; row i = mask + positions[i] for 0 < i < g.
Tensor init_globals(const Tensor& cls_embedding, const Tensor& mask_embedding,
                    const Tensor& positions, std::size_t globals);

// Extends the positional matrix to target_len rows, (re)creates the global
// embedding entry from the [CLS]/[MASK] rows and records the attention
// config in metadata under "lsg.*". Every other entry is carried over
// untouched.
WeightBundle convert(const WeightBundle& bundle, const LsgConfig& cfg,
                     std::size_t target_len);

struct ToyModelSpec {
  std::size_t layers = 2;
  std::size_t max_positions = 512;
  std::size_t dim = 16;
  std::size_t vocab = 32;
  uint64_t seed = 0;
  Precision precision = Precision::kSingle;
};

// Small encoder-shaped bundle with the metadata convert() expects.
WeightBundle make_toy_bundle(const ToyModelSpec& spec);

}  // namespace lsg

#endif  // LSG_CONVERT_H_
