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

#ifndef LSG_WEIGHT_BUNDLE_H_
#define LSG_WEIGHT_BUNDLE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsg/tensor.h"

namespace lsg {

// Named tensors in insertion order plus string metadata.
//
// On disk (LSGW, version 1), all integers little-endian:
//   bytes 0..3    magic "LSGW"
//   bytes 4..7    u32 format version
//   bytes 8..15   u64 header length H
//   H bytes       UTF-8 JSON header, compact with sorted keys:
//                 {"crc32": "<8 hex digits>",
//                  "metadata": {string: string, ...},
//                  "tensors": [{"dtype": "f32"|"f64", "length": bytes,
//                               "name": ..., "offset": bytes,
//                               "shape": [...]}, ...]}
//   blob          raw little-endian scalars; tensor extents are relative to
//                 the blob start, back to back in entry order
// crc32 is the zlib CRC-32 of the header serialized without its "crc32" key,
// followed by the blob. Loading rejects any header that is not in that
// canonical form.
class WeightBundle {
 public:
  using Entry = std::pair<std::string, Tensor>;

  // Throws on a duplicate name or an empty tensor.
  void add(std::string name, Tensor tensor);
  // Replaces the tensor in place or appends it.
  void set(const std::string& name, Tensor tensor);
  bool erase(const std::string& name);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::map<std::string, std::string> metadata;

 private:
  std::vector<Entry> entries_;
};

inline constexpr uint32_t kBundleVersion = 1;

std::string serialize_bundle(const WeightBundle& bundle);
// Throws FormatError with a diagnostic; never returns a partial bundle.
WeightBundle parse_bundle(std::string_view bytes);

void save_bundle(const WeightBundle& bundle, const std::filesystem::path& path);
WeightBundle load_bundle(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

}  // namespace lsg

#endif  // LSG_WEIGHT_BUNDLE_H_
