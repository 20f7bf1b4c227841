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

#include "lsg/weight_bundle.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace lsg {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'L', 'S', 'G', 'W'};
constexpr std::size_t kPrefixBytes = 16;

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(std::string_view in, std::size_t at) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return value;
}

template <Scalar T>
void append_scalars(std::string& out, std::span<const T> values) {
  using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
  for (T v : values) put_le<Bits>(out, std::bit_cast<Bits>(v));
}

template <Scalar T>
std::vector<T> read_scalars(std::string_view in, std::size_t count) {
  using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
  std::vector<T> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<T>(get_le<Bits>(in, i * sizeof(T)));
  }
  return values;
}

std::string crc_hex(std::string_view header, std::string_view blob) {
  uLong crc = crc32(0L, Z_NULL, 0);
  auto feed = [&crc](std::string_view bytes) {
    // zlib takes uInt lengths; feed in bounded pieces.
    constexpr std::size_t kPiece = 1u << 30;
    for (std::size_t at = 0; at < bytes.size(); at += kPiece) {
      const std::size_t len = std::min(kPiece, bytes.size() - at);
      crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + at),
                  static_cast<uInt>(len));
    }
  };
  feed(header);
  feed(blob);
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0')
     << static_cast<uint32_t>(crc);
  return os.str();
}

[[noreturn]] void bad(const std::string& why) {
  throw FormatError("LSGW: " + why);
}

}  // namespace

void WeightBundle::add(std::string name, Tensor tensor) {
  if (contains(name)) throw FormatError("duplicate tensor name '" + name + "'");
  if (tensor.size() == 0) {
    throw FormatError("tensor '" + name + "' is empty");
  }
  entries_.emplace_back(std::move(name), std::move(tensor));
}

void WeightBundle::set(const std::string& name, Tensor tensor) {
  for (auto& [key, value] : entries_) {
    if (key == name) {
      if (tensor.size() == 0) {
        throw FormatError("tensor '" + name + "' is empty");
      }
      value = std::move(tensor);
      return;
    }
  }
  add(name, std::move(tensor));
}

bool WeightBundle::erase(const std::string& name) {
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const Entry& e) { return e.first == name; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

bool WeightBundle::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

const Tensor& WeightBundle::get(const std::string& name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  throw FormatError("bundle has no tensor named '" + name + "'");
}

std::string serialize_bundle(const WeightBundle& bundle) {
  std::string blob;
  json tensors = json::array();
  for (const auto& [name, t] : bundle.entries()) {
    const std::size_t offset = blob.size();
    if (t.precision() == Precision::kSingle) {
      append_scalars<float>(blob, t.data<float>());
    } else {
      append_scalars<double>(blob, t.data<double>());
    }
    tensors.push_back({{"name", name},
                       {"dtype", t.precision() == Precision::kSingle ? "f32"
                                                                     : "f64"},
                       {"shape", t.shape()},
                       {"offset", offset},
                       {"length", blob.size() - offset}});
  }
  json header = {{"metadata", bundle.metadata}, {"tensors", tensors}};
  const std::string crc = crc_hex(header.dump(), blob);
  header["crc32"] = crc;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<uint32_t>(out, kBundleVersion);
  put_le<uint64_t>(out, text.size());
  out += text;
  out += blob;
  return out;
}

WeightBundle parse_bundle(std::string_view bytes) {
  if (bytes.size() < kPrefixBytes) {
    bad("file too short (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) bad("bad magic");
  const auto version = get_le<uint32_t>(bytes, 4);
  if (version != kBundleVersion) {
    bad("unsupported version " + std::to_string(version));
  }
  const auto header_len = get_le<uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kPrefixBytes) {
    bad("header length " + std::to_string(header_len) + " exceeds file");
  }
  const std::string_view text = bytes.substr(kPrefixBytes, header_len);
  const std::string_view blob = bytes.substr(kPrefixBytes + header_len);

  json header;
  try {
    header = json::parse(text);
    if (!header.is_object()) bad("header is not a JSON object");
    if (header.dump() != text) bad("header is not in canonical form");
  } catch (const json::exception& e) {
    bad(std::string("header JSON: ") + e.what());
  }
  if (header.size() != 3 || !header.contains("crc32") ||
      !header.contains("metadata") || !header.contains("tensors")) {
    bad("header must hold exactly crc32, metadata and tensors");
  }
  if (!header["crc32"].is_string()) bad("crc32 must be a string");
  const std::string stored_crc = header["crc32"].get<std::string>();
  header.erase("crc32");
  if (crc_hex(header.dump(), blob) != stored_crc) bad("checksum mismatch");

  WeightBundle bundle;
  const json& meta = header["metadata"];
  if (!meta.is_object()) bad("metadata must be an object");
  for (const auto& [key, value] : meta.items()) {
    if (!value.is_string()) bad("metadata '" + key + "' is not a string");
    bundle.metadata[key] = value.get<std::string>();
  }

  const json& tensors = header["tensors"];
  if (!tensors.is_array()) bad("tensors must be an array");
  struct Extent {
    uint64_t offset, length;
  };
  std::vector<Extent> extents;
  std::vector<WeightBundle::Entry> pending;
  for (const json& e : tensors) {
    if (!e.is_object() || e.size() != 5) bad("malformed tensor entry");
    for (const char* key : {"name", "dtype", "shape", "offset", "length"}) {
      if (!e.contains(key)) bad(std::string("tensor entry lacks ") + key);
    }
    if (!e["name"].is_string()) bad("tensor name must be a string");
    const std::string name = e["name"].get<std::string>();
    if (!e["dtype"].is_string()) bad("dtype of '" + name + "' not a string");
    const std::string dtype = e["dtype"].get<std::string>();
    std::size_t elem = 0;
    if (dtype == "f32") {
      elem = 4;
    } else if (dtype == "f64") {
      elem = 8;
    } else {
      bad("unknown dtype '" + dtype + "' for '" + name + "'");
    }
    if (!e["shape"].is_array()) bad("shape of '" + name + "' not an array");
    Shape shape;
    uint64_t numel = 1;
    for (const json& d : e["shape"]) {
      if (!d.is_number_unsigned()) bad("bad extent in shape of '" + name + "'");
      const auto extent = d.get<uint64_t>();
      if (extent != 0 && numel > std::numeric_limits<uint64_t>::max() / extent) {
        bad("shape of '" + name + "' overflows");
      }
      numel *= extent;
      shape.push_back(static_cast<std::size_t>(extent));
    }
    if (numel == 0) bad("tensor '" + name + "' is empty");
    if (!e["offset"].is_number_unsigned() || !e["length"].is_number_unsigned()) {
      bad("offset/length of '" + name + "' must be unsigned integers");
    }
    const auto offset = e["offset"].get<uint64_t>();
    const auto length = e["length"].get<uint64_t>();
    if (numel > std::numeric_limits<uint64_t>::max() / elem ||
        length != numel * elem) {
      bad("length of '" + name + "' does not match shape and dtype");
    }
    if (offset > blob.size() || length > blob.size() - offset) {
      bad("tensor '" + name + "' extends past the end of the blob (truncated)");
    }
    extents.push_back({offset, length});
    const std::string_view raw = blob.substr(offset, length);
    try {
      if (elem == 4) {
        pending.emplace_back(
            name, Tensor::from_buffer<float>(shape, read_scalars<float>(raw, numel)));
      } else {
        pending.emplace_back(name, Tensor::from_buffer<double>(
                                       shape, read_scalars<double>(raw, numel)));
      }
    } catch (const NumericError& err) {
      bad("tensor '" + name + "': " + err.what());
    }
  }
  std::sort(extents.begin(), extents.end(),
            [](const Extent& a, const Extent& b) { return a.offset < b.offset; });
  uint64_t end = 0;
  for (const Extent& x : extents) {
    if (x.offset < end) bad("overlapping tensor extents");
    end = x.offset + x.length;
  }
  if (end != blob.size()) {
    bad("blob has " + std::to_string(blob.size() - end) + " unclaimed bytes");
  }
  for (auto& [name, t] : pending) {
    if (bundle.contains(name)) bad("duplicate tensor name '" + name + "'");
    bundle.add(std::move(name), std::move(t));
  }
  return bundle;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

void save_bundle(const WeightBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_bundle(bundle));
}

WeightBundle load_bundle(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_bundle(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lsg
