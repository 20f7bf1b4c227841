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

#include <filesystem>

#include "lsg/convert.h"
#include "lsg/rng.h"
#include "lsg/weight_bundle.h"
#include "test_util.h"

namespace lsg {
namespace {

WeightBundle sample() {
  WeightBundle b;
  b.add("a", Tensor::from_values({2, 3}, {1, -2, 3.5, 0, 1e-300, -0.0}));
  b.add("b.single", Tensor::from_values({4}, {0.5, 1, 2, 4}, Precision::kSingle));
  b.add("scalar", Tensor::from_values({1}, {42}));
  b.metadata["cls_id"] = "0";
  b.metadata["note"] = "unicode \xc3\xa9 ok";
  return b;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("lsg_test_" + std::to_string(::getpid()) + "_" + name);
}

TEST(Bundle, LayoutOfPrefix) {
  const std::string bytes = serialize_bundle(sample());
  EXPECT_EQ(bytes.substr(0, 4), "LSGW");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) {
    header_len = (header_len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  }
  // Blob: 6 doubles + 4 floats + 1 double.
  EXPECT_EQ(bytes.size(), 16 + header_len + 6 * 8 + 4 * 4 + 8);
  const std::string header = bytes.substr(16, header_len);
  EXPECT_EQ(header.front(), '{');
  EXPECT_NE(header.find("\"dtype\":\"f32\""), std::string::npos);
  EXPECT_NE(header.find("\"offset\":48"), std::string::npos);
}

TEST(Bundle, LittleEndianBlob) {
  WeightBundle b;
  b.add("x", Tensor::from_values({1}, {1.0}));  // 0x3FF0000000000000
  const std::string bytes = serialize_bundle(b);
  const std::string tail = bytes.substr(bytes.size() - 8);
  EXPECT_EQ(tail, std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST(Bundle, EmptyBundleRoundTrips) {
  const WeightBundle empty;
  const std::string bytes = serialize_bundle(empty);
  const WeightBundle back = parse_bundle(bytes);
  EXPECT_EQ(back.size(), 0u);
  EXPECT_TRUE(back.metadata.empty());
  EXPECT_EQ(serialize_bundle(back), bytes);
  // Fixed 16-byte prefix, then only the header.
  EXPECT_EQ(bytes.size(), 16 + std::string("{\"crc32\":\"00000000\","
                                           "\"metadata\":{},\"tensors\":[]}")
                                   .size());
}

TEST(Bundle, RoundTripIsByteIdentical) {
  const auto path = temp_path("rt.lsgw");
  save_bundle(sample(), path);
  const std::string first = read_file(path);
  const WeightBundle loaded = load_bundle(path);
  EXPECT_EQ(loaded.get("a"), sample().get("a"));
  EXPECT_EQ(loaded.get("b.single").precision(), Precision::kSingle);
  EXPECT_EQ(loaded.metadata, sample().metadata);
  save_bundle(loaded, path);
  EXPECT_EQ(read_file(path), first);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

TEST(Bundle, EntryOrderIsPreserved) {
  WeightBundle b;
  for (const char* n : {"z", "a", "m"}) b.add(n, Tensor::from_values({1}, {1}));
  const WeightBundle back = parse_bundle(serialize_bundle(b));
  EXPECT_EQ(back.entries()[0].first, "z");
  EXPECT_EQ(back.entries()[2].first, "m");
}

TEST(Bundle, RejectsDuplicatesAndEmpty) {
  WeightBundle b;
  b.add("x", Tensor::from_values({1}, {1}));
  EXPECT_THROW(b.add("x", Tensor::from_values({1}, {2})), FormatError);
  EXPECT_THROW(b.add("y", Tensor({0}, Precision::kDouble)), FormatError);
  EXPECT_THROW(b.get("nope"), FormatError);
}

TEST(Bundle, EveryTruncationIsRejected) {
  const std::string bytes = serialize_bundle(sample());
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    EXPECT_THROW(parse_bundle(std::string_view(bytes).substr(0, len)),
                 FormatError)
        << "length " << len;
  }
}

TEST(Bundle, EveryBitFlipIsRejected) {
  const std::string bytes = serialize_bundle(sample());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      std::string bad = bytes;
      bad[i] = static_cast<char>(bad[i] ^ (1 << bit));
      EXPECT_THROW(parse_bundle(bad), FormatError) << "byte " << i << " bit " << bit;
    }
  }
}

TEST(Bundle, RandomCorruptionNeverCrashes) {
  const std::string bytes = serialize_bundle(make_toy_bundle({1, 8, 4, 6, 3}));
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string bad = bytes;
    const int edits = 1 + int(rng.next_u64() % 4);
    for (int e = 0; e < edits; ++e) {
      bad[rng.next_u64() % bad.size()] = static_cast<char>(rng.next_u64());
    }
    if (rng.uniform() < 0.3) bad.resize(rng.next_u64() % bad.size());
    if (bad == bytes) continue;
    EXPECT_THROW(parse_bundle(bad), FormatError);
  }
}

TEST(Bundle, TrailingBytesRejected) {
  EXPECT_THROW(parse_bundle(serialize_bundle(sample()) + "x"), FormatError);
}

TEST(Bundle, MissingFileIsIoError) {
  EXPECT_THROW(load_bundle(temp_path("does_not_exist.lsgw")), IoError);
  EXPECT_THROW(save_bundle(sample(), "/nonexistent_dir/x.lsgw"), IoError);
}

TEST(Bundle, LoadErrorsNameThePath) {
  const auto path = temp_path("bad.lsgw");
  write_file_atomic(path, "LSGX0000000000000000");
  try {
    load_bundle(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace lsg
