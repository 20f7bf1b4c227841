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

#include "lsg/dense_oracle.h"

#include <cmath>
#include <sstream>
#include <string>

namespace lsg {

namespace {

template <typename Fn>
decltype(auto) dispatch(Precision p, Fn&& fn) {
  if (p == Precision::kSingle) return fn(float{});
  return fn(double{});
}

Tensor globals_or_empty(const Tensor& x, std::size_t g, std::size_t d,
                        Precision p) {
  if (g == 0 && x.size() == 0) return Tensor({0, d}, p);
  if (x.rank() != 2 || x.dim(0) != g || x.dim(1) != d) {
    throw ShapeError("expected globals [" + std::to_string(g) + " x " +
                     std::to_string(d) + "], got " + shape_str(x.shape()));
  }
  return x;
}

bool block_in(std::ptrdiff_t block, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  return block >= lo && block <= hi;
}

template <Scalar T>
AugmentedAttention build_typed(const LsgAttention& attention,
                               const AttentionInputs& in) {
  const LsgConfig& cfg = attention.config();
  const std::size_t n = in.k.dim(0), g = cfg.globals;
  const std::size_t H = cfg.heads, D = cfg.model_dim(), dh = cfg.head_dim;
  const Tensor gk = globals_or_empty(in.global_k, g, D, cfg.precision);
  const Tensor gv = globals_or_empty(in.global_v, g, D, cfg.precision);
  const BlockedSequence kb = chunk(in.k, cfg, in.key_mask);
  const BlockedSequence vb = chunk(in.v, cfg, in.key_mask);
  SparseBlockSet sparse;
  if (cfg.has_sparse()) sparse = attention.build_sparse(kb, vb);

  AugmentedAttention aug;
  aug.cfg = cfg;
  aug.length = n;
  aug.sparse_slots = cfg.has_sparse() ? kb.blocks * cfg.slots_per_block() : 0;
  aug.slots = n + aug.sparse_slots + g;
  const std::size_t S = aug.slots, R = aug.rows();

  std::vector<T> keys(H * S * dh, T(0)), values(H * S * dh, T(0));
  aug.provenance.assign(H, std::vector<std::vector<uint32_t>>(S));
  auto kin = in.k.data<T>();
  auto vin = in.v.data<T>();
  auto gkd = gk.data<T>();
  auto gvd = gv.data<T>();
  for (std::size_t h = 0; h < H; ++h) {
    auto put = [&](std::size_t slot, const T* kr, const T* vr) {
      std::copy_n(kr, dh, keys.data() + (h * S + slot) * dh);
      std::copy_n(vr, dh, values.data() + (h * S + slot) * dh);
    };
    for (std::size_t p = 0; p < n; ++p) {
      put(p, kin.data() + p * D + h * dh, vin.data() + p * D + h * dh);
      aug.provenance[h][p] = {static_cast<uint32_t>(p)};
    }
    if (cfg.has_sparse()) {
      const SparseSlice& slice = sparse.heads[h];
      auto sk = slice.keys.data<T>();
      auto sv = slice.values.data<T>();
      for (std::size_t id = 0; id < aug.sparse_slots; ++id) {
        put(n + id, sk.data() + id * dh, sv.data() + id * dh);
        aug.provenance[h][n + id] = slice.provenance[id];
      }
    }
    for (std::size_t j = 0; j < g; ++j) {
      put(aug.global_begin() + j, gkd.data() + j * D + h * dh,
          gvd.data() + j * D + h * dh);
    }
  }
  aug.keys = Tensor::from_buffer<T>({H, S, dh}, std::move(keys));
  aug.values = Tensor::from_buffer<T>({H, S, dh}, std::move(values));

  aug.mask.assign(H * R * S, 0);
  const auto bt = static_cast<std::ptrdiff_t>(cfg.block_size);
  const auto f = static_cast<std::ptrdiff_t>(cfg.sparsity);
  const std::size_t per_block = cfg.slots_per_block();
  for (std::size_t h = 0; h < H; ++h) {
    const SparseSlice* slice = cfg.has_sparse() ? &sparse.heads[h] : nullptr;
    for (std::size_t r = 0; r < R; ++r) {
      uint8_t* row = aug.mask.data() + (h * R + r) * S;
      if (r >= n) {
        for (std::size_t p = 0; p < n; ++p) row[p] = kb.valid[p];
        for (std::size_t j = 0; j < g; ++j) row[aug.global_begin() + j] = 1;
        continue;
      }
      const auto qb = static_cast<std::ptrdiff_t>(r) / bt;
      for (std::size_t p = 0; p < n; ++p) {
        const auto kblock = static_cast<std::ptrdiff_t>(p) / bt;
        const bool near = cfg.causal ? block_in(kblock, qb - 1, qb) && p <= r
                                     : block_in(kblock, qb - 1, qb + 1);
        row[p] = near && kb.valid[p];
      }
      for (std::size_t id = 0; id < aug.sparse_slots; ++id) {
        const auto sblock = static_cast<std::ptrdiff_t>(id / per_block);
        const bool left = block_in(sblock, qb - 1 - f, qb - 2);
        const bool right = !cfg.causal && block_in(sblock, qb + 2, qb + 1 + f);
        row[n + id] = (left || right) && slice->valid[id];
      }
      for (std::size_t j = 0; j < g; ++j) row[aug.global_begin() + j] = 1;
    }
  }
  return aug;
}

template <Scalar T>
AttentionOutput oracle_typed(const AugmentedAttention& aug,
                             const AttentionInputs& in) {
  const LsgConfig& cfg = aug.cfg;
  const std::size_t n = aug.length, g = cfg.globals, R = aug.rows();
  const std::size_t H = cfg.heads, D = cfg.model_dim(), dh = cfg.head_dim;
  const std::size_t S = aug.slots;
  if (in.q.rank() != 2 || in.q.dim(0) != n || in.q.dim(1) != D) {
    throw ShapeError("oracle_forward: q shape " + shape_str(in.q.shape()));
  }
  const Tensor gq = globals_or_empty(in.global_q, g, D, cfg.precision);
  auto qd = in.q.data<T>();
  auto gqd = gq.data<T>();
  auto kd = aug.keys.data<T>();
  auto vd = aug.values.data<T>();
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  std::vector<T> out(n * D, T(0)), gout(g * D, T(0));
  std::vector<double> checksum(H * R, 0.0);
  std::vector<T> scores(S);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t r = 0; r < R; ++r) {
      const T* q = r < n ? qd.data() + r * D + h * dh
                         : gqd.data() + (r - n) * D + h * dh;
      const uint8_t* mrow = aug.mask.data() + (h * R + r) * S;
      for (std::size_t s = 0; s < S; ++s) {
        T acc = 0;
        if (mrow[s]) {
          const T* k = kd.data() + (h * S + s) * dh;
          for (std::size_t c = 0; c < dh; ++c) acc += q[c] * k[c];
        }
        scores[s] = acc * scale;
      }
      const T sum = kernels::softmax_row<T>(scores, {mrow, S});
      checksum[h * R + r] = static_cast<double>(sum);
      T* o = r < n ? out.data() + r * D + h * dh
                   : gout.data() + (r - n) * D + h * dh;
      for (std::size_t s = 0; s < S; ++s) {
        if (!mrow[s]) continue;
        const T* v = vd.data() + (h * S + s) * dh;
        for (std::size_t c = 0; c < dh; ++c) o[c] += scores[s] * v[c];
      }
    }
  }
  AttentionOutput result;
  result.out = Tensor::from_buffer<T>({n, D}, std::move(out));
  result.global_out = Tensor::from_buffer<T>({g, D}, std::move(gout));
  result.weights_checksum = std::move(checksum);
  result.score_entries = static_cast<uint64_t>(R) * S;
  return result;
}

template <Scalar T>
AttentionOutput full_typed(const AttentionInputs& in, std::size_t heads,
                           bool causal, std::size_t threads) {
  if (in.q.rank() != 2 || in.q.shape() != in.k.shape() ||
      in.q.shape() != in.v.shape()) {
    throw ShapeError("full_attention: q, k, v shapes differ");
  }
  const std::size_t n = in.q.dim(0), D = in.q.dim(1);
  if (heads == 0 || D % heads != 0) {
    throw ShapeError("full_attention: model dim " + std::to_string(D) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  if (!in.key_mask.empty() && in.key_mask.size() != n) {
    throw ShapeError("full_attention: key mask length mismatch");
  }
  const std::size_t g = in.global_q.size() == 0 ? 0 : in.global_q.dim(0);
  const Tensor gq = globals_or_empty(in.global_q, g, D, in.q.precision());
  const Tensor gk = globals_or_empty(in.global_k, g, D, in.q.precision());
  const Tensor gv = globals_or_empty(in.global_v, g, D, in.q.precision());
  const std::size_t dh = D / heads, L = g + n;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  // Token t < g is global t, token g + p is position p.
  auto row_of = [&](const Tensor& glob, const Tensor& seq, std::size_t t,
                    std::size_t h) {
    return t < g ? glob.data<T>().data() + t * D + h * dh
                 : seq.data<T>().data() + (t - g) * D + h * dh;
  };
  std::vector<uint8_t> key_ok(L, 1);
  for (std::size_t p = 0; p < n && !in.key_mask.empty(); ++p) {
    key_ok[g + p] = in.key_mask[p] != 0;
  }

  std::vector<T> out(n * D, T(0)), gout(g * D, T(0));
  std::vector<double> checksum(heads * L, 0.0);
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (L + kChunk - 1) / kChunk;
  std::vector<std::vector<T>> kt(heads), vrows(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    kt[h].resize(dh * L);
    vrows[h].resize(L * dh);
    for (std::size_t t = 0; t < L; ++t) {
      const T* kr = row_of(gk, in.k, t, h);
      const T* vr = row_of(gv, in.v, t, h);
      for (std::size_t c = 0; c < dh; ++c) {
        kt[h][c * L + t] = kr[c];
        vrows[h][t * dh + c] = vr[c];
      }
    }
  }
  parallel_for(heads * chunks, threads, [&](std::size_t item) {
    const std::size_t h = item / chunks, c0 = (item % chunks) * kChunk;
    const std::size_t rows = std::min(kChunk, L - c0);
    std::vector<T> q(rows * dh);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(row_of(gq, in.q, c0 + r, h), dh, q.data() + r * dh);
    }
    std::vector<T> scores(rows * L);
    kernels::gemm<T>(q, kt[h], scores, rows, dh, L);
    std::vector<uint8_t> mask(key_ok);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t t = c0 + r;
      if (causal) {
        for (std::size_t u = 0; u < L; ++u) mask[u] = key_ok[u] && u <= t;
      }
      auto row = std::span<T>(scores).subspan(r * L, L);
      for (auto& s : row) s *= scale;
      checksum[h * L + t] =
          static_cast<double>(kernels::softmax_row<T>(row, mask));
    }
    std::vector<T> o(rows * dh);
    kernels::gemm<T>(scores, vrows[h], o, rows, L, dh);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t t = c0 + r;
      T* dst = t < g ? gout.data() + t * D + h * dh
                     : out.data() + (t - g) * D + h * dh;
      std::copy_n(o.data() + r * dh, dh, dst);
    }
  });

  AttentionOutput result;
  result.out = Tensor::from_buffer<T>({n, D}, std::move(out));
  result.global_out = Tensor::from_buffer<T>({g, D}, std::move(gout));
  result.weights_checksum = std::move(checksum);
  result.score_entries = dense_score_entry_count(n, g);
  return result;
}

}  // namespace

AugmentedAttention build_augmented(const LsgAttention& attention,
                                   const AttentionInputs& in) {
  const LsgConfig& cfg = attention.config();
  if (in.k.rank() != 2 || in.k.shape() != in.v.shape() ||
      in.k.dim(1) != cfg.model_dim()) {
    throw ShapeError("build_augmented: keys/values must be [n x " +
                     std::to_string(cfg.model_dim()) + "]");
  }
  return dispatch(cfg.precision, [&](auto tag) {
    return build_typed<decltype(tag)>(attention, in);
  });
}

AttentionOutput oracle_forward(const AugmentedAttention& aug,
                               const AttentionInputs& in) {
  return dispatch(aug.cfg.precision, [&](auto tag) {
    return oracle_typed<decltype(tag)>(aug, in);
  });
}

PatternRender render_pattern(const AugmentedAttention& aug, std::size_t head) {
  if (head >= aug.cfg.heads) {
    throw ShapeError("render_pattern: head " + std::to_string(head) +
                     " out of range");
  }
  const std::size_t R = aug.rows(), S = aug.slots;
  PatternRender render;
  render.pgm = "P5\n" + std::to_string(S) + " " + std::to_string(R) + "\n1\n";
  render.pgm.reserve(render.pgm.size() + R * S);
  std::ostringstream csv;
  csv << "query,slot,positions\n";
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t s = 0; s < S; ++s) {
      const bool on = aug.scored(head, r, s);
      render.pgm.push_back(on ? '\x01' : '\x00');
      if (!on) continue;
      csv << r << ',' << s << ',';
      if (s >= aug.global_begin()) {
        csv << 'g' << (s - aug.global_begin());
      } else {
        const auto& prov = aug.provenance[head][s];
        for (std::size_t i = 0; i < prov.size(); ++i) {
          csv << (i ? " " : "") << prov[i];
        }
      }
      csv << '\n';
    }
  }
  render.csv = csv.str();
  return render;
}

AttentionOutput full_attention(const AttentionInputs& in, std::size_t heads,
                               bool causal, std::size_t threads) {
  return dispatch(in.q.precision(), [&](auto tag) {
    return full_typed<decltype(tag)>(in, heads, causal, threads);
  });
}

uint64_t dense_score_entry_count(std::size_t n, std::size_t globals) {
  const uint64_t L = n + globals;
  return L * L;
}

}  // namespace lsg
