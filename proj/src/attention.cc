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

#include "lsg/attention.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <utility>

namespace lsg {

struct ForwardCache {
  std::size_t length = 0;
  BlockedSequence q, k, v;
  SparseBlockSet sparse;
  Tensor global_q, global_k, global_v;
  std::vector<uint8_t> key_valid;  // length n
  std::vector<std::vector<KeySlot>> slots;  // heads * blocks
  std::vector<Tensor> probs;                // heads * blocks, [bt x width]
  std::vector<Tensor> global_probs;         // heads, [g x (g + n)]
};

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

Tensor BlockedSequence::head(std::size_t h) const {
  if (h >= heads) {
    throw ShapeError("head " + std::to_string(h) + " out of range");
  }
  const std::size_t stride = blocks * block_size * head_dim;
  if (data.precision() == Precision::kSingle) {
    auto src = data.data<float>().subspan(h * stride, stride);
    return Tensor::from_buffer<float>({blocks, block_size, head_dim},
                                      {src.begin(), src.end()});
  }
  auto src = data.data<double>().subspan(h * stride, stride);
  return Tensor::from_buffer<double>({blocks, block_size, head_dim},
                                     {src.begin(), src.end()});
}

namespace {

template <typename Fn>
decltype(auto) dispatch(Precision p, Fn&& fn) {
  if (p == Precision::kSingle) return fn(float{});
  return fn(double{});
}

void require_sequence(const char* what, const Tensor& x, const LsgConfig& cfg) {
  if (x.rank() != 2 || x.dim(1) != cfg.model_dim()) {
    throw ShapeError(std::string(what) + ": expected [n x " +
                     std::to_string(cfg.model_dim()) + "], got " +
                     shape_str(x.shape()));
  }
  if (x.precision() != cfg.precision) {
    throw ShapeError(std::string(what) + ": expected " +
                     precision_name(cfg.precision) + " data");
  }
}

// Globals as [g x D]; an empty placeholder is accepted when g = 0.
Tensor normalize_globals(const char* what, const Tensor& x,
                         const LsgConfig& cfg) {
  if (cfg.globals == 0 && x.size() == 0) {
    return Tensor({0, cfg.model_dim()}, cfg.precision);
  }
  require_sequence(what, x, cfg);
  if (x.dim(0) != cfg.globals) {
    throw ShapeError(std::string(what) + ": expected " +
                     std::to_string(cfg.globals) + " global rows, got " +
                     std::to_string(x.dim(0)));
  }
  return x;
}

// Pointers into the different key/value sources of one head.
template <Scalar T>
struct HeadSources {
  const T* local_k;
  const T* local_v;
  const T* sparse_k = nullptr;
  const T* sparse_v = nullptr;
  const T* global_k;
  const T* global_v;
  std::size_t model_dim;
  std::size_t head_offset;
  std::size_t head_dim;

  // Row of `slot` in the keys (values when `value`), nullptr when masked.
  const T* row(const KeySlot& slot, bool value) const {
    switch (slot.source) {
      case KeySlot::Source::kLocal:
        return (value ? local_v : local_k) + slot.index * head_dim;
      case KeySlot::Source::kSparse:
        return (value ? sparse_v : sparse_k) + slot.index * head_dim;
      case KeySlot::Source::kGlobal:
        return (value ? global_v : global_k) + slot.index * model_dim +
               head_offset;
      case KeySlot::Source::kMasked:
        break;
    }
    return nullptr;
  }
};

template <Scalar T>
HeadSources<T> head_sources(const BlockedSequence& k, const BlockedSequence& v,
                            const SparseBlockSet& sparse, const Tensor& gk,
                            const Tensor& gv, std::size_t h,
                            const LsgConfig& cfg) {
  const std::size_t stride = k.blocks * k.block_size * k.head_dim;
  HeadSources<T> s{k.data.data<T>().data() + h * stride,
                   v.data.data<T>().data() + h * stride,
                   nullptr,
                   nullptr,
                   gk.data<T>().data(),
                   gv.data<T>().data(),
                   cfg.model_dim(),
                   h * cfg.head_dim,
                   cfg.head_dim};
  if (!sparse.heads.empty()) {
    s.sparse_k = sparse.heads[h].keys.data<T>().data();
    s.sparse_v = sparse.heads[h].values.data<T>().data();
  }
  return s;
}

// Gathers slot rows as kt[dh x width] (transposed) and v[width x dh].
template <Scalar T>
void gather_rows(const HeadSources<T>& src, const std::vector<KeySlot>& slots,
                 std::vector<T>* kt, std::vector<T>* k_rows,
                 std::vector<T>* v_rows) {
  const std::size_t w = slots.size(), d = src.head_dim;
  if (kt) kt->assign(d * w, T(0));
  if (k_rows) k_rows->assign(w * d, T(0));
  if (v_rows) v_rows->assign(w * d, T(0));
  for (std::size_t j = 0; j < w; ++j) {
    if (slots[j].masked()) continue;
    const T* kr = src.row(slots[j], false);
    const T* vr = src.row(slots[j], true);
    for (std::size_t c = 0; c < d; ++c) {
      if (kt) (*kt)[c * w + j] = kr[c];
      if (k_rows) (*k_rows)[j * d + c] = kr[c];
      if (v_rows) (*v_rows)[j * d + c] = vr[c];
    }
  }
}

template <Scalar T>
std::vector<T> transpose(std::span<const T> a, std::size_t rows,
                         std::size_t cols) {
  std::vector<T> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  }
  return t;
}

template <Scalar T>
AttentionOutput forward_impl(const LsgAttention& self,
                             const AttentionInputs& in,
                             const ExecOptions& opts) {
  const LsgConfig& cfg = self.config();
  require_sequence("forward q", in.q, cfg);
  require_sequence("forward k", in.k, cfg);
  require_sequence("forward v", in.v, cfg);
  const std::size_t n = in.q.dim(0);
  if (n < 1) throw ShapeError("forward: empty sequence");
  if (in.k.dim(0) != n || in.v.dim(0) != n) {
    throw ShapeError("forward: q, k, v lengths differ");
  }
  if (!in.key_mask.empty() && in.key_mask.size() != n) {
    throw ShapeError("forward: key mask length " +
                     std::to_string(in.key_mask.size()) + " != " +
                     std::to_string(n));
  }
  const Tensor gq = normalize_globals("forward global_q", in.global_q, cfg);
  const Tensor gk = normalize_globals("forward global_k", in.global_k, cfg);
  const Tensor gv = normalize_globals("forward global_v", in.global_v, cfg);

  const std::size_t H = cfg.heads, D = cfg.model_dim(), dh = cfg.head_dim;
  const std::size_t bt = cfg.block_size, g = cfg.globals;
  BlockedSequence qb = chunk(in.q, cfg);
  BlockedSequence kb = chunk(in.k, cfg, in.key_mask);
  BlockedSequence vb = chunk(in.v, cfg, in.key_mask);
  const std::size_t nb = kb.blocks;
  SparseBlockSet sparse;
  if (cfg.has_sparse()) sparse = self.build_sparse(kb, vb);

  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const std::size_t width = key_layout(cfg).width();
  std::vector<T> out(n * D, T(0));
  std::vector<T> gout(g * D, T(0));
  std::vector<double> checksum(H * (n + g), 0.0);

  auto cache = opts.keep_cache ? std::make_shared<ForwardCache>() : nullptr;
  if (cache) {
    cache->slots.resize(H * nb);
    cache->probs.resize(H * nb);
    cache->global_probs.resize(H);
  }
  const LocalGatherFn& local_gather =
      opts.local_gather ? opts.local_gather : LocalGatherFn(gather_local);

  parallel_for(H * nb, opts.threads, [&](std::size_t item) {
    const std::size_t h = item / nb, i = item % nb;
    const auto src = head_sources<T>(kb, vb, sparse, gk, gv, h, cfg);
    std::vector<KeySlot> sparse_slots;
    if (cfg.has_sparse()) sparse_slots = gather_sparse(sparse.heads[h], i, cfg);
    std::vector<KeySlot> slots =
        assemble_block_keys(local_gather(kb, i, cfg), sparse_slots, cfg);
    const std::size_t w = slots.size();
    if (w != width) {
      throw ShapeError("forward: block key width " + std::to_string(w) +
                       " != layout width " + std::to_string(width));
    }
    std::vector<T> kt, vrows;
    gather_rows<T>(src, slots, &kt, nullptr, &vrows);
    const std::size_t qoff = (h * nb + i) * bt * dh;
    auto qblock = qb.data.data<T>().subspan(qoff, bt * dh);
    std::vector<T> scores(bt * w);
    kernels::gemm<T>(qblock, kt, scores, bt, dh, w);
    std::vector<uint8_t> row_mask(w);
    for (std::size_t r = 0; r < bt; ++r) {
      const std::size_t pos = i * bt + r;
      for (std::size_t j = 0; j < w; ++j) {
        row_mask[j] = slot_visible(slots[j], pos, cfg);
      }
      auto row = std::span<T>(scores).subspan(r * w, w);
      for (auto& s : row) s *= scale;
      const T sum = kernels::softmax_row<T>(row, row_mask);
      if (pos < n) checksum[h * (n + g) + pos] = static_cast<double>(sum);
    }
    std::vector<T> o(bt * dh);
    kernels::gemm<T>(scores, vrows, o, bt, w, dh);
    for (std::size_t r = 0; r < bt && i * bt + r < n; ++r) {
      std::copy_n(o.data() + r * dh, dh, out.data() + (i * bt + r) * D + h * dh);
    }
    if (cache) {
      cache->probs[item] = Tensor::from_buffer<T>({bt, w}, std::move(scores));
      cache->slots[item] = std::move(slots);
    }
  });

  if (g > 0) {
    parallel_for(H, opts.threads, [&](std::size_t h) {
      const auto src = head_sources<T>(kb, vb, sparse, gk, gv, h, cfg);
      std::vector<KeySlot> slots;
      slots.reserve(g + n);
      for (std::size_t j = 0; j < g; ++j) {
        slots.push_back({KeySlot::Source::kGlobal, static_cast<uint32_t>(j)});
      }
      for (std::size_t p = 0; p < n; ++p) {
        slots.push_back(kb.valid[p] ? KeySlot{KeySlot::Source::kLocal,
                                              static_cast<uint32_t>(p)}
                                    : KeySlot{});
      }
      const std::size_t w = slots.size();
      std::vector<T> kt, vrows;
      gather_rows<T>(src, slots, &kt, nullptr, &vrows);
      std::vector<T> qrows(g * dh);
      auto gqd = gq.data<T>();
      for (std::size_t r = 0; r < g; ++r) {
        std::copy_n(gqd.data() + r * D + h * dh, dh, qrows.data() + r * dh);
      }
      std::vector<T> scores(g * w);
      kernels::gemm<T>(qrows, kt, scores, g, dh, w);
      std::vector<uint8_t> mask(w);
      for (std::size_t j = 0; j < w; ++j) mask[j] = !slots[j].masked();
      for (std::size_t r = 0; r < g; ++r) {
        auto row = std::span<T>(scores).subspan(r * w, w);
        for (auto& s : row) s *= scale;
        const T sum = kernels::softmax_row<T>(row, mask);
        checksum[h * (n + g) + n + r] = static_cast<double>(sum);
      }
      std::vector<T> o(g * dh);
      kernels::gemm<T>(scores, vrows, o, g, w, dh);
      for (std::size_t r = 0; r < g; ++r) {
        std::copy_n(o.data() + r * dh, dh, gout.data() + r * D + h * dh);
      }
      if (cache) {
        cache->global_probs[h] =
            Tensor::from_buffer<T>({g, w}, std::move(scores));
      }
    });
  }

  AttentionOutput result;
  result.out = Tensor::from_buffer<T>({n, D}, std::move(out));
  result.global_out = Tensor::from_buffer<T>({g, D}, std::move(gout));
  result.weights_checksum = std::move(checksum);
  result.score_entries = score_entry_count(cfg, n);
  if (cache) {
    cache->length = n;
    cache->q = std::move(qb);
    cache->k = std::move(kb);
    cache->v = std::move(vb);
    cache->sparse = std::move(sparse);
    cache->global_q = gq;
    cache->global_k = gk;
    cache->global_v = gv;
    result.cache = std::move(cache);
  }
  return result;
}

template <Scalar T>
Gradients backward_impl(const LsgAttention& self, const ForwardCache& cache,
                        const Tensor& d_out_in, const Tensor& d_gout_in,
                        std::size_t threads) {
  const LsgConfig& cfg = self.config();
  const std::size_t n = cache.length;
  const std::size_t H = cfg.heads, D = cfg.model_dim(), dh = cfg.head_dim;
  const std::size_t bt = cfg.block_size, g = cfg.globals;
  const std::size_t nb = cache.k.blocks;
  require_sequence("backward d_out", d_out_in, cfg);
  if (d_out_in.dim(0) != n) {
    throw ShapeError("backward: upstream has " +
                     std::to_string(d_out_in.dim(0)) + " rows, forward had " +
                     std::to_string(n));
  }
  const Tensor d_gout = normalize_globals("backward d_global_out", d_gout_in, cfg);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  std::vector<T> dq(n * D, T(0)), dk(n * D, T(0)), dv(n * D, T(0));
  std::vector<T> dgq(g * D, T(0)), dgk(g * D, T(0)), dgv(g * D, T(0));
  auto dout = d_out_in.data<T>();
  auto dgo = d_gout.data<T>();

  // Accumulates the gradient of one key/value slot into its source rows.
  auto scatter = [&](const KeySlot& slot, std::size_t h, const T* gk_row,
                     const T* gv_row, std::vector<T>& dsk,
                     std::vector<T>& dsv) {
    T* tk = nullptr;
    T* tv = nullptr;
    switch (slot.source) {
      case KeySlot::Source::kLocal:
        tk = dk.data() + slot.index * D + h * dh;
        tv = dv.data() + slot.index * D + h * dh;
        break;
      case KeySlot::Source::kSparse:
        tk = dsk.data() + slot.index * dh;
        tv = dsv.data() + slot.index * dh;
        break;
      case KeySlot::Source::kGlobal:
        tk = dgk.data() + slot.index * D + h * dh;
        tv = dgv.data() + slot.index * D + h * dh;
        break;
      case KeySlot::Source::kMasked:
        return;
    }
    for (std::size_t c = 0; c < dh; ++c) {
      tk[c] += gk_row[c];
      tv[c] += gv_row[c];
    }
  };

  // Given probabilities p[rows x w], upstream d_o[rows x dh], queries
  // q[rows x dh] and slot rows, produces dq rows and per-slot dk/dv.
  auto attention_vjp = [&](std::span<const T> p, std::span<const T> d_o,
                           std::span<const T> q,
                           const std::vector<T>& k_rows,
                           const std::vector<T>& v_rows, std::size_t rows,
                           std::size_t w, std::vector<T>& dq_rows,
                           std::vector<T>& dk_rows, std::vector<T>& dv_rows) {
    const std::vector<T> vt = transpose<T>(v_rows, w, dh);
    std::vector<T> dp(rows * w);
    kernels::gemm<T>(d_o, vt, dp, rows, dh, w);
    const std::vector<T> pt = transpose<T>(p, rows, w);
    dv_rows.resize(w * dh);
    kernels::gemm<T>(pt, d_o, dv_rows, w, rows, dh);
    std::vector<T> ds(rows * w);
    for (std::size_t r = 0; r < rows; ++r) {
      T inner = 0;
      for (std::size_t j = 0; j < w; ++j) inner += p[r * w + j] * dp[r * w + j];
      for (std::size_t j = 0; j < w; ++j) {
        ds[r * w + j] = p[r * w + j] * (dp[r * w + j] - inner) * scale;
      }
    }
    dq_rows.resize(rows * dh);
    kernels::gemm<T>(ds, k_rows, dq_rows, rows, w, dh);
    const std::vector<T> dst = transpose<T>(ds, rows, w);
    dk_rows.resize(w * dh);
    kernels::gemm<T>(dst, q, dk_rows, w, rows, dh);
  };

  parallel_for(H, threads, [&](std::size_t h) {
    const auto src = head_sources<T>(cache.k, cache.v, cache.sparse,
                                     cache.global_k, cache.global_v, h, cfg);
    const std::size_t slots_total =
        cfg.has_sparse() ? nb * cfg.slots_per_block() : 0;
    std::vector<T> dsk(slots_total * dh, T(0)), dsv(slots_total * dh, T(0));
    std::vector<T> k_rows, v_rows, dq_rows, dk_rows, dv_rows;
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t item = h * nb + i;
      const auto& slots = cache.slots[item];
      const std::size_t w = slots.size();
      gather_rows<T>(src, slots, nullptr, &k_rows, &v_rows);
      std::vector<T> d_o(bt * dh, T(0));
      for (std::size_t r = 0; r < bt && i * bt + r < n; ++r) {
        std::copy_n(dout.data() + (i * bt + r) * D + h * dh, dh,
                    d_o.data() + r * dh);
      }
      auto qblock = cache.q.data.data<T>().subspan(item * bt * dh, bt * dh);
      attention_vjp(cache.probs[item].data<T>(), d_o, qblock, k_rows, v_rows,
                    bt, w, dq_rows, dk_rows, dv_rows);
      for (std::size_t r = 0; r < bt && i * bt + r < n; ++r) {
        T* dst = dq.data() + (i * bt + r) * D + h * dh;
        for (std::size_t c = 0; c < dh; ++c) dst[c] += dq_rows[r * dh + c];
      }
      for (std::size_t j = 0; j < w; ++j) {
        scatter(slots[j], h, dk_rows.data() + j * dh, dv_rows.data() + j * dh,
                dsk, dsv);
      }
    }

    if (g > 0) {
      std::vector<KeySlot> slots;
      for (std::size_t j = 0; j < g; ++j) {
        slots.push_back({KeySlot::Source::kGlobal, static_cast<uint32_t>(j)});
      }
      for (std::size_t p = 0; p < n; ++p) {
        slots.push_back(cache.k.valid[p]
                            ? KeySlot{KeySlot::Source::kLocal,
                                      static_cast<uint32_t>(p)}
                            : KeySlot{});
      }
      const std::size_t w = slots.size();
      gather_rows<T>(src, slots, nullptr, &k_rows, &v_rows);
      std::vector<T> d_o(g * dh), qrows(g * dh);
      auto gqd = cache.global_q.data<T>();
      for (std::size_t r = 0; r < g; ++r) {
        std::copy_n(dgo.data() + r * D + h * dh, dh, d_o.data() + r * dh);
        std::copy_n(gqd.data() + r * D + h * dh, dh, qrows.data() + r * dh);
      }
      attention_vjp(cache.global_probs[h].data<T>(), d_o, qrows, k_rows,
                    v_rows, g, w, dq_rows, dk_rows, dv_rows);
      for (std::size_t r = 0; r < g; ++r) {
        T* dst = dgq.data() + r * D + h * dh;
        for (std::size_t c = 0; c < dh; ++c) dst[c] += dq_rows[r * dh + c];
      }
      for (std::size_t j = 0; j < w; ++j) {
        scatter(slots[j], h, dk_rows.data() + j * dh, dv_rows.data() + j * dh,
                dsk, dsv);
      }
    }

    // Compressed slots hand their gradient back to the averaged positions.
    if (cfg.has_sparse()) {
      const SparseSlice& slice = cache.sparse.heads[h];
      for (std::size_t id = 0; id < slots_total; ++id) {
        const auto& members = slice.provenance[id];
        if (members.empty()) continue;
        const T share = T(1) / static_cast<T>(members.size());
        for (uint32_t pos : members) {
          T* tk = dk.data() + pos * D + h * dh;
          T* tv = dv.data() + pos * D + h * dh;
          for (std::size_t c = 0; c < dh; ++c) {
            tk[c] += dsk[id * dh + c] * share;
            tv[c] += dsv[id * dh + c] * share;
          }
        }
      }
    }
  });

  Gradients grads;
  grads.dq = Tensor::from_buffer<T>({n, D}, std::move(dq));
  grads.dk = Tensor::from_buffer<T>({n, D}, std::move(dk));
  grads.dv = Tensor::from_buffer<T>({n, D}, std::move(dv));
  grads.d_global_q = Tensor::from_buffer<T>({g, D}, std::move(dgq));
  grads.d_global_k = Tensor::from_buffer<T>({g, D}, std::move(dgk));
  grads.d_global_v = Tensor::from_buffer<T>({g, D}, std::move(dgv));
  return grads;
}

}  // namespace

BlockedSequence chunk(const Tensor& x, const LsgConfig& cfg,
                      std::span<const uint8_t> key_mask) {
  require_sequence("chunk", x, cfg);
  const std::size_t n = x.dim(0);
  if (n < 1) throw ShapeError("chunk: empty sequence");
  if (!key_mask.empty() && key_mask.size() != n) {
    throw ShapeError("chunk: key mask length mismatch");
  }
  BlockedSequence b;
  b.heads = cfg.heads;
  b.blocks = cfg.num_blocks(n);
  b.block_size = cfg.block_size;
  b.head_dim = cfg.head_dim;
  b.length = n;
  b.valid.assign(b.blocks * b.block_size, 0);
  for (std::size_t p = 0; p < n; ++p) {
    b.valid[p] = key_mask.empty() || key_mask[p] != 0;
  }
  b.data = Tensor({b.heads, b.blocks, b.block_size, b.head_dim}, x.precision());
  dispatch(x.precision(), [&](auto tag) {
    using T = decltype(tag);
    auto src = x.data<T>();
    auto dst = b.data.data<T>();
    const std::size_t D = cfg.model_dim(), dh = cfg.head_dim;
    const std::size_t stride = b.blocks * b.block_size * dh;
    for (std::size_t h = 0; h < b.heads; ++h) {
      for (std::size_t p = 0; p < n; ++p) {
        std::copy_n(src.data() + p * D + h * dh, dh,
                    dst.data() + h * stride + p * dh);
      }
    }
  });
  return b;
}

Tensor unchunk(const BlockedSequence& b) {
  const std::size_t D = b.heads * b.head_dim;
  Tensor out({b.length, D}, b.data.precision());
  dispatch(b.data.precision(), [&](auto tag) {
    using T = decltype(tag);
    auto src = b.data.data<T>();
    auto dst = out.data<T>();
    const std::size_t stride = b.blocks * b.block_size * b.head_dim;
    for (std::size_t h = 0; h < b.heads; ++h) {
      for (std::size_t p = 0; p < b.length; ++p) {
        std::copy_n(src.data() + h * stride + p * b.head_dim, b.head_dim,
                    dst.data() + p * D + h * b.head_dim);
      }
    }
  });
  return out;
}

std::vector<KeySlot> gather_local(const BlockedSequence& keys,
                                  std::size_t block, const LsgConfig& cfg) {
  const std::size_t bt = keys.block_size;
  const std::size_t spans = cfg.causal ? 2 : 3;
  std::vector<KeySlot> slots(spans * bt);
  for (std::size_t s = 0; s < spans; ++s) {
    // Source block block - 1 + s, skipped when out of range.
    if (block + s < 1 || block + s - 1 >= keys.blocks) continue;
    const std::size_t src = block + s - 1;
    for (std::size_t t = 0; t < bt; ++t) {
      const std::size_t pos = src * bt + t;
      if (keys.valid[pos]) {
        slots[s * bt + t] = {KeySlot::Source::kLocal,
                             static_cast<uint32_t>(pos)};
      }
    }
  }
  return slots;
}

std::vector<KeySlot> gather_sparse(const SparseSlice& sparse,
                                   std::size_t block, const LsgConfig& cfg) {
  const std::size_t f = cfg.sparsity;
  if (f < 2) throw ConfigError("gather_sparse: sparsity must be >= 2");
  const std::size_t s = sparse.slots;
  const std::size_t sides = cfg.causal ? 1 : 2;
  std::vector<KeySlot> slots(sides * f * s);
  const auto nb = static_cast<std::ptrdiff_t>(sparse.blocks);
  const auto i = static_cast<std::ptrdiff_t>(block);
  const std::ptrdiff_t first[2] = {i - 1 - static_cast<std::ptrdiff_t>(f),
                                   i + 2};
  for (std::size_t side = 0; side < sides; ++side) {
    for (std::size_t b = 0; b < f; ++b) {
      const std::ptrdiff_t src = first[side] + static_cast<std::ptrdiff_t>(b);
      if (src < 0 || src >= nb) continue;
      for (std::size_t t = 0; t < s; ++t) {
        const std::size_t id = sparse.slot_id(static_cast<std::size_t>(src), t);
        if (sparse.valid[id]) {
          slots[(side * f + b) * s + t] = {KeySlot::Source::kSparse,
                                           static_cast<uint32_t>(id)};
        }
      }
    }
  }
  return slots;
}

std::vector<KeySlot> assemble_block_keys(std::vector<KeySlot> local,
                                         const std::vector<KeySlot>& sparse,
                                         const LsgConfig& cfg) {
  local.insert(local.end(), sparse.begin(), sparse.end());
  for (std::size_t j = 0; j < cfg.globals; ++j) {
    local.push_back({KeySlot::Source::kGlobal, static_cast<uint32_t>(j)});
  }
  return local;
}

bool slot_visible(const KeySlot& slot, std::size_t query_pos,
                  const LsgConfig& cfg) {
  if (slot.masked()) return false;
  if (cfg.causal && slot.source == KeySlot::Source::kLocal) {
    return slot.index <= query_pos;
  }
  return true;
}

uint64_t score_entry_count(const LsgConfig& cfg, std::size_t n) {
  const uint64_t blocks = cfg.num_blocks(n);
  const uint64_t g = cfg.globals;
  return blocks * cfg.block_size * key_layout(cfg).width() + g * (n + g);
}

LsgAttention::LsgAttention(LsgConfig cfg)
    : cfg_(cfg), status_(validate(cfg_)), projections_(make_lsh_projections(cfg_)) {}

SparseBlockSet LsgAttention::build_sparse(const BlockedSequence& keys,
                                          const BlockedSequence& values) const {
  SparseBlockSet set;
  set.heads.reserve(cfg_.heads);
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    set.heads.push_back(select_sparse(cfg_, keys.head(h), values.head(h), h,
                                      projections_, keys.valid));
  }
  return set;
}

AttentionOutput LsgAttention::forward(const AttentionInputs& in,
                                      const ExecOptions& opts) const {
  return dispatch(cfg_.precision, [&](auto tag) {
    return forward_impl<decltype(tag)>(*this, in, opts);
  });
}

Gradients LsgAttention::backward(const AttentionOutput& forward_result,
                                 const Tensor& d_out,
                                 const Tensor& d_global_out,
                                 std::size_t threads) const {
  if (!forward_result.cache) {
    throw Error("backward: forward ran without keep_cache");
  }
  return dispatch(cfg_.precision, [&](auto tag) {
    return backward_impl<decltype(tag)>(*this, *forward_result.cache, d_out,
                                        d_global_out, threads);
  });
}

}  // namespace lsg
