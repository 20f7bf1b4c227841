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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lsg/attention.h"
#include "lsg/check.h"
#include "lsg/convert.h"
#include "lsg/dense_oracle.h"
#include "lsg/weight_bundle.h"

namespace py = pybind11;
using namespace lsg;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const py::array& a, Precision p) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (p == Precision::kSingle) {
    const F32 c = F32::ensure(a);
    if (!c) throw ShapeError("expected a float array");
    return Tensor::from_buffer<float>(
        shape, std::vector<float>(c.data(), c.data() + c.size()));
  }
  const F64 c = F64::ensure(a);
  if (!c) throw ShapeError("expected a float array");
  return Tensor::from_buffer<double>(
      shape, std::vector<double>(c.data(), c.data() + c.size()));
}

Tensor to_tensor_like(const py::array& a) {
  return to_tensor(a, a.dtype().is(py::dtype::of<float>()) ? Precision::kSingle
                                                           : Precision::kDouble);
}

py::array to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  if (t.precision() == Precision::kSingle) {
    auto d = t.data<float>();
    py::array_t<float> out(shape);
    std::copy(d.begin(), d.end(), out.mutable_data());
    return out;
  }
  auto d = t.data<double>();
  py::array_t<double> out(shape);
  std::copy(d.begin(), d.end(), out.mutable_data());
  return out;
}

AttentionInputs make_inputs(const LsgConfig& cfg, const py::array& q,
                            const py::array& k, const py::array& v,
                            const std::optional<py::array>& gq,
                            const std::optional<py::array>& gk,
                            const std::optional<py::array>& gv,
                            const std::optional<std::vector<uint8_t>>& mask) {
  AttentionInputs in;
  in.q = to_tensor(q, cfg.precision);
  in.k = to_tensor(k, cfg.precision);
  in.v = to_tensor(v, cfg.precision);
  if (cfg.globals > 0) {
    if (!gq || !gk || !gv) {
      throw ShapeError("config has globals: pass global_q, global_k, global_v");
    }
    in.global_q = to_tensor(*gq, cfg.precision);
    in.global_k = to_tensor(*gk, cfg.precision);
    in.global_v = to_tensor(*gv, cfg.precision);
  }
  if (mask) in.key_mask = *mask;
  return in;
}

#define INPUT_ARGS                                                         \
  py::arg("q"), py::arg("k"), py::arg("v"), py::arg("global_q") = py::none(), \
      py::arg("global_k") = py::none(), py::arg("global_v") = py::none(),   \
      py::arg("key_mask") = py::none()

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Blocked local/sparse/global attention";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<LsgConfig>(m, "Config")
      .def(py::init([](std::size_t block_size, std::size_t sparsity,
                       std::size_t globals, const std::string& strategy,
                       std::size_t heads, std::size_t head_dim, bool causal,
                       uint64_t seed, const std::string& precision) {
             LsgConfig cfg;
             cfg.block_size = block_size;
             cfg.sparsity = sparsity;
             cfg.globals = globals;
             cfg.strategy = strategy.empty()
                                ? (sparsity ? SparseStrategy::kNorm
                                            : SparseStrategy::kNone)
                                : parse_strategy(strategy);
             cfg.heads = heads;
             cfg.head_dim = head_dim;
             cfg.causal = causal;
             cfg.seed = seed;
             cfg.precision = parse_precision(precision);
             validate(cfg);
             return cfg;
           }),
           py::arg("block_size") = 128, py::arg("sparsity") = 0,
           py::arg("globals") = 0, py::arg("strategy") = "",
           py::arg("heads") = 1, py::arg("head_dim") = 64,
           py::arg("causal") = false, py::arg("seed") = 0,
           py::arg("precision") = "double")
      .def_readonly("block_size", &LsgConfig::block_size)
      .def_readonly("sparsity", &LsgConfig::sparsity)
      .def_readonly("globals", &LsgConfig::globals)
      .def_readonly("heads", &LsgConfig::heads)
      .def_readonly("head_dim", &LsgConfig::head_dim)
      .def_readonly("causal", &LsgConfig::causal)
      .def_readonly("seed", &LsgConfig::seed)
      .def_property_readonly("strategy",
                             [](const LsgConfig& c) { return strategy_name(c.strategy); })
      .def_property_readonly("precision",
                             [](const LsgConfig& c) { return precision_name(c.precision); })
      .def_property_readonly("model_dim", &LsgConfig::model_dim)
      .def("__repr__", [](const LsgConfig& c) { return "Config(" + describe(c) + ")"; });

  m.def("key_width", [](const LsgConfig& c) { return key_layout(c).width(); });
  m.def("max_context", &max_context);
  m.def("score_entry_count", &score_entry_count, py::arg("config"), py::arg("n"));

  py::class_<LsgAttention>(m, "Attention")
      .def(py::init<LsgConfig>(), py::arg("config"))
      .def_property_readonly("config", &LsgAttention::config)
      .def(
          "forward",
          [](const LsgAttention& a, const py::array& q, const py::array& k,
             const py::array& v, const std::optional<py::array>& gq,
             const std::optional<py::array>& gk, const std::optional<py::array>& gv,
             const std::optional<std::vector<uint8_t>>& mask, std::size_t threads) {
            const AttentionInputs in =
                make_inputs(a.config(), q, k, v, gq, gk, gv, mask);
            AttentionOutput out;
            {
              py::gil_scoped_release release;
              out = a.forward(in, {threads, false, {}});
            }
            return py::make_tuple(to_numpy(out.out), to_numpy(out.global_out));
          },
          INPUT_ARGS, py::arg("threads") = 1,
          "Returns (out [n x D], global_out [g x D]).")
      .def(
          "gradients",
          [](const LsgAttention& a, const py::array& q, const py::array& k,
             const py::array& v, const std::optional<py::array>& gq,
             const std::optional<py::array>& gk, const std::optional<py::array>& gv,
             const std::optional<std::vector<uint8_t>>& mask,
             const py::array& d_out, const std::optional<py::array>& d_global_out) {
            const LsgConfig& cfg = a.config();
            const AttentionInputs in = make_inputs(cfg, q, k, v, gq, gk, gv, mask);
            const Tensor up = to_tensor(d_out, cfg.precision);
            const Tensor gup = d_global_out
                                   ? to_tensor(*d_global_out, cfg.precision)
                                   : Tensor({cfg.globals, cfg.model_dim()},
                                            cfg.precision);
            const AttentionOutput fwd = a.forward(in, {1, true, {}});
            const Gradients g = a.backward(fwd, up, gup);
            py::dict out;
            out["q"] = to_numpy(g.dq);
            out["k"] = to_numpy(g.dk);
            out["v"] = to_numpy(g.dv);
            out["global_q"] = to_numpy(g.d_global_q);
            out["global_k"] = to_numpy(g.d_global_k);
            out["global_v"] = to_numpy(g.d_global_v);
            return out;
          },
          INPUT_ARGS, py::arg("d_out"), py::arg("d_global_out") = py::none(),
          "Gradients of sum(d_out * out) + sum(d_global_out * global_out).")
      .def(
          "oracle_forward",
          [](const LsgAttention& a, const py::array& q, const py::array& k,
             const py::array& v, const std::optional<py::array>& gq,
             const std::optional<py::array>& gk, const std::optional<py::array>& gv,
             const std::optional<std::vector<uint8_t>>& mask) {
            const AttentionInputs in =
                make_inputs(a.config(), q, k, v, gq, gk, gv, mask);
            const AttentionOutput out = oracle_forward(build_augmented(a, in), in);
            return py::make_tuple(to_numpy(out.out), to_numpy(out.global_out));
          },
          INPUT_ARGS, "Dense masked reference for the same pattern.")
      .def(
          "pattern",
          [](const LsgAttention& a, std::size_t n, std::size_t head) {
            const AttentionInputs in = random_inputs(a.config(), n, a.config().seed);
            const AugmentedAttention aug = build_augmented(a, in);
            py::array_t<uint8_t> mask(
                {py::ssize_t(aug.rows()), py::ssize_t(aug.slots)});
            for (std::size_t r = 0; r < aug.rows(); ++r) {
              for (std::size_t s = 0; s < aug.slots; ++s) {
                mask.mutable_at(r, s) = aug.scored(head, r, s);
              }
            }
            return mask;
          },
          py::arg("n"), py::arg("head") = 0,
          "Boolean (n + g) x slots mask on seeded random inputs.");

  m.def(
      "full_attention",
      [](const py::array& q, const py::array& k, const py::array& v,
         std::size_t heads, bool causal) {
        AttentionInputs in;
        in.q = to_tensor_like(q);
        in.k = to_tensor(k, in.q.precision());
        in.v = to_tensor(v, in.q.precision());
        return to_numpy(full_attention(in, heads, causal).out);
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("heads"),
      py::arg("causal") = false);

  m.def(
      "run_checks",
      [](bool quick, const std::string& strategy, uint64_t seed) {
        CheckOptions opts;
        opts.quick = quick;
        if (!strategy.empty()) opts.strategy = parse_strategy(strategy);
        opts.seed = seed;
        CheckReport report;
        {
          py::gil_scoped_release release;
          report = run_checks(opts);
        }
        return py::make_tuple(report.passed(), report.text());
      },
      py::arg("quick") = true, py::arg("strategy") = "", py::arg("seed") = 0,
      "Returns (passed, report text).");

  m.def("extend_positional", [](const py::array& p, std::size_t target_len) {
    return to_numpy(extend_positional(to_tensor_like(p), target_len));
  });
  m.def("init_globals", [](const py::array& cls, const py::array& mask,
                           const py::array& p, std::size_t g) {
    const Tensor pt = to_tensor_like(p);
    return to_numpy(init_globals(to_tensor(cls, pt.precision()),
                                 to_tensor(mask, pt.precision()), pt, g));
  });

  m.def(
      "load_bundle",
      [](const std::filesystem::path& path) {
        const WeightBundle b = load_bundle(path);
        py::dict tensors;
        for (const auto& [name, t] : b.entries()) tensors[py::str(name)] = to_numpy(t);
        return py::make_tuple(tensors, b.metadata);
      },
      py::arg("path"), "Returns (tensors, metadata); tensors keep file order.");
  m.def(
      "save_bundle",
      [](const std::filesystem::path& path, const py::dict& tensors,
         const std::map<std::string, std::string>& metadata) {
        WeightBundle b;
        for (const auto& [name, arr] : tensors) {
          b.add(py::cast<std::string>(name),
                to_tensor_like(py::cast<py::array>(arr)));
        }
        b.metadata = metadata;
        save_bundle(b, path);
      },
      py::arg("path"), py::arg("tensors"),
      py::arg("metadata") = std::map<std::string, std::string>());
  m.def(
      "convert_bundle",
      [](const std::filesystem::path& in, const std::filesystem::path& out,
         const LsgConfig& cfg, std::size_t target_len) {
        save_bundle(convert(load_bundle(in), cfg, target_len), out);
      },
      py::arg("src"), py::arg("dst"), py::arg("config"), py::arg("target_len"));
  m.def(
      "write_toy_bundle",
      [](const std::filesystem::path& path, std::size_t layers,
         std::size_t max_positions, std::size_t dim, std::size_t vocab,
         uint64_t seed) {
        save_bundle(make_toy_bundle({layers, max_positions, dim, vocab, seed,
                                     Precision::kSingle}),
                    path);
      },
      py::arg("path"), py::arg("layers") = 2, py::arg("max_positions") = 512,
      py::arg("dim") = 16, py::arg("vocab") = 32, py::arg("seed") = 0);
}
