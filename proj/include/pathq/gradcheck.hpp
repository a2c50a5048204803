/*
 * Copyright 2026 The pathq Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHQ_GRADCHECK_HPP_
#define PATHQ_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pathq/layers.hpp"
#include "pathq/model.hpp"
#include "pathq/params.hpp"
#include "pathq/query.hpp"
#include "pathq/tensor.hpp"

// Central finite-difference checks of every hand-written backward pass.

namespace pathq {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so that gradients that are
  // zero up to rounding are compared absolutely.
  double floor = 1e-5;
};

struct GradCheckCase {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::string worst;  // parameter[index] with the largest error
  bool passed = true;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// `loss` evaluates the scalar from current parameter values;
// `forward_backward` leaves d(loss)/d(param) in the store's gradients.
inline GradCheckCase check_gradients(const std::string& name, ParameterStore<double>& store,
                                     const std::function<double()>& loss,
                                     const std::function<void()>& forward_backward,
                                     const GradCheckOptions& opt = {}) {
  GradCheckCase out;
  out.name = name;
  store.zero_grad();
  forward_backward();
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& param = store[p];
    for (std::size_t k = 0; k < param.value.size(); ++k) {
      const double saved = param.value[k];
      param.value[k] = saved + opt.step;
      const double up = loss();
      param.value[k] = saved - opt.step;
      const double down = loss();
      param.value[k] = saved;
      const double numeric = (up - down) / (2 * opt.step);
      const double err = relative_error(param.grad[k], numeric, opt.floor);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = param.name + "[" + std::to_string(k) + "]";
      }
    }
  }
  out.passed = out.max_rel_error < opt.tolerance;
  store.zero_grad();
  return out;
}

namespace detail {

inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

template <typename Rng>
Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double bound = 1.0) {
  Tensor<double> t(std::move(shape));
  init_uniform(t, bound, rng);
  return t;
}

template <typename Rng>
std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace detail

// Runs every layer check and whole-model loss checks over `draws` random
// shapes/parameter draws per case.
inline std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 7,
                                                      std::size_t draws = 3,
                                                      const GradCheckOptions& opt = {}) {
  using T = double;
  std::vector<GradCheckCase> results;
  for (std::size_t draw = 0; draw < draws; ++draw) {
    std::mt19937_64 rng(seed * 1000003ULL + draw);
    const std::string tag = " #" + std::to_string(draw);

    // Generic single-input layer harness.
    auto layer_case = [&](const std::string& name, ParameterStore<T>& store,
                          std::vector<std::size_t> in_shape, auto forward, auto backward) {
      auto& input = store.add("input", in_shape);
      init_uniform(input.value, 1.0, rng);
      const Tensor<T> probe = forward(input.value);
      const Tensor<T> w = detail::random_tensor(probe.shape(), rng);
      results.push_back(check_gradients(
          name + tag, store, [&] { return detail::weighted_sum(forward(input.value), w); },
          [&] { input.grad += backward(input.value, w); }, opt));
    };

    {
      ParameterStore<T> store;
      const auto in = detail::pick(rng, 2, 6), out = detail::pick(rng, 2, 6);
      const auto n = detail::pick(rng, 1, 4);
      Linear<T> lin(store, "linear", in, out, rng);
      init_uniform(lin.bias().value, 0.5, rng);
      layer_case("linear", store, {n, in},
                 [&](const Tensor<T>& x) { return lin.forward(x, nullptr); },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   typename Linear<T>::Cache c;
                   lin.forward(x, &c);
                   return lin.backward(dy, c);
                 });
    }
    for (Activation act : {Activation::kRelu, Activation::kIdentity}) {
      ParameterStore<T> store;
      std::vector<std::size_t> widths;
      const auto depth = detail::pick(rng, 2, 4);
      for (std::size_t k = 0; k <= depth; ++k) widths.push_back(detail::pick(rng, 2, 7));
      Mlp<T> mlp(store, "mlp", widths, act, rng);
      for (std::size_t k = 0; k < depth; ++k) {
        init_uniform(store.get("mlp/" + std::to_string(k) + "/b").value, 0.5, rng);
      }
      layer_case(act == Activation::kRelu ? "mlp(relu)" : "mlp(identity)", store,
                 {detail::pick(rng, 1, 3), widths.front()},
                 [&](const Tensor<T>& x) { return mlp.forward(x, nullptr); },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   typename Mlp<T>::Cache c;
                   mlp.forward(x, &c);
                   return mlp.backward(dy, c);
                 });
    }
    {
      ParameterStore<T> store;
      const auto d = detail::pick(rng, 2, 8);
      LayerNorm<T> ln(store, "norm", d);
      init_uniform(store.get("norm/gain").value, 1.5, rng);
      init_uniform(store.get("norm/shift").value, 0.5, rng);
      layer_case("layer_norm", store, {detail::pick(rng, 1, 4), d},
                 [&](const Tensor<T>& x) { return ln.forward(x, nullptr); },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   typename LayerNorm<T>::Cache c;
                   ln.forward(x, &c);
                   return ln.backward(dy, c);
                 });
    }
    for (MaskMode mask : {MaskMode::kBidirectional, MaskMode::kCausal}) {
      ParameterStore<T> store;
      const auto heads = detail::pick(rng, 1, 3);
      const auto d = heads * detail::pick(rng, 1, 3);
      MultiHeadAttention<T> mha(store, "attention", d, heads, mask, rng);
      layer_case(std::string("attention(") + std::string(mask_mode_name(mask)) + ")", store,
                 {detail::pick(rng, 1, 5), d},
                 [&](const Tensor<T>& x) { return mha.forward(x, nullptr); },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   typename MultiHeadAttention<T>::Cache c;
                   mha.forward(x, &c);
                   return mha.backward(dy, c);
                 });
    }
    for (MaskMode mask : {MaskMode::kBidirectional, MaskMode::kCausal}) {
      ParameterStore<T> store;
      EncoderConfig cfg;
      cfg.heads = detail::pick(rng, 1, 2);
      cfg.d = cfg.heads * detail::pick(rng, 2, 3);
      cfg.layers = 2;
      cfg.d_ffn = detail::pick(rng, 3, 8);
      cfg.dropout = 0.2;
      cfg.mask = mask;
      cfg.positional =
          draw % 2 == 0 ? PositionalEncoding::kSinusoidal : PositionalEncoding::kNone;
      TransformerEncoder<T> enc(store, "encoder", cfg, rng);
      const std::uint64_t drop_seed = rng();
      layer_case(std::string("encoder(2 layers, ") + std::string(mask_mode_name(mask)) +
                     ", dropout)",
                 store, {detail::pick(rng, 1, 4), cfg.d},
                 [&](const Tensor<T>& x) {
                   DropoutStream drop(drop_seed, 1);
                   return enc.forward(x, &drop, nullptr);
                 },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   DropoutStream drop(drop_seed, 1);
                   typename TransformerEncoder<T>::Cache c;
                   enc.forward(x, &drop, &c);
                   return enc.backward(dy, c);
                 });
    }
    {
      ParameterStore<T> store;
      const auto len = detail::pick(rng, 1, 5);
      layer_case("mean_pool", store, {len, detail::pick(rng, 1, 6)},
                 [&](const Tensor<T>& x) { return mean_pool(x); },
                 [&](const Tensor<T>&, const Tensor<T>& dy) {
                   return mean_pool_backward(dy, len);
                 });
    }
    {
      ParameterStore<T> store;
      const auto d = detail::pick(rng, 2, 6);
      MixerBlock<T> mixer(store, "mixer", 2, d, detail::pick(rng, 2, 5),
                          detail::pick(rng, 2, 5), rng);
      layer_case("mixer_block", store, {2, d},
                 [&](const Tensor<T>& x) { return mixer.forward(x, nullptr); },
                 [&](const Tensor<T>& x, const Tensor<T>& dy) {
                   typename MixerBlock<T>::Cache c;
                   mixer.forward(x, &c);
                   return mixer.backward(dy, c);
                 });
    }

    // Whole-model margin loss through plan execution, for a structure mix
    // that exercises anchors, fork starts, negation tokens and unions.
    const Structure structures[] = {Structure::k1p,  Structure::k3p, Structure::k2in,
                                    Structure::kPin, Structure::k3i, Structure::kIp,
                                    Structure::kPni, Structure::kUp};
    const ForkVariant forks[] = {ForkVariant::kMlp, ForkVariant::kMlp2Vector,
                                 ForkVariant::kMixer};
    for (std::size_t si = 0; si < std::size(structures); ++si) {
      const Structure s = structures[si];
      ModelConfig mc;
      mc.entity_count = 9;
      mc.relation_count = 4;
      mc.encoder.heads = 2;
      mc.encoder.d = 6;
      mc.encoder.layers = 2;
      mc.encoder.d_ffn = 8;
      mc.encoder.dropout = 0.1;
      mc.encoder.mask = si % 2 ? MaskMode::kCausal : MaskMode::kBidirectional;
      mc.fork = forks[(si + draw) % 3];
      mc.fork_layers = 2;
      mc.gamma = 2.0;
      mc.seed = rng();
      QueryEncoder<T> model(mc);
      const Arity ar = structure_arity(s);
      std::vector<EntityId> anchors;
      std::vector<RelationId> relations;
      for (std::size_t k = 0; k < ar.anchors; ++k) {
        anchors.push_back(static_cast<EntityId>(detail::pick(rng, 0, 8)));
      }
      for (std::size_t k = 0; k < ar.relations; ++k) {
        relations.push_back(static_cast<RelationId>(detail::pick(rng, 0, 3)));
      }
      const QueryTree tree = instantiate(s, anchors, relations);
      const EntityId positive = static_cast<EntityId>(detail::pick(rng, 0, 8));
      std::vector<EntityId> negatives;
      for (EntityId e = 0; e < 9; ++e) {
        if (e != positive && negatives.size() < 3) negatives.push_back(e);
      }
      const std::uint64_t drop_seed = rng();
      auto& store = model.parameters();
      results.push_back(check_gradients(
          "loss(" + std::string(structure_name(s)) + ", " +
              std::string(fork_variant_name(mc.fork)) + ", " +
              std::string(mask_mode_name(mc.encoder.mask)) + ")" + tag,
          store,
          [&] {
            DropoutStream drop(drop_seed, 3);
            return model.loss(model.encode_query(tree, &drop), positive, negatives);
          },
          [&] {
            DropoutStream drop(drop_seed, 3);
            model.loss_and_backward(tree, positive, negatives, 1.0, &drop);
          },
          opt));
    }
  }
  return results;
}

}  // namespace pathq

#endif  // PATHQ_GRADCHECK_HPP_
