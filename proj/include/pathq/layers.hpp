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

#ifndef PATHQ_LAYERS_HPP_
#define PATHQ_LAYERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pathq/error.hpp"
#include "pathq/params.hpp"
#include "pathq/tensor.hpp"

// Neural building blocks with hand-written backward passes.
//
// Layers are thin views over parameters registered in a ParameterStore.
// forward() optionally fills a Cache; backward() takes the gradient of the
// output plus that cache, accumulates parameter gradients into the store,
// and returns the gradient of the input. A layer can be applied several
// times per example as long as each call keeps its own cache.

namespace pathq {

enum class MaskMode { kBidirectional, kCausal };
enum class PositionalEncoding { kSinusoidal, kNone };
enum class Activation { kRelu, kIdentity };

inline std::string_view mask_mode_name(MaskMode m) {
  return m == MaskMode::kCausal ? "causal" : "bidirectional";
}
inline MaskMode parse_mask_mode(std::string_view s) {
  if (s == "bidirectional") return MaskMode::kBidirectional;
  if (s == "causal") return MaskMode::kCausal;
  throw DataError("unknown mask mode '" + std::string(s) + "'");
}
inline std::string_view positional_name(PositionalEncoding p) {
  return p == PositionalEncoding::kNone ? "none" : "sinusoidal";
}
inline PositionalEncoding parse_positional(std::string_view s) {
  if (s == "sinusoidal") return PositionalEncoding::kSinusoidal;
  if (s == "none") return PositionalEncoding::kNone;
  throw DataError("unknown positional encoding '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Dropout

// Hands out dropout-site ids for one optimizer step. Masks are a pure
// function of (seed, step, site, element), so a training run replays
// bit-for-bit.
class DropoutStream {
 public:
  DropoutStream(std::uint64_t seed, std::uint64_t step) : seed_(seed), step_(step) {}

  std::uint64_t next_site() { return site_++; }

  double uniform(std::uint64_t site, std::uint64_t index) const {
    std::uint64_t h = mix(seed_ ^ mix(step_ ^ mix(site ^ mix(index))));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t step_;
  std::uint64_t site_ = 0;
};

// Per-element scale (0 or 1/(1-rate)); empty means identity.
template <typename T>
struct DropoutMask {
  std::vector<T> scale;
};

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, DropoutStream* stream,
                          DropoutMask<T>* mask) {
  if (stream == nullptr || rate <= 0.0) {
    if (mask) mask->scale.clear();
    return x;
  }
  const auto site = stream->next_site();
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> y = x;
  std::vector<T> scale(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale[i] = stream->uniform(site, i) < rate ? T(0) : keep;
    y[i] *= scale[i];
  }
  if (mask) mask->scale = std::move(scale);
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const DropoutMask<T>& mask) {
  if (mask.scale.empty()) return dy;
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask.scale[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
class Linear {
 public:
  struct Cache {
    Tensor<T> input;
  };

  Linear() = default;

  // Registers `<name>/w` [in x out] and `<name>/b` [out]. Weights are
  // uniform in +-1/sqrt(in), biases zero.
  template <typename Rng>
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in,
         std::size_t out, Rng& rng)
      : weight_(&store.add(name + "/w", {in, out})),
        bias_(&store.add(name + "/b", {out})) {
    init_uniform(weight_->value, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  }

  std::size_t in_features() const { return weight_->value.rows(); }
  std::size_t out_features() const { return weight_->value.cols(); }
  Parameter<T>& weight() const { return *weight_; }
  Parameter<T>& bias() const { return *bias_; }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    if (x.cols() != in_features()) {
      throw ShapeError("linear " + weight_->name + ": input " + x.shape_string() +
                       ", expected width " + std::to_string(in_features()));
    }
    Tensor<T> y = matmul(x, weight_->value);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias_->value[j];
    }
    if (cache) cache->input = x;
    check_finite(y, "linear");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) const {
    matmul_tn_accumulate(cache.input, dy, weight_->grad);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
      for (std::size_t j = 0; j < dy.cols(); ++j) bias_->grad[j] += dy(i, j);
    }
    return matmul_nt(dy, weight_->value);
  }

 private:
  Parameter<T>* weight_ = nullptr;
  Parameter<T>* bias_ = nullptr;
};

// ---------------------------------------------------------------------------
// Elementwise activations

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Activation act) {
  if (act == Activation::kIdentity) return x;
  Tensor<T> y = x;
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return y;
}

// `pre` is the activation input.
template <typename T>
Tensor<T> activate_backward(const Tensor<T>& dy, const Tensor<T>& pre,
                            Activation act) {
  if (act == Activation::kIdentity) return dy;
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(pre[i] > T(0))) dx[i] = T(0);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Layer normalization over the last axis

template <typename T>
class LayerNorm {
 public:
  struct Cache {
    Tensor<T> normalized;
    std::vector<T> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t d,
            double eps = 1e-5)
      : gain_(&store.add(name + "/gain", {d})),
        shift_(&store.add(name + "/shift", {d})),
        eps_(eps) {
    gain_->value.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const std::size_t n = x.rows(), d = x.cols();
    if (d != gain_->value.size()) {
      throw ShapeError("layer norm " + gain_->name + ": input " + x.shape_string());
    }
    Tensor<T> y = x;
    Tensor<T> xhat = x;
    std::vector<T> inv(n);
    for (std::size_t i = 0; i < n; ++i) {
      T mean = 0;
      for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
      mean /= static_cast<T>(d);
      T var = 0;
      for (std::size_t j = 0; j < d; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
      var /= static_cast<T>(d);
      inv[i] = T(1) / std::sqrt(var + static_cast<T>(eps_));
      for (std::size_t j = 0; j < d; ++j) {
        xhat(i, j) = (x(i, j) - mean) * inv[i];
        y(i, j) = gain_->value[j] * xhat(i, j) + shift_->value[j];
      }
    }
    if (cache) {
      cache->normalized = std::move(xhat);
      cache->inv_std = std::move(inv);
    }
    check_finite(y, "layer_norm");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) const {
    const std::size_t n = dy.rows(), d = dy.cols();
    const auto& xhat = cache.normalized;
    Tensor<T> dx = dy;
    std::vector<T> g(d);
    for (std::size_t i = 0; i < n; ++i) {
      T sum_g = 0, sum_gx = 0;
      for (std::size_t j = 0; j < d; ++j) {
        gain_->grad[j] += dy(i, j) * xhat(i, j);
        shift_->grad[j] += dy(i, j);
        g[j] = dy(i, j) * gain_->value[j];
        sum_g += g[j];
        sum_gx += g[j] * xhat(i, j);
      }
      const T scale = cache.inv_std[i] / static_cast<T>(d);
      for (std::size_t j = 0; j < d; ++j) {
        dx(i, j) = scale * (static_cast<T>(d) * g[j] - sum_g - xhat(i, j) * sum_gx);
      }
    }
    return dx;
  }

 private:
  Parameter<T>* gain_ = nullptr;
  Parameter<T>* shift_ = nullptr;
  double eps_ = 1e-5;
};

// ---------------------------------------------------------------------------
// Multi-layer perceptron: affine -> activation, repeated; last layer affine.

template <typename T>
class Mlp {
 public:
  struct Cache {
    std::vector<typename Linear<T>::Cache> linear;
    std::vector<Tensor<T>> pre_activation;
  };

  Mlp() = default;

  template <typename Rng>
  Mlp(ParameterStore<T>& store, const std::string& name,
      const std::vector<std::size_t>& widths, Activation act, Rng& rng)
      : activation_(act) {
    if (widths.size() < 2) throw ShapeError("mlp " + name + " needs >= 2 widths");
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
      layers_.emplace_back(store, name + "/" + std::to_string(k), widths[k],
                           widths[k + 1], rng);
    }
  }

  std::size_t depth() const { return layers_.size(); }
  const Linear<T>& layer(std::size_t k) const { return layers_[k]; }
  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    if (cache) {
      cache->linear.assign(layers_.size(), {});
      cache->pre_activation.assign(layers_.size(), {});
    }
    Tensor<T> h = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      h = layers_[k].forward(h, cache ? &cache->linear[k] : nullptr);
      if (k + 1 < layers_.size()) {
        if (cache) cache->pre_activation[k] = h;
        h = activate(h, activation_);
      }
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) const {
    Tensor<T> g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (k + 1 < layers_.size()) {
        g = activate_backward(g, cache.pre_activation[k], activation_);
      }
      g = layers_[k].backward(g, cache.linear[k]);
    }
    return g;
  }

 private:
  std::vector<Linear<T>> layers_;
  Activation activation_ = Activation::kRelu;
};

// ---------------------------------------------------------------------------
// Multi-head self-attention

template <typename T>
class MultiHeadAttention {
 public:
  struct Cache {
    typename Linear<T>::Cache q_in, k_in, v_in, out_in;
    Tensor<T> q, k, v;
    // Row-stochastic [len x len] attention weights, one per head.
    std::vector<Tensor<T>> weights;
  };

  MultiHeadAttention() = default;

  template <typename Rng>
  MultiHeadAttention(ParameterStore<T>& store, const std::string& name,
                     std::size_t d, std::size_t heads, MaskMode mask, Rng& rng)
      : query_(store, name + "/query", d, d, rng),
        key_(store, name + "/key", d, d, rng),
        value_(store, name + "/value", d, d, rng),
        output_(store, name + "/output", d, d, rng),
        heads_(heads),
        mask_(mask) {
    if (heads == 0 || d % heads != 0) {
      throw ShapeError("attention " + name + ": width " + std::to_string(d) +
                       " not divisible by " + std::to_string(heads) + " heads");
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.q = query_.forward(x, &c.q_in);
    c.k = key_.forward(x, &c.k_in);
    c.v = value_.forward(x, &c.v_in);
    const std::size_t len = x.rows(), d = x.cols(), dk = d / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    c.weights.assign(heads_, Tensor<T>::matrix(len, len));
    auto concat = Tensor<T>::matrix(len, d);
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::size_t off = h * dk;
      auto& a = c.weights[h];
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t visible = mask_ == MaskMode::kCausal ? i + 1 : len;
        T max_score = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < visible; ++j) {
          T s = 0;
          for (std::size_t p = 0; p < dk; ++p) s += c.q(i, off + p) * c.k(j, off + p);
          a(i, j) = s * scale;
          max_score = std::max(max_score, a(i, j));
        }
        T total = 0;
        for (std::size_t j = 0; j < visible; ++j) {
          a(i, j) = std::exp(a(i, j) - max_score);
          total += a(i, j);
        }
        for (std::size_t j = 0; j < visible; ++j) a(i, j) /= total;
        for (std::size_t j = 0; j < visible; ++j) {
          const T w = a(i, j);
          for (std::size_t p = 0; p < dk; ++p) concat(i, off + p) += w * c.v(j, off + p);
        }
      }
    }
    return output_.forward(concat, &c.out_in);
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& c) const {
    const Tensor<T> dconcat = output_.backward(dy, c.out_in);
    const std::size_t len = dy.rows(), d = dy.cols(), dk = d / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    auto dq = Tensor<T>::matrix(len, d);
    auto dk_mat = Tensor<T>::matrix(len, d);
    auto dv = Tensor<T>::matrix(len, d);
    std::vector<T> da(len);
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::size_t off = h * dk;
      const auto& a = c.weights[h];
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t visible = mask_ == MaskMode::kCausal ? i + 1 : len;
        T dot = 0;
        for (std::size_t j = 0; j < visible; ++j) {
          T s = 0;
          for (std::size_t p = 0; p < dk; ++p) {
            s += dconcat(i, off + p) * c.v(j, off + p);
            dv(j, off + p) += a(i, j) * dconcat(i, off + p);
          }
          da[j] = s;
          dot += s * a(i, j);
        }
        for (std::size_t j = 0; j < visible; ++j) {
          const T ds = a(i, j) * (da[j] - dot) * scale;
          for (std::size_t p = 0; p < dk; ++p) {
            dq(i, off + p) += ds * c.k(j, off + p);
            dk_mat(j, off + p) += ds * c.q(i, off + p);
          }
        }
      }
    }
    Tensor<T> dx = query_.backward(dq, c.q_in);
    dx += key_.backward(dk_mat, c.k_in);
    dx += value_.backward(dv, c.v_in);
    return dx;
  }

 private:
  Linear<T> query_, key_, value_, output_;
  std::size_t heads_ = 1;
  MaskMode mask_ = MaskMode::kBidirectional;
};

// ---------------------------------------------------------------------------
// Transformer encoder (post-norm residual blocks)

struct EncoderConfig {
  std::size_t d = 32;
  std::size_t layers = 1;
  std::size_t heads = 4;
  std::size_t d_ffn = 128;
  double dropout = 0.1;
  MaskMode mask = MaskMode::kBidirectional;
  PositionalEncoding positional = PositionalEncoding::kSinusoidal;

  void validate() const {
    if (heads == 0 || d % heads != 0) {
      throw ShapeError("encoder width " + std::to_string(d) +
                       " is not divisible by " + std::to_string(heads) + " heads");
    }
    if (layers < 1) throw ShapeError("encoder needs at least one layer");
    if (d_ffn < 1) throw ShapeError("encoder feed-forward width must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw ShapeError("dropout must lie in [0, 1)");
    }
  }
};

template <typename T>
class EncoderLayer {
 public:
  struct Cache {
    typename MultiHeadAttention<T>::Cache attention;
    DropoutMask<T> attention_drop, ffn_drop;
    typename LayerNorm<T>::Cache norm1, norm2;
    typename Mlp<T>::Cache ffn;
  };

  EncoderLayer() = default;

  template <typename Rng>
  EncoderLayer(ParameterStore<T>& store, const std::string& name,
               const EncoderConfig& cfg, Rng& rng)
      : attention_(store, name + "/attention", cfg.d, cfg.heads, cfg.mask, rng),
        norm1_(store, name + "/norm1", cfg.d),
        ffn_(store, name + "/ffn", {cfg.d, cfg.d_ffn, cfg.d}, Activation::kRelu, rng),
        norm2_(store, name + "/norm2", cfg.d),
        dropout_(cfg.dropout) {}

  Tensor<T> forward(const Tensor<T>& x, DropoutStream* drop, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    Tensor<T> a = attention_.forward(x, &c.attention);
    a = dropout_forward(a, dropout_, drop, &c.attention_drop);
    const Tensor<T> x1 = norm1_.forward(x + a, &c.norm1);
    Tensor<T> f = ffn_.forward(x1, &c.ffn);
    f = dropout_forward(f, dropout_, drop, &c.ffn_drop);
    return norm2_.forward(x1 + f, &c.norm2);
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& c) const {
    const Tensor<T> dr2 = norm2_.backward(dy, c.norm2);
    Tensor<T> dx1 = dr2;
    dx1 += ffn_.backward(dropout_backward(dr2, c.ffn_drop), c.ffn);
    const Tensor<T> dr1 = norm1_.backward(dx1, c.norm1);
    Tensor<T> dx = dr1;
    dx += attention_.backward(dropout_backward(dr1, c.attention_drop), c.attention);
    return dx;
  }

 private:
  MultiHeadAttention<T> attention_;
  LayerNorm<T> norm1_;
  Mlp<T> ffn_;
  LayerNorm<T> norm2_;
  double dropout_ = 0.0;
};

template <typename T>
Tensor<T> sinusoidal_encoding(std::size_t len, std::size_t d) {
  auto pe = Tensor<T>::matrix(len, d);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t j = 0; j < d; ++j) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(j - j % 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * freq;
      pe(pos, j) = static_cast<T>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
class TransformerEncoder {
 public:
  struct Cache {
    DropoutMask<T> input_drop;
    std::vector<typename EncoderLayer<T>::Cache> layers;
  };

  TransformerEncoder() = default;

  template <typename Rng>
  TransformerEncoder(ParameterStore<T>& store, const std::string& name,
                     const EncoderConfig& cfg, Rng& rng)
      : config_(cfg) {
    cfg.validate();
    for (std::size_t k = 0; k < cfg.layers; ++k) {
      layers_.emplace_back(store, name + "/layer" + std::to_string(k), cfg, rng);
    }
  }

  const EncoderConfig& config() const { return config_; }

  // x: [len x d]. Positional encoding is added before the first layer.
  Tensor<T> forward(const Tensor<T>& x, DropoutStream* drop, Cache* cache) const {
    if (x.rank() != 2 || x.cols() != config_.d || x.rows() == 0) {
      throw ShapeError("encoder input " + x.shape_string() + ", expected [len x " +
                       std::to_string(config_.d) + "]");
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    Tensor<T> h = x;
    if (config_.positional == PositionalEncoding::kSinusoidal) {
      h += sinusoidal_encoding<T>(x.rows(), x.cols());
    }
    h = dropout_forward(h, config_.dropout, drop, &c.input_drop);
    c.layers.assign(layers_.size(), {});
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      h = layers_[k].forward(h, drop, &c.layers[k]);
    }
    return h;
  }

  // Batched form over [batch x len x d]; rows run in order so dropout sites
  // stay deterministic.
  Tensor<T> forward_batch(const Tensor<T>& x, DropoutStream* drop,
                          std::vector<Cache>* caches) const {
    if (x.rank() != 3) throw ShapeError("forward_batch needs [batch x len x d]");
    if (caches) caches->assign(x.shape()[0], {});
    std::vector<Tensor<T>> outs;
    for (std::size_t b = 0; b < x.shape()[0]; ++b) {
      outs.push_back(forward(x.slice(b), drop, caches ? &(*caches)[b] : nullptr));
    }
    return stack<T>(outs);
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& c) const {
    Tensor<T> g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) g = layers_[k].backward(g, c.layers[k]);
    return dropout_backward(g, c.input_drop);
  }

 private:
  EncoderConfig config_;
  std::vector<EncoderLayer<T>> layers_;
};

// ---------------------------------------------------------------------------
// Mean pooling over the sequence axis

template <typename T>
Tensor<T> mean_pool(const Tensor<T>& seq) {
  if (seq.rank() == 3) {
    const std::size_t batch = seq.shape()[0], len = seq.shape()[1], d = seq.shape()[2];
    if (len == 0) throw ShapeError("mean_pool over an empty sequence");
    auto out = Tensor<T>::matrix(batch, d);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < d; ++j) out(b, j) += seq(b, i, j);
      }
      for (std::size_t j = 0; j < d; ++j) out(b, j) /= static_cast<T>(len);
    }
    return out;
  }
  const std::size_t len = seq.rows(), d = seq.cols();
  if (len == 0 || seq.empty()) throw ShapeError("mean_pool over an empty sequence");
  auto out = Tensor<T>::vector(d);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += seq(i, j);
  }
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<T>(len);
  return out;
}

// dy: [d]; returns [len x d].
template <typename T>
Tensor<T> mean_pool_backward(const Tensor<T>& dy, std::size_t len) {
  auto dx = Tensor<T>::matrix(len, dy.size());
  const T inv = T(1) / static_cast<T>(len);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j < dy.size(); ++j) dx(i, j) = dy[j] * inv;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MLP-Mixer block over a [tokens x d] stack

template <typename T>
class MixerBlock {
 public:
  struct Cache {
    typename LayerNorm<T>::Cache norm1, norm2;
    typename Mlp<T>::Cache token_mlp, channel_mlp;
  };

  MixerBlock() = default;

  template <typename Rng>
  MixerBlock(ParameterStore<T>& store, const std::string& name, std::size_t tokens,
             std::size_t d, std::size_t token_hidden, std::size_t channel_hidden,
             Rng& rng)
      : norm1_(store, name + "/norm1", d),
        token_mlp_(store, name + "/token_mlp", {tokens, token_hidden, tokens},
                   Activation::kRelu, rng),
        norm2_(store, name + "/norm2", d),
        channel_mlp_(store, name + "/channel_mlp", {d, channel_hidden, d},
                     Activation::kRelu, rng) {}

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    const Tensor<T> mixed =
        transpose(token_mlp_.forward(transpose(norm1_.forward(x, &c.norm1)), &c.token_mlp));
    const Tensor<T> x1 = x + mixed;
    return x1 + channel_mlp_.forward(norm2_.forward(x1, &c.norm2), &c.channel_mlp);
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& c) const {
    Tensor<T> dx1 = dy;
    dx1 += norm2_.backward(channel_mlp_.backward(dy, c.channel_mlp), c.norm2);
    Tensor<T> dx = dx1;
    dx += norm1_.backward(transpose(token_mlp_.backward(transpose(dx1), c.token_mlp)),
                          c.norm1);
    return dx;
  }

 private:
  LayerNorm<T> norm1_;
  Mlp<T> token_mlp_;
  LayerNorm<T> norm2_;
  Mlp<T> channel_mlp_;
};

}  // namespace pathq

#endif  // PATHQ_LAYERS_HPP_
