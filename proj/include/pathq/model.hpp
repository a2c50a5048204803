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

#ifndef PATHQ_MODEL_HPP_
#define PATHQ_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pathq/error.hpp"
#include "pathq/kg.hpp"
#include "pathq/layers.hpp"
#include "pathq/params.hpp"
#include "pathq/query.hpp"
#include "pathq/tensor.hpp"

namespace pathq {

enum class ForkVariant { kMlp, kMixer, kMlp2Vector };

inline std::string_view fork_variant_name(ForkVariant v) {
  switch (v) {
    case ForkVariant::kMlp: return "mlp";
    case ForkVariant::kMixer: return "mixer";
    case ForkVariant::kMlp2Vector: return "mlp2vector";
  }
  return "?";
}

inline ForkVariant parse_fork_variant(std::string_view s) {
  if (s == "mlp") return ForkVariant::kMlp;
  if (s == "mixer") return ForkVariant::kMixer;
  if (s == "mlp2vector") return ForkVariant::kMlp2Vector;
  throw DataError("unknown fork encoder '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  EncoderConfig encoder;
  ForkVariant fork = ForkVariant::kMlp;
  // Number of affine layers in each fork MLP (k2).
  std::size_t fork_layers = 2;
  // Hidden width of fork MLPs and mixer sub-MLPs; 0 means d.
  std::size_t fork_hidden = 0;
  double gamma = 12.0;
  std::uint64_t seed = 0;

  std::size_t d() const { return encoder.d; }
  std::size_t hidden() const { return fork_hidden ? fork_hidden : encoder.d; }

  nlohmann::json to_json() const {
    return {{"entity_count", entity_count},
            {"relation_count", relation_count},
            {"d", encoder.d},
            {"k1", encoder.layers},
            {"heads", encoder.heads},
            {"d_ffn", encoder.d_ffn},
            {"dropout", encoder.dropout},
            {"mask", mask_mode_name(encoder.mask)},
            {"positional", positional_name(encoder.positional)},
            {"fork", fork_variant_name(fork)},
            {"k2", fork_layers},
            {"fork_hidden", fork_hidden},
            {"gamma", gamma},
            {"seed", seed}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.entity_count = j.at("entity_count").get<std::size_t>();
    c.relation_count = j.at("relation_count").get<std::size_t>();
    c.encoder.d = j.at("d").get<std::size_t>();
    c.encoder.layers = j.at("k1").get<std::size_t>();
    c.encoder.heads = j.at("heads").get<std::size_t>();
    c.encoder.d_ffn = j.at("d_ffn").get<std::size_t>();
    c.encoder.dropout = j.at("dropout").get<double>();
    c.encoder.mask = parse_mask_mode(j.at("mask").get<std::string>());
    c.encoder.positional = parse_positional(j.at("positional").get<std::string>());
    c.fork = parse_fork_variant(j.at("fork").get<std::string>());
    c.fork_layers = j.at("k2").get<std::size_t>();
    c.fork_hidden = j.at("fork_hidden").get<std::size_t>();
    c.gamma = j.at("gamma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

// One d-vector per DNF disjunct.
template <typename T>
struct QueryEmbedding {
  std::vector<Tensor<T>> disjuncts;
};

// Eq. (6)-style margin loss on precomputed distances, with its derivatives.
struct MarginLoss {
  double value = 0;
  double d_positive = 0;
  std::vector<double> d_negatives;
};

inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// L = -log sig(gamma - D+) - (1/u) sum_j log sig(D-_j - gamma)
inline MarginLoss margin_loss(double positive, std::span<const double> negatives,
                              double gamma) {
  if (negatives.empty()) throw DataError("margin loss needs at least one negative");
  MarginLoss out;
  const double inv_u = 1.0 / static_cast<double>(negatives.size());
  out.value = softplus(positive - gamma);
  out.d_positive = sigmoid(positive - gamma);
  out.d_negatives.reserve(negatives.size());
  for (double n : negatives) {
    out.value += inv_u * softplus(gamma - n);
    out.d_negatives.push_back(-inv_u * sigmoid(gamma - n));
  }
  return out;
}

template <typename T>
class QueryEncoder {
 public:
  struct PathCache {
    typename TransformerEncoder<T>::Cache encoder;
    std::size_t length = 0;
  };

  struct ForkCache {
    typename Mlp<T>::Cache first, second;
    typename MixerBlock<T>::Cache mixer;
  };

  struct StepTrace {
    PathCache path;
    ForkCache fork;
  };

  struct DisjunctTrace {
    DecompositionPlan plan;
    std::vector<StepTrace> steps;
  };

  // Everything backward() needs from one encode_query() call.
  struct QueryTrace {
    std::vector<DisjunctTrace> disjuncts;
  };

  explicit QueryEncoder(ModelConfig cfg) : config_(std::move(cfg)) {
    config_.encoder.validate();
    if (config_.fork_layers < 1) throw ShapeError("fork MLP needs k2 >= 1");
    if (config_.entity_count == 0 || config_.relation_count == 0) {
      throw ShapeError("model needs non-empty vocabularies");
    }
    std::mt19937_64 rng(config_.seed);
    const std::size_t d = config_.d();
    entities_ = &store_.add("embedding/entity", {config_.entity_count, d});
    relations_ = &store_.add("embedding/relation", {config_.relation_count, d});
    negation_ = &store_.add("embedding/negation", {1, d});
    const double bound = config_.gamma / static_cast<double>(d);
    init_uniform(entities_->value, bound, rng);
    init_uniform(relations_->value, bound, rng);
    init_uniform(negation_->value, bound, rng);
    path_encoder_ = TransformerEncoder<T>(store_, "path_encoder", config_.encoder, rng);

    std::vector<std::size_t> widths = {2 * d};
    for (std::size_t k = 1; k < config_.fork_layers; ++k) widths.push_back(config_.hidden());
    widths.push_back(d);
    switch (config_.fork) {
      case ForkVariant::kMlp:
        fork_first_ = Mlp<T>(store_, "fork/mlp", widths, Activation::kRelu, rng);
        break;
      case ForkVariant::kMlp2Vector:
        fork_first_ = Mlp<T>(store_, "fork/mlp_a", widths, Activation::kRelu, rng);
        fork_second_ = Mlp<T>(store_, "fork/mlp_b", widths, Activation::kRelu, rng);
        break;
      case ForkVariant::kMixer:
        mixer_ = MixerBlock<T>(store_, "fork/mixer", 2, d, config_.hidden(),
                               config_.hidden(), rng);
        break;
    }
  }

  QueryEncoder(const QueryEncoder&) = delete;
  QueryEncoder& operator=(const QueryEncoder&) = delete;
  QueryEncoder(QueryEncoder&&) noexcept = default;
  QueryEncoder& operator=(QueryEncoder&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }
  std::size_t d() const { return config_.d(); }

  Tensor<T> entity_embedding(EntityId e) const {
    check_entity(e);
    return row_of(entities_->value, static_cast<std::size_t>(e));
  }

  // [1 + k, d]: the start vector, then one row per operator (relation
  // embedding for a projection, the negation token for a negation).
  Tensor<T> build_input_sequence(const PathQuery& path, const Tensor<T>& start) const {
    if (path.ops.empty()) throw StructureError("path query without operators");
    const std::size_t d = this->d();
    if (start.size() != d) throw ShapeError("start vector has wrong width");
    auto seq = Tensor<T>::matrix(1 + path.ops.size(), d);
    std::copy(start.values().begin(), start.values().end(), seq.row(0).begin());
    for (std::size_t i = 0; i < path.ops.size(); ++i) {
      const T* src;
      if (const auto* p = std::get_if<Project>(&path.ops[i])) {
        check_relation(p->relation);
        src = relations_->value.data() + static_cast<std::size_t>(p->relation) * d;
      } else {
        src = negation_->value.data();
      }
      std::copy(src, src + d, seq.row(i + 1).begin());
    }
    return seq;
  }

  Tensor<T> encode_path(const PathQuery& path, const Tensor<T>& start,
                        DropoutStream* drop = nullptr, PathCache* cache = nullptr) const {
    const Tensor<T> seq = build_input_sequence(path, start);
    PathCache local;
    PathCache& c = cache ? *cache : local;
    c.length = seq.rows();
    return mean_pool(path_encoder_.forward(seq, drop, &c.encoder));
  }

  // Per-position encoder output before pooling (for inspection and tests).
  Tensor<T> encode_path_positions(const PathQuery& path, const Tensor<T>& start) const {
    return path_encoder_.forward(build_input_sequence(path, start), nullptr, nullptr);
  }

  Tensor<T> encode_fork(const Tensor<T>& a, const Tensor<T>& b,
                        ForkCache* cache = nullptr) const {
    const std::size_t d = this->d();
    if (a.size() != d || b.size() != d) throw ShapeError("fork inputs must have width d");
    ForkCache local;
    ForkCache& c = cache ? *cache : local;
    if (config_.fork == ForkVariant::kMixer) {
      auto stacked = Tensor<T>::matrix(2, d);
      std::copy(a.values().begin(), a.values().end(), stacked.row(0).begin());
      std::copy(b.values().begin(), b.values().end(), stacked.row(1).begin());
      return mean_pool(mixer_.forward(stacked, &c.mixer));
    }
    auto joined = Tensor<T>::matrix(1, 2 * d);
    std::copy(a.values().begin(), a.values().end(), joined.row(0).begin());
    std::copy(b.values().begin(), b.values().end(), joined.row(0).begin() + d);
    Tensor<T> out = fork_first_.forward(joined, &c.first);
    if (config_.fork == ForkVariant::kMlp2Vector) {
      out += fork_second_.forward(joined, &c.second);
      for (auto& v : out.values()) v *= T(0.5);
    }
    return Tensor<T>({d}, std::vector<T>(out.values().begin(), out.values().end()));
  }

  QueryEmbedding<T> encode_query(const QueryTree& tree, DropoutStream* drop = nullptr,
                                 QueryTrace* trace = nullptr) const {
    QueryEmbedding<T> out;
    if (trace) trace->disjuncts.clear();
    for (const QueryTree& disjunct : to_dnf(tree)) {
      DisjunctTrace local;
      DisjunctTrace& dt = trace ? trace->disjuncts.emplace_back() : local;
      dt.plan = decompose(disjunct);
      out.disjuncts.push_back(run_plan(dt, drop));
    }
    return out;
  }

  // Gradients of some scalar w.r.t. each disjunct vector, pushed back
  // through the traced encoders into the parameter store.
  void backward(const QueryTrace& trace, std::span<const Tensor<T>> grads) {
    if (grads.size() != trace.disjuncts.size()) {
      throw ShapeError("one gradient per disjunct expected");
    }
    for (std::size_t k = 0; k < grads.size(); ++k) backward_plan(trace.disjuncts[k], grads[k]);
  }

  // L1 distance, minimised over disjuncts.
  T distance(EntityId e, const QueryEmbedding<T>& q) const {
    return distance_with_argmin(e, q).first;
  }

  std::pair<T, std::size_t> distance_with_argmin(EntityId e,
                                                 const QueryEmbedding<T>& q) const {
    check_entity(e);
    const T* v = entities_->value.data() + static_cast<std::size_t>(e) * d();
    T best = std::numeric_limits<T>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < q.disjuncts.size(); ++k) {
      T dist = 0;
      for (std::size_t j = 0; j < d(); ++j) dist += std::abs(v[j] - q.disjuncts[k][j]);
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    return {best, arg};
  }

  std::vector<double> distances(const QueryEmbedding<T>& q) const {
    std::vector<double> out(config_.entity_count);
    for (std::size_t e = 0; e < out.size(); ++e) {
      out[e] = static_cast<double>(distance(static_cast<EntityId>(e), q));
    }
    return out;
  }

  // Distances from the query to every entity (inference path, no dropout).
  std::vector<double> score(const QueryTree& tree) const {
    return distances(encode_query(tree));
  }

  double loss(const QueryEmbedding<T>& q, EntityId positive,
              std::span<const EntityId> negatives) const {
    std::vector<double> neg;
    for (EntityId e : negatives) neg.push_back(static_cast<double>(distance(e, q)));
    return margin_loss(static_cast<double>(distance(positive, q)), neg, config_.gamma).value;
  }

  // Forward + backward of the margin loss for one (query, answer) example.
  // Gradients are scaled by `weight` and accumulated into the store.
  double loss_and_backward(const QueryTree& tree, EntityId positive,
                           std::span<const EntityId> negatives, double weight,
                           DropoutStream* drop = nullptr) {
    QueryTrace trace;
    const QueryEmbedding<T> q = encode_query(tree, drop, &trace);
    std::vector<EntityId> candidates = {positive};
    candidates.insert(candidates.end(), negatives.begin(), negatives.end());
    std::vector<std::pair<T, std::size_t>> dist;
    std::vector<double> neg;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      dist.push_back(distance_with_argmin(candidates[c], q));
      if (c > 0) neg.push_back(static_cast<double>(dist.back().first));
    }
    const MarginLoss ml =
        margin_loss(static_cast<double>(dist[0].first), neg, config_.gamma);

    std::vector<Tensor<T>> dq(q.disjuncts.size(), Tensor<T>::vector(d()));
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const T w = static_cast<T>(weight * (c == 0 ? ml.d_positive : ml.d_negatives[c - 1]));
      const std::size_t k = dist[c].second;
      T* grow = entities_->grad.data() + static_cast<std::size_t>(candidates[c]) * d();
      const T* v = entities_->value.data() + static_cast<std::size_t>(candidates[c]) * d();
      for (std::size_t j = 0; j < d(); ++j) {
        const T diff = v[j] - q.disjuncts[k][j];
        const T s = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
        grow[j] += w * s;
        dq[k][j] -= w * s;
      }
    }
    backward(trace, dq);
    return ml.value;
  }

  nlohmann::json metadata() const { return {{"model", config_.to_json()}}; }

  static QueryEncoder from_checkpoint(const Checkpoint& ck) {
    if (!ck.meta.contains("model")) throw DataError("checkpoint has no model metadata");
    QueryEncoder model(ModelConfig::from_json(ck.meta.at("model")));
    restore_parameters(ck, model.store_);
    return model;
  }

 private:
  static Tensor<T> row_of(const Tensor<T>& table, std::size_t r) {
    const std::size_t d = table.cols();
    return Tensor<T>({d}, std::vector<T>(table.data() + r * d, table.data() + (r + 1) * d));
  }

  void check_entity(EntityId e) const {
    if (e < 0 || static_cast<std::size_t>(e) >= config_.entity_count) {
      throw DomainError("entity id " + std::to_string(e) + " out of range");
    }
  }
  void check_relation(RelationId r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= config_.relation_count) {
      throw DomainError("relation id " + std::to_string(r) + " out of range");
    }
  }

  Tensor<T> run_plan(DisjunctTrace& dt, DropoutStream* drop) const {
    const auto& plan = dt.plan;
    std::vector<Tensor<T>> slots(plan.slot_count);
    std::vector<bool> written(plan.slot_count, false);
    auto read = [&](SlotId s) -> const Tensor<T>& {
      if (s >= slots.size() || !written[s]) {
        throw StructureError("plan reads slot " + std::to_string(s) + " before it is written");
      }
      return slots[s];
    };
    dt.steps.assign(plan.steps.size(), {});
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      Tensor<T> value;
      SlotId out = 0;
      if (const auto* ps = std::get_if<PathStep>(&plan.steps[i])) {
        Tensor<T> start;
        if (const auto* a = std::get_if<AnchorStart>(&ps->path.start)) {
          start = entity_embedding(a->entity);
        } else {
          start = read(std::get<ForkStart>(ps->path.start).slot);
        }
        value = encode_path(ps->path, start, drop, &dt.steps[i].path);
        out = ps->output;
      } else {
        const auto& fs = std::get<ForkStep>(plan.steps[i]);
        if (fs.inputs.size() != 2) throw StructureError("fork steps are pairwise");
        value = encode_fork(read(fs.inputs[0]), read(fs.inputs[1]), &dt.steps[i].fork);
        out = fs.output;
      }
      slots.at(out) = std::move(value);
      written[out] = true;
    }
    return read(plan.root);
  }

  void backward_plan(const DisjunctTrace& dt, const Tensor<T>& grad_root) {
    const auto& plan = dt.plan;
    const std::size_t d = this->d();
    std::vector<Tensor<T>> slot_grads(plan.slot_count, Tensor<T>::vector(d));
    slot_grads[plan.root] += grad_root;
    for (std::size_t i = plan.steps.size(); i-- > 0;) {
      if (const auto* ps = std::get_if<PathStep>(&plan.steps[i])) {
        const auto& pc = dt.steps[i].path;
        const Tensor<T> dseq = path_encoder_.backward(
            mean_pool_backward(slot_grads[ps->output], pc.length), pc.encoder);
        if (const auto* a = std::get_if<AnchorStart>(&ps->path.start)) {
          T* g = entities_->grad.data() + static_cast<std::size_t>(a->entity) * d;
          for (std::size_t j = 0; j < d; ++j) g[j] += dseq(0, j);
        } else {
          auto& g = slot_grads[std::get<ForkStart>(ps->path.start).slot];
          for (std::size_t j = 0; j < d; ++j) g[j] += dseq(0, j);
        }
        for (std::size_t k = 0; k < ps->path.ops.size(); ++k) {
          T* g;
          if (const auto* p = std::get_if<Project>(&ps->path.ops[k])) {
            g = relations_->grad.data() + static_cast<std::size_t>(p->relation) * d;
          } else {
            g = negation_->grad.data();
          }
          for (std::size_t j = 0; j < d; ++j) g[j] += dseq(k + 1, j);
        }
      } else {
        const auto& fs = std::get<ForkStep>(plan.steps[i]);
        const auto [ga, gb] = fork_backward(slot_grads[fs.output], dt.steps[i].fork);
        slot_grads[fs.inputs[0]] += ga;
        slot_grads[fs.inputs[1]] += gb;
      }
    }
  }

  std::pair<Tensor<T>, Tensor<T>> fork_backward(const Tensor<T>& dy, const ForkCache& c) const {
    const std::size_t d = this->d();
    auto ga = Tensor<T>::vector(d), gb = Tensor<T>::vector(d);
    if (config_.fork == ForkVariant::kMixer) {
      const Tensor<T> dx = mixer_.backward(mean_pool_backward(dy, 2), c.mixer);
      for (std::size_t j = 0; j < d; ++j) {
        ga[j] = dx(0, j);
        gb[j] = dx(1, j);
      }
      return {ga, gb};
    }
    Tensor<T> dout = Tensor<T>::matrix(1, d);
    for (std::size_t j = 0; j < d; ++j) dout(0, j) = dy[j];
    Tensor<T> dx;
    if (config_.fork == ForkVariant::kMlp2Vector) {
      for (auto& v : dout.values()) v *= T(0.5);
      dx = fork_first_.backward(dout, c.first);
      dx += fork_second_.backward(dout, c.second);
    } else {
      dx = fork_first_.backward(dout, c.first);
    }
    for (std::size_t j = 0; j < d; ++j) {
      ga[j] = dx(0, j);
      gb[j] = dx(0, d + j);
    }
    return {ga, gb};
  }

  ModelConfig config_;
  ParameterStore<T> store_;
  Parameter<T>* entities_ = nullptr;
  Parameter<T>* relations_ = nullptr;
  Parameter<T>* negation_ = nullptr;
  TransformerEncoder<T> path_encoder_;
  Mlp<T> fork_first_;
  Mlp<T> fork_second_;
  MixerBlock<T> mixer_;
};

}  // namespace pathq

#endif  // PATHQ_MODEL_HPP_
