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

#ifndef PATHQ_TRAINING_HPP_
#define PATHQ_TRAINING_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathq/config.hpp"
#include "pathq/error.hpp"
#include "pathq/evaluation.hpp"
#include "pathq/instance.hpp"
#include "pathq/model.hpp"
#include "pathq/params.hpp"
#include "pathq/query.hpp"
#include "pathq/sampler.hpp"

namespace pathq {

enum class Regime { kEpfo5, kFol10 };

inline std::string_view regime_name(Regime r) {
  return r == Regime::kFol10 ? "fol-10" : "epfo-5";
}

inline Regime parse_regime(std::string_view s) {
  if (s == "epfo-5") return Regime::kEpfo5;
  if (s == "fol-10") return Regime::kFol10;
  throw DataError("unknown regime '" + std::string(s) + "' (expected epfo-5 or fol-10)");
}

inline std::vector<Structure> regime_structures(Regime r) {
  std::vector<Structure> out = {Structure::k1p, Structure::k2p, Structure::k3p,
                                Structure::k2i, Structure::k3i};
  if (r == Regime::kFol10) {
    out.insert(out.end(), kNegationStructures.begin(), kNegationStructures.end());
  }
  return out;
}

// Defaults are the desk-scale setup; paper_scale() gives the large one.
struct TrainConfig {
  Regime regime = Regime::kEpfo5;
  std::size_t d = 32;
  std::size_t k1 = 1;
  std::size_t k2 = 2;
  std::size_t heads = 4;
  std::size_t d_ffn = 0;  // 0 means 4d
  std::size_t fork_hidden = 0;
  double dropout = 0.1;
  double lr = 5e-3;
  std::size_t u = 16;
  std::size_t batch_size = 64;
  double gamma = 12.0;
  std::size_t max_steps = 5000;
  std::size_t valid_interval = 1000;
  std::size_t log_interval = 100;
  std::uint64_t seed = 0;
  ForkVariant fork = ForkVariant::kMlp;
  MaskMode mask = MaskMode::kBidirectional;
  PositionalEncoding positional = PositionalEncoding::kSinusoidal;

  static TrainConfig paper_scale() {
    TrainConfig c;
    c.d = 800;
    c.k1 = 6;
    c.heads = 8;
    c.dropout = 0.1;
    c.lr = 1e-4;
    c.u = 128;
    c.batch_size = 512;
    c.gamma = 24.0;
    c.max_steps = 300000;
    return c;
  }

  std::size_t ffn_width() const { return d_ffn ? d_ffn : 4 * d; }

  void validate() const {
    if (!(gamma > 0)) throw DataError("gamma must be > 0");
    if (u < 1) throw DataError("u (negative samples) must be >= 1");
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (log_interval < 1 || valid_interval < 1) throw DataError("intervals must be >= 1");
    if (!(lr > 0)) throw DataError("lr must be > 0");
  }

  ModelConfig model_config(std::size_t entity_count, std::size_t relation_count) const {
    ModelConfig m;
    m.entity_count = entity_count;
    m.relation_count = relation_count;
    m.encoder.d = d;
    m.encoder.layers = k1;
    m.encoder.heads = heads;
    m.encoder.d_ffn = ffn_width();
    m.encoder.dropout = dropout;
    m.encoder.mask = mask;
    m.encoder.positional = positional;
    m.fork = fork;
    m.fork_layers = k2;
    m.fork_hidden = fork_hidden;
    m.gamma = gamma;
    m.seed = seed;
    return m;
  }

  nlohmann::json to_json() const {
    return {{"regime", regime_name(regime)}, {"d", d}, {"k1", k1}, {"k2", k2},
            {"heads", heads}, {"d_ffn", ffn_width()}, {"fork_hidden", fork_hidden},
            {"dropout", dropout}, {"lr", lr}, {"u", u}, {"batch_size", batch_size},
            {"gamma", gamma}, {"max_steps", max_steps},
            {"valid_interval", valid_interval}, {"log_interval", log_interval},
            {"seed", seed}, {"fork", fork_variant_name(fork)},
            {"mask", mask_mode_name(mask)}, {"positional", positional_name(positional)}};
  }

  static TrainConfig from(const KeyValueConfig& kv) {
    TrainConfig c;
    if (kv.get_string("preset", "desk") == "paper") c = paper_scale();
    c.regime = parse_regime(kv.get_string("regime", std::string(regime_name(c.regime))));
    c.d = kv.get("d", c.d);
    c.k1 = kv.get("k1", c.k1);
    c.k2 = kv.get("k2", c.k2);
    c.heads = kv.get("heads", c.heads);
    c.d_ffn = kv.get("d_ffn", c.d_ffn);
    c.fork_hidden = kv.get("fork_hidden", c.fork_hidden);
    c.dropout = kv.get("dropout", c.dropout);
    c.lr = kv.get("lr", c.lr);
    c.u = kv.get("u", c.u);
    c.batch_size = kv.get("batch_size", c.batch_size);
    c.gamma = kv.get("gamma", c.gamma);
    c.max_steps = kv.get("max_steps", c.max_steps);
    c.valid_interval = kv.get("valid_interval", c.valid_interval);
    c.log_interval = kv.get("log_interval", c.log_interval);
    c.seed = kv.get("seed", c.seed);
    c.fork = parse_fork_variant(kv.get_string("fork", std::string(fork_variant_name(c.fork))));
    c.mask = parse_mask_mode(kv.get_string("mask", std::string(mask_mode_name(c.mask))));
    c.positional = parse_positional(
        kv.get_string("positional", std::string(positional_name(c.positional))));
    c.validate();
    return c;
  }
};

struct TrainOutputs {
  std::optional<std::filesystem::path> checkpoint;
  std::ostream* metrics = nullptr;
};

template <typename T>
struct TrainResult {
  QueryEncoder<T> model;  // best-validation parameters
  std::vector<nlohmann::json> log;
  std::size_t best_step = 0;
  std::optional<double> best_valid_mrr;
};

template <typename T>
Scorer scorer_for(const QueryEncoder<T>& model) {
  return [&model](const QueryTree& tree) { return model.score(tree); };
}

// Filtered MRR on the valid stage (valid - train answers).
template <typename T>
RankingReport validate_model(const QueryEncoder<T>& model,
                             const std::vector<QueryInstance>& instances,
                             unsigned threads = 1) {
  return mrr(instances, scorer_for(model), Stage::kValid, threads);
}

template <typename T>
nlohmann::json checkpoint_metadata(const QueryEncoder<T>& model, const TrainConfig& cfg,
                                   std::size_t step, std::optional<double> valid) {
  nlohmann::json meta = model.metadata();
  meta["train"] = cfg.to_json();
  meta["seed"] = cfg.seed;
  meta["optimizer_step"] = model.parameters().step();
  meta["checkpoint_step"] = step;
  meta["valid_mean_mrr"] = valid ? nlohmann::json(*valid) : nlohmann::json(nullptr);
  return meta;
}

// Adam on the margin loss. Every step draws one structure uniformly among
// the regime's structures that have instances, then a batch of
// (query, answer) examples of that structure with u negatives each.
template <typename T = float>
TrainResult<T> train(std::size_t entity_count, std::size_t relation_count,
                     const std::vector<QueryInstance>& instances,
                     const std::vector<QueryInstance>& valid_instances,
                     const TrainConfig& cfg, const TrainOutputs& outputs = {}) {
  cfg.validate();
  const auto allowed = regime_structures(cfg.regime);
  std::map<Structure, std::vector<const QueryInstance*>> by_structure;
  for (const auto& q : instances) {
    if (std::find(allowed.begin(), allowed.end(), q.structure) == allowed.end()) {
      throw DataError("structure " + std::string(structure_name(q.structure)) +
                      " is not trained under regime " + std::string(regime_name(cfg.regime)));
    }
    if (q.answers(Stage::kTrain).empty()) {
      throw DataError("training query " + q.describe() + " has no train answers");
    }
    by_structure[q.structure].push_back(&q);
  }
  std::vector<Structure> buckets;
  for (Structure s : allowed) {
    if (by_structure.count(s)) buckets.push_back(s);
  }
  if (buckets.empty()) throw DataError("no training instances");

  QueryEncoder<T> model(cfg.model_config(entity_count, relation_count));
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0x7261696eULL));
  TrainResult<T> result{std::move(model), {}, 0, std::nullopt};
  QueryEncoder<T>& m = result.model;
  std::optional<ParameterStore<T>> best;

  auto emit = [&](nlohmann::json line) {
    if (outputs.metrics) *outputs.metrics << line.dump() << '\n';
    result.log.push_back(std::move(line));
  };
  if (outputs.metrics) {
    *outputs.metrics << nlohmann::json{{"meta", {{"seed", cfg.seed}, {"train", cfg.to_json()}}}}.dump()
                     << '\n';
  }

  const double weight = 1.0 / static_cast<double>(cfg.batch_size);
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const Structure s = buckets[detail::uniform_index(rng, buckets.size())];
    const auto& pool = by_structure[s];
    DropoutStream drop(cfg.seed, step);
    double batch_loss = 0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const QueryInstance& q = *pool[detail::uniform_index(rng, pool.size())];
      const EntitySet& answers = q.answers(Stage::kTrain);
      const EntityId positive = answers[detail::uniform_index(rng, answers.size())];
      const auto negatives = sample_negatives(q, entity_count, cfg.u, rng);
      batch_loss += m.loss_and_backward(q.tree, positive, negatives, weight, &drop);
    }
    batch_loss *= weight;
    if (!std::isfinite(batch_loss)) {
      throw NumericError("non-finite loss at step " + std::to_string(step) + " (structure " +
                         std::string(structure_name(s)) + ")");
    }
    adam_step(m.parameters(), adam);
    if (step % cfg.log_interval == 0) {
      emit({{"step", step}, {"loss", batch_loss}, {"structure", structure_name(s)}});
    }
    const bool last = step == cfg.max_steps;
    if (!valid_instances.empty() && (step % cfg.valid_interval == 0 || last)) {
      const auto report = validate_model(m, valid_instances);
      const auto mean = report.mean_over(allowed);
      emit({{"step", step}, {"valid_mean_mrr", mean ? nlohmann::json(*mean) : nlohmann::json(nullptr)}});
      if (mean && (!result.best_valid_mrr || *mean > *result.best_valid_mrr)) {
        result.best_valid_mrr = mean;
        result.best_step = step;
        best = m.parameters();
        if (outputs.checkpoint) {
          save_checkpoint(*outputs.checkpoint, m.parameters(),
                          checkpoint_metadata(m, cfg, step, mean));
        }
      }
    }
  }
  if (best) {
    copy_state(*best, m.parameters());
  } else {
    result.best_step = cfg.max_steps;
    if (outputs.checkpoint) {
      save_checkpoint(*outputs.checkpoint, m.parameters(),
                      checkpoint_metadata(m, cfg, cfg.max_steps, std::nullopt));
    }
  }
  return result;
}

template <typename T = float>
TrainResult<T> train(const GraphSplit& split, const std::vector<QueryInstance>& instances,
                     const std::vector<QueryInstance>& valid_instances,
                     const TrainConfig& cfg, const TrainOutputs& outputs = {}) {
  return train<T>(split.entity_count(), split.relation_count(), instances, valid_instances,
                  cfg, outputs);
}

// One report per model over the same instances. All models must share the
// entity and relation vocabularies.
template <typename T>
AblationTable ablation_table(
    const std::vector<std::pair<std::string, const QueryEncoder<T>*>>& models,
    const std::vector<QueryInstance>& instances, Stage stage, unsigned threads = 1) {
  std::vector<std::pair<std::string, RankingReport>> reports;
  for (const auto& [name, model] : models) {
    const auto& c0 = models.front().second->config();
    if (model->config().entity_count != c0.entity_count ||
        model->config().relation_count != c0.relation_count) {
      throw DataError("model '" + name + "' has a different vocabulary than '" +
                      models.front().first + "'");
    }
    reports.emplace_back(name, mrr(instances, scorer_for(*model), stage, threads));
  }
  return AblationTable{std::move(reports)};
}

}  // namespace pathq

#endif  // PATHQ_TRAINING_HPP_
