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


#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/test_support.hpp"

namespace pathq {
namespace {

std::vector<QueryInstance> sample(const GraphSplit& split, std::vector<Structure> structures,
                                  Stage stage, std::size_t count, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.stage = stage;
  cfg.seed = seed;
  std::vector<QueryInstance> out;
  for (Structure s : structures) {
    cfg.counts[s] = count;
    for (auto& q : sample_queries(split, s, cfg).instances) out.push_back(std::move(q));
  }
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.d = 8;
  c.heads = 2;
  c.batch_size = 8;
  c.u = 4;
  c.max_steps = 30;
  c.log_interval = 10;
  c.valid_interval = 15;
  return c;
}

TEST(Train, IdenticalSeedsGiveIdenticalLogsAndCheckpoints) {
  const auto split = testing::load_toy("toy30");
  const auto train_set = sample(split, {Structure::k1p, Structure::k2i, Structure::k2in}, Stage::kTrain, 20, 1);
  const auto valid_set = sample(split, {Structure::k1p}, Stage::kValid, 10, 2);
  auto cfg = tiny_config();
  cfg.regime = Regime::kFol10;
  testing::TempDir dir("train");
  std::ostringstream m1, m2;
  const auto r1 = train<float>(split, train_set, valid_set, cfg, {dir / "a.pfck", &m1});
  const auto r2 = train<float>(split, train_set, valid_set, cfg, {dir / "b.pfck", &m2});
  EXPECT_EQ(m1.str(), m2.str());
  EXPECT_EQ(testing::read_file(dir / "a.pfck"), testing::read_file(dir / "b.pfck"));
  cfg.seed = 1;
  std::ostringstream m3;
  train<float>(split, train_set, valid_set, cfg, {dir / "c.pfck", &m3});
  EXPECT_NE(m1.str(), m3.str());
}

TEST(Train, MetricsLinesCarryStepLossStructure) {
  const auto split = testing::load_toy("toy30");
  const auto train_set = sample(split, {Structure::k1p}, Stage::kTrain, 20, 1);
  std::ostringstream metrics;
  train<float>(split, train_set, {}, tiny_config(), {std::nullopt, &metrics});
  std::istringstream in(metrics.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line).at("meta").at("seed"), 0);
  std::size_t losses = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(j.contains("loss"));
    EXPECT_EQ(j.at("structure"), "1p");
    EXPECT_EQ(j.at("step").get<std::size_t>() % 10, 0u);
    ++losses;
  }
  EXPECT_EQ(losses, 3u);
}

TEST(Train, NegationTokenUntouchedUnderConjunctiveRegime) {
  const auto split = testing::load_toy("toy30");
  const auto train_set = sample(split, {Structure::k1p, Structure::k2p, Structure::k3p,
                                        Structure::k2i, Structure::k3i},
                                Stage::kTrain, 10, 3);
  const auto cfg = tiny_config();
  const auto result = train<double>(split, train_set, {}, cfg);
  const auto& neg = result.model.parameters().get("embedding/negation");
  for (double v : neg.m.values()) EXPECT_EQ(v, 0.0);
  for (double v : neg.v.values()) EXPECT_EQ(v, 0.0);
  QueryEncoder<double> fresh(cfg.model_config(split.entity_count(), split.relation_count()));
  EXPECT_EQ(neg.value, fresh.parameters().get("embedding/negation").value);
}

TEST(Train, RejectsStructuresOutsideRegime) {
  const auto split = testing::load_toy("toy30");
  const auto train_set = sample(split, {Structure::k2in}, Stage::kTrain, 3, 1);
  EXPECT_THROW(train<float>(split, train_set, {}, tiny_config()), DataError);
  const auto unions = sample(split, {Structure::k2u}, Stage::kTrain, 3, 1);
  auto cfg = tiny_config();
  cfg.regime = Regime::kFol10;
  EXPECT_THROW(train<float>(split, unions, {}, cfg), DataError);
}

TEST(Train, FixedBatchLossDecreasesForFiftySteps) {
  const auto split = testing::load_toy("toy30");
  const auto instances = sample(split, {Structure::k1p, Structure::k2p}, Stage::kTrain, 8, 4);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.dropout = 0;
  QueryEncoder<double> model(cfg.model_config(split.entity_count(), split.relation_count()));
  std::mt19937_64 rng(0);
  struct Example {
    const QueryInstance* q;
    EntityId positive;
    std::vector<EntityId> negatives;
  };
  std::vector<Example> batch;
  for (const auto& q : instances) {
    batch.push_back({&q, q.answers(Stage::kTrain).front(), sample_negatives(q, 30, cfg.u, rng)});
  }
  const double weight = 1.0 / static_cast<double>(batch.size());
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 50; ++step) {
    double loss = 0;
    for (const auto& ex : batch) {
      loss += weight * model.loss_and_backward(ex.q->tree, ex.positive, ex.negatives, weight);
    }
    EXPECT_LT(loss, prev) << "step " << step;
    prev = loss;
    adam_step(model.parameters(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  }
}

TEST(Validate, EmptyAndSingleInstance) {
  TrainConfig cfg = tiny_config();
  QueryEncoder<float> model(cfg.model_config(5, 2));
  EXPECT_TRUE(validate_model(model, {}).structures.empty());

  const auto tree = QueryTree::projection(QueryTree::anchor(0), 1);
  const auto dist = model.score(tree);
  const auto best = static_cast<EntityId>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  const auto q = testing::make_instance(Structure::k1p, tree, {}, {best}, {best});
  const auto report = validate_model(model, {q});
  ASSERT_EQ(report.structures.size(), 1u);
  EXPECT_EQ(report.structures.at(Structure::k1p).mrr, 1.0);
}

TEST(Validate, AgreesWithEvaluationModule) {
  const auto split = testing::load_toy("toy30");
  const auto valid_set = sample(split, {Structure::k1p, Structure::k2i, Structure::kPin}, Stage::kValid, 10, 6);
  QueryEncoder<float> model(tiny_config().model_config(30, 5));
  const auto a = validate_model(model, valid_set);
  const auto b = mrr(valid_set, scorer_for(model), Stage::kValid, 2);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Train, CheckpointRoundTripKeepsValidationMrr) {
  const auto split = testing::load_toy("toy30");
  const auto train_set = sample(split, {Structure::k1p, Structure::k2p}, Stage::kTrain, 20, 1);
  const auto valid_set = sample(split, {Structure::k1p, Structure::k2p}, Stage::kValid, 20, 2);
  testing::TempDir dir("train");
  const auto result = train<float>(split, train_set, valid_set, tiny_config(), {dir / "best.pfck", nullptr});
  ASSERT_TRUE(result.best_valid_mrr.has_value());
  const auto loaded = QueryEncoder<float>::from_checkpoint(load_checkpoint(dir / "best.pfck"));
  const auto before = validate_model(result.model, valid_set);
  const auto after = validate_model(loaded, valid_set);
  EXPECT_EQ(before.to_json().dump(), after.to_json().dump());
  EXPECT_DOUBLE_EQ(*after.mean_over(regime_structures(Regime::kEpfo5)), *result.best_valid_mrr);
}

TEST(TrainConfigFile, KeysAndPresets) {
  std::istringstream in("preset = paper\nregime = fol-10\nseed = 3\n");
  const auto kv = KeyValueConfig::parse(in, "cfg");
  const auto c = TrainConfig::from(kv);
  EXPECT_EQ(c.d, 800u);
  EXPECT_EQ(c.k1, 6u);
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_EQ(c.u, 128u);
  EXPECT_EQ(c.batch_size, 512u);
  EXPECT_EQ(c.gamma, 24.0);
  EXPECT_EQ(c.dropout, 0.1);
  EXPECT_EQ(c.ffn_width(), 3200u);
  EXPECT_EQ(c.regime, Regime::kFol10);
  EXPECT_EQ(c.seed, 3u);
  const TrainConfig desk;
  EXPECT_EQ(desk.d, 32u);
  EXPECT_EQ(desk.k1, 1u);
  EXPECT_EQ(desk.u, 16u);
  EXPECT_EQ(desk.batch_size, 64u);
  EXPECT_EQ(desk.gamma, 12.0);
  EXPECT_EQ(desk.max_steps, 5000u);
  std::istringstream bad("u = 0\n");
  EXPECT_THROW(TrainConfig::from(KeyValueConfig::parse(bad, "cfg")), DataError);
}

}  // namespace
}  // namespace pathq
