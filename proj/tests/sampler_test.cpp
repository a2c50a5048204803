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
#include <set>

#include "support/test_support.hpp"

namespace pathq {
namespace {

GraphSplit tiny_split(const std::string& train, const std::string& valid, const std::string& test,
                      const testing::TempDir& dir) {
  testing::write_file(dir / "train.tsv", train);
  testing::write_file(dir / "valid.tsv", valid);
  testing::write_file(dir / "test.tsv", test);
  return load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
}

SamplerConfig config_for(Structure s, std::size_t count, Stage stage, std::uint64_t seed = 0) {
  SamplerConfig c;
  c.counts[s] = count;
  c.stage = stage;
  c.seed = seed;
  return c;
}

TEST(SampleQueries, OneHopOnThreeEdgeGraph) {
  testing::TempDir dir("sampler");
  const auto split = tiny_split("a\tr\tb\nb\tr\tc\nc\ts\ta\n", "", "", dir);
  auto cfg = config_for(Structure::k1p, 3, Stage::kTrain);
  cfg.max_answers = 10;
  const auto result = sample_queries(split, Structure::k1p, cfg);
  ASSERT_EQ(result.instances.size(), 3u);
  EXPECT_EQ(result.shortfall(), 0u);
  for (const auto& q : result.instances) {
    const EntityId h = q.tree.child().id;
    const RelationId r = q.tree.id;
    bool real_edge = false;
    for (const Triple& t : split.train.triples()) {
      if (t.head == h && t.relation == r) {
        real_edge = true;
        const auto& ans = q.answers(Stage::kTrain);
        EXPECT_TRUE(std::binary_search(ans.begin(), ans.end(), t.tail));
      }
    }
    EXPECT_TRUE(real_edge) << q.describe();
  }
}

TEST(SampleQueries, ZeroCountIsEmpty) {
  const auto split = testing::load_toy("toy30");
  const auto result = sample_queries(split, Structure::k2p, config_for(Structure::k2p, 0, Stage::kTrain));
  EXPECT_TRUE(result.instances.empty());
  EXPECT_EQ(result.attempts, 0u);
}

TEST(SampleQueries, TestStageWithoutHeldOutEdgesIsEmpty) {
  testing::TempDir dir("sampler");
  const auto split = tiny_split("a\tr\tb\nb\tr\tc\n", "c\tr\ta\n", "", dir);
  const auto result = sample_queries(split, Structure::k1p, config_for(Structure::k1p, 5, Stage::kTest));
  EXPECT_TRUE(result.instances.empty());
  EXPECT_EQ(result.shortfall(), 5u);
}

TEST(SampleQueries, InstancesSatisfyContracts) {
  const auto split = testing::load_toy("toy30");
  for (Stage stage : {Stage::kTrain, Stage::kValid, Stage::kTest}) {
    for (Structure s : kAllStructures) {
      auto cfg = config_for(s, 10, stage, 3);
      cfg.max_answers = 20;
      const auto result = sample_queries(split, s, cfg);
      for (const auto& q : result.instances) {
        EXPECT_TRUE(validate(q.tree).empty());
        EXPECT_EQ(q.answers(Stage::kTrain), answer_set(split.train, q.tree));
        EXPECT_EQ(q.answers(Stage::kTest), answer_set(split.test, q.tree));
        const auto& generated = q.answers(stage);
        EXPECT_FALSE(generated.empty());
        EXPECT_LE(generated.size(), 20u);
        if (stage != Stage::kTrain) {
          EXPECT_FALSE(non_trivial_answers(q, stage).empty());
        }
      }
    }
  }
}

TEST(SampleQueries, ReproducibleFromSeed) {
  const auto split = testing::load_toy("toy30");
  for (Structure s : {Structure::k3in, Structure::kPi, Structure::kUp}) {
    const auto cfg = config_for(s, 15, Stage::kValid, 9);
    const auto x = sample_queries(split, s, cfg);
    const auto y = sample_queries(split, s, cfg);
    ASSERT_EQ(x.instances.size(), y.instances.size());
    for (std::size_t k = 0; k < x.instances.size(); ++k) {
      EXPECT_EQ(x.instances[k].tree, y.instances[k].tree);
    }
  }
}

TEST(SampleQueries, ConfigFromKeyValues) {
  std::istringstream in("stage = valid\nseed = 4\nmax_answers = 7\ncount.2in = 12\n");
  const auto cfg = SamplerConfig::from(KeyValueConfig::parse(in, "cfg"));
  EXPECT_EQ(cfg.stage, Stage::kValid);
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_EQ(cfg.max_answers, 7u);
  EXPECT_EQ(cfg.count(Structure::k2in), 12u);
  EXPECT_EQ(cfg.count(Structure::k1p), 0u);
  std::istringstream bad("max_answers = 0\n");
  EXPECT_THROW(SamplerConfig::from(KeyValueConfig::parse(bad, "cfg")), DataError);
}

TEST(SampleNegatives, DistinctNonAnswersAtBenchmarkScale) {
  QueryInstance q;
  q.tree = QueryTree::projection(QueryTree::anchor(0), 0);
  EntitySet answers;
  for (EntityId e = 0; e < 14505; e += 97) answers.push_back(e);
  q.answers_train = answers;
  std::mt19937_64 rng(1);
  const auto neg = sample_negatives(q, 14505, 128, rng);
  ASSERT_EQ(neg.size(), 128u);
  EXPECT_EQ(std::set<EntityId>(neg.begin(), neg.end()).size(), 128u);
  for (EntityId e : neg) {
    EXPECT_GE(e, 0);
    EXPECT_LT(e, 14505);
    EXPECT_FALSE(std::binary_search(answers.begin(), answers.end(), e));
  }
}

TEST(SampleNegatives, ForcedSingleCandidate) {
  QueryInstance q;
  q.tree = QueryTree::projection(QueryTree::anchor(0), 0);
  q.answers_train = EntitySet{0, 1, 2, 4, 5};
  std::mt19937_64 rng(0);
  EXPECT_EQ(sample_negatives(q, 6, 1, rng), std::vector<EntityId>{3});
}

TEST(SampleNegatives, DeterministicGivenRngState) {
  QueryInstance q;
  q.tree = QueryTree::projection(QueryTree::anchor(0), 0);
  q.answers_train = EntitySet{2, 3, 5, 7, 11};
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(sample_negatives(q, 50, 16, a), sample_negatives(q, 50, 16, b));
}

TEST(SampleNegatives, TooFewNonAnswersNamesInstance) {
  QueryInstance q;
  q.structure = Structure::k1p;
  q.tree = QueryTree::projection(QueryTree::anchor(0), 0);
  q.answers_train = EntitySet{0, 1, 2};
  std::mt19937_64 rng(0);
  try {
    sample_negatives(q, 4, 2, rng);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("1p"), std::string::npos) << e.what();
  }
}

TEST(SampleNegatives, UniformOverPool) {
  QueryInstance q;
  q.tree = QueryTree::projection(QueryTree::anchor(0), 0);
  q.answers_train = EntitySet{0, 3};
  std::mt19937_64 rng(7);
  std::vector<int> hits(6, 0);
  for (int k = 0; k < 20000; ++k) {
    for (EntityId e : sample_negatives(q, 6, 2, rng)) ++hits[static_cast<std::size_t>(e)];
  }
  EXPECT_EQ(hits[0] + hits[3], 0);
  // Each of the 4 candidates is drawn with probability 1/2 per call.
  for (int e : {1, 2, 4, 5}) EXPECT_NEAR(hits[static_cast<std::size_t>(e)], 10000, 400);
}

}  // namespace
}  // namespace pathq
