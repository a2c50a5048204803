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

#include <cmath>
#include <random>

#include "support/test_support.hpp"

namespace pathq {
namespace {

QueryInstance one_hop(EntitySet valid, EntitySet test) {
  return testing::make_instance(Structure::k1p, QueryTree::projection(QueryTree::anchor(0), 0), {},
                                std::move(valid), std::move(test));
}

TEST(RankEntity, StrictMinimumIsRankOne) {
  const auto q = one_hop({}, {2});
  const std::vector<double> dist = {5, 4, 1, 3, 9};
  EXPECT_EQ(rank_entity(2, q, dist, Stage::kTest), 1.0);
}

TEST(RankEntity, SingleTieIsMidRank) {
  const auto q = one_hop({}, {2});
  const std::vector<double> dist = {5, 1, 1, 3, 9};
  EXPECT_EQ(rank_entity(2, q, dist, Stage::kTest), 1.5);
}

TEST(RankEntity, OtherAnswersAreFilteredOut) {
  const std::vector<double> dist = {0.5, 0.1, 1, 3, 9};
  EXPECT_EQ(rank_entity(2, one_hop({}, {2}), dist, Stage::kTest), 3.0);
  EXPECT_EQ(rank_entity(2, one_hop({}, {0, 1, 2}), dist, Stage::kTest), 1.0);
}

TEST(RankEntity, NonTrivialAnswerRequired) {
  const auto q = one_hop({1}, {1, 2});
  const std::vector<double> dist(5, 0.0);
  EXPECT_THROW(rank_entity(1, q, dist, Stage::kTest), DataError);
  EXPECT_THROW(rank_entity(4, q, dist, Stage::kTest), DataError);
}

TEST(RankEntity, MatchesSortedPoolOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng() % 40;
    std::vector<double> dist(n);
    // Coarse values so ties are common.
    for (auto& v : dist) v = static_cast<double>(rng() % 7);
    EntitySet answers;
    for (std::size_t e = 0; e < n; ++e) {
      if (rng() % 4 == 0) answers.push_back(static_cast<EntityId>(e));
    }
    if (answers.empty()) answers.push_back(0);
    for (EntityId a : answers) {
      EXPECT_EQ(rank_entity(a, dist, answers), testing::sorted_pool_rank(a, dist, answers));
    }
  }
}

TEST(QueryMrr, TwoAnswersAtRanksOneAndFour) {
  const auto q = one_hop({}, {0, 1});
  // Entity 0 is closest; three non-answers lie strictly before entity 1.
  const std::vector<double> dist = {0, 10, 1, 2, 3, 20};
  EXPECT_DOUBLE_EQ(query_mrr(q, dist, Stage::kTest), 0.625);
}

TEST(Mrr, ReportsPerStructureAndGroups) {
  std::vector<QueryInstance> qs = {one_hop({}, {2})};
  const Scorer best_first = [](const QueryTree&) { return std::vector<double>{5, 4, 1, 3, 9}; };
  const auto r = mrr(qs, best_first, Stage::kTest);
  EXPECT_EQ(r.structures.at(Structure::k1p).mrr, 1.0);
  EXPECT_EQ(r.structures.at(Structure::k1p).queries, 1u);
  EXPECT_EQ(*r.epfo_mean(), 100.0);
  EXPECT_FALSE(r.negation_mean().has_value());
  const auto j = r.to_json();
  EXPECT_EQ(j.at("structures").at("1p").at("mrr"), 100.0);
  EXPECT_NE(r.to_text().find("1p"), std::string::npos);
}

TEST(Mrr, EmptyInputGivesEmptyReport) {
  const auto r = mrr({}, [](const QueryTree&) { return std::vector<double>{}; }, Stage::kTest);
  EXPECT_TRUE(r.structures.empty());
  EXPECT_FALSE(r.epfo_mean().has_value());
}

TEST(Mrr, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(5);
  std::vector<QueryInstance> qs;
  std::vector<std::vector<double>> dists;
  for (int k = 0; k < 30; ++k) {
    EntitySet valid, test;
    for (EntityId e = 0; e < 20; ++e) {
      if (rng() % 5 == 0) test.push_back(e);
    }
    test.push_back(19);
    test.erase(std::unique(test.begin(), test.end()), test.end());
    if (test.size() > 1) valid.push_back(test.front());
    qs.push_back(one_hop(valid, test));
    std::vector<double> d(20);
    for (auto& v : d) v = static_cast<double>(rng() % 11);
    dists.push_back(d);
  }
  std::size_t idx = 0;
  const Scorer raw = [&](const QueryTree&) { return dists[idx++ % dists.size()]; };
  const auto a = mrr(qs, raw, Stage::kTest);
  idx = 0;
  const Scorer squashed = [&](const QueryTree&) {
    auto d = dists[idx++ % dists.size()];
    for (auto& v : d) v = std::exp(0.3 * v) + 2;
    return d;
  };
  const auto b = mrr(qs, squashed, Stage::kTest);
  EXPECT_EQ(a.structures.at(Structure::k1p).mrr, b.structures.at(Structure::k1p).mrr);
  const double per_query = a.structures.at(Structure::k1p).mrr;
  EXPECT_GE(per_query, 1.0 / 20);
  EXPECT_LE(per_query, 1.0);
}

TEST(Mrr, ThreadCountDoesNotChangeReport) {
  std::vector<QueryInstance> qs;
  for (EntityId e = 0; e < 40; ++e) qs.push_back(one_hop({}, {e % 10, 10 + e % 7}));
  const Scorer scorer = [](const QueryTree& t) {
    std::vector<double> d(20);
    for (std::size_t k = 0; k < 20; ++k) d[k] = std::fmod(static_cast<double>(k * 7 + t.id), 5.0);
    return d;
  };
  EXPECT_EQ(mrr(qs, scorer, Stage::kTest, 1).to_json().dump(),
            mrr(qs, scorer, Stage::kTest, 4).to_json().dump());
}

TEST(Ablation, SelfComparisonHasZeroDeltas) {
  std::vector<QueryInstance> qs = {one_hop({}, {2}), one_hop({}, {1, 3})};
  const Scorer s = [](const QueryTree&) { return std::vector<double>{5, 4, 1, 3, 9}; };
  const auto r = mrr(qs, s, Stage::kTest);
  const auto table = ablation_table({{"a", r}, {"b", r}});
  const auto j = table.to_json();
  ASSERT_EQ(j.at("models").size(), 2u);
  for (const auto& [name, delta] : j.at("deltas").at("b").items()) {
    if (!delta.is_null()) {
      EXPECT_EQ(delta.get<double>(), 0.0) << name;
    }
  }
  EXPECT_NE(table.to_text().find("b"), std::string::npos);
}

}  // namespace
}  // namespace pathq
