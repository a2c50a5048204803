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

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "support/test_support.hpp"

namespace pathq {
namespace {

using testing::TempDir;
using testing::write_file;

EntitySet scan_tails(const KnowledgeGraph& g, const EntitySet& source, RelationId r) {
  std::set<EntityId> out;
  for (const Triple& t : g.triples()) {
    if (t.relation == r && std::find(source.begin(), source.end(), t.head) != source.end()) {
      out.insert(t.tail);
    }
  }
  return {out.begin(), out.end()};
}

TEST(LoadSplit, GraphsAreCumulative) {
  TempDir dir("kg");
  write_file(dir / "train.tsv", "a\tr\tb\nb\tr\tc\nc\ts\ta\n");
  write_file(dir / "valid.tsv", "a\ts\tc\n");
  write_file(dir / "test.tsv", "c\tr\td\n");
  const auto split = load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
  EXPECT_EQ(split.train.triple_count(), 3u);
  EXPECT_EQ(split.valid.triple_count(), 4u);
  EXPECT_EQ(split.test.triple_count(), 5u);
  EXPECT_EQ(split.entity_count(), 4u);
  EXPECT_EQ(split.relation_count(), 2u);
  for (const Triple& t : split.train.triples()) EXPECT_TRUE(split.valid.contains(t));
  for (const Triple& t : split.valid.triples()) EXPECT_TRUE(split.test.contains(t));
}

TEST(LoadSplit, EmptyHeldOutFilesGiveIdenticalGraphs) {
  TempDir dir("kg");
  write_file(dir / "train.tsv", "a\tr\tb\nb\tr\tc\n");
  write_file(dir / "valid.tsv", "");
  write_file(dir / "test.tsv", "");
  const auto split = load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
  EXPECT_EQ(split.train.triples(), split.valid.triples());
  EXPECT_EQ(split.valid.triples(), split.test.triples());
}

TEST(LoadSplit, BenchmarkScaleVocabularyRoundTrips) {
  // Entity and relation counts of the usual 237-relation benchmark graph.
  constexpr std::size_t kEntities = 14505, kRelations = 237;
  TempDir dir("kg");
  std::string rows;
  for (std::size_t i = 0; i < kEntities; ++i) {
    rows += "m" + std::to_string(i) + "\trel" + std::to_string(i % kRelations) + "\tm" +
            std::to_string((i + 1) % kEntities) + "\n";
  }
  write_file(dir / "train.tsv", rows);
  write_file(dir / "valid.tsv", "");
  write_file(dir / "test.tsv", "");
  const auto split = load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
  save_split_dir(split, dir / "split");
  const auto back = load_split_dir(dir / "split");
  EXPECT_EQ(back.entity_count(), 14505u);
  EXPECT_EQ(back.relation_count(), 237u);
  const auto report = nlohmann::json::parse(testing::read_file(dir / "split" / "report.json"));
  EXPECT_EQ(report.at("entities"), 14505);
  EXPECT_EQ(report.at("relations"), 237);
}

TEST(LoadSplit, MalformedRowNamesLine) {
  TempDir dir("kg");
  write_file(dir / "train.tsv", "a\tr\tb\nb\tr\n");
  write_file(dir / "valid.tsv", "");
  write_file(dir / "test.tsv", "");
  try {
    load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
    FAIL() << "expected a parse error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("train.tsv:2"), std::string::npos) << e.what();
  }
}

TEST(LoadSplit, DuplicatesAcceptedOnceAndCounted) {
  TempDir dir("kg");
  write_file(dir / "train.tsv", "a\tr\tb\na\tr\tb\na\tr\tb\n");
  write_file(dir / "valid.tsv", "a\tr\tb\n");
  write_file(dir / "test.tsv", "");
  const auto split = load_split(dir / "train.tsv", dir / "valid.tsv", dir / "test.tsv");
  EXPECT_EQ(split.train.triple_count(), 1u);
  EXPECT_EQ(split.valid.triple_count(), 1u);
  EXPECT_EQ(split.report.train_duplicates, 2u);
  EXPECT_EQ(split.report.valid_duplicates, 1u);
}

TEST(LoadSplit, MissingFileIsDataError) {
  TempDir dir("kg");
  EXPECT_THROW(load_split(dir / "nope.tsv", dir / "nope.tsv", dir / "nope.tsv"), DataError);
}

TEST(LoadSplit, IdsFollowFirstAppearanceAndAreDeterministic) {
  const auto a = testing::load_toy("toy6");
  const auto b = testing::load_toy("toy6");
  EXPECT_EQ(a.entities.names(), b.entities.names());
  EXPECT_EQ(a.test.triples(), b.test.triples());
  EXPECT_EQ(a.entities.name(0), "alice");
  EXPECT_EQ(a.entities.name(1), "bob");
  EXPECT_EQ(a.relations.name(0), "knows");
  // "frank" first appears in the train file after erin.
  EXPECT_EQ(a.entities.find("frank"), 5);
}

TEST(Project, EmptySourceIsEmpty) {
  const auto split = testing::load_toy("toy6");
  EXPECT_TRUE(project(split.test, EntitySet{}, 0).empty());
}

TEST(Project, MatchesTripleScanOnToyGraph) {
  const auto split = testing::load_toy("toy6");
  for (const KnowledgeGraph* g : {&split.train, &split.valid, &split.test}) {
    for (EntityId h = 0; h < static_cast<EntityId>(g->entity_count()); ++h) {
      for (RelationId r = 0; r < static_cast<RelationId>(g->relation_count()); ++r) {
        EXPECT_EQ(project(*g, EntitySet{h}, r), scan_tails(*g, {h}, r));
      }
    }
  }
}

TEST(Project, TwoHopMatchesNestedScan) {
  const auto split = testing::load_toy("toy6");
  const auto& g = split.test;
  for (RelationId r0 = 0; r0 < 2; ++r0) {
    for (RelationId r1 = 0; r1 < 2; ++r1) {
      std::set<EntityId> expected;
      for (const Triple& a : g.triples()) {
        if (a.head != 0 || a.relation != r0) continue;
        for (const Triple& b : g.triples()) {
          if (b.head == a.tail && b.relation == r1) expected.insert(b.tail);
        }
      }
      EXPECT_EQ(project(g, project(g, EntitySet{0}, r0), r1),
                EntitySet(expected.begin(), expected.end()));
    }
  }
}

TEST(Project, MonotoneAcrossSplits) {
  const auto split = testing::load_toy("toy30");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    EntitySet source;
    for (EntityId e = 0; e < 30; ++e) {
      if (rng() % 4 == 0) source.push_back(e);
    }
    const RelationId r = static_cast<RelationId>(rng() % 5);
    const auto a = project(split.train, source, r);
    const auto b = project(split.valid, source, r);
    const auto c = project(split.test, source, r);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    EXPECT_TRUE(std::includes(c.begin(), c.end(), b.begin(), b.end()));
  }
}

TEST(Project, RandomGraphsMatchScan) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::random_graph(20, 3, 60, rng);
    EntitySet source;
    for (EntityId e = 0; e < 20; ++e) {
      if (rng() % 3 == 0) source.push_back(e);
    }
    for (RelationId r = 0; r < 3; ++r) EXPECT_EQ(project(g, source, r), scan_tails(g, source, r));
  }
}

TEST(Project, OutOfRangeIdsAreDomainErrors) {
  const auto split = testing::load_toy("toy6");
  EXPECT_THROW(project(split.test, EntitySet{99}, 0), DomainError);
  EXPECT_THROW(project(split.test, EntitySet{0}, 7), DomainError);
  EXPECT_THROW(KnowledgeGraph(2, 1, {{0, 0, 2}}), DomainError);
}

}  // namespace
}  // namespace pathq
