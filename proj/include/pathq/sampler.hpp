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

#ifndef PATHQ_SAMPLER_HPP_
#define PATHQ_SAMPLER_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pathq/config.hpp"
#include "pathq/error.hpp"
#include "pathq/instance.hpp"
#include "pathq/kg.hpp"
#include "pathq/oracle.hpp"
#include "pathq/query.hpp"

namespace pathq {

struct SamplerConfig {
  std::map<Structure, std::size_t> counts;
  // Instances with more answers than this on the generating graph are
  // rejected.
  std::size_t max_answers = 100;
  Stage stage = Stage::kTrain;
  std::uint64_t seed = 0;
  // Grounding attempts allowed per requested instance.
  std::size_t attempts_per_query = 200;

  std::size_t count(Structure s) const {
    auto it = counts.find(s);
    return it == counts.end() ? 0 : it->second;
  }

  // Keys: stage, max_answers, seed, attempts_per_query, count.<structure>.
  static SamplerConfig from(const KeyValueConfig& kv) {
    SamplerConfig c;
    c.stage = parse_stage(kv.get_string("stage", "train"));
    c.max_answers = kv.get<std::size_t>("max_answers", c.max_answers);
    c.seed = kv.get<std::uint64_t>("seed", c.seed);
    c.attempts_per_query =
        kv.get<std::size_t>("attempts_per_query", c.attempts_per_query);
    for (Structure s : kAllStructures) {
      const auto key = "count." + std::string(structure_name(s));
      if (kv.has(key)) c.counts[s] = kv.get<std::size_t>(key, 0);
    }
    if (c.max_answers < 1) throw DataError("max_answers must be >= 1");
    return c;
  }
};

struct SampleResult {
  std::vector<QueryInstance> instances;
  std::size_t requested = 0;
  std::size_t attempts = 0;

  std::size_t shortfall() const { return requested - instances.size(); }
};

inline const KnowledgeGraph& stage_graph(const GraphSplit& split, Stage s) {
  switch (s) {
    case Stage::kTrain: return split.train;
    case Stage::kValid: return split.valid;
    case Stage::kTest: return split.test;
  }
  return split.test;
}

namespace detail {

// tail -> incoming (head, relation) edges. Only the sampler walks edges
// backwards, so the graph itself keeps no reverse index.
class IncomingEdges {
 public:
  explicit IncomingEdges(const KnowledgeGraph& g) : offsets_(g.entity_count() + 1, 0) {
    for (const auto& t : g.triples()) ++offsets_[static_cast<std::size_t>(t.tail) + 1];
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    edges_.resize(g.triple_count());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& t : g.triples()) {
      edges_[fill[static_cast<std::size_t>(t.tail)]++] = {t.head, t.relation};
    }
    for (std::size_t e = 0; e + 1 < offsets_.size(); ++e) {
      if (offsets_[e + 1] > offsets_[e]) targets_.push_back(static_cast<EntityId>(e));
    }
  }

  std::span<const std::pair<EntityId, RelationId>> of(EntityId tail) const {
    const auto t = static_cast<std::size_t>(tail);
    return {edges_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
  }

  // Entities with at least one incoming edge.
  const std::vector<EntityId>& targets() const { return targets_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::pair<EntityId, RelationId>> edges_;
  std::vector<EntityId> targets_;
};

template <typename Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Grounds a placeholder shape backwards from `target`, so that `target` is
// an answer of every non-negated branch.
template <typename Rng>
class BackwardWalker {
 public:
  BackwardWalker(const IncomingEdges& incoming, Rng& rng, std::size_t anchors,
                 std::size_t relations)
      : incoming_(incoming), rng_(rng), anchors_(anchors), relations_(relations) {}

  bool ground(const QueryTree& shape, EntityId target) {
    switch (shape.kind) {
      case NodeKind::kAnchor:
        anchors_[static_cast<std::size_t>(shape.id)] = target;
        return true;
      case NodeKind::kProjection: {
        const auto edges = incoming_.of(target);
        if (edges.empty()) return false;
        const auto& [head, rel] = edges[uniform_index(rng_, edges.size())];
        relations_[static_cast<std::size_t>(shape.id)] = rel;
        return ground(shape.child(), head);
      }
      case NodeKind::kNegation:
        return ground_free(shape.child());
      case NodeKind::kIntersection:
      case NodeKind::kUnion:
        for (const auto& c : shape.children) {
          if (!ground(c, target)) return false;
        }
        return true;
    }
    return false;
  }

  // Negated branches get their own target, so they denote a non-empty set.
  bool ground_free(const QueryTree& shape) {
    const auto& targets = incoming_.targets();
    if (targets.empty()) return false;
    return ground(shape, targets[uniform_index(rng_, targets.size())]);
  }

  std::vector<EntityId>& anchors() { return anchors_; }
  std::vector<RelationId>& relations() { return relations_; }

 private:
  const IncomingEdges& incoming_;
  Rng& rng_;
  std::vector<EntityId> anchors_;
  std::vector<RelationId> relations_;
};

inline bool has_duplicate_branches(const QueryTree& tree) {
  if (tree.kind == NodeKind::kIntersection || tree.kind == NodeKind::kUnion) {
    for (std::size_t a = 0; a < tree.children.size(); ++a) {
      for (std::size_t b = a + 1; b < tree.children.size(); ++b) {
        if (tree.children[a] == tree.children[b]) return true;
      }
    }
  }
  for (const auto& c : tree.children) {
    if (has_duplicate_branches(c)) return true;
  }
  return false;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Samples grounded instances of one structure for the configured stage.
//
// Each attempt picks an answer entity on the stage graph and walks the
// structure's edges backwards to the anchors. Instances are kept when the
// stage graph yields between 1 and max_answers answers, (for valid/test) at
// least one non-trivial answer exists, and the grounding is new. The
// generator is seeded from (seed, structure), so structures can be sampled
// independently.
inline SampleResult sample_queries(const GraphSplit& split, Structure structure,
                                   const SamplerConfig& config) {
  SampleResult result;
  result.requested = config.count(structure);
  if (result.requested == 0) return result;

  const KnowledgeGraph& graph = stage_graph(split, config.stage);
  const detail::IncomingEdges incoming(graph);
  std::mt19937_64 rng(
      detail::mix_seed(config.seed, static_cast<std::uint64_t>(structure)));
  const QueryTree shape = template_shape(structure);
  const Arity arity = tree_arity(shape);
  std::set<std::pair<std::vector<EntityId>, std::vector<RelationId>>> seen;

  const std::size_t budget = result.requested * config.attempts_per_query;
  while (result.instances.size() < result.requested &&
         result.attempts < budget) {
    ++result.attempts;
    if (incoming.targets().empty()) break;
    detail::BackwardWalker walker(incoming, rng, arity.anchors, arity.relations);
    if (!walker.ground_free(shape)) continue;
    auto key = std::make_pair(walker.anchors(), walker.relations());
    if (seen.count(key)) continue;

    QueryInstance q;
    q.structure = structure;
    q.tree = instantiate(structure, key.first, key.second);
    if (detail::has_duplicate_branches(q.tree)) continue;
    const EntitySet generated = answer_set(graph, q.tree);
    if (generated.empty() || generated.size() > config.max_answers) continue;
    fill_answers(q, split);
    if (config.stage != Stage::kTrain &&
        non_trivial_answers(q, config.stage).empty()) {
      continue;
    }
    seen.insert(std::move(key));
    result.instances.push_back(std::move(q));
  }
  return result;
}

// Draws `count` distinct entities uniformly from V - answers_train (Floyd's
// algorithm over the complement's index space).
template <typename Rng>
std::vector<EntityId> sample_negatives(const QueryInstance& q,
                                       std::size_t entity_count,
                                       std::size_t count, Rng& rng) {
  if (count < 1) throw DataError("negative sample count must be >= 1");
  const EntitySet& positives = q.answers(Stage::kTrain);
  const std::size_t pool = entity_count - positives.size();
  if (pool < count) {
    throw DataError("query " + q.describe() + " has only " +
                    std::to_string(pool) + " non-answers, need " +
                    std::to_string(count));
  }
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j = pool - count; j < pool; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  // k-th non-answer: skip past every positive <= the running candidate.
  std::vector<EntityId> out;
  out.reserve(count);
  for (std::size_t k : picked) {
    auto e = static_cast<EntityId>(k);
    for (EntityId a : positives) {
      if (a <= e) {
        ++e;
      } else {
        break;
      }
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace pathq

#endif  // PATHQ_SAMPLER_HPP_
