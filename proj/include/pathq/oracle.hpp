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

#ifndef PATHQ_ORACLE_HPP_
#define PATHQ_ORACLE_HPP_

#include <algorithm>
#include <iterator>
#include <optional>
#include <vector>

#include "pathq/error.hpp"
#include "pathq/instance.hpp"
#include "pathq/kg.hpp"
#include "pathq/query.hpp"

namespace pathq {

// Exact set-semantics query execution, used as ground truth.

inline EntitySet set_intersection(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

inline EntitySet set_union(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

inline EntitySet set_difference(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

// Complement against the whole entity vocabulary.
inline EntitySet complement(const EntitySet& s, std::size_t entity_count) {
  EntitySet out;
  out.reserve(entity_count - std::min(entity_count, s.size()));
  auto it = s.begin();
  for (std::size_t e = 0; e < entity_count; ++e) {
    const auto id = static_cast<EntityId>(e);
    if (it != s.end() && *it == id) {
      ++it;
    } else {
      out.push_back(id);
    }
  }
  return out;
}

inline EntitySet answer_set(const KnowledgeGraph& graph, const QueryTree& tree) {
  switch (tree.kind) {
    case NodeKind::kAnchor:
      graph.check_entity(tree.id);
      return {tree.id};
    case NodeKind::kProjection:
      return project(graph, answer_set(graph, tree.child()), tree.id);
    case NodeKind::kNegation:
      return complement(answer_set(graph, tree.child()), graph.entity_count());
    case NodeKind::kIntersection: {
      if (tree.children.empty()) throw StructureError("empty intersection");
      EntitySet acc = answer_set(graph, tree.children[0]);
      for (std::size_t k = 1; k < tree.children.size(); ++k) {
        acc = set_intersection(acc, answer_set(graph, tree.children[k]));
      }
      return acc;
    }
    case NodeKind::kUnion: {
      EntitySet acc;
      for (const auto& c : tree.children) {
        acc = set_union(acc, answer_set(graph, c));
      }
      return acc;
    }
  }
  return {};
}

// Runs a decomposition plan with set operators in place of the encoders.
inline EntitySet execute_plan(const KnowledgeGraph& graph,
                              const DecompositionPlan& plan) {
  std::vector<std::optional<EntitySet>> slots(plan.slot_count);
  auto read = [&](SlotId s) -> const EntitySet& {
    if (s >= slots.size() || !slots[s]) {
      throw StructureError("plan reads slot " + std::to_string(s) +
                           " before it is written");
    }
    return *slots[s];
  };
  auto write = [&](SlotId s, EntitySet v) {
    if (s >= slots.size() || slots[s]) {
      throw StructureError("plan writes slot " + std::to_string(s) + " twice");
    }
    slots[s] = std::move(v);
  };
  for (const auto& step : plan.steps) {
    if (const auto* ps = std::get_if<PathStep>(&step)) {
      EntitySet current;
      if (const auto* a = std::get_if<AnchorStart>(&ps->path.start)) {
        graph.check_entity(a->entity);
        current = {a->entity};
      } else {
        current = read(std::get<ForkStart>(ps->path.start).slot);
      }
      for (const auto& op : ps->path.ops) {
        if (const auto* p = std::get_if<Project>(&op)) {
          current = project(graph, current, p->relation);
        } else {
          current = complement(current, graph.entity_count());
        }
      }
      write(ps->output, std::move(current));
    } else {
      const auto& fs = std::get<ForkStep>(step);
      EntitySet acc = read(fs.inputs.at(0));
      for (std::size_t k = 1; k < fs.inputs.size(); ++k) {
        acc = set_intersection(acc, read(fs.inputs[k]));
      }
      write(fs.output, std::move(acc));
    }
  }
  return read(plan.root);
}

// Answers that need at least one edge missing from the next smaller graph:
// test - valid at the test stage, valid - train at the valid stage. At the
// train stage every train answer counts.
inline EntitySet non_trivial_answers(const QueryInstance& q, Stage stage) {
  switch (stage) {
    case Stage::kTest:
      return set_difference(q.answers(Stage::kTest), q.answers(Stage::kValid));
    case Stage::kValid:
      return set_difference(q.answers(Stage::kValid), q.answers(Stage::kTrain));
    case Stage::kTrain:
      return q.answers(Stage::kTrain);
  }
  return {};
}

// Fills all three answer sets from the split graphs.
inline void fill_answers(QueryInstance& q, const GraphSplit& split) {
  q.answers_train = answer_set(split.train, q.tree);
  q.answers_valid = answer_set(split.valid, q.tree);
  q.answers_test = answer_set(split.test, q.tree);
}

}  // namespace pathq

#endif  // PATHQ_ORACLE_HPP_
