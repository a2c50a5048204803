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

#ifndef PATHQ_QUERY_HPP_
#define PATHQ_QUERY_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pathq/error.hpp"
#include "pathq/kg.hpp"

namespace pathq {

enum class NodeKind { kAnchor, kProjection, kNegation, kIntersection, kUnion };

// Query computation tree. The root denotes the free answer variable; every
// leaf is an anchor entity. `id` is the entity of an anchor or the relation
// of a projection and is unused otherwise.
struct QueryTree {
  NodeKind kind = NodeKind::kAnchor;
  std::int32_t id = -1;
  std::vector<QueryTree> children;

  static QueryTree anchor(EntityId e) { return {NodeKind::kAnchor, e, {}}; }
  static QueryTree projection(QueryTree child, RelationId r) {
    return {NodeKind::kProjection, r, {std::move(child)}};
  }
  static QueryTree negation(QueryTree child) {
    return {NodeKind::kNegation, -1, {std::move(child)}};
  }
  static QueryTree intersection(std::vector<QueryTree> children) {
    return {NodeKind::kIntersection, -1, std::move(children)};
  }
  static QueryTree union_of(std::vector<QueryTree> children) {
    return {NodeKind::kUnion, -1, std::move(children)};
  }

  const QueryTree& child() const { return children.front(); }

  bool operator==(const QueryTree&) const = default;
};

inline bool contains_union(const QueryTree& tree) {
  if (tree.kind == NodeKind::kUnion) return true;
  for (const auto& c : tree.children) {
    if (contains_union(c)) return true;
  }
  return false;
}

inline bool contains_negation(const QueryTree& tree) {
  if (tree.kind == NodeKind::kNegation) return true;
  for (const auto& c : tree.children) {
    if (contains_negation(c)) return true;
  }
  return false;
}

// Compact s-expression, e.g. "i(p(e1,r0),n(p(e2,r1)))".
inline std::string to_string(const QueryTree& tree) {
  switch (tree.kind) {
    case NodeKind::kAnchor:
      return "e" + std::to_string(tree.id);
    case NodeKind::kProjection:
      return "p(" + to_string(tree.child()) + ",r" + std::to_string(tree.id) +
             ")";
    case NodeKind::kNegation:
      return "n(" + to_string(tree.child()) + ")";
    case NodeKind::kIntersection:
    case NodeKind::kUnion: {
      std::string s = tree.kind == NodeKind::kUnion ? "u(" : "i(";
      for (std::size_t i = 0; i < tree.children.size(); ++i) {
        if (i) s += ',';
        s += to_string(tree.children[i]);
      }
      return s + ')';
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Benchmark structures

enum class Structure {
  k1p, k2p, k3p, k2i, k3i, kIp, kPi, k2u, kUp, k2in, k3in, kInp, kPin, kPni
};

inline constexpr std::array<Structure, 14> kAllStructures = {
    Structure::k1p,  Structure::k2p,  Structure::k3p,  Structure::k2i,
    Structure::k3i,  Structure::kIp,  Structure::kPi,  Structure::k2u,
    Structure::kUp,  Structure::k2in, Structure::k3in, Structure::kInp,
    Structure::kPin, Structure::kPni};

inline constexpr std::array<Structure, 9> kEpfoStructures = {
    Structure::k1p, Structure::k2p, Structure::k3p, Structure::k2i,
    Structure::k3i, Structure::kIp, Structure::kPi, Structure::k2u,
    Structure::kUp};

inline constexpr std::array<Structure, 5> kNegationStructures = {
    Structure::k2in, Structure::k3in, Structure::kInp, Structure::kPin,
    Structure::kPni};

inline std::string_view structure_name(Structure s) {
  constexpr std::array<std::string_view, 14> names = {
      "1p", "2p", "3p", "2i", "3i", "ip", "pi",
      "2u", "up", "2in", "3in", "inp", "pin", "pni"};
  return names[static_cast<std::size_t>(s)];
}

inline std::optional<Structure> parse_structure(std::string_view name) {
  for (Structure s : kAllStructures) {
    if (structure_name(s) == name) return s;
  }
  return std::nullopt;
}

inline Structure structure_from_name(std::string_view name) {
  if (auto s = parse_structure(name)) return *s;
  throw DataError("unknown query structure '" + std::string(name) + "'");
}

namespace detail {

// Placeholder builders; ids are slot indices filled by instantiate().
inline QueryTree a(int slot) { return QueryTree::anchor(slot); }
inline QueryTree p(QueryTree c, int slot) {
  return QueryTree::projection(std::move(c), slot);
}
inline QueryTree n(QueryTree c) { return QueryTree::negation(std::move(c)); }
inline QueryTree i(std::vector<QueryTree> c) {
  return QueryTree::intersection(std::move(c));
}
inline QueryTree u(std::vector<QueryTree> c) {
  return QueryTree::union_of(std::move(c));
}

}  // namespace detail

// Shape of a structure with placeholder ids. Anchors are numbered left to
// right; relations are numbered in post-order (a projection after the
// relations below it), so pin = i(p(p(e0,r0),r1), n(p(e1,r2))).
inline QueryTree template_shape(Structure s) {
  using namespace detail;
  switch (s) {
    case Structure::k1p: return p(a(0), 0);
    case Structure::k2p: return p(p(a(0), 0), 1);
    case Structure::k3p: return p(p(p(a(0), 0), 1), 2);
    case Structure::k2i: return i({p(a(0), 0), p(a(1), 1)});
    case Structure::k3i: return i({p(a(0), 0), p(a(1), 1), p(a(2), 2)});
    case Structure::kIp: return p(i({p(a(0), 0), p(a(1), 1)}), 2);
    case Structure::kPi: return i({p(p(a(0), 0), 1), p(a(1), 2)});
    case Structure::k2u: return u({p(a(0), 0), p(a(1), 1)});
    case Structure::kUp: return p(u({p(a(0), 0), p(a(1), 1)}), 2);
    case Structure::k2in: return i({p(a(0), 0), n(p(a(1), 1))});
    case Structure::k3in:
      return i({p(a(0), 0), p(a(1), 1), n(p(a(2), 2))});
    case Structure::kInp: return p(i({p(a(0), 0), n(p(a(1), 1))}), 2);
    case Structure::kPin: return i({p(p(a(0), 0), 1), n(p(a(1), 2))});
    // The negated branch is the two-hop one.
    case Structure::kPni: return i({n(p(p(a(0), 0), 1)), p(a(1), 2)});
  }
  throw StructureError("unknown structure");
}

struct Arity {
  std::size_t anchors = 0;
  std::size_t relations = 0;
};

inline Arity tree_arity(const QueryTree& tree) {
  Arity out;
  if (tree.kind == NodeKind::kAnchor) ++out.anchors;
  if (tree.kind == NodeKind::kProjection) ++out.relations;
  for (const auto& c : tree.children) {
    const Arity ca = tree_arity(c);
    out.anchors += ca.anchors;
    out.relations += ca.relations;
  }
  return out;
}

inline Arity structure_arity(Structure s) {
  return tree_arity(template_shape(s));
}

namespace detail {

inline QueryTree fill_shape(const QueryTree& shape,
                            std::span<const EntityId> anchors,
                            std::span<const RelationId> relations) {
  QueryTree out{shape.kind, shape.id, {}};
  out.children.reserve(shape.children.size());
  for (const auto& c : shape.children) {
    out.children.push_back(fill_shape(c, anchors, relations));
  }
  if (shape.kind == NodeKind::kAnchor) {
    out.id = anchors[static_cast<std::size_t>(shape.id)];
  } else if (shape.kind == NodeKind::kProjection) {
    out.id = relations[static_cast<std::size_t>(shape.id)];
  }
  return out;
}

inline void collect_ids(const QueryTree& shape, const QueryTree& grounded,
                        std::vector<EntityId>& anchors,
                        std::vector<RelationId>& relations) {
  if (shape.kind != grounded.kind ||
      shape.children.size() != grounded.children.size()) {
    throw StructureError("tree does not match structure shape");
  }
  for (std::size_t k = 0; k < shape.children.size(); ++k) {
    collect_ids(shape.children[k], grounded.children[k], anchors, relations);
  }
  if (shape.kind == NodeKind::kAnchor) {
    anchors[static_cast<std::size_t>(shape.id)] = grounded.id;
  } else if (shape.kind == NodeKind::kProjection) {
    relations[static_cast<std::size_t>(shape.id)] = grounded.id;
  }
}

}  // namespace detail

inline QueryTree instantiate(Structure s, std::span<const EntityId> anchors,
                             std::span<const RelationId> relations) {
  const QueryTree shape = template_shape(s);
  const Arity arity = tree_arity(shape);
  if (anchors.size() != arity.anchors || relations.size() != arity.relations) {
    throw StructureError(
        "structure " + std::string(structure_name(s)) + " expects " +
        std::to_string(arity.anchors) + " anchors and " +
        std::to_string(arity.relations) + " relations, got " +
        std::to_string(anchors.size()) + " and " +
        std::to_string(relations.size()));
  }
  return detail::fill_shape(shape, anchors, relations);
}

// Inverse of instantiate(): reads anchors/relations back out of a grounded
// tree of the given structure.
inline std::pair<std::vector<EntityId>, std::vector<RelationId>> groundings_of(
    Structure s, const QueryTree& tree) {
  const QueryTree shape = template_shape(s);
  const Arity arity = tree_arity(shape);
  std::vector<EntityId> anchors(arity.anchors);
  std::vector<RelationId> relations(arity.relations);
  detail::collect_ids(shape, tree, anchors, relations);
  return {std::move(anchors), std::move(relations)};
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_into(const QueryTree& tree, bool under_negation,
                          bool at_root, const std::string& path,
                          std::vector<std::string>& report) {
  const auto here = path.empty() ? std::string("root") : path;
  switch (tree.kind) {
    case NodeKind::kAnchor:
      if (!tree.children.empty()) {
        report.push_back(here + ": anchor with children");
      }
      if (tree.id < 0) report.push_back(here + ": negative entity id");
      break;
    case NodeKind::kProjection:
      if (tree.children.size() != 1) {
        report.push_back(here + ": projection must have exactly 1 child");
      }
      if (tree.id < 0) report.push_back(here + ": negative relation id");
      break;
    case NodeKind::kNegation:
      if (tree.children.size() != 1) {
        report.push_back(here + ": negation must have exactly 1 child");
      } else if (tree.child().kind == NodeKind::kNegation) {
        report.push_back(here + ": double negation");
      } else if (tree.child().kind == NodeKind::kAnchor) {
        report.push_back(here + ": negation applied directly to an anchor");
      }
      break;
    case NodeKind::kIntersection:
      if (tree.children.size() < 2) {
        report.push_back(here + ": intersection needs at least 2 children, has " +
                         std::to_string(tree.children.size()));
      }
      break;
    case NodeKind::kUnion:
      if (tree.children.size() < 2) {
        report.push_back(here + ": union needs at least 2 children, has " +
                         std::to_string(tree.children.size()));
      }
      if (under_negation) report.push_back(here + ": union beneath negation");
      break;
  }
  if (at_root && tree.kind == NodeKind::kAnchor) {
    report.push_back("root: query has no operator (bare anchor)");
  }
  for (std::size_t k = 0; k < tree.children.size(); ++k) {
    validate_into(tree.children[k],
                  under_negation || tree.kind == NodeKind::kNegation, false,
                  here + "/" + std::to_string(k), report);
  }
}

// Lists structural violations; empty when the tree is well formed.
inline std::vector<std::string> validate(const QueryTree& tree) {
  std::vector<std::string> report;
  validate_into(tree, false, true, "", report);
  return report;
}

// ---------------------------------------------------------------------------
// Disjunctive normal form

namespace detail {

inline std::vector<QueryTree> dnf(const QueryTree& tree) {
  switch (tree.kind) {
    case NodeKind::kAnchor:
      return {tree};
    case NodeKind::kProjection: {
      std::vector<QueryTree> out;
      for (auto& alt : dnf(tree.child())) {
        out.push_back(QueryTree::projection(std::move(alt), tree.id));
      }
      return out;
    }
    case NodeKind::kNegation:
      if (contains_union(tree.child())) {
        throw StructureError("union beneath negation is not supported");
      }
      return {tree};
    case NodeKind::kIntersection: {
      std::vector<std::vector<QueryTree>> partial = {{}};
      for (const auto& c : tree.children) {
        const auto alts = dnf(c);
        std::vector<std::vector<QueryTree>> next;
        for (const auto& prefix : partial) {
          for (const auto& alt : alts) {
            auto extended = prefix;
            extended.push_back(alt);
            next.push_back(std::move(extended));
          }
        }
        partial = std::move(next);
      }
      std::vector<QueryTree> out;
      for (auto& children : partial) {
        out.push_back(QueryTree::intersection(std::move(children)));
      }
      return out;
    }
    case NodeKind::kUnion: {
      std::vector<QueryTree> out;
      for (const auto& c : tree.children) {
        for (auto& alt : dnf(c)) out.push_back(std::move(alt));
      }
      return out;
    }
  }
  return {};
}

}  // namespace detail

// Rewrites a query into union-free disjuncts whose answer sets union to the
// original's. A union-free tree comes back as a singleton.
inline std::vector<QueryTree> to_dnf(const QueryTree& tree) {
  if (!contains_union(tree)) return {tree};
  return detail::dnf(tree);
}

// ---------------------------------------------------------------------------
// Decomposition into path and fork queries

using SlotId = std::size_t;

struct Project {
  RelationId relation = 0;
  bool operator==(const Project&) const = default;
};
struct Negate {
  bool operator==(const Negate&) const = default;
};
using PathOp = std::variant<Project, Negate>;

struct AnchorStart {
  EntityId entity = 0;
  bool operator==(const AnchorStart&) const = default;
};
struct ForkStart {
  SlotId slot = 0;
  bool operator==(const ForkStart&) const = default;
};
using StartRef = std::variant<AnchorStart, ForkStart>;

// A starting node followed by a non-empty chain of projection / negation
// operators.
struct PathQuery {
  StartRef start;
  std::vector<PathOp> ops;
  bool operator==(const PathQuery&) const = default;
};

struct PathStep {
  PathQuery path;
  SlotId output = 0;
  bool operator==(const PathStep&) const = default;
};

// Pairwise intersection of two earlier slots.
struct ForkStep {
  std::vector<SlotId> inputs;
  SlotId output = 0;
  bool operator==(const ForkStep&) const = default;
};

using PlanStep = std::variant<PathStep, ForkStep>;

struct DecompositionPlan {
  std::vector<PlanStep> steps;
  SlotId root = 0;
  std::size_t slot_count = 0;

  std::size_t path_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += std::holds_alternative<PathStep>(s);
    return n;
  }
  std::size_t fork_count() const { return steps.size() - path_count(); }
};

namespace detail {

class Decomposer {
 public:
  DecompositionPlan run(const QueryTree& tree) {
    if (tree.kind == NodeKind::kAnchor) {
      throw StructureError("cannot decompose a bare anchor");
    }
    plan_.root = emit(tree);
    plan_.slot_count = next_slot_;
    return std::move(plan_);
  }

 private:
  SlotId emit(const QueryTree& node) {
    switch (node.kind) {
      case NodeKind::kUnion:
        throw StructureError("decompose requires a union-free tree");
      case NodeKind::kAnchor:
        throw StructureError("anchor reached outside a path");
      case NodeKind::kIntersection:
        return emit_fork(node);
      case NodeKind::kProjection:
      case NodeKind::kNegation:
        return emit_path(node);
    }
    return 0;
  }

  // Walks down a maximal chain of projection / negation nodes.
  SlotId emit_path(const QueryTree& top) {
    std::vector<PathOp> ops;
    const QueryTree* node = &top;
    while (node->kind == NodeKind::kProjection ||
           node->kind == NodeKind::kNegation) {
      if (node->children.size() != 1) {
        throw StructureError("unary operator without exactly one child");
      }
      if (node->kind == NodeKind::kProjection) {
        ops.push_back(Project{node->id});
      } else {
        ops.push_back(Negate{});
      }
      node = &node->child();
    }
    std::reverse(ops.begin(), ops.end());
    StartRef start;
    if (node->kind == NodeKind::kAnchor) {
      if (std::holds_alternative<Negate>(ops.front())) {
        throw StructureError("path from an anchor cannot begin with negation");
      }
      start = AnchorStart{node->id};
    } else {
      start = ForkStart{emit(*node)};
    }
    const SlotId out = next_slot_++;
    plan_.steps.push_back(PathStep{PathQuery{start, std::move(ops)}, out});
    return out;
  }

  SlotId emit_fork(const QueryTree& node) {
    if (node.children.size() < 2) {
      throw StructureError("intersection needs at least 2 children");
    }
    std::vector<SlotId> inputs;
    for (const auto& c : node.children) inputs.push_back(emit(c));
    SlotId acc = inputs[0];
    for (std::size_t k = 1; k < inputs.size(); ++k) {
      const SlotId out = next_slot_++;
      plan_.steps.push_back(ForkStep{{acc, inputs[k]}, out});
      acc = out;
    }
    return acc;
  }

  DecompositionPlan plan_;
  SlotId next_slot_ = 0;
};

}  // namespace detail

// Splits a union-free tree into path steps (maximal projection/negation
// chains) and pairwise fork steps, ordered so every slot is written before
// it is read. An n-way intersection becomes n-1 forks folded left to right.
inline DecompositionPlan decompose(const QueryTree& tree) {
  return detail::Decomposer{}.run(tree);
}

}  // namespace pathq

#endif  // PATHQ_QUERY_HPP_
