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

#ifndef PATHQ_KG_HPP_
#define PATHQ_KG_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathq/error.hpp"

namespace pathq {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Sorted, duplicate-free list of entity ids.
using EntitySet = std::vector<EntityId>;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

// Bidirectional string <-> dense id map. Ids are handed out in insertion
// order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::int32_t find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& name(std::int32_t id) const {
    return names_.at(static_cast<std::size_t>(id));
  }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Immutable triple store with a forward (head, relation) -> tails index.
//
// Triples are kept sorted by (head, relation, tail); `tails(h, r)` is a
// contiguous, sorted slice of the tail column.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(std::size_t entity_count, std::size_t relation_count,
                 std::vector<Triple> triples)
      : entity_count_(entity_count), relation_count_(relation_count) {
    for (const Triple& t : triples) {
      if (t.head < 0 || static_cast<std::size_t>(t.head) >= entity_count ||
          t.tail < 0 || static_cast<std::size_t>(t.tail) >= entity_count ||
          t.relation < 0 ||
          static_cast<std::size_t>(t.relation) >= relation_count) {
        throw DomainError("triple (" + std::to_string(t.head) + ", " +
                          std::to_string(t.relation) + ", " +
                          std::to_string(t.tail) + ") out of range");
      }
    }
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    triples_ = std::move(triples);

    head_offsets_.assign(entity_count_ + 1, 0);
    relation_column_.reserve(triples_.size());
    tail_column_.reserve(triples_.size());
    for (const Triple& t : triples_) {
      ++head_offsets_[static_cast<std::size_t>(t.head) + 1];
      relation_column_.push_back(t.relation);
      tail_column_.push_back(t.tail);
    }
    for (std::size_t i = 1; i < head_offsets_.size(); ++i) {
      head_offsets_[i] += head_offsets_[i - 1];
    }
  }

  std::size_t entity_count() const { return entity_count_; }
  std::size_t relation_count() const { return relation_count_; }
  std::size_t triple_count() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }

  // Sorted tails t with (head, relation, t) in the graph; empty when absent.
  std::span<const EntityId> tails(EntityId head, RelationId relation) const {
    check_entity(head);
    check_relation(relation);
    const auto begin = relation_column_.begin() +
                       static_cast<std::ptrdiff_t>(head_offsets_[head]);
    const auto end = relation_column_.begin() +
                     static_cast<std::ptrdiff_t>(head_offsets_[head + 1]);
    const auto [lo, hi] = std::equal_range(begin, end, relation);
    const auto first = static_cast<std::size_t>(lo - relation_column_.begin());
    const auto count = static_cast<std::size_t>(hi - lo);
    return {tail_column_.data() + first, count};
  }

  bool contains(const Triple& t) const {
    const auto tails_of = tails(t.head, t.relation);
    return std::binary_search(tails_of.begin(), tails_of.end(), t.tail);
  }

  void check_entity(EntityId e) const {
    if (e < 0 || static_cast<std::size_t>(e) >= entity_count_) {
      throw DomainError("entity id " + std::to_string(e) +
                        " out of range [0, " + std::to_string(entity_count_) +
                        ")");
    }
  }

  void check_relation(RelationId r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= relation_count_) {
      throw DomainError("relation id " + std::to_string(r) +
                        " out of range [0, " +
                        std::to_string(relation_count_) + ")");
    }
  }

 private:
  std::size_t entity_count_ = 0;
  std::size_t relation_count_ = 0;
  std::vector<Triple> triples_;
  std::vector<std::size_t> head_offsets_;
  std::vector<RelationId> relation_column_;
  std::vector<EntityId> tail_column_;
};

// Relational projection: every e' with relation(e, e') for some e in source.
inline EntitySet project(const KnowledgeGraph& graph,
                         std::span<const EntityId> source,
                         RelationId relation) {
  graph.check_relation(relation);
  EntitySet out;
  for (EntityId e : source) {
    const auto t = graph.tails(e, relation);
    out.insert(out.end(), t.begin(), t.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct LoadReport {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t train_triples = 0;
  std::size_t valid_triples = 0;
  std::size_t test_triples = 0;
  // Repeated rows per input file, counted once each time they recur.
  std::size_t train_duplicates = 0;
  std::size_t valid_duplicates = 0;
  std::size_t test_duplicates = 0;

  nlohmann::json to_json() const {
    return {{"entities", entities},
            {"relations", relations},
            {"train_triples", train_triples},
            {"valid_triples", valid_triples},
            {"test_triples", test_triples},
            {"duplicates",
             {{"train", train_duplicates},
              {"valid", valid_duplicates},
              {"test", test_duplicates}}}};
  }
};

// Nested train <= valid <= test graphs over shared vocabularies.
struct GraphSplit {
  Vocabulary entities;
  Vocabulary relations;
  KnowledgeGraph train;
  KnowledgeGraph valid;
  KnowledgeGraph test;
  LoadReport report;

  std::size_t entity_count() const { return entities.size(); }
  std::size_t relation_count() const { return relations.size(); }
};

namespace detail {

struct RawTriple {
  std::string head, relation, tail;
};

inline std::vector<RawTriple> read_tsv_triples(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RawTriple> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]),
                    std::move(fields[2])});
  }
  return rows;
}

}  // namespace detail

// Loads the three edge files. The valid graph is train + valid edges and the
// test graph is valid + test edges. Ids follow first appearance across the
// train, valid, test files in that order.
inline GraphSplit load_split(const std::filesystem::path& train_path,
                             const std::filesystem::path& valid_edges_path,
                             const std::filesystem::path& test_edges_path) {
  GraphSplit split;
  const std::filesystem::path* paths[] = {&train_path, &valid_edges_path,
                                          &test_edges_path};
  std::vector<Triple> cumulative;
  std::vector<std::vector<Triple>> stages;
  std::size_t duplicates[3] = {0, 0, 0};
  std::vector<Triple> seen;  // sorted, for duplicate detection
  for (int s = 0; s < 3; ++s) {
    std::vector<Triple> added;
    for (const auto& row : detail::read_tsv_triples(*paths[s])) {
      Triple t{split.entities.intern(row.head),
               split.relations.intern(row.relation),
               split.entities.intern(row.tail)};
      added.push_back(t);
    }
    // A row is a duplicate if it repeats an earlier row in any file.
    for (const Triple& t : added) {
      auto it = std::lower_bound(seen.begin(), seen.end(), t);
      if (it != seen.end() && *it == t) {
        ++duplicates[s];
      } else {
        seen.insert(it, t);
        cumulative.push_back(t);
      }
    }
    stages.push_back(cumulative);
  }
  const std::size_t ne = split.entities.size();
  const std::size_t nr = split.relations.size();
  split.train = KnowledgeGraph(ne, nr, std::move(stages[0]));
  split.valid = KnowledgeGraph(ne, nr, std::move(stages[1]));
  split.test = KnowledgeGraph(ne, nr, std::move(stages[2]));
  split.report.entities = ne;
  split.report.relations = nr;
  split.report.train_triples = split.train.triple_count();
  split.report.valid_triples = split.valid.triple_count();
  split.report.test_triples = split.test.triple_count();
  split.report.train_duplicates = duplicates[0];
  split.report.valid_duplicates = duplicates[1];
  split.report.test_duplicates = duplicates[2];
  return split;
}

namespace detail {

inline void write_names(const std::filesystem::path& path,
                        const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& n : vocab.names()) out << n << '\n';
}

inline Vocabulary read_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<std::size_t>(vocab.intern(line)) + 1 != vocab.size()) {
      throw DataError(path.string() + ": duplicate name '" + line + "'");
    }
  }
  return vocab;
}

inline void write_id_triples(const std::filesystem::path& path,
                             const KnowledgeGraph& graph) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Triple& t : graph.triples()) {
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
}

inline KnowledgeGraph read_id_triples(const std::filesystem::path& path,
                                      std::size_t ne, std::size_t nr) {
  std::vector<Triple> triples;
  std::size_t line_no = 0;
  for (const auto& row : read_tsv_triples(path)) {
    ++line_no;
    try {
      triples.push_back({static_cast<EntityId>(std::stol(row.head)),
                         static_cast<RelationId>(std::stol(row.relation)),
                         static_cast<EntityId>(std::stol(row.tail))});
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": row " + std::to_string(line_no) +
                      " is not an integer triple");
    }
  }
  return KnowledgeGraph(ne, nr, std::move(triples));
}

}  // namespace detail

// Writes a split as entities.txt / relations.txt (one name per line, line
// number = id), cumulative id triples per graph, and report.json.
inline void save_split_dir(const GraphSplit& split,
                           const std::filesystem::path& dir,
                           nlohmann::json extra_meta = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  detail::write_names(dir / "entities.txt", split.entities);
  detail::write_names(dir / "relations.txt", split.relations);
  detail::write_id_triples(dir / "train.tsv", split.train);
  detail::write_id_triples(dir / "valid.tsv", split.valid);
  detail::write_id_triples(dir / "test.tsv", split.test);
  nlohmann::json report = split.report.to_json();
  for (auto& [k, v] : extra_meta.items()) report[k] = v;
  std::ofstream out(dir / "report.json");
  if (!out) throw DataError("cannot write " + (dir / "report.json").string());
  out << report.dump(2) << '\n';
}

inline GraphSplit load_split_dir(const std::filesystem::path& dir) {
  GraphSplit split;
  split.entities = detail::read_names(dir / "entities.txt");
  split.relations = detail::read_names(dir / "relations.txt");
  const auto ne = split.entities.size();
  const auto nr = split.relations.size();
  split.train = detail::read_id_triples(dir / "train.tsv", ne, nr);
  split.valid = detail::read_id_triples(dir / "valid.tsv", ne, nr);
  split.test = detail::read_id_triples(dir / "test.tsv", ne, nr);
  split.report.entities = ne;
  split.report.relations = nr;
  split.report.train_triples = split.train.triple_count();
  split.report.valid_triples = split.valid.triple_count();
  split.report.test_triples = split.test.triple_count();
  return split;
}

}  // namespace pathq

#endif  // PATHQ_KG_HPP_
