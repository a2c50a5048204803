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

#ifndef PATHQ_INSTANCE_HPP_
#define PATHQ_INSTANCE_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pathq/error.hpp"
#include "pathq/kg.hpp"
#include "pathq/query.hpp"

namespace pathq {

enum class Stage { kTrain, kValid, kTest };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kTrain: return "train";
    case Stage::kValid: return "valid";
    case Stage::kTest: return "test";
  }
  return "?";
}

inline Stage parse_stage(std::string_view name) {
  if (name == "train") return Stage::kTrain;
  if (name == "valid") return Stage::kValid;
  if (name == "test") return Stage::kTest;
  throw DataError("unknown stage '" + std::string(name) +
                  "' (expected train, valid or test)");
}

// A grounded query with its answers on each split graph.
struct QueryInstance {
  Structure structure = Structure::k1p;
  QueryTree tree;
  std::optional<EntitySet> answers_train;
  std::optional<EntitySet> answers_valid;
  std::optional<EntitySet> answers_test;

  const EntitySet& answers(Stage s) const {
    const std::optional<EntitySet>* slot =
        s == Stage::kTrain ? &answers_train
                           : (s == Stage::kValid ? &answers_valid : &answers_test);
    if (!slot->has_value()) {
      throw DataError("query " + to_string(tree) + " has no " +
                      std::string(stage_name(s)) + " answers");
    }
    return **slot;
  }

  std::string describe() const {
    return std::string(structure_name(structure)) + " " + to_string(tree);
  }
};

inline nlohmann::json to_json(const QueryInstance& q) {
  auto [anchors, relations] = groundings_of(q.structure, q.tree);
  nlohmann::json j = {{"structure", structure_name(q.structure)},
                      {"anchors", anchors},
                      {"relations", relations}};
  if (q.answers_train) j["answers_train"] = *q.answers_train;
  if (q.answers_valid) j["answers_valid"] = *q.answers_valid;
  if (q.answers_test) j["answers_test"] = *q.answers_test;
  return j;
}

namespace detail {

inline std::optional<EntitySet> read_answer_field(const nlohmann::json& j,
                                                  const char* key) {
  if (!j.contains(key)) return std::nullopt;
  EntitySet s = j.at(key).get<EntitySet>();
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace detail

inline QueryInstance instance_from_json(const nlohmann::json& j) {
  QueryInstance q;
  q.structure = structure_from_name(j.at("structure").get<std::string>());
  const auto anchors = j.at("anchors").get<std::vector<EntityId>>();
  const auto relations = j.at("relations").get<std::vector<RelationId>>();
  q.tree = instantiate(q.structure, anchors, relations);
  q.answers_train = detail::read_answer_field(j, "answers_train");
  q.answers_valid = detail::read_answer_field(j, "answers_valid");
  q.answers_test = detail::read_answer_field(j, "answers_test");
  return q;
}

// JSON-lines, one query per line. An optional leading {"meta": {...}} line
// carries provenance (seed, stage) and is skipped by the reader.
inline void write_instances(std::ostream& out,
                            const std::vector<QueryInstance>& instances,
                            const nlohmann::json& meta = nullptr) {
  if (!meta.is_null()) out << nlohmann::json{{"meta", meta}}.dump() << '\n';
  for (const auto& q : instances) out << to_json(q).dump() << '\n';
}

inline void write_instances(const std::filesystem::path& path,
                            const std::vector<QueryInstance>& instances,
                            const nlohmann::json& meta = nullptr) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_instances(out, instances, meta);
}

inline std::vector<QueryInstance> read_instances(std::istream& in,
                                                 const std::string& source) {
  std::vector<QueryInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("meta")) continue;
      out.push_back(instance_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<QueryInstance> read_instances(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_instances(in, path.string());
}

}  // namespace pathq

#endif  // PATHQ_INSTANCE_HPP_
