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

#ifndef PATHQ_EVALUATION_HPP_
#define PATHQ_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathq/error.hpp"
#include "pathq/instance.hpp"
#include "pathq/oracle.hpp"
#include "pathq/query.hpp"

namespace pathq {

// Answers that are filtered out of the candidate pool at a stage: every
// answer on the stage graph.
inline const EntitySet& filter_set(const QueryInstance& q, Stage stage) {
  return q.answers(stage);
}

// Filtered mid-rank of `answer` given distances to every entity. The pool is
// the answer itself plus every entity outside `filtered`; candidates closer
// than the answer count 1, ties count 1/2.
inline double rank_entity(EntityId answer, std::span<const double> distances,
                          const EntitySet& filtered) {
  if (answer < 0 || static_cast<std::size_t>(answer) >= distances.size()) {
    throw DomainError("entity id " + std::to_string(answer) + " out of range");
  }
  const double target = distances[static_cast<std::size_t>(answer)];
  std::size_t closer = 0, tied = 0;
  auto it = filtered.begin();
  for (std::size_t e = 0; e < distances.size(); ++e) {
    const auto id = static_cast<EntityId>(e);
    while (it != filtered.end() && *it < id) ++it;
    if (id == answer || (it != filtered.end() && *it == id)) continue;
    if (distances[e] < target) {
      ++closer;
    } else if (distances[e] == target) {
      ++tied;
    }
  }
  return 1.0 + static_cast<double>(closer) + 0.5 * static_cast<double>(tied);
}

// Rank of a stage non-trivial answer of `q`.
inline double rank_entity(EntityId answer, const QueryInstance& q,
                          std::span<const double> distances, Stage stage) {
  const EntitySet nt = non_trivial_answers(q, stage);
  if (!std::binary_search(nt.begin(), nt.end(), answer)) {
    throw DataError("entity " + std::to_string(answer) +
                    " is not a non-trivial " + std::string(stage_name(stage)) +
                    " answer of " + q.describe());
  }
  return rank_entity(answer, distances, filter_set(q, stage));
}

// Mean reciprocal rank over the stage's non-trivial answers of one query.
inline double query_mrr(const QueryInstance& q, std::span<const double> distances,
                        Stage stage) {
  const EntitySet nt = non_trivial_answers(q, stage);
  if (nt.empty()) return 0.0;
  // One sorted pass over the filtered pool serves every answer.
  const EntitySet& filtered = filter_set(q, stage);
  std::vector<double> pool;
  auto it = filtered.begin();
  for (std::size_t e = 0; e < distances.size(); ++e) {
    const auto id = static_cast<EntityId>(e);
    while (it != filtered.end() && *it < id) ++it;
    if (it != filtered.end() && *it == id) continue;
    pool.push_back(distances[e]);
  }
  std::sort(pool.begin(), pool.end());
  double total = 0;
  for (EntityId a : nt) {
    const double target = distances[static_cast<std::size_t>(a)];
    const auto lo = std::lower_bound(pool.begin(), pool.end(), target);
    const auto hi = std::upper_bound(lo, pool.end(), target);
    const double rank = 1.0 + static_cast<double>(lo - pool.begin()) +
                        0.5 * static_cast<double>(hi - lo);
    total += 1.0 / rank;
  }
  return total / static_cast<double>(nt.size());
}

struct StructureScore {
  double mrr = 0;  // raw, in [0, 1]
  std::size_t queries = 0;
};

struct RankingReport {
  Stage stage = Stage::kTest;
  std::map<Structure, StructureScore> structures;

  // Means of per-structure MRR (x100) over the structures present in each
  // group; nullopt when none is present.
  std::optional<double> group_mean(std::span<const Structure> group) const {
    double sum = 0;
    std::size_t n = 0;
    for (Structure s : group) {
      if (auto it = structures.find(s); it != structures.end()) {
        sum += 100.0 * it->second.mrr;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
  std::optional<double> epfo_mean() const { return group_mean(kEpfoStructures); }
  std::optional<double> negation_mean() const { return group_mean(kNegationStructures); }

  // Mean over an arbitrary structure list, x100.
  std::optional<double> mean_over(std::span<const Structure> group) const {
    return group_mean(group);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stage"] = stage_name(stage);
    j["structures"] = nlohmann::json::object();
    for (const auto& [s, score] : structures) {
      j["structures"][std::string(structure_name(s))] = {
          {"mrr", 100.0 * score.mrr}, {"mrr_raw", score.mrr}, {"queries", score.queries}};
    }
    j["epfo_mean"] = epfo_mean() ? nlohmann::json(*epfo_mean()) : nlohmann::json(nullptr);
    j["negation_mean"] =
        negation_mean() ? nlohmann::json(*negation_mean()) : nlohmann::json(nullptr);
    return j;
  }

  std::string to_text() const {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %10s %8s\n", "structure", "MRR(%)", "queries");
    out += buf;
    for (const auto& [s, score] : structures) {
      std::snprintf(buf, sizeof buf, "%-10s %10.2f %8zu\n",
                    std::string(structure_name(s)).c_str(), 100.0 * score.mrr,
                    score.queries);
      out += buf;
    }
    if (auto m = epfo_mean()) {
      std::snprintf(buf, sizeof buf, "%-10s %10.2f\n", "avg_epfo", *m);
      out += buf;
    }
    if (auto m = negation_mean()) {
      std::snprintf(buf, sizeof buf, "%-10s %10.2f\n", "avg_neg", *m);
      out += buf;
    }
    return out;
  }
};

// Scorer: callable returning distances to every entity for a query tree.
using Scorer = std::function<std::vector<double>(const QueryTree&)>;

// Per-query MRR values in input order. Queries are split across up to
// `threads` workers; each writes only its own slots.
inline std::vector<double> per_query_mrr(const std::vector<QueryInstance>& instances,
                                         const Scorer& scorer, Stage stage,
                                         unsigned threads = 1) {
  std::vector<double> out(instances.size(), 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto dist = scorer(instances[i].tree);
      out[i] = query_mrr(instances[i], dist, stage);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(instances.size())));
  if (threads <= 1) {
    work(0, instances.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (instances.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk, e = std::min(instances.size(), b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
  return out;
}

// Filtered MRR per structure. Queries without non-trivial answers at the
// stage are skipped.
inline RankingReport mrr(const std::vector<QueryInstance>& instances, const Scorer& scorer,
                         Stage stage, unsigned threads = 1) {
  const auto values = per_query_mrr(instances, scorer, stage, threads);
  RankingReport report;
  report.stage = stage;
  std::map<Structure, double> sums;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (non_trivial_answers(instances[i], stage).empty()) continue;
    auto& score = report.structures[instances[i].structure];
    ++score.queries;
    sums[instances[i].structure] += values[i];
  }
  for (auto& [s, score] : report.structures) {
    score.mrr = sums[s] / static_cast<double>(score.queries);
  }
  return report;
}

// Side-by-side reports; deltas are relative to the first entry.
struct AblationTable {
  std::vector<std::pair<std::string, RankingReport>> reports;

  // Deltas are relative to the first report; null where either side lacks
  // the structure.
  nlohmann::json to_json() const {
    nlohmann::json models = nlohmann::json::array();
    nlohmann::json deltas = nlohmann::json::object();
    for (const auto& [name, r] : reports) models.push_back({{"model", name}, {"report", r.to_json()}});
    auto diff = [](std::optional<double> v, std::optional<double> base) {
      return v && base ? nlohmann::json(*v - *base) : nlohmann::json(nullptr);
    };
    for (std::size_t m = 1; m < reports.size(); ++m) {
      const RankingReport& base = reports[0].second;
      const RankingReport& r = reports[m].second;
      nlohmann::json d = nlohmann::json::object();
      for (Structure s : kAllStructures) {
        auto a = r.structures.find(s), b = base.structures.find(s);
        if (a == r.structures.end() && b == base.structures.end()) continue;
        d[std::string(structure_name(s))] =
            diff(a == r.structures.end() ? std::nullopt : std::optional(100.0 * a->second.mrr),
                 b == base.structures.end() ? std::nullopt : std::optional(100.0 * b->second.mrr));
      }
      d["avg_epfo"] = diff(r.epfo_mean(), base.epfo_mean());
      d["avg_neg"] = diff(r.negation_mean(), base.negation_mean());
      deltas[reports[m].first] = std::move(d);
    }
    return {{"baseline", reports.empty() ? nlohmann::json(nullptr) : nlohmann::json(reports[0].first)},
            {"models", std::move(models)},
            {"deltas", std::move(deltas)}};
  }

  std::string to_text() const {
    std::string out;
    if (reports.empty()) return out;
    std::vector<Structure> rows;
    for (Structure s : kAllStructures) {
      for (const auto& entry : reports) {
        if (entry.second.structures.count(s)) {
          rows.push_back(s);
          break;
        }
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s", "structure");
    out += buf;
    for (std::size_t m = 0; m < reports.size(); ++m) {
      std::snprintf(buf, sizeof buf, " %14.14s", reports[m].first.c_str());
      out += buf;
      if (m > 0) {
        std::snprintf(buf, sizeof buf, " %9s", "delta");
        out += buf;
      }
    }
    out += '\n';
    auto cell = [&](std::optional<double> v, std::optional<double> base, bool with_delta) {
      if (v) {
        std::snprintf(buf, sizeof buf, " %14.2f", *v);
      } else {
        std::snprintf(buf, sizeof buf, " %14s", "-");
      }
      out += buf;
      if (with_delta) {
        if (v && base) {
          std::snprintf(buf, sizeof buf, " %+9.2f", *v - *base);
        } else {
          std::snprintf(buf, sizeof buf, " %9s", "-");
        }
        out += buf;
      }
    };
    auto value_of = [](const RankingReport& r, Structure s) -> std::optional<double> {
      auto it = r.structures.find(s);
      if (it == r.structures.end()) return std::nullopt;
      return 100.0 * it->second.mrr;
    };
    for (Structure s : rows) {
      std::snprintf(buf, sizeof buf, "%-10s", std::string(structure_name(s)).c_str());
      out += buf;
      const auto base = value_of(reports[0].second, s);
      for (std::size_t m = 0; m < reports.size(); ++m) {
        cell(value_of(reports[m].second, s), base, m > 0);
      }
      out += '\n';
    }
    const std::pair<const char*, std::optional<double> (RankingReport::*)() const> means[] = {
        {"avg_epfo", &RankingReport::epfo_mean}, {"avg_neg", &RankingReport::negation_mean}};
    for (const auto& [label, fn] : means) {
      const auto base = (reports[0].second.*fn)();
      bool any = false;
      for (const auto& entry : reports) any = any || (entry.second.*fn)().has_value();
      if (!any) continue;
      std::snprintf(buf, sizeof buf, "%-10s", label);
      out += buf;
      for (std::size_t m = 0; m < reports.size(); ++m) {
        cell((reports[m].second.*fn)(), base, m > 0);
      }
      out += '\n';
    }
    return out;
  }
};

inline AblationTable ablation_table(
    const std::vector<std::pair<std::string, RankingReport>>& reports) {
  return AblationTable{reports};
}

}  // namespace pathq

#endif  // PATHQ_EVALUATION_HPP_
