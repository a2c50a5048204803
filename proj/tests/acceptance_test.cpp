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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "support/test_support.hpp"

namespace {

using namespace pathq;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<QueryInstance> sample(const GraphSplit& split, const std::vector<Structure>& structures,
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

// Groundings on toy graphs shared by the oracle and decomposition checks:
// sampled (non-empty) ones on toy30 plus uniformly random ones on a random
// 40-entity graph.
struct GroundedCase {
  const KnowledgeGraph* graph;
  Structure structure;
  QueryTree tree;
};

std::vector<GroundedCase> grounded_cases(const GraphSplit& toy30, const KnowledgeGraph& random_kg) {
  std::vector<GroundedCase> out;
  for (const auto& q : sample(toy30, {kAllStructures.begin(), kAllStructures.end()}, Stage::kTest, 10, 5)) {
    out.push_back({&toy30.test, q.structure, q.tree});
  }
  std::mt19937_64 rng(77);
  for (Structure s : kAllStructures) {
    for (int k = 0; k < 10; ++k) {
      out.push_back({&random_kg, s, testing::random_grounding(s, random_kg.entity_count(),
                                                              random_kg.relation_count(), rng)});
    }
  }
  return out;
}

Outcome oracle_equivalence(const std::vector<GroundedCase>& cases) {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0;
  std::map<Structure, std::size_t> per;
  for (const auto& c : cases) {
    ++per[c.structure];
    if (answer_set(*c.graph, c.tree) != testing::brute_force_answers(*c.graph, c.tree)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const bool ok = cases.size() >= 200 && per.size() == 14 && mismatches == 0 && secs < 60;
  return {ok, fmt("%zu groundings over %zu templates, %zu mismatches, %.2fs (need >=200, 14, 0, <60s)",
                  cases.size(), per.size(), mismatches, secs)};
}

Outcome decomposition_soundness(const std::vector<GroundedCase>& cases) {
  const std::map<Structure, std::pair<std::size_t, std::size_t>> counts = {
      {Structure::k1p, {1, 0}},  {Structure::k2p, {1, 0}},  {Structure::k3p, {1, 0}},
      {Structure::k2i, {2, 1}},  {Structure::k3i, {3, 2}},  {Structure::kIp, {3, 1}},
      {Structure::kPi, {2, 1}},  {Structure::k2u, {1, 0}},  {Structure::kUp, {1, 0}},
      {Structure::k2in, {2, 1}}, {Structure::k3in, {3, 2}}, {Structure::kInp, {3, 1}},
      {Structure::kPin, {2, 1}}, {Structure::kPni, {2, 1}}};
  std::size_t set_mismatch = 0, count_mismatch = 0;
  for (const auto& c : cases) {
    const auto disjuncts = to_dnf(c.tree);
    const bool is_union = c.structure == Structure::k2u || c.structure == Structure::kUp;
    if (disjuncts.size() != (is_union ? 2u : 1u)) ++count_mismatch;
    EntitySet executed;
    for (const auto& d : disjuncts) {
      const auto plan = decompose(d);
      const auto [paths, forks] = counts.at(c.structure);
      if (plan.path_count() != paths || plan.fork_count() != forks) ++count_mismatch;
      executed = set_union(executed, execute_plan(*c.graph, plan));
    }
    if (executed != answer_set(*c.graph, c.tree)) ++set_mismatch;
  }
  return {set_mismatch == 0 && count_mismatch == 0,
          fmt("%zu plans executed, %zu answer-set mismatches, %zu step-count mismatches",
              cases.size(), set_mismatch, count_mismatch)};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const std::size_t draws = 20;
  const auto results = run_gradcheck_suite(2024, draws);
  const double secs = seconds_since(t0);
  std::size_t failed = 0;
  double worst = 0;
  std::string worst_name;
  for (const auto& r : results) {
    failed += !r.passed;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
  }
  return {failed == 0 && secs < 120,
          fmt("%zu cases over %zu draws, %zu failed, worst rel err %.2e (%s), %.1fs (need <1e-4, <120s)",
              results.size(), draws, failed, worst, worst_name.c_str(), secs)};
}

Outcome loss_analytics() {
  const double at_margin = margin_loss(12.0, std::vector<double>{12.0}, 12.0).value;
  const double tail = margin_loss(0.0, std::vector<double>{48.0}, 24.0).value;
  const double err1 = std::abs(at_margin - 2 * std::log(2.0));
  const double expected_tail = 2 * std::log1p(std::exp(-24.0));
  const double err2 = std::abs(tail - expected_tail);
  return {err1 < 1e-6 && err2 < 1e-6 && tail < 1e-9,
          fmt("L(gamma,gamma)=%.10f (2ln2 err %.1e); L(0,2gamma;gamma=24)=%.3e (err %.1e, need <1e-9)",
              at_margin, err1, tail, err2)};
}

// Mean over answers of H_N / N, the expected reciprocal rank under a uniformly
// random order of a pool of N candidates, averaged like MRR.
double random_ranking_mrr(const std::vector<QueryInstance>& qs, std::size_t entity_count) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& q : qs) {
    const auto nt = non_trivial_answers(q, Stage::kTest);
    if (nt.empty()) continue;
    const std::size_t pool = 1 + entity_count - q.answers(Stage::kTest).size();
    double h = 0;
    for (std::size_t k = 1; k <= pool; ++k) h += 1.0 / static_cast<double>(k);
    total += h / static_cast<double>(pool);
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

struct OverfitRun {
  Outcome overfit, generalization;
};

OverfitRun overfit_and_generalize(const GraphSplit& toy30) {
  const std::vector<Structure> structures = {Structure::k1p, Structure::k2p, Structure::k2i};
  const auto train_set = sample(toy30, structures, Stage::kTrain, 200, 0);
  const auto test_1p = sample(toy30, {Structure::k1p}, Stage::kTest, 50, 1);
  TrainConfig cfg;
  cfg.d = 32;
  cfg.k1 = 1;
  cfg.dropout = 0.0;
  cfg.max_steps = 5000;
  const auto t0 = Clock::now();
  const auto result = train<float>(toy30, train_set, {}, cfg);
  const double secs = seconds_since(t0);
  const auto report = mrr(train_set, scorer_for(result.model), Stage::kTrain);
  const double mean = *report.mean_over(structures);
  std::string per;
  for (Structure s : structures) {
    per += fmt(" %s=%.1f", std::string(structure_name(s)).c_str(), 100 * report.structures.at(s).mrr);
  }
  OverfitRun out;
  out.overfit = {mean >= 90.0 && secs < 300,
                 fmt("train MRR %.2f (%s ) after %zu steps, %zu instances, %.1fs (need >=90, <300s)", mean,
                     per.c_str(), cfg.max_steps, train_set.size(), secs)};

  const auto test_report = mrr(test_1p, scorer_for(result.model), Stage::kTest);
  const double test_mrr = test_report.structures.count(Structure::k1p)
                              ? test_report.structures.at(Structure::k1p).mrr
                              : 0.0;
  const double random_mrr = random_ranking_mrr(test_1p, toy30.entity_count());
  out.generalization = {!test_1p.empty() && test_mrr > 3 * random_mrr,
                        fmt("1p test MRR %.4f vs random %.4f over %zu queries (need > %.4f)", test_mrr,
                            random_mrr, test_1p.size(), 3 * random_mrr)};
  return out;
}

ModelConfig random_model_config(MaskMode mask, std::uint64_t seed) {
  ModelConfig c;
  c.entity_count = 30;
  c.relation_count = 5;
  c.encoder.d = 16;
  c.encoder.heads = 4;
  c.encoder.d_ffn = 32;
  c.encoder.layers = 2;
  c.encoder.mask = mask;
  c.seed = seed;
  return c;
}

Outcome dnf_exactness(const GraphSplit& toy30) {
  QueryEncoder<double> model(random_model_config(MaskMode::kBidirectional, 3));
  const auto qs = sample(toy30, {Structure::k2u, Structure::kUp}, Stage::kTest, 25, 9);
  std::size_t bad = 0;
  for (const auto& q : qs) {
    const auto emb = model.encode_query(q.tree);
    const auto [anchors, rels] = groundings_of(q.structure, q.tree);
    std::vector<QueryTree> manual;
    if (q.structure == Structure::k2u) {
      manual = {QueryTree::projection(QueryTree::anchor(anchors[0]), rels[0]),
                QueryTree::projection(QueryTree::anchor(anchors[1]), rels[1])};
    } else {
      manual = {QueryTree::projection(QueryTree::projection(QueryTree::anchor(anchors[0]), rels[0]), rels[2]),
                QueryTree::projection(QueryTree::projection(QueryTree::anchor(anchors[1]), rels[1]), rels[2])};
    }
    std::vector<QueryEmbedding<double>> parts;
    for (const auto& m : manual) parts.push_back(model.encode_query(m));
    if (emb.disjuncts.size() != 2 || !(emb.disjuncts[0] == parts[0].disjuncts[0]) ||
        !(emb.disjuncts[1] == parts[1].disjuncts[0])) {
      ++bad;
      continue;
    }
    for (EntityId e = 0; e < 30; ++e) {
      if (model.distance(e, emb) != std::min(model.distance(e, parts[0]), model.distance(e, parts[1]))) {
        ++bad;
        break;
      }
    }
  }
  return {!qs.empty() && bad == 0, fmt("%zu union queries, %zu mismatches", qs.size(), bad)};
}

Outcome mask_mode_contract(const GraphSplit& toy30) {
  std::size_t causal_violations = 0, bidirectional_misses = 0, checks = 0;
  double min_bidirectional = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (MaskMode mode : {MaskMode::kCausal, MaskMode::kBidirectional}) {
      QueryEncoder<double> model(random_model_config(mode, seed));
      const PathQuery path{AnchorStart{static_cast<EntityId>(seed)}, {Project{0}, Project{1}, Negate{}}};
      const auto start = model.entity_embedding(static_cast<EntityId>(seed));
      const auto before = model.encode_path_positions(path, start);
      const auto pooled_before = model.encode_path(path, start);
      // Perturb the last position (the negation token).
      auto& neg = model.parameters().get("embedding/negation").value;
      for (auto& v : neg.values()) v += 0.05;
      const auto after = model.encode_path_positions(path, start);
      const auto pooled_after = model.encode_path(path, start);
      ++checks;
      if (mode == MaskMode::kCausal) {
        for (std::size_t i = 0; i + 1 < before.rows(); ++i) {
          for (std::size_t j = 0; j < before.cols(); ++j) {
            if (before(i, j) != after(i, j)) ++causal_violations;
          }
        }
      } else {
        double diff = 0;
        for (std::size_t j = 0; j < pooled_before.size(); ++j) {
          diff += std::abs(pooled_before[j] - pooled_after[j]);
        }
        double diff0 = 0;
        for (std::size_t j = 0; j < before.cols(); ++j) diff0 += std::abs(before(0, j) - after(0, j));
        min_bidirectional = std::min({min_bidirectional, diff, diff0});
        if (diff <= 1e-8 || diff0 <= 1e-8) ++bidirectional_misses;
      }
    }
  }

  // Harness: one-layer bidirectional and causal models on the toy benchmark.
  const auto train_set = sample(toy30, {Structure::k1p, Structure::k2p, Structure::k2i}, Stage::kTrain, 100, 0);
  const auto eval_set = sample(toy30, {Structure::k1p, Structure::k2p, Structure::k2i, Structure::kIp},
                               Stage::kTest, 30, 1);
  TrainConfig cfg;
  cfg.max_steps = 300;
  cfg.k1 = 1;
  std::vector<QueryEncoder<float>> models;
  for (MaskMode mode : {MaskMode::kBidirectional, MaskMode::kCausal}) {
    cfg.mask = mode;
    models.push_back(train<float>(toy30, train_set, {}, cfg).model);
  }
  const auto table = ablation_table<float>({{"bidirectional", &models[0]}, {"causal", &models[1]}},
                                           eval_set, Stage::kTest);
  bool complete = table.reports.size() == 2;
  for (const auto& [name, r] : table.reports) {
    complete = complete && r.structures.size() == 4 && r.epfo_mean().has_value();
  }
  const double gap = *table.reports[0].second.epfo_mean() - *table.reports[1].second.epfo_mean();
  return {causal_violations == 0 && bidirectional_misses == 0 && complete,
          fmt("%zu models; causal changed outputs: %zu; bidirectional min change %.2e (need >1e-8); "
              "ablate reports complete=%s, bidirectional-causal EPFO gap %+.2f (reported only)",
              checks, causal_violations, min_bidirectional, complete ? "yes" : "no", gap)};
}

Outcome determinism(const GraphSplit& toy30) {
  const auto train_set = sample(toy30, {Structure::k1p, Structure::k2i, Structure::k2in, Structure::kPni},
                                Stage::kTrain, 50, 2);
  const auto valid_set = sample(toy30, {Structure::k1p, Structure::k2in}, Stage::kValid, 20, 3);
  TrainConfig cfg;
  cfg.regime = Regime::kFol10;
  cfg.max_steps = 100;
  cfg.log_interval = 1;
  cfg.valid_interval = 50;
  cfg.seed = 11;
  testing::TempDir dir("acceptance");
  std::ostringstream log_a, log_b;
  train<float>(toy30, train_set, valid_set, cfg, {dir / "a.pfck", &log_a});
  train<float>(toy30, train_set, valid_set, cfg, {dir / "b.pfck", &log_b});
  const auto ck_a = testing::read_file(dir / "a.pfck"), ck_b = testing::read_file(dir / "b.pfck");
  std::size_t lines = 0;
  for (char ch : log_a.str()) lines += ch == '\n';
  const bool ok = log_a.str() == log_b.str() && ck_a == ck_b && !ck_a.empty() && lines >= 100;
  return {ok, fmt("%zu log lines identical=%s, checkpoints (%zu bytes) identical=%s", lines,
                  log_a.str() == log_b.str() ? "yes" : "no", ck_a.size(), ck_a == ck_b ? "yes" : "no")};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(99);
  std::size_t vectors = 0, ranks = 0, mismatches = 0, ties = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> dist(n);
    const int levels = 1 + static_cast<int>(rng() % 8);
    for (auto& v : dist) v = static_cast<double>(static_cast<int>(rng() % levels)) * 0.75;
    EntitySet valid, test;
    for (std::size_t e = 0; e < n; ++e) {
      const auto r = rng() % 6;
      if (r == 0) valid.push_back(static_cast<EntityId>(e));
      if (r <= 1) test.push_back(static_cast<EntityId>(e));
    }
    const auto q = testing::make_instance(Structure::k1p, QueryTree::projection(QueryTree::anchor(0), 0), {},
                                          valid, test);
    const auto nt = non_trivial_answers(q, Stage::kTest);
    if (nt.empty()) continue;
    ++vectors;
    double oracle_mrr = 0;
    for (EntityId a : nt) {
      const double got = rank_entity(a, q, dist, Stage::kTest);
      const double want = testing::sorted_pool_rank(a, dist, test);
      ties += std::floor(want) != want;
      ++ranks;
      if (got != want) ++mismatches;
      oracle_mrr += 1.0 / want;
    }
    oracle_mrr /= static_cast<double>(nt.size());
    if (std::abs(query_mrr(q, dist, Stage::kTest) - oracle_mrr) > 1e-15) ++mismatches;
  }
  return {vectors >= 100 && mismatches == 0 && ties > 0,
          fmt("%zu distance vectors, %zu ranks (%zu mid-rank ties), %zu mismatches", vectors, ranks, ties,
              mismatches)};
}

}  // namespace

int main() {
  const auto toy30 = testing::load_toy("toy30");
  std::mt19937_64 rng(12);
  const auto random_kg = testing::random_graph(40, 4, 240, rng);
  const auto cases = grounded_cases(toy30, random_kg);

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  criteria.emplace_back("oracle equivalence", [&] { return oracle_equivalence(cases); });
  criteria.emplace_back("decomposition soundness", [&] { return decomposition_soundness(cases); });
  criteria.emplace_back("gradient suite", gradient_suite);
  criteria.emplace_back("loss analytics", loss_analytics);
  OverfitRun overfit;
  criteria.emplace_back("overfit sanity", [&] {
    overfit = overfit_and_generalize(toy30);
    return overfit.overfit;
  });
  criteria.emplace_back("generalization floor", [&] { return overfit.generalization; });
  criteria.emplace_back("dnf exactness", [&] { return dnf_exactness(toy30); });
  criteria.emplace_back("mask-mode contract", [&] { return mask_mode_contract(toy30); });
  criteria.emplace_back("determinism", [&] { return determinism(toy30); });
  criteria.emplace_back("metric oracle", metric_oracle);

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s [%zu] %s: %s\n", o.passed ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures ? 1 : 0;
}
