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

// Command-line entry point: ingest, sample, oracle, train, eval, ablate,
// gradcheck.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathq/pathq.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

int run_ingest(const fs::path& train, const fs::path& valid, const fs::path& test,
               const fs::path& out) {
  const auto split = pathq::load_split(train, valid, test);
  pathq::save_split_dir(split, out);
  const auto& r = split.report;
  const auto dups = r.train_duplicates + r.valid_duplicates + r.test_duplicates;
  if (dups) std::cerr << "warning: " << dups << " duplicate triple(s) ignored\n";
  std::cout << r.to_json().dump(2) << '\n';
  return 0;
}

int run_sample(const Common& common, const fs::path& split_dir, const fs::path& config,
               const fs::path& out, const std::optional<std::string>& stage) {
  const auto split = pathq::load_split_dir(split_dir);
  auto kv = pathq::KeyValueConfig::load(config);
  if (stage) kv.set("stage", *stage);
  if (common.seed) kv.set("seed", std::to_string(*common.seed));
  const auto cfg = pathq::SamplerConfig::from(kv);
  for (const auto& k : kv.unused_keys()) std::cerr << "warning: unknown config key '" << k << "'\n";
  std::vector<pathq::QueryInstance> all;
  for (auto s : pathq::kAllStructures) {
    auto result = pathq::sample_queries(split, s, cfg);
    if (result.shortfall()) {
      std::cerr << "warning: " << pathq::structure_name(s) << ": sampled "
                << result.instances.size() << " of " << result.requested << " after "
                << result.attempts << " attempts\n";
    }
    for (auto& q : result.instances) all.push_back(std::move(q));
  }
  pathq::write_instances(out, all,
                         json{{"seed", cfg.seed},
                              {"stage", pathq::stage_name(cfg.stage)},
                              {"max_answers", cfg.max_answers}});
  std::cerr << "wrote " << all.size() << " queries to " << out.string() << '\n';
  return 0;
}

int run_oracle(const fs::path& split_dir, const fs::path& queries, const std::string& stage_s) {
  const auto split = pathq::load_split_dir(split_dir);
  const auto stage = pathq::parse_stage(stage_s);
  const auto instances = pathq::read_instances(queries);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto q = instances[i];
    pathq::fill_answers(q, split);
    const bool matches = (!instances[i].answers_train || *instances[i].answers_train == *q.answers_train) &&
                         (!instances[i].answers_valid || *instances[i].answers_valid == *q.answers_valid) &&
                         (!instances[i].answers_test || *instances[i].answers_test == *q.answers_test);
    if (!matches) {
      ++mismatches;
      std::cerr << "mismatch: query " << i << " (" << q.describe() << ")\n";
    }
    std::cout << json{{"index", i},
                      {"structure", pathq::structure_name(q.structure)},
                      {"answers", q.answers(stage)},
                      {"non_trivial", pathq::non_trivial_answers(q, stage)},
                      {"matches_file", matches}}
                     .dump()
              << '\n';
  }
  std::cerr << instances.size() << " queries, " << mismatches << " mismatch(es)\n";
  return mismatches ? 2 : 0;
}

int run_train(const Common& common, const fs::path& split_dir, const fs::path& queries,
              const fs::path& config, const fs::path& out,
              const std::optional<fs::path>& valid_queries,
              const std::optional<fs::path>& metrics_path) {
  const auto split = pathq::load_split_dir(split_dir);
  auto kv = pathq::KeyValueConfig::load(config);
  if (common.seed) kv.set("seed", std::to_string(*common.seed));
  const auto cfg = pathq::TrainConfig::from(kv);
  for (const auto& k : kv.unused_keys()) std::cerr << "warning: unknown config key '" << k << "'\n";

  const auto allowed = pathq::regime_structures(cfg.regime);
  auto keep = [&](std::vector<pathq::QueryInstance> in, const char* what) {
    std::vector<pathq::QueryInstance> kept;
    std::size_t dropped = 0;
    for (auto& q : in) {
      if (std::find(allowed.begin(), allowed.end(), q.structure) != allowed.end()) {
        kept.push_back(std::move(q));
      } else {
        ++dropped;
      }
    }
    if (dropped) {
      std::cerr << "note: skipped " << dropped << ' ' << what << " quer"
                << (dropped == 1 ? "y" : "ies") << " outside regime "
                << pathq::regime_name(cfg.regime) << '\n';
    }
    return kept;
  };
  const auto train_set = keep(pathq::read_instances(queries), "training");
  std::vector<pathq::QueryInstance> valid_set;
  if (valid_queries) valid_set = keep(pathq::read_instances(*valid_queries), "validation");

  const fs::path metrics_file = metrics_path ? *metrics_path : fs::path(out.string() + ".metrics.jsonl");
  std::ofstream metrics(metrics_file);
  if (!metrics) throw pathq::DataError("cannot write " + metrics_file.string());
  pathq::TrainOutputs outputs{out, &metrics};
  const auto result = pathq::train<float>(split, train_set, valid_set, cfg, outputs);
  std::cerr << "checkpoint " << out.string() << " (step " << result.best_step;
  if (result.best_valid_mrr) std::cerr << ", valid MRR " << *result.best_valid_mrr;
  std::cerr << "), metrics " << metrics_file.string() << '\n';
  return 0;
}

pathq::QueryEncoder<float> load_model(const fs::path& path) {
  return pathq::QueryEncoder<float>::from_checkpoint(pathq::load_checkpoint(path));
}

int run_eval(const Common& common, const fs::path& ckpt, const fs::path& queries,
             const std::string& stage_s, const std::optional<fs::path>& json_out) {
  const auto stage = pathq::parse_stage(stage_s);
  const auto model = load_model(ckpt);
  const auto instances = pathq::read_instances(queries);
  const auto report = pathq::mrr(instances, pathq::scorer_for(model), stage, common.threads);
  std::cout << report.to_text();
  auto j = report.to_json();
  if (json_out) {
    std::ofstream out(*json_out);
    if (!out) throw pathq::DataError("cannot write " + json_out->string());
    out << j.dump(2) << '\n';
  } else {
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int run_ablate(const Common& common, const std::vector<fs::path>& ckpts, const fs::path& queries,
               const std::string& stage_s, const std::optional<fs::path>& json_out) {
  const auto stage = pathq::parse_stage(stage_s);
  std::vector<pathq::QueryEncoder<float>> models;
  for (const auto& c : ckpts) models.push_back(load_model(c));
  std::vector<std::pair<std::string, const pathq::QueryEncoder<float>*>> named;
  for (std::size_t i = 0; i < models.size(); ++i) {
    named.emplace_back(ckpts[i].stem().string(), &models[i]);
  }
  const auto instances = pathq::read_instances(queries);
  const auto table = pathq::ablation_table(named, instances, stage, common.threads);
  std::cout << table.to_text();
  if (json_out) {
    std::ofstream out(*json_out);
    if (!out) throw pathq::DataError("cannot write " + json_out->string());
    out << table.to_json().dump(2) << '\n';
  }
  return 0;
}

int run_gradcheck(const Common& common, std::size_t draws) {
  const auto results = pathq::run_gradcheck_suite(common.seed.value_or(7), draws);
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::printf("%-4s %-48s checked=%-5zu max_rel_err=%.3e %s\n", r.passed ? "ok" : "FAIL",
                r.name.c_str(), r.checked, r.max_rel_error, r.worst.c_str());
    failed += !r.passed;
  }
  std::printf("%zu case(s), %zu failed\n", results.size(), failed);
  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathq: path/fork query encoding for logical queries over knowledge graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for every random choice");
  app.add_option("--threads", common.threads, "Worker threads for evaluation")
      ->check(CLI::PositiveNumber);

  fs::path train_f, valid_f, test_f, out, split_dir, config, queries, ckpt;
  std::optional<fs::path> valid_queries, metrics_path, json_out;
  std::optional<std::string> sample_stage;
  std::string stage = "test";
  std::vector<fs::path> ckpts;
  std::size_t draws = 3;

  auto* ingest = app.add_subcommand("ingest", "Load TSV edge files into a split directory");
  ingest->add_option("--train", train_f)->required();
  ingest->add_option("--valid", valid_f)->required();
  ingest->add_option("--test", test_f)->required();
  ingest->add_option("--out", out)->required();

  auto* sample = app.add_subcommand("sample", "Sample grounded queries with oracle answers");
  sample->add_option("--split", split_dir)->required();
  sample->add_option("--config", config)->required();
  sample->add_option("--out", out)->required();
  sample->add_option("--stage", sample_stage, "Overrides the config's stage");

  auto* oracle = app.add_subcommand("oracle", "Recompute answer sets and diff against a query file");
  oracle->add_option("--split", split_dir)->required();
  oracle->add_option("--queries", queries)->required();
  oracle->add_option("--stage", stage);

  auto* train = app.add_subcommand("train", "Train a model and write the best checkpoint");
  train->add_option("--split", split_dir)->required();
  train->add_option("--queries", queries)->required();
  train->add_option("--config", config)->required();
  train->add_option("--out", out)->required();
  train->add_option("--valid-queries", valid_queries);
  train->add_option("--metrics", metrics_path);

  auto* eval = app.add_subcommand("eval", "Filtered MRR of a checkpoint");
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--queries", queries)->required();
  eval->add_option("--stage", stage);
  eval->add_option("--json", json_out);

  auto* ablate = app.add_subcommand("ablate", "Side-by-side MRR of several checkpoints");
  ablate->add_option("--ckpt", ckpts)->required();
  ablate->add_option("--queries", queries)->required();
  ablate->add_option("--stage", stage);
  ablate->add_option("--json", json_out);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  gradcheck->add_option("--draws", draws, "Random draws per case")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count()) common.seed = seed_value;

  try {
    if (*ingest) return run_ingest(train_f, valid_f, test_f, out);
    if (*sample) return run_sample(common, split_dir, config, out, sample_stage);
    if (*oracle) return run_oracle(split_dir, queries, stage);
    if (*train) return run_train(common, split_dir, queries, config, out, valid_queries, metrics_path);
    if (*eval) return run_eval(common, ckpt, queries, stage, json_out);
    if (*ablate) return run_ablate(common, ckpts, queries, stage, json_out);
    if (*gradcheck) return run_gradcheck(common, draws);
  } catch (const pathq::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const pathq::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const pathq::ShapeError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
