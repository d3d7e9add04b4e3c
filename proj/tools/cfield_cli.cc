/*
 * Copyright 2026 The Concept Field Authors.
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

// cfield: command-line front end over the C API.
//
// Every command prints one JSON summary line on stdout. Bulk artifacts
// (JSONL / CSV) are written under --out-dir when it is given. Errors are a
// single JSON line on stderr with a nonzero exit status: 2 for usage and
// input parse errors, 1 otherwise.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfield/cfield.h"
#include "json.hpp"

namespace {

using nlohmann::json;

// Failure carrying the status code of the call that produced it.
struct CommandError {
  cf_status status;
  std::string message;
  int64_t location;
};

void Check(cf_status status) {
  if (status != CF_OK) throw CommandError{status, cf_last_error(), cf_last_error_location()};
}

[[noreturn]] void Usage(const std::string& message) {
  throw CommandError{CF_ERR_PARAMETER, message, -1};
}

// Owns a string handed out by the library.
class LibString {
 public:
  LibString() = default;
  ~LibString() { cf_string_free(p_); }
  LibString(const LibString&) = delete;
  LibString& operator=(const LibString&) = delete;

  char** out() { return &p_; }
  bool empty() const { return p_ == nullptr; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

 private:
  char* p_ = nullptr;
};

struct StoreDeleter {
  void operator()(cf_store* s) const { cf_store_destroy(s); }
};
using StorePtr = std::unique_ptr<cf_store, StoreDeleter>;

struct Options {
  std::vector<std::string> shards;
  std::string out_dir;
  uint64_t seed = 0;

  cf_field_params field{};
  cf_triage_params triage{};
  std::string mode = "hallucination";

  CLI::Option* top_n = nullptr;
  CLI::Option* d_max = nullptr;
  CLI::Option* idw_p = nullptr;
  CLI::Option* epsilon = nullptr;
  CLI::Option* sigma_min = nullptr;
  CLI::Option* top_n_zeta = nullptr;
  CLI::Option* min_support = nullptr;
};

bool Given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

// Field parameters: `base` overridden by every explicitly given flag.
cf_field_params FieldParams(const Options& o, cf_field_params base) {
  if (Given(o.top_n)) base.top_n = o.field.top_n;
  if (Given(o.d_max)) base.d_max = o.field.d_max;
  if (Given(o.idw_p)) base.p = o.field.p;
  if (Given(o.epsilon)) base.epsilon = o.field.epsilon;
  if (Given(o.sigma_min)) base.sigma_min = o.field.sigma_min;
  if (Given(o.top_n_zeta)) base.top_n_zeta = o.field.top_n_zeta;
  if (Given(o.min_support)) base.min_support = o.field.min_support;
  return base;
}

cf_field_params DefaultFieldParams(const Options& o) {
  cf_field_params base;
  cf_field_params_default(&base);
  return FieldParams(o, base);
}

cf_triage_params TriageParams(const Options& o) {
  cf_triage_params t = o.triage;
  t.mode = o.mode == "novelty" ? CF_MODE_NOVELTY : CF_MODE_HALLUCINATION;
  return t;
}

StorePtr OpenStore(const Options& o) {
  if (o.shards.empty()) Usage("at least one --shard is required");
  cf_store* raw = nullptr;
  Check(cf_store_create(&raw));
  StorePtr store(raw);
  for (const std::string& path : o.shards) Check(cf_store_load_shard(store.get(), path.c_str(), nullptr));
  return store;
}

std::vector<double> ParseVector(const std::string& text, const char* flag) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    Usage(std::string(flag) + " must be a JSON array of numbers");
  }
  if (!j.is_array() || j.empty()) Usage(std::string(flag) + " must be a non-empty JSON array");
  std::vector<double> out;
  for (const json& x : j) {
    if (!x.is_number()) Usage(std::string(flag) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void WriteArtifact(const Options& o, const std::string& name, const std::string& content) {
  if (o.out_dir.empty()) return;
  std::filesystem::create_directories(o.out_dir);
  const std::string path = (std::filesystem::path(o.out_dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw CommandError{CF_ERR_IO, "cannot write " + path, -1};
}

std::vector<json> ParseLines(const std::string& jsonl) {
  std::vector<json> out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

void Print(const json& j) { std::cout << j.dump() << "\n"; }

// ---- commands -------------------------------------------------------------

struct BuildArgs {
  std::string input;
  std::string out;
  std::string shard_key;
};

json ShardSummary(const cf_store* store, uint32_t id, const std::string& path) {
  uint32_t dim = 0;
  uint64_t records = 0, sequences = 0;
  Check(cf_store_shard_info(store, id, &dim, &records, &sequences));
  return {{"path", path}, {"dim", dim}, {"records", records}, {"sequences", sequences}};
}

void RunBuild(const Options&, const BuildArgs& a) {
  cf_store* raw = nullptr;
  Check(cf_store_create(&raw));
  StorePtr store(raw);
  json shards = json::array();
  uint64_t records = 0, sequences = 0;
  auto save = [&](uint32_t id, const std::string& path, const std::string& ids) {
    Check(cf_store_save_shard(store.get(), id, path.c_str()));
    std::ofstream map(path + ".ids.json", std::ios::binary);
    map << ids << "\n";
    if (!map) throw CommandError{CF_ERR_IO, "cannot write " + path + ".ids.json", -1};
    json s = ShardSummary(store.get(), id, path);
    records += s["records"].get<uint64_t>();
    sequences += s["sequences"].get<uint64_t>();
    return s;
  };
  if (a.shard_key.empty()) {
    LibString ids;
    uint32_t id = 0;
    Check(cf_store_ingest_jsonl(store.get(), a.input.c_str(), &id, ids.out()));
    shards.push_back(save(id, a.out, ids.str()));
  } else {
    LibString keys, maps;
    uint32_t first = 0;
    size_t n = 0;
    Check(cf_store_ingest_jsonl_keyed(store.get(), a.input.c_str(), a.shard_key.c_str(), &first,
                                      &n, keys.out(), maps.out()));
    const json key_values = json::parse(keys.str());
    const json id_maps = json::parse(maps.str());
    const std::filesystem::path base(a.out);
    for (size_t i = 0; i < n; ++i) {
      std::filesystem::path path = base;
      path.replace_filename(base.stem().string() + "-" + std::to_string(i) +
                            base.extension().string());
      json s = save(first + static_cast<uint32_t>(i), path.string(), id_maps[i].dump());
      s["key"] = key_values[i];
      shards.push_back(std::move(s));
    }
  }
  Print({{"shards", shards}, {"records", records}, {"sequences", sequences}});
}

struct QueryArgs {
  std::string vector;
  size_t k = 10;
  std::string metric = "l2";
};

void RunQuery(const Options& o, const QueryArgs& a) {
  StorePtr store = OpenStore(o);
  const std::vector<double> q = ParseVector(a.vector, "--vector");
  const double d_max =
      Given(o.d_max) ? o.field.d_max : std::numeric_limits<double>::infinity();
  std::vector<cf_neighbor> hits(a.k);
  size_t n = 0;
  Check(cf_knn(store.get(), q.data(), q.size(), a.k,
               a.metric == "cosine" ? CF_METRIC_COSINE : CF_METRIC_L2, d_max, hits.data(), &n));
  json out = json::array();
  for (size_t i = 0; i < n; ++i) {
    uint32_t seq = 0, pos = 0;
    int has_delta = 0;
    Check(cf_store_get_record(store.get(), hits[i].ref, nullptr, nullptr, &has_delta, &seq, &pos));
    out.push_back({{"shard", hits[i].ref.shard},
                   {"index", hits[i].ref.index},
                   {"seq_id", seq},
                   {"position", pos},
                   {"has_delta", has_delta != 0},
                   {"distance", hits[i].distance}});
  }
  Print({{"metric", a.metric}, {"neighbors", out}});
}

struct ScoreArgs {
  std::string pairs;
};

void RunScore(const Options& o, const ScoreArgs& a) {
  StorePtr store = OpenStore(o);
  const cf_field_params field = DefaultFieldParams(o);
  const cf_triage_params triage = TriageParams(o);
  LibString outcomes, metrics;
  Check(cf_run_score(store.get(), a.pairs.c_str(), &field, &triage, outcomes.out(),
                     metrics.out()));
  WriteArtifact(o, "outcomes.jsonl", outcomes.str());
  if (!metrics.empty()) WriteArtifact(o, "metrics.json", metrics.str() + "\n");
  json labels = {{"Positive", 0}, {"Negative", 0}, {"Unsure", 0}, {"Rejected", 0}};
  const std::vector<json> lines = ParseLines(outcomes.str());
  for (const json& line : lines) {
    labels[line["label"].get<std::string>()] = labels[line["label"].get<std::string>()].get<int>() + 1;
  }
  Print({{"pairs", lines.size()},
         {"labels", labels},
         {"metrics", metrics.empty() ? json(nullptr) : json::parse(metrics.str())}});
}

struct EvaluateArgs {
  std::string pairs;
  std::string method = "all";
};

void RunEvaluate(const Options& o, const EvaluateArgs& a) {
  StorePtr store = OpenStore(o);
  const cf_field_params field = DefaultFieldParams(o);
  const cf_triage_params triage = TriageParams(o);
  json methods = json::object();
  auto record = [&](const std::string& name, LibString& lines, LibString& metrics) {
    if (metrics.empty()) Usage("evaluate needs labelled pairs");
    WriteArtifact(o, name + ".jsonl", lines.str());
    methods[name] = json::parse(metrics.str());
  };
  if (a.method == "all" || a.method == "field") {
    LibString lines, metrics;
    Check(cf_run_score(store.get(), a.pairs.c_str(), &field, &triage, lines.out(),
                       metrics.out()));
    record("field", lines, metrics);
  }
  const std::pair<const char*, cf_baseline> baselines[] = {
      {"vsdb-top1-l2", CF_BASELINE_VSDB_TOP1_L2},
      {"vsdb-top1-cos", CF_BASELINE_VSDB_TOP1_COS},
      {"vdb-pair-cos", CF_BASELINE_VDB_PAIR_COS}};
  for (const auto& [name, method] : baselines) {
    if (a.method != "all" && a.method != name) continue;
    LibString lines, metrics;
    Check(cf_run_baseline(store.get(), a.pairs.c_str(), method, &triage, lines.out(),
                          metrics.out()));
    record(name, lines, metrics);
  }
  WriteArtifact(o, "evaluation.json", methods.dump() + "\n");
  Print({{"methods", methods}});
}

struct SweepArgs {
  std::string scores;
  std::vector<double> lows;
  std::vector<double> highs;
};

void RunSweep(const Options& o, const SweepArgs& a) {
  if (a.lows.size() != a.highs.size()) Usage("--low and --high need the same number of values");
  const bool custom = !a.lows.empty();
  LibString csv, summary;
  Check(cf_run_sweep(a.scores.c_str(), custom ? a.lows.data() : nullptr,
                     custom ? a.highs.data() : nullptr, a.lows.size(),
                     TriageParams(o).mode, csv.out(), summary.out()));
  WriteArtifact(o, "sweep.csv", csv.str());
  Print(json::parse(summary.str()));
}

struct CalibrateArgs {
  std::string anchors;
  size_t n_anchors = 200;
  double train_fraction = 0.7;
  bool sampling_error = false;
};

void RunCalibrate(const Options& o, const CalibrateArgs& a) {
  StorePtr store = OpenStore(o);
  const cf_field_params field = DefaultFieldParams(o);
  LibString reports, summary;
  Check(cf_run_calibrate(store.get(), &field, a.anchors.empty() ? nullptr : a.anchors.c_str(),
                         a.n_anchors, a.train_fraction, o.seed, a.sampling_error ? 1 : 0,
                         reports.out(), summary.out()));
  WriteArtifact(o, "calibration.jsonl", reports.str());
  Print(json::parse(summary.str()));
}

struct WalkArgs {
  std::string start;
  size_t steps = 20;
};

void RunWalk(const Options& o, const WalkArgs& a) {
  StorePtr store = OpenStore(o);
  const cf_field_params field = DefaultFieldParams(o);
  const std::vector<double> start = ParseVector(a.start, "--start");
  LibString csv;
  Check(cf_run_walk(store.get(), start.data(), start.size(), a.steps, &field, csv.out()));
  WriteArtifact(o, "walk.csv", csv.str());
  // Last CSV row: step,significance,status,x0,x1,...
  std::istringstream in(csv.str());
  std::string line, last;
  size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    last = line;
    ++rows;
  }
  std::vector<std::string> cells;
  std::stringstream cs(last);
  for (std::string cell; std::getline(cs, cell, ',');) cells.push_back(cell);
  json point = json::array();
  for (size_t i = 3; i < cells.size(); ++i) point.push_back(std::stod(cells[i]));
  Print({{"points", rows},
         {"moves", rows == 0 ? 0 : rows - 1},
         {"final_status", cells.size() > 2 ? cells[2] : ""},
         {"final_point", point}});
}

struct GeometryArgs {
  size_t clusters = 8;
  size_t min_size = 2;
  std::string rank_by = "divergence-max";
};

void RunGeometry(const Options& o, const GeometryArgs& a) {
  StorePtr store = OpenStore(o);
  cf_rank_by by = CF_RANK_DIVERGENCE_MAX;
  if (a.rank_by == "divergence-min") by = CF_RANK_DIVERGENCE_MIN;
  if (a.rank_by == "circulation-max") by = CF_RANK_CIRCULATION_MAX;
  LibString lines;
  Check(cf_run_geometry(store.get(), a.clusters, a.min_size, o.seed, by, lines.out()));
  WriteArtifact(o, "clusters.jsonl", lines.str());
  json ranked = json::array();
  for (json& j : ParseLines(lines.str())) ranked.push_back(std::move(j));
  Print({{"rank_by", a.rank_by}, {"clusters", ranked}});
}

struct BallisticsArgs {
  double theta = CF_DEFAULT_QUERY_THETA;
  double drag = CF_DEFAULT_DRAG_COEFF;
  size_t n_trajectories = 1000;
  double dt = 0.001;
  bool corpus_csv = false;
};

void RunBallistics(const Options& o, const BallisticsArgs& a) {
  cf_ballistics_params params;
  cf_ballistics_params_default(&params);
  params.n_trajectories = a.n_trajectories;
  params.dt = a.dt;
  cf_field_params base;
  cf_ballistics_field_params(&base);
  const cf_field_params field = FieldParams(o, base);
  cf_ballistics_outputs out{};
  Check(cf_run_ballistics(&params, &field, a.theta, a.drag,
                          a.corpus_csv && !o.out_dir.empty() ? 1 : 0, &out));
  struct Free {
    cf_ballistics_outputs* p;
    ~Free() { cf_ballistics_outputs_free(p); }
  } guard{&out};
  WriteArtifact(o, "zeta_clean.csv", out.zeta_clean_csv);
  WriteArtifact(o, "zeta_drag.csv", out.zeta_drag_csv);
  WriteArtifact(o, "query_clean.csv", out.query_clean_csv);
  WriteArtifact(o, "query_drag.csv", out.query_drag_csv);
  if (out.corpus_csv != nullptr) WriteArtifact(o, "corpus.csv", out.corpus_csv);
  Print(json::parse(out.summary_json));
}

void EmitError(cf_status status, const std::string& message, int64_t location) {
  json j = {{"error", cf_status_name(status)}, {"code", static_cast<int>(status)},
            {"message", message}};
  j["location"] = location >= 0 ? json(location) : json(nullptr);
  if (location >= 0 && (status == CF_ERR_PARSE || status == CF_ERR_DIMENSION ||
                        status == CF_ERR_EMPTY_SEQUENCE)) {
    j["line"] = location;
    j["message"] = message + " (line " + std::to_string(location) + ")";
  } else if (location >= 0 && status == CF_ERR_FORMAT) {
    j["message"] = message + " (byte " + std::to_string(location) + ")";
  }
  std::cerr << j.dump() << std::endl;
}

int ExitCode(cf_status status) {
  return status == CF_ERR_PARSE || status == CF_ERR_PARAMETER ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept field toolkit: corpus stores, drift fields and triage", "cfield"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file using the long flag names");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options o;
  cf_field_params_default(&o.field);
  cf_triage_params_default(&o.triage);

  app.add_option("--shard", o.shards, "shard file to load (repeatable)");
  app.add_option("--out-dir", o.out_dir, "directory for JSONL/CSV artifacts");
  app.add_option("--seed", o.seed, "seed for every randomized step")->capture_default_str();
  o.top_n = app.add_option("--top-n", o.field.top_n, "neighbors per field estimate")
                ->capture_default_str();
  o.d_max = app.add_option("--d-max", o.field.d_max, "neighborhood radius")
                ->capture_default_str();
  o.idw_p = app.add_option("--idw-p", o.field.p, "inverse-distance power")->capture_default_str();
  o.epsilon = app.add_option("--epsilon", o.field.epsilon, "distance offset in the weights")
                  ->capture_default_str();
  o.sigma_min = app.add_option("--sigma-min", o.field.sigma_min, "deviation floor")
                    ->capture_default_str();
  o.top_n_zeta = app.add_option("--top-n-zeta", o.field.top_n_zeta, "coordinates scored")
                     ->capture_default_str();
  o.min_support = app.add_option("--min-support", o.field.min_support,
                                 "minimum contributing neighbors")
                      ->capture_default_str();
  app.add_option("--zeta-low", o.triage.zeta_low, "lower triage threshold")->capture_default_str();
  app.add_option("--zeta-high", o.triage.zeta_high, "upper triage threshold")
      ->capture_default_str();
  app.add_option("--mode", o.mode, "hallucination | novelty")
      ->check(CLI::IsMember({"hallucination", "novelty"}))
      ->capture_default_str();

  BuildArgs build;
  CLI::App* cmd_build = app.add_subcommand("build", "ingest sequences JSONL into a shard file");
  cmd_build->add_option("--input", build.input, "sequences JSONL")->required();
  cmd_build->add_option("--out", build.out, "output shard path")->required();
  cmd_build->add_option("--shard-key", build.shard_key,
                        "split into one shard per value of this string field");

  QueryArgs query;
  CLI::App* cmd_query = app.add_subcommand("query", "exact k nearest neighbors of a vector");
  cmd_query->add_option("--vector", query.vector, "JSON array")->required();
  cmd_query->add_option("--k", query.k)->capture_default_str();
  cmd_query->add_option("--metric", query.metric)
      ->check(CLI::IsMember({"l2", "cosine"}))
      ->capture_default_str();

  ScoreArgs score;
  CLI::App* cmd_score = app.add_subcommand("score", "triage sentence pairs");
  cmd_score->add_option("--pairs", score.pairs, "pairs JSONL")->required();

  EvaluateArgs evaluate;
  CLI::App* cmd_evaluate =
      app.add_subcommand("evaluate", "compare the field score against the baselines");
  cmd_evaluate->add_option("--pairs", evaluate.pairs, "labelled pairs JSONL")->required();
  cmd_evaluate->add_option("--method", evaluate.method)
      ->check(CLI::IsMember({"all", "field", "vsdb-top1-l2", "vsdb-top1-cos", "vdb-pair-cos"}))
      ->capture_default_str();

  SweepArgs sweep;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "threshold sweep and AURC");
  cmd_sweep->add_option("--scores", sweep.scores, "scored examples JSONL")->required();
  cmd_sweep->add_option("--low", sweep.lows, "zeta_low of each grid cell");
  cmd_sweep->add_option("--high", sweep.highs, "zeta_high of each grid cell");

  CalibrateArgs calibrate;
  CLI::App* cmd_calibrate = app.add_subcommand("calibrate", "empirical coverage test");
  cmd_calibrate->add_option("--anchors", calibrate.anchors, "anchors JSONL");
  cmd_calibrate->add_option("--n-anchors", calibrate.n_anchors,
                            "corpus records sampled as anchors (0 = all)")
      ->capture_default_str();
  cmd_calibrate->add_option("--train-fraction", calibrate.train_fraction)->capture_default_str();
  cmd_calibrate->add_flag("--sampling-error", calibrate.sampling_error,
                          "widen tolerances by the binomial error bar");

  WalkArgs walk;
  CLI::App* cmd_walk = app.add_subcommand("walk", "follow the field from a start point");
  cmd_walk->add_option("--start", walk.start, "JSON array")->required();
  cmd_walk->add_option("--steps", walk.steps)->capture_default_str();

  GeometryArgs geometry;
  CLI::App* cmd_geometry = app.add_subcommand("geometry", "cluster divergence and circulation");
  cmd_geometry->add_option("--clusters", geometry.clusters)->capture_default_str();
  cmd_geometry->add_option("--min-size", geometry.min_size)->capture_default_str();
  cmd_geometry->add_option("--rank-by", geometry.rank_by)
      ->check(CLI::IsMember({"divergence-max", "divergence-min", "circulation-max"}))
      ->capture_default_str();

  BallisticsArgs ballistics;
  CLI::App* cmd_ballistics = app.add_subcommand("ballistics", "projectile toy experiment");
  cmd_ballistics->add_option("--theta", ballistics.theta, "query launch angle (degrees)")
      ->capture_default_str();
  cmd_ballistics->add_option("--drag", ballistics.drag, "quadratic drag of the drag query")
      ->capture_default_str();
  cmd_ballistics->add_option("--n-trajectories", ballistics.n_trajectories)
      ->capture_default_str();
  cmd_ballistics->add_option("--dt", ballistics.dt)->capture_default_str();
  cmd_ballistics->add_flag("--corpus-csv", ballistics.corpus_csv,
                           "also write every corpus trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    EmitError(CF_ERR_PARAMETER, e.what(), -1);
    return 2;
  }

  try {
    if (*cmd_build) RunBuild(o, build);
    if (*cmd_query) RunQuery(o, query);
    if (*cmd_score) RunScore(o, score);
    if (*cmd_evaluate) RunEvaluate(o, evaluate);
    if (*cmd_sweep) RunSweep(o, sweep);
    if (*cmd_calibrate) RunCalibrate(o, calibrate);
    if (*cmd_walk) RunWalk(o, walk);
    if (*cmd_geometry) RunGeometry(o, geometry);
    if (*cmd_ballistics) RunBallistics(o, ballistics);
  } catch (const CommandError& e) {
    EmitError(e.status, e.message, e.location);
    return ExitCode(e.status);
  } catch (const std::exception& e) {
    EmitError(CF_ERR_INTERNAL, e.what(), -1);
    return 1;
  }
  std::cout.flush();
  return 0;
}
