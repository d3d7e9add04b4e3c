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

#include "cfield/cfield.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "cfield/ballistics.h"
#include "cfield/calibrate.h"
#include "cfield/field.h"
#include "cfield/geometry.h"
#include "cfield/index.h"
#include "cfield/io.h"
#include "cfield/store.h"
#include "cfield/triage.h"
#include "json.hpp"

static_assert(CF_DEFAULT_DRAG_COEFF == cfield::kDefaultDragCoeff);
static_assert(CF_DEFAULT_QUERY_THETA == cfield::kDefaultQueryTheta);

struct cf_store {
  std::vector<cfield::Shard> shards;
};

namespace {

using cfield::ErrorCode;

thread_local std::string g_last_error;
thread_local int64_t g_last_location = -1;

cf_status Fail(ErrorCode code, const std::string& message, int64_t location = -1) {
  g_last_error = message;
  g_last_location = location;
  return static_cast<cf_status>(code);
}

// Runs `fn`, translating any exception into a status code.
template <typename Fn>
cf_status Guard(Fn&& fn) {
  try {
    fn();
    return CF_OK;
  } catch (const cfield::Error& e) {
    return Fail(e.code(), e.what(), e.location());
  } catch (const std::bad_alloc&) {
    return Fail(ErrorCode::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return Fail(ErrorCode::kInternal, e.what());
  } catch (...) {
    return Fail(ErrorCode::kInternal, "unknown error");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw cfield::ParameterError(what);
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void SetString(char** out, const std::string& s) {
  if (out != nullptr) *out = Dup(s);
}

cfield::Shard& ShardAt(cf_store* store, uint32_t id) {
  if (id >= store->shards.size()) throw cfield::NotFoundError("unknown shard " + std::to_string(id));
  return store->shards[id];
}

const cfield::Shard& ShardAt(const cf_store* store, uint32_t id) {
  return ShardAt(const_cast<cf_store*>(store), id);
}

uint32_t Append(cf_store* store, cfield::Shard shard) {
  store->shards.push_back(std::move(shard));
  return static_cast<uint32_t>(store->shards.size() - 1);
}

cfield::FieldParams ToCore(const cf_field_params* p) {
  Require(p != nullptr, "field params must not be null");
  cfield::FieldParams out;
  out.top_n = p->top_n;
  out.d_max = p->d_max;
  out.p = p->p;
  out.epsilon = p->epsilon;
  out.sigma_min = p->sigma_min;
  out.top_n_zeta = p->top_n_zeta;
  out.min_support = p->min_support;
  out.Validate();
  return out;
}

void FromCore(const cfield::FieldParams& p, cf_field_params* out) {
  out->top_n = p.top_n;
  out->d_max = p.d_max;
  out->p = p.p;
  out->epsilon = p.epsilon;
  out->sigma_min = p.sigma_min;
  out->top_n_zeta = p.top_n_zeta;
  out->min_support = p.min_support;
}

cfield::TriageMode ToCore(cf_triage_mode mode) {
  switch (mode) {
    case CF_MODE_HALLUCINATION: return cfield::TriageMode::kHallucination;
    case CF_MODE_NOVELTY: return cfield::TriageMode::kNovelty;
  }
  throw cfield::ParameterError("unknown triage mode");
}

cfield::TriageParams ToCore(const cf_triage_params* p) {
  Require(p != nullptr, "triage params must not be null");
  cfield::TriageParams out;
  out.zeta_low = p->zeta_low;
  out.zeta_high = p->zeta_high;
  out.mode = ToCore(p->mode);
  out.Validate();
  return out;
}

cfield::BallisticsParams ToCore(const cf_ballistics_params* p) {
  Require(p != nullptr, "ballistics params must not be null");
  cfield::BallisticsParams out;
  out.g = p->g;
  out.launch_speed = p->launch_speed;
  out.dt = p->dt;
  out.n_trajectories = p->n_trajectories;
  out.x_max = p->x_max;
  out.y_max = p->y_max;
  out.Validate();
  return out;
}

cfield::FieldStatus ToCore(cf_field_status s) {
  switch (s) {
    case CF_FIELD_DEFINED: return cfield::FieldStatus::kDefined;
    case CF_FIELD_OUT_OF_CORPUS: return cfield::FieldStatus::kOutOfCorpus;
    case CF_FIELD_INSUFFICIENT_STATISTICS: return cfield::FieldStatus::kInsufficientStatistics;
  }
  throw cfield::ParameterError("unknown field status");
}

cf_field_status FromCore(cfield::FieldStatus s) {
  switch (s) {
    case cfield::FieldStatus::kDefined: return CF_FIELD_DEFINED;
    case cfield::FieldStatus::kOutOfCorpus: return CF_FIELD_OUT_OF_CORPUS;
    case cfield::FieldStatus::kInsufficientStatistics: return CF_FIELD_INSUFFICIENT_STATISTICS;
  }
  return CF_FIELD_OUT_OF_CORPUS;
}

cf_label FromCore(cfield::TriageLabel l) {
  switch (l) {
    case cfield::TriageLabel::kPositive: return CF_LABEL_POSITIVE;
    case cfield::TriageLabel::kNegative: return CF_LABEL_NEGATIVE;
    case cfield::TriageLabel::kUnsure: return CF_LABEL_UNSURE;
    case cfield::TriageLabel::kRejected: return CF_LABEL_REJECTED;
  }
  return CF_LABEL_UNSURE;
}

std::span<const double> Vec(const double* p, size_t n, const char* what) {
  Require(p != nullptr || n == 0, what);
  return {p, n};
}

void CheckStoreDim(const cf_store* store, size_t dim) {
  Require(store != nullptr, "store must not be null");
  const uint32_t store_dim = cfield::CommonDim(store->shards);
  if (store_dim != 0 && store_dim != dim) {
    throw cfield::DimensionError("query has dimension " + std::to_string(dim) +
                                 ", store has " + std::to_string(store_dim));
  }
}

double Nan() { return std::numeric_limits<double>::quiet_NaN(); }
double OrNan(const std::optional<double>& v) { return v ? *v : Nan(); }

std::string MetricsFor(const std::vector<cfield::ScoredExample>& examples,
                       const cfield::TriageParams& params) {
  const cfield::ConfusionCounts counts = cfield::Tally(examples, params);
  return cfield::MetricsJson(cfield::ComputeMetrics(examples, params), counts);
}

}  // namespace

extern "C" {

const char* cf_status_name(cf_status status) {
  return cfield::ErrorCodeName(static_cast<ErrorCode>(status));
}

const char* cf_last_error(void) { return g_last_error.c_str(); }
int64_t cf_last_error_location(void) { return g_last_location; }
void cf_string_free(char* s) { std::free(s); }

void cf_field_params_default(cf_field_params* params) {
  if (params != nullptr) FromCore(cfield::FieldParams{}, params);
}

void cf_triage_params_default(cf_triage_params* params) {
  if (params == nullptr) return;
  const cfield::TriageParams d;
  params->zeta_low = d.zeta_low;
  params->zeta_high = d.zeta_high;
  params->mode = CF_MODE_HALLUCINATION;
}

void cf_ballistics_params_default(cf_ballistics_params* params) {
  if (params == nullptr) return;
  const cfield::BallisticsParams d;
  params->g = d.g;
  params->launch_speed = d.launch_speed;
  params->dt = d.dt;
  params->n_trajectories = d.n_trajectories;
  params->x_max = d.x_max;
  params->y_max = d.y_max;
}

void cf_ballistics_field_params(cf_field_params* params) {
  if (params != nullptr) FromCore(cfield::BallisticsFieldParams(), params);
}

cf_status cf_store_create(cf_store** out) {
  return Guard([&] {
    Require(out != nullptr, "out must not be null");
    *out = new cf_store();
  });
}

void cf_store_destroy(cf_store* store) { delete store; }

cf_status cf_store_add_shard(cf_store* store, uint32_t dim, uint32_t* shard_id) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    if (dim == 0) throw cfield::DimensionError("dimension must be positive");
    const uint32_t common = cfield::CommonDim(store->shards);
    if (common != 0 && common != dim) {
      throw cfield::DimensionError("shard dimension differs from the store");
    }
    const uint32_t id = Append(store, cfield::Shard(dim));
    if (shard_id != nullptr) *shard_id = id;
  });
}

cf_status cf_store_ingest(cf_store* store, uint32_t shard_id, const float* vectors, size_t count,
                          uint32_t* seq_id) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    cfield::Shard& shard = ShardAt(store, shard_id);
    Require(vectors != nullptr || count == 0, "vectors must not be null");
    const uint32_t id = shard.IngestFlat({vectors, count * shard.dim()}, count);
    if (seq_id != nullptr) *seq_id = id;
  });
}

cf_status cf_store_seal(cf_store* store, uint32_t shard_id) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    ShardAt(store, shard_id).Seal();
  });
}

cf_status cf_store_ingest_jsonl(cf_store* store, const char* path, uint32_t* shard_id,
                                char** id_map_json) {
  return Guard([&] {
    Require(store != nullptr && path != nullptr, "store and path must not be null");
    cfield::IngestResult result = cfield::IngestJsonlFile(path);
    const uint32_t common = cfield::CommonDim(store->shards);
    if (common != 0 && common != result.shard.dim()) {
      throw cfield::DimensionError("shard dimension differs from the store");
    }
    const std::string ids = cfield::IdMapJson(result);
    const uint32_t id = Append(store, std::move(result.shard));
    if (shard_id != nullptr) *shard_id = id;
    SetString(id_map_json, ids);
  });
}

cf_status cf_store_ingest_jsonl_keyed(cf_store* store, const char* path, const char* key,
                                      uint32_t* first_shard_id, size_t* n_shards,
                                      char** keys_json, char** id_maps_json) {
  return Guard([&] {
    Require(store != nullptr && path != nullptr && key != nullptr,
            "store, path and key must not be null");
    auto groups = cfield::IngestJsonlKeyedFile(path, key);
    const uint32_t common = cfield::CommonDim(store->shards);
    if (common != 0 && common != groups.front().result.shard.dim()) {
      throw cfield::DimensionError("shard dimension differs from the store");
    }
    nlohmann::json keys = nlohmann::json::array();
    std::string maps = "[";
    const uint32_t first = static_cast<uint32_t>(store->shards.size());
    for (size_t i = 0; i < groups.size(); ++i) {
      keys.push_back(groups[i].key_value);
      maps += (i ? "," : "") + cfield::IdMapJson(groups[i].result);
      store->shards.push_back(std::move(groups[i].result.shard));
    }
    maps += "]";
    if (first_shard_id != nullptr) *first_shard_id = first;
    if (n_shards != nullptr) *n_shards = groups.size();
    SetString(keys_json, keys.dump());
    SetString(id_maps_json, maps);
  });
}

cf_status cf_store_build_ballistics(cf_store* store, const cf_ballistics_params* params,
                                    uint32_t* shard_id) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    std::vector<cfield::Shard> corpus = cfield::BuildBallisticsCorpus(ToCore(params));
    const uint32_t common = cfield::CommonDim(store->shards);
    if (common != 0 && common != corpus.front().dim()) {
      throw cfield::DimensionError("shard dimension differs from the store");
    }
    const uint32_t id = Append(store, std::move(corpus.front()));
    if (shard_id != nullptr) *shard_id = id;
  });
}

cf_status cf_store_load_shard(cf_store* store, const char* path, uint32_t* shard_id) {
  return Guard([&] {
    Require(store != nullptr && path != nullptr, "store and path must not be null");
    const uint32_t common = cfield::CommonDim(store->shards);
    const uint32_t id = Append(store, cfield::Shard::Load(path, common));
    if (shard_id != nullptr) *shard_id = id;
  });
}

cf_status cf_store_save_shard(const cf_store* store, uint32_t shard_id, const char* path) {
  return Guard([&] {
    Require(store != nullptr && path != nullptr, "store and path must not be null");
    ShardAt(store, shard_id).Save(path);
  });
}

size_t cf_store_shard_count(const cf_store* store) {
  return store == nullptr ? 0 : store->shards.size();
}

cf_status cf_store_shard_info(const cf_store* store, uint32_t shard_id, uint32_t* dim,
                              uint64_t* records, uint64_t* sequences) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    const cfield::Shard& shard = ShardAt(store, shard_id);
    if (dim != nullptr) *dim = shard.dim();
    if (records != nullptr) *records = shard.size();
    if (sequences != nullptr) *sequences = shard.sequence_count();
  });
}

cf_status cf_store_get_record(const cf_store* store, cf_record_ref ref, float* vector,
                              float* delta, int* has_delta, uint32_t* seq_id,
                              uint32_t* position) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    const cfield::Shard& shard = ShardAt(store, ref.shard);
    if (ref.index >= shard.size()) {
      throw cfield::NotFoundError("record index " + std::to_string(ref.index) + " out of range");
    }
    const auto v = shard.vector(ref.index);
    if (vector != nullptr) std::copy(v.begin(), v.end(), vector);
    if (delta != nullptr) {
      const auto d = shard.delta(ref.index);
      if (d.empty()) {
        std::fill(delta, delta + shard.dim(), 0.0f);
      } else {
        std::copy(d.begin(), d.end(), delta);
      }
    }
    if (has_delta != nullptr) *has_delta = shard.has_delta(ref.index) ? 1 : 0;
    if (seq_id != nullptr) *seq_id = shard.seq_id(ref.index);
    if (position != nullptr) *position = shard.position(ref.index);
  });
}

cf_status cf_knn(const cf_store* store, const double* query, size_t dim, size_t k,
                 cf_metric metric, double d_max, cf_neighbor* out, size_t* n_out) {
  return Guard([&] {
    Require(store != nullptr && n_out != nullptr, "store and n_out must not be null");
    Require(out != nullptr || k == 0, "out must not be null");
    Require(metric == CF_METRIC_L2 || metric == CF_METRIC_COSINE, "unknown metric");
    CheckStoreDim(store, dim);
    cfield::SearchOptions options;
    options.metric = metric == CF_METRIC_L2 ? cfield::Metric::kL2 : cfield::Metric::kCosine;
    options.d_max = d_max;
    const auto hits = cfield::Search(Vec(query, dim, "query must not be null"), k, options,
                                     store->shards);
    for (size_t i = 0; i < hits.size(); ++i) {
      out[i].ref = {hits[i].ref.shard, hits[i].ref.index};
      out[i].distance = hits[i].distance;
    }
    *n_out = hits.size();
  });
}

cf_status cf_chamfer_rerank(const cf_store* store, const double* query_seq, size_t query_len,
                            size_t dim, const uint32_t* cand_shards, const uint32_t* cand_seq_ids,
                            size_t n_candidates, size_t k, size_t* out_order,
                            double* out_chamfer) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    Require(query_seq != nullptr && query_len > 0, "query sequence must not be empty");
    Require(n_candidates == 0 || (cand_shards && cand_seq_ids && out_order),
            "candidate arrays must not be null");
    CheckStoreDim(store, dim);
    std::vector<std::vector<float>> query(query_len);
    for (size_t i = 0; i < query_len; ++i) {
      query[i].assign(query_seq + i * dim, query_seq + (i + 1) * dim);
    }
    std::vector<cfield::SequenceRef> candidates(n_candidates);
    for (size_t i = 0; i < n_candidates; ++i) candidates[i] = {cand_shards[i], cand_seq_ids[i]};
    const auto ranked = cfield::ChamferRerank(query, candidates, store->shards, k);
    for (size_t r = 0; r < ranked.size(); ++r) {
      for (size_t i = 0; i < n_candidates; ++i) {
        if (candidates[i] == ranked[r].sequence) {
          out_order[r] = i;
          break;
        }
      }
      if (out_chamfer != nullptr) out_chamfer[r] = ranked[r].chamfer;
    }
  });
}

cf_status cf_estimate_field(const cf_store* store, const double* anchor, size_t dim,
                            const cf_field_params* params, double* mu, double* sigma_tilde,
                            cf_field_info* info) {
  return Guard([&] {
    CheckStoreDim(store, dim);
    const cfield::LocalField field = cfield::EstimateField(
        Vec(anchor, dim, "anchor must not be null"), ToCore(params), store->shards);
    if (field.defined()) {
      if (mu != nullptr) std::copy(field.mu.begin(), field.mu.end(), mu);
      if (sigma_tilde != nullptr) {
        std::copy(field.sigma_tilde.begin(), field.sigma_tilde.end(), sigma_tilde);
      }
    }
    if (info != nullptr) {
      info->status = FromCore(field.status);
      info->support = field.support;
    }
  });
}

cf_status cf_zeta(const double* delta, const double* mu, const double* sigma_tilde, size_t dim,
                  size_t k, double* out) {
  return Guard([&] {
    Require(out != nullptr && delta && mu && sigma_tilde, "arguments must not be null");
    cfield::LocalField field;
    field.status = cfield::FieldStatus::kDefined;
    field.mu.assign(mu, mu + dim);
    field.sigma_tilde.assign(sigma_tilde, sigma_tilde + dim);
    *out = cfield::Zeta(std::span<const double>(delta, dim), field, k);
  });
}

cf_status cf_significance(const double* mu, const double* sigma_tilde, size_t dim, size_t k,
                          double* out) {
  return Guard([&] {
    Require(out != nullptr && mu && sigma_tilde, "arguments must not be null");
    cfield::LocalField field;
    field.status = cfield::FieldStatus::kDefined;
    field.mu.assign(mu, mu + dim);
    field.sigma_tilde.assign(sigma_tilde, sigma_tilde + dim);
    *out = cfield::Significance(field, k);
  });
}

cf_status cf_score_pair(const cf_store* store, const double* s1, const double* s2, size_t dim,
                        const cf_field_params* params, double* zeta, cf_field_status* status) {
  return Guard([&] {
    CheckStoreDim(store, dim);
    const cfield::PairScore score =
        cfield::ScorePair(Vec(s1, dim, "s1 must not be null"), Vec(s2, dim, "s2 must not be null"),
                          ToCore(params), store->shards);
    if (zeta != nullptr) *zeta = OrNan(score.zeta);
    if (status != nullptr) *status = FromCore(score.status);
  });
}

cf_status cf_classify(const double* zeta_test, const double* zeta_ref,
                      cf_field_status status_test, const cf_triage_params* params,
                      cf_label* label) {
  return Guard([&] {
    Require(label != nullptr, "label must not be null");
    auto opt = [](const double* p) { return p ? std::optional<double>(*p) : std::nullopt; };
    *label = FromCore(
        cfield::Classify(opt(zeta_test), opt(zeta_ref), ToCore(status_test), ToCore(params)));
  });
}

cf_status cf_metrics_from_counts(const cf_confusion_counts* counts, cf_metrics* out) {
  return Guard([&] {
    Require(counts != nullptr && out != nullptr, "arguments must not be null");
    cfield::ConfusionCounts c;
    c.tp = counts->tp;
    c.tn = counts->tn;
    c.fp = counts->fp;
    c.fn = counts->fn;
    c.unsure = counts->unsure;
    c.rejected = counts->rejected;
    const cfield::MetricsReport m = cfield::MetricsFromCounts(c);
    out->precision = OrNan(m.precision);
    out->recall = OrNan(m.recall);
    out->f1 = OrNan(m.f1);
    out->mcc = OrNan(m.mcc);
    out->coverage = OrNan(m.coverage);
  });
}

cf_status cf_run_score(const cf_store* store, const char* pairs_path,
                       const cf_field_params* field, const cf_triage_params* triage,
                       char** outcomes_jsonl, char** metrics_json) {
  return Guard([&] {
    Require(store != nullptr && pairs_path != nullptr, "store and path must not be null");
    const cfield::FieldParams fp = ToCore(field);
    const cfield::TriageParams tp = ToCore(triage);
    const auto pairs = cfield::ReadPairsJsonlFile(pairs_path);
    if (!pairs.empty()) CheckStoreDim(store, pairs.front().s1.size());
    std::string lines;
    std::vector<cfield::ScoredExample> examples;
    bool any_label = false;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const cfield::TriageOutcome o =
          cfield::Triage(pairs[i].s1, pairs[i].s2, fp, tp, store->shards);
      lines += cfield::OutcomeJson(i, o, pairs[i].truth_positive) + "\n";
      examples.push_back({o.zeta_test, o.zeta_ref, o.status_test, pairs[i].truth_positive});
      any_label = any_label || pairs[i].truth_positive.has_value();
    }
    SetString(outcomes_jsonl, lines);
    if (metrics_json != nullptr) {
      *metrics_json = any_label ? Dup(MetricsFor(examples, tp)) : nullptr;
    }
  });
}

cf_status cf_run_baseline(const cf_store* store, const char* pairs_path, cf_baseline method,
                          const cf_triage_params* triage, char** scores_jsonl,
                          char** metrics_json) {
  return Guard([&] {
    Require(store != nullptr && pairs_path != nullptr, "store and path must not be null");
    cfield::BaselineMethod m;
    switch (method) {
      case CF_BASELINE_VSDB_TOP1_L2: m = cfield::BaselineMethod::kVsdbTop1L2; break;
      case CF_BASELINE_VSDB_TOP1_COS: m = cfield::BaselineMethod::kVsdbTop1Cos; break;
      case CF_BASELINE_VDB_PAIR_COS: m = cfield::BaselineMethod::kVdbPairCos; break;
      default: throw cfield::ParameterError("unknown baseline");
    }
    const cfield::TriageParams tp = ToCore(triage);
    const auto pairs = cfield::ReadPairsJsonlFile(pairs_path);
    if (!pairs.empty()) CheckStoreDim(store, pairs.front().s1.size());
    const cfield::BaselineScorer scorer(store->shards);
    std::string lines;
    std::vector<cfield::ScoredExample> examples;
    bool any_label = false;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const double score = scorer.Score(pairs[i].s1, pairs[i].s2, m);
      const auto label =
          cfield::Classify(score, std::nullopt, cfield::FieldStatus::kDefined, tp);
      lines += cfield::BaselineScoreJson(i, score, label, pairs[i].truth_positive) + "\n";
      examples.push_back(
          {score, std::nullopt, cfield::FieldStatus::kDefined, pairs[i].truth_positive});
      any_label = any_label || pairs[i].truth_positive.has_value();
    }
    SetString(scores_jsonl, lines);
    if (metrics_json != nullptr) {
      *metrics_json = any_label ? Dup(MetricsFor(examples, tp)) : nullptr;
    }
  });
}

cf_status cf_run_sweep(const char* scores_path, const double* lows, const double* highs,
                       size_t n_cells, cf_triage_mode mode, char** sweep_csv,
                       char** summary_json) {
  return Guard([&] {
    Require(scores_path != nullptr, "path must not be null");
    std::vector<cfield::ThresholdPair> grid;
    if (lows == nullptr || highs == nullptr) {
      grid = cfield::DefaultSweepGrid();
    } else {
      for (size_t i = 0; i < n_cells; ++i) grid.push_back({lows[i], highs[i]});
    }
    const auto examples = cfield::ReadScoresJsonlFile(scores_path);
    const cfield::SweepResult sweep = cfield::ThresholdSweep(examples, grid, ToCore(mode));
    SetString(sweep_csv, cfield::SweepCsv(sweep));
    SetString(summary_json, cfield::SweepSummaryJson(sweep));
  });
}

cf_status cf_run_calibrate(const cf_store* store, const cf_field_params* params,
                           const char* anchors_path, size_t n_anchors, double train_fraction,
                           uint64_t seed, int allow_sampling_error, char** reports_jsonl,
                           char** summary_json) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    const cfield::FieldParams fp = ToCore(params);
    std::vector<cfield::Anchor> anchors;
    if (anchors_path != nullptr) {
      for (auto& point : cfield::ReadAnchorsJsonlFile(anchors_path)) {
        anchors.push_back({std::move(point), std::nullopt});
      }
      if (!anchors.empty()) CheckStoreDim(store, anchors.front().point.size());
    } else {
      std::vector<cfield::RecordRef> pool;
      for (uint32_t s = 0; s < store->shards.size(); ++s) {
        for (uint64_t i = 0; i < store->shards[s].size(); ++i) {
          if (store->shards[s].has_delta(i)) pool.push_back({s, i});
        }
      }
      if (pool.empty()) throw cfield::StoreEmptyError("store holds no transitions");
      const auto order = cfield::SeededPermutation(pool.size(), seed);
      const size_t n = n_anchors == 0 ? pool.size() : std::min(n_anchors, pool.size());
      for (size_t i = 0; i < n; ++i) {
        const cfield::RecordRef ref = pool[order[i]];
        const auto v = store->shards[ref.shard].vector(ref.index);
        anchors.push_back({std::vector<double>(v.begin(), v.end()), ref});
      }
    }
    cfield::CalibrationOptions options;
    options.train_fraction = train_fraction;
    options.seed = seed;
    options.allow_sampling_error = allow_sampling_error != 0;
    const cfield::CalibrationSummary summary =
        cfield::CalibrateCorpus(anchors, fp, options, store->shards);
    std::string lines;
    for (size_t i = 0; i < summary.reports.size(); ++i) {
      lines += cfield::CoverageReportJson(i, summary.reports[i]) + "\n";
    }
    SetString(reports_jsonl, lines);
    SetString(summary_json, cfield::CalibrationSummaryJson(summary));
  });
}

cf_status cf_run_walk(const cf_store* store, const double* start, size_t dim, size_t steps,
                      const cf_field_params* params, char** walk_csv) {
  return Guard([&] {
    CheckStoreDim(store, dim);
    const auto path = cfield::FieldWalk(Vec(start, dim, "start must not be null"), steps,
                                        ToCore(params), store->shards);
    SetString(walk_csv, cfield::WalkCsv(path));
  });
}

cf_status cf_run_geometry(const cf_store* store, size_t n_clusters, size_t min_size,
                          uint64_t seed, cf_rank_by rank_by, char** clusters_jsonl) {
  return Guard([&] {
    Require(store != nullptr, "store must not be null");
    cfield::RankBy by;
    switch (rank_by) {
      case CF_RANK_DIVERGENCE_MAX: by = cfield::RankBy::kDivergenceMax; break;
      case CF_RANK_DIVERGENCE_MIN: by = cfield::RankBy::kDivergenceMin; break;
      case CF_RANK_CIRCULATION_MAX: by = cfield::RankBy::kCirculationMax; break;
      default: throw cfield::ParameterError("unknown ranking");
    }
    cfield::ClusterParams cp;
    cp.n_clusters = n_clusters;
    cp.min_size = min_size;
    cp.seed = seed;
    std::vector<cfield::ClusterDiagnostics> diags;
    for (const cfield::Cluster& c : cfield::FindDenseClusters(store->shards, cp)) {
      try {
        diags.push_back(cfield::Diagnose(c, store->shards));
      } catch (const cfield::DegenerateClusterError&) {
        // Every member on the centroid: no direction to report.
      }
    }
    std::string lines;
    for (const auto& d : cfield::RankExtremes(std::move(diags), by)) {
      lines += cfield::ClusterReportJson(d) + "\n";
    }
    SetString(clusters_jsonl, lines);
  });
}

cf_status cf_run_ballistics(const cf_ballistics_params* params, const cf_field_params* field,
                            double query_theta, double drag_coeff, int want_corpus_csv,
                            cf_ballistics_outputs* out) {
  return Guard([&] {
    Require(out != nullptr, "out must not be null");
    *out = cf_ballistics_outputs{};
    const cfield::BallisticsParams bp = ToCore(params);
    const cfield::FieldParams fp = ToCore(field);
    Require(std::isfinite(drag_coeff) && drag_coeff >= 0.0, "drag must be non-negative");
    const auto corpus = cfield::BuildBallisticsCorpus(bp);
    const cfield::ExperimentResult clean =
        cfield::RunExperiment(corpus, fp, bp, query_theta, 0.0);
    const cfield::ExperimentResult drag =
        cfield::RunExperiment(corpus, fp, bp, query_theta, drag_coeff);
    nlohmann::json j;
    j["query_theta"] = query_theta;
    j["drag_coeff"] = drag_coeff;
    j["zeta_clean"] = clean.zeta_mean;
    j["zeta_drag"] = drag.zeta_mean;
    j["ratio"] = clean.zeta_mean > 0.0 ? nlohmann::json(drag.zeta_mean / clean.zeta_mean)
                                       : nlohmann::json(nullptr);
    j["clean_scored"] = clean.samples.size();
    j["clean_points"] = clean.query_points;
    j["drag_scored"] = drag.samples.size();
    j["drag_points"] = drag.query_points;
    j["corpus_records"] = corpus.front().size();
    cf_ballistics_outputs result{};
    try {
      result.summary_json = Dup(j.dump());
      result.zeta_clean_csv = Dup(cfield::ZetaSeriesCsv(clean));
      result.zeta_drag_csv = Dup(cfield::ZetaSeriesCsv(drag));
      const std::string header = "theta,step,x,y\n";
      result.query_clean_csv = Dup(
          header + cfield::TrajectoryCsv(query_theta, cfield::SimulateTrajectory(query_theta, bp)));
      result.query_drag_csv =
          Dup(header + cfield::TrajectoryCsv(
                           query_theta, cfield::SimulateTrajectory(query_theta, bp, drag_coeff)));
      if (want_corpus_csv != 0) {
        std::string csv = header;
        for (size_t i = 0; i < bp.n_trajectories; ++i) {
          const double theta = cfield::CorpusAngle(bp, i);
          csv += cfield::TrajectoryCsv(theta, cfield::SimulateTrajectory(theta, bp));
        }
        result.corpus_csv = Dup(csv);
      }
    } catch (...) {
      cf_ballistics_outputs_free(&result);
      throw;
    }
    *out = result;
  });
}

void cf_ballistics_outputs_free(cf_ballistics_outputs* out) {
  if (out == nullptr) return;
  for (char** p : {&out->summary_json, &out->zeta_clean_csv, &out->zeta_drag_csv,
                   &out->query_clean_csv, &out->query_drag_csv, &out->corpus_csv}) {
    std::free(*p);
    *p = nullptr;
  }
}

}  // extern "C"
