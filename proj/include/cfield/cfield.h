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

/*
 * C interface of the cfield shared library.
 *
 * Every fallible call returns a cf_status. On failure the calling thread's
 * last error message and location (byte offset, line number or -1) can be
 * read with cf_last_error() and cf_last_error_location(); both stay valid
 * until the next failing call on the same thread.
 *
 * Strings returned through char** out-parameters are allocated by the
 * library and must be released with cf_string_free().
 *
 * A cf_store owns a list of shards. Shard ids are dense indices into that
 * list and appear as the `shard` member of every record reference. Read
 * calls on a store whose shards are all sealed may run concurrently.
 */

#ifndef CFIELD_CFIELD_H_
#define CFIELD_CFIELD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CFIELD_BUILDING_LIBRARY)
#define CF_API __declspec(dllexport)
#else
#define CF_API __declspec(dllimport)
#endif
#else
#define CF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Defaults of the projectile experiment's query. */
#define CF_DEFAULT_QUERY_THETA 33.0
#define CF_DEFAULT_DRAG_COEFF 2.0

typedef enum cf_status {
  CF_OK = 0,
  CF_ERR_DIMENSION = 1,
  CF_ERR_EMPTY_SEQUENCE = 2,
  CF_ERR_NOT_FOUND = 3,
  CF_ERR_FORMAT = 4,
  CF_ERR_PARAMETER = 5,
  CF_ERR_FIELD_UNDEFINED = 6,
  CF_ERR_STORE_EMPTY = 7,
  CF_ERR_DEGENERATE_CLUSTER = 8,
  CF_ERR_NO_SUPPORT = 9,
  CF_ERR_IO = 10,
  CF_ERR_PARSE = 11,
  CF_ERR_SEALED = 12,
  CF_ERR_INTERNAL = 99
} cf_status;

typedef enum cf_metric { CF_METRIC_L2 = 0, CF_METRIC_COSINE = 1 } cf_metric;

typedef enum cf_field_status {
  CF_FIELD_DEFINED = 0,
  CF_FIELD_OUT_OF_CORPUS = 1,
  CF_FIELD_INSUFFICIENT_STATISTICS = 2
} cf_field_status;

typedef enum cf_triage_mode { CF_MODE_HALLUCINATION = 0, CF_MODE_NOVELTY = 1 } cf_triage_mode;

typedef enum cf_label {
  CF_LABEL_POSITIVE = 0,
  CF_LABEL_NEGATIVE = 1,
  CF_LABEL_UNSURE = 2,
  CF_LABEL_REJECTED = 3
} cf_label;

typedef enum cf_baseline {
  CF_BASELINE_VSDB_TOP1_L2 = 0,
  CF_BASELINE_VSDB_TOP1_COS = 1,
  CF_BASELINE_VDB_PAIR_COS = 2
} cf_baseline;

typedef enum cf_rank_by {
  CF_RANK_DIVERGENCE_MAX = 0,
  CF_RANK_DIVERGENCE_MIN = 1,
  CF_RANK_CIRCULATION_MAX = 2
} cf_rank_by;

typedef struct cf_store cf_store;

typedef struct cf_record_ref {
  uint32_t shard;
  uint64_t index;
} cf_record_ref;

typedef struct cf_neighbor {
  cf_record_ref ref;
  double distance;
} cf_neighbor;

typedef struct cf_field_params {
  size_t top_n;
  double d_max;
  double p;
  double epsilon;
  double sigma_min;
  size_t top_n_zeta;
  size_t min_support;
} cf_field_params;

typedef struct cf_triage_params {
  double zeta_low;
  double zeta_high;
  cf_triage_mode mode;
} cf_triage_params;

typedef struct cf_field_info {
  cf_field_status status;
  size_t support;
} cf_field_info;

typedef struct cf_confusion_counts {
  uint64_t tp, tn, fp, fn, unsure, rejected;
} cf_confusion_counts;

/* Undefined ratios are NaN. */
typedef struct cf_metrics {
  double precision, recall, f1, mcc, coverage;
} cf_metrics;

typedef struct cf_ballistics_params {
  double g;
  double launch_speed;
  double dt;
  size_t n_trajectories;
  double x_max;
  double y_max;
} cf_ballistics_params;

/* ---- errors and memory ------------------------------------------------ */

CF_API const char* cf_status_name(cf_status status);
CF_API const char* cf_last_error(void);
CF_API int64_t cf_last_error_location(void);
CF_API void cf_string_free(char* s);

/* ---- defaults --------------------------------------------------------- */

CF_API void cf_field_params_default(cf_field_params* params);
CF_API void cf_triage_params_default(cf_triage_params* params);
CF_API void cf_ballistics_params_default(cf_ballistics_params* params);
/* Field settings of the ballistics experiment (N=10, d_max=0.03, k=2). */
CF_API void cf_ballistics_field_params(cf_field_params* params);

/* ---- store ------------------------------------------------------------ */

CF_API cf_status cf_store_create(cf_store** out);
CF_API void cf_store_destroy(cf_store* store);

CF_API cf_status cf_store_add_shard(cf_store* store, uint32_t dim, uint32_t* shard_id);
/* `vectors` holds `count` row-major vectors of the shard's dimension. */
CF_API cf_status cf_store_ingest(cf_store* store, uint32_t shard_id, const float* vectors,
                                 size_t count, uint32_t* seq_id);
CF_API cf_status cf_store_seal(cf_store* store, uint32_t shard_id);

/* Builds a sealed shard from a sequences JSONL file. `id_map_json` (may be
 * NULL) receives {"<external id>": seq_id, ...}. */
CF_API cf_status cf_store_ingest_jsonl(cf_store* store, const char* path, uint32_t* shard_id,
                                       char** id_map_json);
/* Like cf_store_ingest_jsonl but splits the input into one shard per
 * distinct value of the string field `key`. The new shards get consecutive
 * ids starting at `first_shard_id`; `keys_json` receives the key values in
 * shard order and `id_maps_json` one id map per shard (both may be NULL). */
CF_API cf_status cf_store_ingest_jsonl_keyed(cf_store* store, const char* path, const char* key,
                                             uint32_t* first_shard_id, size_t* n_shards,
                                             char** keys_json, char** id_maps_json);
/* Appends the simulated projectile corpus as one sealed shard. */
CF_API cf_status cf_store_build_ballistics(cf_store* store, const cf_ballistics_params* params,
                                           uint32_t* shard_id);

CF_API cf_status cf_store_load_shard(cf_store* store, const char* path, uint32_t* shard_id);
CF_API cf_status cf_store_save_shard(const cf_store* store, uint32_t shard_id, const char* path);

CF_API size_t cf_store_shard_count(const cf_store* store);
CF_API cf_status cf_store_shard_info(const cf_store* store, uint32_t shard_id, uint32_t* dim,
                                     uint64_t* records, uint64_t* sequences);
/* `vector` and `delta` (either may be NULL) need room for dim floats;
 * `delta` is zero-filled when the record has none. */
CF_API cf_status cf_store_get_record(const cf_store* store, cf_record_ref ref, float* vector,
                                     float* delta, int* has_delta, uint32_t* seq_id,
                                     uint32_t* position);

/* ---- search ----------------------------------------------------------- */

/* Writes up to k neighbors to `out` (capacity k) and their count to
 * `n_out`. Pass d_max = INFINITY for an unbounded search. */
CF_API cf_status cf_knn(const cf_store* store, const double* query, size_t dim, size_t k,
                        cf_metric metric, double d_max, cf_neighbor* out, size_t* n_out);

/* Candidate sequences are given as (shard, seq_id) pairs; `out_order`
 * receives candidate positions in rank order, `out_chamfer` (may be NULL)
 * the Chamfer distance per ranked entry. */
CF_API cf_status cf_chamfer_rerank(const cf_store* store, const double* query_seq,
                                   size_t query_len, size_t dim, const uint32_t* cand_shards,
                                   const uint32_t* cand_seq_ids, size_t n_candidates, size_t k,
                                   size_t* out_order, double* out_chamfer);

/* ---- field ------------------------------------------------------------ */

/* `mu` and `sigma_tilde` (dim doubles each) are written only when the field
 * is defined. */
CF_API cf_status cf_estimate_field(const cf_store* store, const double* anchor, size_t dim,
                                   const cf_field_params* params, double* mu,
                                   double* sigma_tilde, cf_field_info* info);
CF_API cf_status cf_zeta(const double* delta, const double* mu, const double* sigma_tilde,
                         size_t dim, size_t k, double* out);
CF_API cf_status cf_significance(const double* mu, const double* sigma_tilde, size_t dim, size_t k,
                                 double* out);
/* `zeta` is NaN when the field at s1 is undefined. */
CF_API cf_status cf_score_pair(const cf_store* store, const double* s1, const double* s2,
                               size_t dim, const cf_field_params* params, double* zeta,
                               cf_field_status* status);

/* ---- triage ----------------------------------------------------------- */

/* NULL zeta pointers mean "absent". */
CF_API cf_status cf_classify(const double* zeta_test, const double* zeta_ref,
                             cf_field_status status_test, const cf_triage_params* params,
                             cf_label* label);
CF_API cf_status cf_metrics_from_counts(const cf_confusion_counts* counts, cf_metrics* out);

/* ---- pipelines (text in, text out) ------------------------------------ */

/* Triage every pair of a pairs JSONL file. `outcomes_jsonl` gets one line
 * per pair; `metrics_json` is set only when some pair carries a label
 * (otherwise it is set to NULL). */
CF_API cf_status cf_run_score(const cf_store* store, const char* pairs_path,
                              const cf_field_params* field, const cf_triage_params* triage,
                              char** outcomes_jsonl, char** metrics_json);

/* Baseline distances for every pair, used as scores in place of zeta. */
CF_API cf_status cf_run_baseline(const cf_store* store, const char* pairs_path,
                                 cf_baseline method, const cf_triage_params* triage,
                                 char** scores_jsonl, char** metrics_json);

/* Threshold sweep over a scored-examples JSONL (the outcomes written by
 * cf_run_score, or any file with zeta_test / zeta_ref / status / truth).
 * A NULL grid selects the default grid. */
CF_API cf_status cf_run_sweep(const char* scores_path, const double* lows, const double* highs,
                              size_t n_cells, cf_triage_mode mode, char** sweep_csv,
                              char** summary_json);

/* Calibration over `n_anchors` corpus records sampled with `seed` (each
 * excluded from its own neighborhood), or over the vectors of an anchors
 * JSONL file ({"anchor": [..]} per line) when anchors_path is non-NULL. */
CF_API cf_status cf_run_calibrate(const cf_store* store, const cf_field_params* params,
                                  const char* anchors_path, size_t n_anchors,
                                  double train_fraction, uint64_t seed, int allow_sampling_error,
                                  char** reports_jsonl, char** summary_json);

CF_API cf_status cf_run_walk(const cf_store* store, const double* start, size_t dim, size_t steps,
                             const cf_field_params* params, char** walk_csv);

/* k-means clusters (n_clusters, min_size, seed), ranked by `rank_by`. */
CF_API cf_status cf_run_geometry(const cf_store* store, size_t n_clusters, size_t min_size,
                                 uint64_t seed, cf_rank_by rank_by, char** clusters_jsonl);

/* Outputs of cf_run_ballistics; release with cf_ballistics_outputs_free. */
typedef struct cf_ballistics_outputs {
  char* summary_json;
  char* zeta_clean_csv;   /* step,x,y,zeta */
  char* zeta_drag_csv;
  char* query_clean_csv;  /* theta,step,x,y */
  char* query_drag_csv;
  char* corpus_csv;       /* theta,step,x,y; NULL unless requested */
} cf_ballistics_outputs;

/* Builds the corpus, then scores the drag-free and the drag query launched
 * at `query_theta` degrees. */
CF_API cf_status cf_run_ballistics(const cf_ballistics_params* params,
                                   const cf_field_params* field, double query_theta,
                                   double drag_coeff, int want_corpus_csv,
                                   cf_ballistics_outputs* out);
CF_API void cf_ballistics_outputs_free(cf_ballistics_outputs* out);

#ifdef __cplusplus
}
#endif

#endif /* CFIELD_CFIELD_H_ */
