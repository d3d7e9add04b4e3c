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

// Text formats: JSON Lines inputs and the JSON / JSONL / CSV reports.
//
//   sequences: {"id": "<string>", "vectors": [[f32, ...], ...]}
//   pairs:     {"s1": [f32, ...], "s2": [f32, ...], "label": "pos" | "neg"}
//   scores:    {"zeta_test": x | null, "zeta_ref": x | null,
//               "status": "Defined" | ..., "truth": "pos" | "neg"}
//   anchors:   {"anchor": [f32, ...]}
//
// Parse failures raise ParseError carrying the 1-based line number; a vector
// whose length disagrees with the first line raises DimensionError with the
// line number. Blank lines are skipped.

#ifndef CFIELD_IO_H_
#define CFIELD_IO_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfield/ballistics.h"
#include "cfield/calibrate.h"
#include "cfield/field.h"
#include "cfield/geometry.h"
#include "cfield/store.h"
#include "cfield/triage.h"

namespace cfield {

struct IngestResult {
  Shard shard;
  // External string id -> shard-local seq_id, in ingestion order.
  std::vector<std::pair<std::string, uint32_t>> ids;
};

IngestResult IngestJsonl(std::istream& in);
IngestResult IngestJsonlFile(const std::string& path);

struct KeyedIngestResult {
  std::string key_value;
  IngestResult result;
};

// One shard per distinct value of the string field `key`, in order of first
// appearance. Ids stay unique across the whole input. An empty key yields a
// single group.
std::vector<KeyedIngestResult> IngestJsonlKeyed(std::istream& in, const std::string& key);
std::vector<KeyedIngestResult> IngestJsonlKeyedFile(const std::string& path,
                                                    const std::string& key);

struct PairExample {
  std::vector<double> s1;
  std::vector<double> s2;
  std::optional<bool> truth_positive;
};

std::vector<PairExample> ReadPairsJsonl(std::istream& in);
std::vector<PairExample> ReadPairsJsonlFile(const std::string& path);

// "status" defaults to Defined, "zeta_ref" to absent; "truth" is required.
std::vector<ScoredExample> ReadScoresJsonl(std::istream& in);
std::vector<ScoredExample> ReadScoresJsonlFile(const std::string& path);

std::vector<std::vector<double>> ReadAnchorsJsonl(std::istream& in);
std::vector<std::vector<double>> ReadAnchorsJsonlFile(const std::string& path);

// Shortest round-trip decimal form of a double.
std::string FormatDouble(double value);

std::string IdMapJson(const IngestResult& result);

// `truth` is echoed as "pos" / "neg" / null so the line can feed a sweep.
std::string OutcomeJson(size_t index, const TriageOutcome& outcome,
                        std::optional<bool> truth = std::nullopt);
std::string BaselineScoreJson(size_t index, double score, TriageLabel label,
                              std::optional<bool> truth);
std::string MetricsJson(const MetricsReport& metrics, const ConfusionCounts& counts);
// Columns: zeta_low,zeta_high,f1,coverage,risk (absent values left empty).
std::string SweepCsv(const SweepResult& sweep);
std::string SweepSummaryJson(const SweepResult& sweep);
std::string CoverageReportJson(size_t anchor_index, const CoverageReport& report);
std::string CalibrationSummaryJson(const CalibrationSummary& summary);
std::string ClusterReportJson(const ClusterDiagnostics& diag);
// Columns: step,significance,status,x0,x1,...
std::string WalkCsv(const std::vector<WalkStep>& path);
// Columns: theta,step,x,y
std::string TrajectoryCsv(double theta, const std::vector<Point2>& path);
// Columns: step,x,y,zeta
std::string ZetaSeriesCsv(const ExperimentResult& result);

}  // namespace cfield

#endif  // CFIELD_IO_H_
