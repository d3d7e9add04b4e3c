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

#include "cfield/io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cfield {
namespace {

using nlohmann::json;

bool IsBlank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

json ParseLine(const std::string& line, int64_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError("line is not a JSON object", line_no);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
}

template <typename T>
std::vector<T> NumberArray(const json& j, const char* what, int64_t line_no) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array", line_no);
  std::vector<T> out;
  out.reserve(j.size());
  for (const json& x : j) {
    if (!x.is_number()) throw ParseError(std::string(what) + " must hold numbers", line_no);
    out.push_back(x.get<T>());
  }
  return out;
}

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

json RefJson(const RecordRef& r) { return json::array({r.shard, r.index}); }

std::optional<bool> ParseTruth(const json& j, const char* key, int64_t line_no) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  const json& v = j[key];
  if (v == "pos") return true;
  if (v == "neg") return false;
  throw ParseError(std::string(key) + " must be \"pos\" or \"neg\"", line_no);
}

json TruthJson(std::optional<bool> truth) {
  return truth ? json(*truth ? "pos" : "neg") : json(nullptr);
}

std::optional<double> OptionalNumber(const json& j, const char* key, int64_t line_no) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw ParseError(std::string(key) + " must be a number", line_no);
  return j[key].get<double>();
}

FieldStatus ParseStatus(const json& j, int64_t line_no) {
  if (!j.contains("status")) return FieldStatus::kDefined;
  for (FieldStatus s : {FieldStatus::kDefined, FieldStatus::kOutOfCorpus,
                        FieldStatus::kInsufficientStatistics}) {
    if (j["status"] == FieldStatusName(s)) return s;
  }
  throw ParseError("unknown status", line_no);
}

json Optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string CsvCell(const std::optional<double>& v) { return v ? FormatDouble(*v) : ""; }

}  // namespace

std::vector<KeyedIngestResult> IngestJsonlKeyed(std::istream& in, const std::string& key) {
  struct Group {
    std::string value;
    Shard shard;
    std::vector<std::pair<std::string, uint32_t>> ids;
  };
  std::vector<Group> groups;
  std::set<std::string> seen;
  uint32_t dim = 0;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    const json j = ParseLine(line, line_no);
    if (!j.contains("id") || !j["id"].is_string()) {
      throw ParseError("missing string field \"id\"", line_no);
    }
    if (!j.contains("vectors") || !j["vectors"].is_array()) {
      throw ParseError("missing array field \"vectors\"", line_no);
    }
    std::string value;
    if (!key.empty()) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw ParseError("missing string field \"" + key + "\"", line_no);
      }
      value = j[key].get<std::string>();
    }
    std::vector<std::vector<float>> vectors;
    for (const json& v : j["vectors"]) vectors.push_back(NumberArray<float>(v, "vector", line_no));
    if (vectors.empty()) throw EmptySequenceError("sequence has no vectors", line_no);
    if (dim == 0) {
      if (vectors.front().empty()) throw DimensionError("zero-length vector", line_no);
      dim = static_cast<uint32_t>(vectors.front().size());
    }
    const std::string id = j["id"].get<std::string>();
    if (!seen.insert(id).second) throw ParseError("duplicate id \"" + id + "\"", line_no);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group& g) { return g.value == value; });
    if (it == groups.end()) {
      groups.push_back({value, Shard(dim), {}});
      it = groups.end() - 1;
    }
    try {
      it->ids.emplace_back(id, it->shard.IngestSequence(vectors));
    } catch (const DimensionError& e) {
      throw DimensionError(e.what(), line_no);
    }
  }
  if (groups.empty()) throw EmptySequenceError("input holds no sequences");
  std::vector<KeyedIngestResult> out;
  for (Group& g : groups) {
    g.shard.Seal();
    out.push_back({std::move(g.value), IngestResult{std::move(g.shard), std::move(g.ids)}});
  }
  return out;
}

IngestResult IngestJsonl(std::istream& in) {
  return std::move(IngestJsonlKeyed(in, "").front().result);
}

IngestResult IngestJsonlFile(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return IngestJsonl(in);
}

std::vector<KeyedIngestResult> IngestJsonlKeyedFile(const std::string& path,
                                                    const std::string& key) {
  std::ifstream in = OpenInput(path);
  return IngestJsonlKeyed(in, key);
}

std::vector<PairExample> ReadPairsJsonl(std::istream& in) {
  std::vector<PairExample> out;
  std::string line;
  int64_t line_no = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    const json j = ParseLine(line, line_no);
    if (!j.contains("s1") || !j.contains("s2")) {
      throw ParseError("pair needs \"s1\" and \"s2\"", line_no);
    }
    PairExample ex;
    ex.s1 = NumberArray<double>(j["s1"], "s1", line_no);
    ex.s2 = NumberArray<double>(j["s2"], "s2", line_no);
    if (ex.s1.empty() || ex.s1.size() != ex.s2.size()) {
      throw DimensionError("s1 and s2 must be non-empty and equally long", line_no);
    }
    if (dim == 0) dim = ex.s1.size();
    if (ex.s1.size() != dim) throw DimensionError("pair dimension changed", line_no);
    ex.truth_positive = ParseTruth(j, "label", line_no);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PairExample> ReadPairsJsonlFile(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return ReadPairsJsonl(in);
}

std::vector<ScoredExample> ReadScoresJsonl(std::istream& in) {
  std::vector<ScoredExample> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    const json j = ParseLine(line, line_no);
    ScoredExample ex;
    ex.zeta_test = OptionalNumber(j, "zeta_test", line_no);
    ex.zeta_ref = OptionalNumber(j, "zeta_ref", line_no);
    ex.status_test = ParseStatus(j, line_no);
    ex.truth_positive = ParseTruth(j, "truth", line_no);
    if (!ex.truth_positive) throw ParseError("missing field \"truth\"", line_no);
    if (ex.status_test == FieldStatus::kDefined && !ex.zeta_test) {
      throw ParseError("a defined example needs zeta_test", line_no);
    }
    out.push_back(ex);
  }
  return out;
}

std::vector<ScoredExample> ReadScoresJsonlFile(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return ReadScoresJsonl(in);
}

std::vector<std::vector<double>> ReadAnchorsJsonl(std::istream& in) {
  std::vector<std::vector<double>> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    const json j = ParseLine(line, line_no);
    if (!j.contains("anchor")) throw ParseError("missing field \"anchor\"", line_no);
    out.push_back(NumberArray<double>(j["anchor"], "anchor", line_no));
    if (out.back().empty() || out.back().size() != out.front().size()) {
      throw DimensionError("anchor dimension mismatch", line_no);
    }
  }
  return out;
}

std::vector<std::vector<double>> ReadAnchorsJsonlFile(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return ReadAnchorsJsonl(in);
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string IdMapJson(const IngestResult& result) {
  json j = json::object();
  for (const auto& [id, seq] : result.ids) j[id] = seq;
  return j.dump();
}

std::string OutcomeJson(size_t index, const TriageOutcome& outcome, std::optional<bool> truth) {
  json j;
  j["index"] = index;
  j["label"] = TriageLabelName(outcome.label);
  j["zeta_test"] = Optional(outcome.zeta_test);
  j["zeta_ref"] = Optional(outcome.zeta_ref);
  j["status"] = FieldStatusName(outcome.status_test);
  j["reference"] = outcome.reference ? RefJson(*outcome.reference) : json(nullptr);
  json evidence = json::array();
  for (const RecordRef& r : outcome.evidence) evidence.push_back(RefJson(r));
  j["evidence"] = evidence;
  j["truth"] = TruthJson(truth);
  return j.dump();
}

std::string BaselineScoreJson(size_t index, double score, TriageLabel label,
                              std::optional<bool> truth) {
  json j;
  j["index"] = index;
  j["label"] = TriageLabelName(label);
  j["zeta_test"] = score;
  j["status"] = FieldStatusName(FieldStatus::kDefined);
  j["truth"] = TruthJson(truth);
  return j.dump();
}

std::string MetricsJson(const MetricsReport& m, const ConfusionCounts& c) {
  json j;
  j["precision"] = Optional(m.precision);
  j["recall"] = Optional(m.recall);
  j["f1"] = Optional(m.f1);
  j["mcc"] = Optional(m.mcc);
  j["auc"] = Optional(m.auc);
  j["log_loss"] = Optional(m.log_loss);
  j["coverage"] = Optional(m.coverage);
  j["tp"] = c.tp;
  j["tn"] = c.tn;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["unsure"] = c.unsure;
  j["rejected"] = c.rejected;
  return j.dump();
}

std::string SweepCsv(const SweepResult& sweep) {
  std::string out = "zeta_low,zeta_high,f1,coverage,risk\n";
  for (const SweepCell& c : sweep.cells) {
    out += FormatDouble(c.thresholds.low) + "," + FormatDouble(c.thresholds.high) + "," +
           CsvCell(c.f1) + "," + CsvCell(c.coverage) + "," + CsvCell(c.risk) + "\n";
  }
  return out;
}

std::string SweepSummaryJson(const SweepResult& sweep) {
  json j;
  j["cells"] = sweep.cells.size();
  j["aurc"] = Optional(sweep.aurc);
  return j.dump();
}

std::string CoverageReportJson(size_t anchor_index, const CoverageReport& r) {
  json j;
  j["anchor_index"] = anchor_index;
  j["c50"] = r.coverage[0];
  j["c80"] = r.coverage[1];
  j["c95"] = r.coverage[2];
  j["passed"] = r.passed;
  j["skipped"] = r.skipped;
  j["n_test"] = r.n_test;
  return j.dump();
}

std::string CalibrationSummaryJson(const CalibrationSummary& s) {
  json j;
  j["anchors_total"] = s.anchors_total;
  j["anchors_passed"] = s.anchors_passed;
  j["anchors_skipped"] = s.anchors_skipped;
  j["pass_fraction"] = s.pass_fraction();
  auto triple = [](const std::optional<std::array<double, 3>>& v) {
    return v ? json::array({(*v)[0], (*v)[1], (*v)[2]}) : json(nullptr);
  };
  j["median_errors"] = triple(s.median_errors);
  j["median_coverage"] = triple(s.median_coverage);
  return j.dump();
}

std::string ClusterReportJson(const ClusterDiagnostics& d) {
  double norm2 = 0.0;
  for (double x : d.centroid) norm2 += x * x;
  json j;
  j["cluster_id"] = d.cluster_id;
  j["size"] = d.size;
  j["divergence"] = d.divergence;
  j["circulation"] = d.circulation;
  j["centroid_norm"] = std::sqrt(norm2);
  json refs = json::array();
  for (const RecordRef& r : d.top_member_refs) refs.push_back(RefJson(r));
  j["top_member_refs"] = refs;
  return j.dump();
}

std::string WalkCsv(const std::vector<WalkStep>& path) {
  std::string out = "step,significance,status";
  const size_t dim = path.empty() ? 0 : path.front().point.size();
  for (size_t i = 0; i < dim; ++i) out += ",x" + std::to_string(i);
  out += "\n";
  for (size_t n = 0; n < path.size(); ++n) {
    out += std::to_string(n) + "," + CsvCell(path[n].significance) + "," +
           FieldStatusName(path[n].status);
    for (double x : path[n].point) out += "," + FormatDouble(x);
    out += "\n";
  }
  return out;
}

std::string TrajectoryCsv(double theta, const std::vector<Point2>& path) {
  std::ostringstream out;
  for (size_t i = 0; i < path.size(); ++i) {
    out << FormatDouble(theta) << ',' << i << ',' << FormatDouble(path[i][0]) << ','
        << FormatDouble(path[i][1]) << '\n';
  }
  return out.str();
}

std::string ZetaSeriesCsv(const ExperimentResult& result) {
  std::string out = "step,x,y,zeta\n";
  for (const ZetaSample& s : result.samples) {
    out += std::to_string(s.step) + "," + FormatDouble(s.position[0]) + "," +
           FormatDouble(s.position[1]) + "," + FormatDouble(s.zeta) + "\n";
  }
  return out;
}

}  // namespace cfield
