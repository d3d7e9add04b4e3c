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

// Vector sequence storage. A Shard holds sequences of fixed-dimension
// float32 vectors; every record carries its sequence id, its position inside
// the sequence and the materialized delta to the next vector (absent for the
// final position).
//
// Records live in flat column arrays so that scans stay cache friendly; the
// VectorRecord value type is only materialized on request.

#ifndef CFIELD_STORE_H_
#define CFIELD_STORE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfield/status.h"

namespace cfield {

// Global address of a record: shard position in a shard list plus the record
// index inside that shard.
struct RecordRef {
  uint32_t shard = 0;
  uint64_t index = 0;

  friend bool operator==(const RecordRef&, const RecordRef&) = default;
  friend auto operator<=>(const RecordRef&, const RecordRef&) = default;
};

struct VectorRecord {
  std::vector<float> vector;
  uint32_t seq_id = 0;
  uint32_t position = 0;
  std::optional<std::vector<float>> delta;
};

struct SequenceRange {
  uint64_t begin = 0;
  uint64_t end = 0;  // exclusive
  uint64_t size() const { return end - begin; }
};

class Shard {
 public:
  explicit Shard(uint32_t dim);

  uint32_t dim() const { return dim_; }
  uint64_t size() const { return seq_ids_.size(); }
  uint64_t sequence_count() const { return sequences_.size(); }
  bool sealed() const { return sealed_; }

  // Appends one sequence and returns its dense, shard-local id. Rejects empty
  // input (EmptySequenceError), wrong-length vectors (DimensionError) and
  // writes after Seal() (SealedError).
  uint32_t IngestSequence(std::span<const std::vector<float>> vectors);
  // Same, for `count` vectors laid out row-major in `flat`.
  uint32_t IngestFlat(std::span<const float> flat, size_t count);

  void Seal() { sealed_ = true; }

  std::span<const float> vector(uint64_t index) const {
    return {vectors_.data() + index * dim_, dim_};
  }
  // Empty span when the record is the last of its sequence.
  std::span<const float> delta(uint64_t index) const {
    if (!has_delta_[index]) return {};
    return {deltas_.data() + index * dim_, dim_};
  }
  bool has_delta(uint64_t index) const { return has_delta_[index] != 0; }
  uint32_t seq_id(uint64_t index) const { return seq_ids_[index]; }
  uint32_t position(uint64_t index) const { return positions_[index]; }

  VectorRecord record(uint64_t index) const;

  // Throws NotFoundError for unknown ids.
  SequenceRange sequence_range(uint32_t seq_id) const;
  std::vector<VectorRecord> GetSequence(uint32_t seq_id) const;

  // Serialized form; see WriteTo for the layout.
  std::string Serialize() const;
  static Shard Deserialize(std::span<const char> bytes);

  void Save(const std::string& path) const;
  // `expected_dim` of 0 accepts whatever dimension the header declares.
  static Shard Load(const std::string& path, uint32_t expected_dim = 0);

  static constexpr size_t kHeaderSize = 4 + 1 + 4 + 8 + 8;

 private:
  void AppendRecord(uint32_t seq_id, uint32_t position,
                    std::span<const float> vector, const float* next);

  uint32_t dim_;
  bool sealed_ = false;
  std::vector<float> vectors_;
  std::vector<float> deltas_;  // zero rows where has_delta_ is 0
  std::vector<uint8_t> has_delta_;
  std::vector<uint32_t> seq_ids_;
  std::vector<uint32_t> positions_;
  std::vector<SequenceRange> sequences_;  // indexed by seq_id
};

// Checks that every shard in a set shares `dim`; returns that dim (0 for an
// empty set).
uint32_t CommonDim(std::span<const Shard> shards);

}  // namespace cfield

#endif  // CFIELD_STORE_H_
