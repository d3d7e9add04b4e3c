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

#include "cfield/store.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cfield {
namespace {

// File layout, little-endian throughout:
//   "VSDB" u8 version, u32 dim, u64 record_count, u64 sequence_count,
//   then per record: u32 seq_id, u32 position, u8 has_delta,
//   f32[dim] vector, f32[dim] delta (only when has_delta == 1).
constexpr char kMagic[4] = {'V', 'S', 'D', 'B'};
constexpr uint8_t kVersion = 0x01;

void PutU8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutF32s(std::string& out, std::span<const float> values) {
  for (float f : values) PutU32(out, std::bit_cast<uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  size_t offset() const { return offset_; }
  size_t remaining() const { return bytes_.size() - offset_; }

  void Need(size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated shard file while reading ") + what,
                        static_cast<int64_t>(offset_));
    }
  }

  uint8_t U8(const char* what) {
    Need(1, what);
    return static_cast<uint8_t>(bytes_[offset_++]);
  }

  uint32_t U32(const char* what) {
    Need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[offset_ + i])) << (8 * i);
    }
    offset_ += 4;
    return v;
  }

  uint64_t U64(const char* what) {
    Need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[offset_ + i])) << (8 * i);
    }
    offset_ += 8;
    return v;
  }

  void F32s(std::span<float> out, const char* what) {
    Need(out.size() * 4, what);
    for (float& f : out) f = std::bit_cast<float>(U32(what));
  }

 private:
  std::span<const char> bytes_;
  size_t offset_ = 0;
};

}  // namespace

Shard::Shard(uint32_t dim) : dim_(dim) {
  if (dim == 0) throw DimensionError("shard dimension must be positive");
}

void Shard::AppendRecord(uint32_t seq_id, uint32_t position,
                         std::span<const float> vector, const float* next) {
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
  if (next != nullptr) {
    for (uint32_t i = 0; i < dim_; ++i) deltas_.push_back(next[i] - vector[i]);
  } else {
    deltas_.insert(deltas_.end(), dim_, 0.0f);
  }
  has_delta_.push_back(next != nullptr ? 1 : 0);
  seq_ids_.push_back(seq_id);
  positions_.push_back(position);
}

uint32_t Shard::IngestSequence(std::span<const std::vector<float>> vectors) {
  if (sealed_) throw SealedError("shard is sealed");
  if (vectors.empty()) throw EmptySequenceError("cannot ingest an empty sequence");
  for (size_t p = 0; p < vectors.size(); ++p) {
    if (vectors[p].size() != dim_) {
      throw DimensionError("vector " + std::to_string(p) + " has length " +
                           std::to_string(vectors[p].size()) + ", shard dim is " +
                           std::to_string(dim_));
    }
  }
  const auto seq_id = static_cast<uint32_t>(sequences_.size());
  const uint64_t begin = size();
  for (size_t p = 0; p < vectors.size(); ++p) {
    const float* next = p + 1 < vectors.size() ? vectors[p + 1].data() : nullptr;
    AppendRecord(seq_id, static_cast<uint32_t>(p), vectors[p], next);
  }
  sequences_.push_back({begin, size()});
  return seq_id;
}

uint32_t Shard::IngestFlat(std::span<const float> flat, size_t count) {
  if (sealed_) throw SealedError("shard is sealed");
  if (count == 0) throw EmptySequenceError("cannot ingest an empty sequence");
  if (flat.size() != count * dim_) {
    throw DimensionError("flat buffer holds " + std::to_string(flat.size()) +
                         " floats, expected " + std::to_string(count * dim_));
  }
  const auto seq_id = static_cast<uint32_t>(sequences_.size());
  const uint64_t begin = size();
  for (size_t p = 0; p < count; ++p) {
    const float* next = p + 1 < count ? flat.data() + (p + 1) * dim_ : nullptr;
    AppendRecord(seq_id, static_cast<uint32_t>(p), flat.subspan(p * dim_, dim_), next);
  }
  sequences_.push_back({begin, size()});
  return seq_id;
}

VectorRecord Shard::record(uint64_t index) const {
  if (index >= size()) throw NotFoundError("record index out of range");
  VectorRecord r;
  auto v = vector(index);
  r.vector.assign(v.begin(), v.end());
  r.seq_id = seq_ids_[index];
  r.position = positions_[index];
  if (has_delta(index)) {
    auto d = delta(index);
    r.delta.emplace(d.begin(), d.end());
  }
  return r;
}

SequenceRange Shard::sequence_range(uint32_t seq_id) const {
  if (seq_id >= sequences_.size()) {
    throw NotFoundError("unknown sequence id " + std::to_string(seq_id));
  }
  return sequences_[seq_id];
}

std::vector<VectorRecord> Shard::GetSequence(uint32_t seq_id) const {
  const SequenceRange range = sequence_range(seq_id);
  std::vector<VectorRecord> out;
  out.reserve(range.size());
  for (uint64_t i = range.begin; i < range.end; ++i) out.push_back(record(i));
  return out;
}

std::string Shard::Serialize() const {
  std::string out;
  uint64_t delta_count = 0;
  for (uint8_t h : has_delta_) delta_count += h;
  out.reserve(kHeaderSize + size() * 9 + (size() + delta_count) * dim_ * 4);
  out.append(kMagic, sizeof(kMagic));
  PutU8(out, kVersion);
  PutU32(out, dim_);
  PutU64(out, size());
  PutU64(out, sequence_count());
  for (uint64_t i = 0; i < size(); ++i) {
    PutU32(out, seq_ids_[i]);
    PutU32(out, positions_[i]);
    PutU8(out, has_delta_[i]);
    PutF32s(out, vector(i));
    if (has_delta_[i]) PutF32s(out, delta(i));
  }
  return out;
}

Shard Shard::Deserialize(std::span<const char> bytes) {
  Reader in(bytes);
  in.Need(sizeof(kMagic), "magic");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad magic bytes", 0);
  }
  in.U32("magic");
  const size_t version_offset = in.offset();
  if (in.U8("version") != kVersion) {
    throw FormatError("unsupported shard version", static_cast<int64_t>(version_offset));
  }
  const size_t dim_offset = in.offset();
  const uint32_t dim = in.U32("dim");
  if (dim == 0) throw FormatError("shard dimension is zero", static_cast<int64_t>(dim_offset));
  const uint64_t record_count = in.U64("record_count");
  const uint64_t sequence_count = in.U64("sequence_count");

  // A record is at least 9 + 4*dim bytes; reject impossible counts before
  // reserving memory.
  const uint64_t min_record = 9 + 4ull * dim;
  if (record_count > in.remaining() / min_record) {
    throw FormatError("record_count exceeds file size", static_cast<int64_t>(in.offset()));
  }

  Shard shard(dim);
  shard.vectors_.reserve(record_count * dim);
  shard.deltas_.reserve(record_count * dim);
  std::vector<float> vec(dim), del(dim);
  bool expect_continuation = false;
  uint64_t seq_begin = 0;
  for (uint64_t i = 0; i < record_count; ++i) {
    const size_t record_offset = in.offset();
    const uint32_t seq_id = in.U32("seq_id");
    const uint32_t position = in.U32("position");
    const size_t flag_offset = in.offset();
    const uint8_t has_delta = in.U8("has_delta");
    if (has_delta > 1) {
      throw FormatError("has_delta flag must be 0 or 1", static_cast<int64_t>(flag_offset));
    }
    const auto current_seq = static_cast<uint32_t>(shard.sequences_.size());
    if (expect_continuation) {
      if (seq_id != current_seq || position != shard.positions_.back() + 1) {
        throw FormatError("sequence records are not contiguous",
                          static_cast<int64_t>(record_offset));
      }
    } else if (seq_id != current_seq || position != 0) {
      throw FormatError("sequence must start at position 0 with the next dense id",
                        static_cast<int64_t>(record_offset));
    }
    if (expect_continuation) {
      // The previous record's delta must point at this vector.
      const size_t vec_offset = in.offset();
      in.F32s(vec, "vector");
      const uint64_t prev = shard.size() - 1;
      for (uint32_t c = 0; c < dim; ++c) {
        const float expected = vec[c] - shard.vectors_[prev * dim + c];
        if (std::bit_cast<uint32_t>(expected) !=
            std::bit_cast<uint32_t>(shard.deltas_[prev * dim + c])) {
          throw FormatError("stored delta does not match consecutive vectors",
                            static_cast<int64_t>(vec_offset));
        }
      }
    } else {
      seq_begin = shard.size();
      in.F32s(vec, "vector");
    }
    shard.vectors_.insert(shard.vectors_.end(), vec.begin(), vec.end());
    if (has_delta) {
      in.F32s(del, "delta");
      shard.deltas_.insert(shard.deltas_.end(), del.begin(), del.end());
    } else {
      shard.deltas_.insert(shard.deltas_.end(), dim, 0.0f);
    }
    shard.has_delta_.push_back(has_delta);
    shard.seq_ids_.push_back(seq_id);
    shard.positions_.push_back(position);
    expect_continuation = has_delta == 1;
    if (!expect_continuation) shard.sequences_.push_back({seq_begin, shard.size()});
  }
  if (expect_continuation) {
    throw FormatError("final sequence is missing its last record",
                      static_cast<int64_t>(in.offset()));
  }
  if (shard.sequences_.size() != sequence_count) {
    throw FormatError("sequence_count does not match records", 4 + 1 + 4 + 8);
  }
  if (in.remaining() != 0) {
    throw FormatError("trailing bytes after last record", static_cast<int64_t>(in.offset()));
  }
  shard.sealed_ = true;
  return shard;
}

void Shard::Save(const std::string& path) const {
  const std::string bytes = Serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

Shard Shard::Load(const std::string& path, uint32_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Shard shard = Deserialize(bytes);
  if (expected_dim != 0 && shard.dim() != expected_dim) {
    throw FormatError("shard dim " + std::to_string(shard.dim()) + " does not match expected " +
                          std::to_string(expected_dim),
                      5);
  }
  return shard;
}

uint32_t CommonDim(std::span<const Shard> shards) {
  if (shards.empty()) return 0;
  const uint32_t dim = shards.front().dim();
  for (const Shard& s : shards) {
    if (s.dim() != dim) throw DimensionError("shards disagree on dimension");
  }
  return dim;
}

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kDimension: return "DimensionError";
    case ErrorCode::kEmptySequence: return "EmptySequenceError";
    case ErrorCode::kNotFound: return "NotFoundError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kParameter: return "ParameterError";
    case ErrorCode::kFieldUndefined: return "FieldUndefinedError";
    case ErrorCode::kStoreEmpty: return "StoreEmptyError";
    case ErrorCode::kDegenerateCluster: return "DegenerateClusterError";
    case ErrorCode::kNoSupport: return "NoSupportError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kSealed: return "SealedError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace cfield
