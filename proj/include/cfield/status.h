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

#ifndef CFIELD_STATUS_H_
#define CFIELD_STATUS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfield {

// Values mirror cf_status in the C header.
enum class ErrorCode : int {
  kOk = 0,
  kDimension = 1,
  kEmptySequence = 2,
  kNotFound = 3,
  kFormat = 4,
  kParameter = 5,
  kFieldUndefined = 6,
  kStoreEmpty = 7,
  kDegenerateCluster = 8,
  kNoSupport = 9,
  kIo = 10,
  kParse = 11,
  kSealed = 12,
  kInternal = 99,
};

const char* ErrorCodeName(ErrorCode code);

// Base of every error thrown by the core. `location` is a byte offset for
// shard files, a 1-based line number for text inputs, and -1 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int64_t location = -1)
      : std::runtime_error(message), code_(code), location_(location) {}

  ErrorCode code() const { return code_; }
  int64_t location() const { return location_; }

 private:
  ErrorCode code_;
  int64_t location_;
};

#define CFIELD_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message, int64_t location = -1)      \
        : Error(ErrorCode::Code, message, location) {}                    \
  };

CFIELD_DEFINE_ERROR(DimensionError, kDimension)
CFIELD_DEFINE_ERROR(EmptySequenceError, kEmptySequence)
CFIELD_DEFINE_ERROR(NotFoundError, kNotFound)
CFIELD_DEFINE_ERROR(FormatError, kFormat)
CFIELD_DEFINE_ERROR(ParameterError, kParameter)
CFIELD_DEFINE_ERROR(StoreEmptyError, kStoreEmpty)
CFIELD_DEFINE_ERROR(DegenerateClusterError, kDegenerateCluster)
CFIELD_DEFINE_ERROR(NoSupportError, kNoSupport)
CFIELD_DEFINE_ERROR(IoError, kIo)
CFIELD_DEFINE_ERROR(ParseError, kParse)
CFIELD_DEFINE_ERROR(SealedError, kSealed)

#undef CFIELD_DEFINE_ERROR

}  // namespace cfield

#endif  // CFIELD_STATUS_H_
