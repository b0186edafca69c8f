// Copyright 2026 The pdrill Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pdrill {

enum class ErrorCode {
  kInvalidArgument,
  kSchemaViolation,
  kIndexOutOfRange,
  kTypeMismatch,
  kSyntax,
  kUnknownFunction,
  kUnsupported,
  kParse,           // CSV and other text input
  kBadMagic,
  kBadVersion,
  kTruncated,
  kChecksumMismatch,
  kCorrupt,
  kIo,
  kDistributed,
  kTimeout,
  kInternal,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kSchemaViolation: return "schema_violation";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kTypeMismatch: return "type_mismatch";
    case ErrorCode::kSyntax: return "syntax_error";
    case ErrorCode::kUnknownFunction: return "unknown_function";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kBadVersion: return "bad_version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kDistributed: return "distributed_error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. `position` is set
/// for errors that point into a text input (SQL byte offset, CSV line).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::size_t>& position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace pdrill
