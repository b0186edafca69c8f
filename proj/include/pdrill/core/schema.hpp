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
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/value.hpp"

namespace pdrill {

struct Field {
  std::string name;
  ValueKind kind = ValueKind::kStr;
  bool nullable = true;

  friend bool operator==(const Field&, const Field&) = default;
};

struct Schema {
  std::string table_name;
  std::vector<Field> fields;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw Error(ErrorCode::kInvalidArgument, "unknown field '" + std::string(name) + "'");
    return *idx;
  }

  void validate() const {
    if (fields.empty()) throw Error(ErrorCode::kSchemaViolation, "schema has no fields");
    std::unordered_set<std::string> seen;
    for (const auto& f : fields) {
      if (f.name.empty()) throw Error(ErrorCode::kSchemaViolation, "empty field name");
      if (f.kind == ValueKind::kNull) throw Error(ErrorCode::kSchemaViolation, "field '" + f.name + "' has kind null");
      if (!seen.insert(f.name).second) throw Error(ErrorCode::kSchemaViolation, "duplicate field '" + f.name + "'");
    }
  }

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// Column-major table of decoded values; the common currency between the
/// CSV reader, the import pipeline and the row-scan oracle.
struct Table {
  Schema schema;
  std::vector<std::vector<Value>> columns;

  std::size_t row_count() const { return columns.empty() ? 0 : columns.front().size(); }

  std::vector<Value> row(std::size_t r) const {
    std::vector<Value> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c[r]);
    return out;
  }
};

}  // namespace pdrill
