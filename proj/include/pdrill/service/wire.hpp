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

#include <cmath>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/engine.hpp"

namespace pdrill {

/// JSON form of a result cell:
///   str        string
///   i64        number when |v| <= 2^53, else decimal string
///   f64        number; NaN and infinities as "NaN", "Infinity", "-Infinity"
///   date       "YYYY-MM-DD"
///   timestamp  epoch seconds, number
///   null       null
inline nlohmann::json value_to_json(const Value& v) {
  constexpr std::int64_t kExact = std::int64_t{1} << 53;
  switch (v.kind()) {
    case ValueKind::kNull: return nullptr;
    case ValueKind::kStr: return v.as_str();
    case ValueKind::kI64: {
      const std::int64_t x = v.as_i64();
      if (x >= -kExact && x <= kExact) return x;
      return std::to_string(x);
    }
    case ValueKind::kF64: {
      const double d = v.as_f64();
      if (std::isnan(d)) return "NaN";
      if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
      return d;
    }
    case ValueKind::kDate: return format_date(v.as_date());
    case ValueKind::kTimestamp: return v.as_timestamp();
  }
  return nullptr;
}

inline nlohmann::json stats_to_json(const QueryStats& s, bool trace = false) {
  nlohmann::json j = {{"shards", s.shards},
                      {"chunks_total", s.chunks_total},
                      {"chunks_skipped", s.chunks_skipped},
                      {"chunks_cached", s.chunks_cached},
                      {"chunks_scanned", s.chunks_scanned},
                      {"chunks_fully_active", s.chunks_fully_active},
                      {"chunks_partial", s.chunks_partial},
                      {"rows_total", s.rows_total},
                      {"rows_skipped", s.rows_skipped},
                      {"rows_cached", s.rows_cached},
                      {"rows_scanned", s.rows_scanned},
                      {"rows_matched", s.rows_matched},
                      {"groups", s.groups},
                      {"keys_materialized", s.keys_materialized},
                      {"virtual_fields_created", s.virtual_fields_created},
                      {"skipped_fraction", s.skipped_fraction()},
                      {"cached_fraction", s.cached_fraction()},
                      {"scanned_fraction", s.scanned_fraction()},
                      {"latency_ms", s.latency_ms}};
  if (trace) {
    auto& t = j["trace"] = nlohmann::json::array();
    for (const auto& c : s.trace) {
      t.push_back({{"shard", c.shard},
                   {"chunk", c.chunk},
                   {"status", chunk_status_name(c.status)},
                   {"cached", c.cached},
                   {"rows", c.rows}});
    }
  }
  return j;
}

inline nlohmann::json result_to_json(const ResultSet& r) {
  nlohmann::json j;
  auto& cols = j["columns"] = nlohmann::json::array();
  for (const auto& c : r.columns) cols.push_back({{"name", c.name}, {"type", kind_name(c.kind)}});
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    auto& out = rows.emplace_back(nlohmann::json::array());
    for (const auto& v : row) out.push_back(value_to_json(v));
  }
  return j;
}

/// RFC 4180 output with a header line; NULL is an empty field.
inline std::string result_to_csv(const ResultSet& r) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos && !s.empty()) return s;
    if (s.empty()) return std::string("\"\"");
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  std::string out;
  for (std::size_t c = 0; c < r.columns.size(); ++c) out += (c ? "," : "") + field(r.columns[c].name);
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      if (!row[c].is_null()) out += field(row[c].to_string());
    }
    out += "\n";
  }
  return out;
}

}  // namespace pdrill
