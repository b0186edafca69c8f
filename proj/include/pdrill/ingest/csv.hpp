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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/core/value.hpp"

namespace pdrill {

/// One CSV record. An empty unquoted field is nullopt; "" is an empty string.
struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::optional<std::string>> fields;
};

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<CsvRecord> records;
};

/// RFC 4180 reader: comma separated, CRLF or LF line ends, double quotes
/// with "" escapes, quoted fields may span lines. Blank lines are skipped.
inline CsvDocument parse_csv(std::string_view text, char delimiter = ',') {
  CsvDocument doc;
  std::size_t i = 0;
  std::size_t line = 1;
  const std::size_t n = text.size();
  if (n >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  auto fail = [&](std::size_t at, const std::string& msg) -> void {
    throw Error(ErrorCode::kParse, "line " + std::to_string(at) + ": " + msg, at);
  };

  bool first = true;
  while (i < n) {
    if (text[i] == '\n' || text[i] == '\r') {
      if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
      continue;
    }
    CsvRecord rec;
    rec.line = line;
    while (true) {
      std::optional<std::string> field;
      if (i < n && text[i] == '"') {
        const std::size_t open_line = line;
        std::string v;
        ++i;
        bool closed = false;
        while (i < n) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              v.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          v.push_back(c);
          ++i;
        }
        if (!closed) fail(open_line, "unterminated quoted field");
        if (i < n && text[i] != delimiter && text[i] != '\n' && text[i] != '\r') {
          fail(line, "unexpected character after closing quote");
        }
        field = std::move(v);
      } else {
        const std::size_t start = i;
        while (i < n && text[i] != delimiter && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') fail(line, "quote inside unquoted field");
          ++i;
        }
        if (i > start) field = std::string(text.substr(start, i - start));
      }
      rec.fields.push_back(std::move(field));
      if (i < n && text[i] == delimiter) {
        ++i;
        continue;
      }
      break;
    }
    if (i < n) {
      if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
    }
    if (first) {
      for (auto& f : rec.fields) {
        if (!f || f->empty()) fail(rec.line, "empty column name in header");
        doc.header.push_back(std::move(*f));
      }
      first = false;
      continue;
    }
    if (rec.fields.size() != doc.header.size()) {
      fail(rec.line, "expected " + std::to_string(doc.header.size()) + " fields, found " +
                         std::to_string(rec.fields.size()));
    }
    doc.records.push_back(std::move(rec));
  }
  if (first) throw Error(ErrorCode::kParse, "line 1: missing header", std::size_t{1});
  return doc;
}

/// Parses "name:type,name:type" into per-column kind overrides.
inline std::map<std::string, ValueKind> parse_schema_overrides(std::string_view decl) {
  std::map<std::string, ValueKind> out;
  std::size_t pos = 0;
  while (pos <= decl.size() && !decl.empty()) {
    std::size_t end = decl.find(',', pos);
    if (end == std::string_view::npos) end = decl.size();
    std::string_view item = decl.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorCode::kInvalidArgument, "schema entry '" + std::string(item) + "' is not name:type");
    }
    const auto kind = kind_from_name(item.substr(colon + 1));
    if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown type in schema entry '" + std::string(item) + "'");
    out[std::string(item.substr(0, colon))] = *kind;
    pos = end + 1;
    if (end == decl.size()) break;
  }
  return out;
}

/// Narrowest kind that parses every non-null cell: i64, f64, date,
/// timestamp, else str. An all-null column is str.
inline ValueKind infer_kind(const CsvDocument& doc, std::size_t column) {
  constexpr ValueKind kOrder[] = {ValueKind::kI64, ValueKind::kF64, ValueKind::kDate, ValueKind::kTimestamp};
  std::size_t candidate = 0;
  bool any = false;
  for (const auto& rec : doc.records) {
    const auto& f = rec.fields[column];
    if (!f) continue;
    any = true;
    while (candidate < std::size(kOrder) && !parse_value(*f, kOrder[candidate])) ++candidate;
    if (candidate == std::size(kOrder)) return ValueKind::kStr;
  }
  return any ? kOrder[candidate] : ValueKind::kStr;
}

/// Types a parsed document. Kinds come from `overrides` where given and are
/// inferred otherwise; a field is nullable iff some cell is empty.
inline Table csv_to_table(const CsvDocument& doc, const std::string& table_name,
                          const std::map<std::string, ValueKind>& overrides = {}) {
  Table t;
  t.schema.table_name = table_name;
  for (const auto& [name, kind] : overrides) {
    bool found = false;
    for (const auto& h : doc.header) found = found || h == name;
    if (!found) throw Error(ErrorCode::kInvalidArgument, "schema names unknown column '" + name + "'");
  }
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    Field f;
    f.name = doc.header[c];
    auto it = overrides.find(f.name);
    f.kind = it != overrides.end() ? it->second : infer_kind(doc, c);
    f.nullable = false;
    for (const auto& rec : doc.records) f.nullable = f.nullable || !rec.fields[c];
    t.schema.fields.push_back(f);
  }
  t.schema.validate();
  t.columns.resize(doc.header.size());
  for (auto& col : t.columns) col.reserve(doc.records.size());
  for (const auto& rec : doc.records) {
    for (std::size_t c = 0; c < rec.fields.size(); ++c) {
      const auto& cell = rec.fields[c];
      if (!cell) {
        t.columns[c].push_back(Value::null());
        continue;
      }
      auto v = parse_value(*cell, t.schema.fields[c].kind);
      if (!v) {
        throw Error(ErrorCode::kTypeMismatch,
                    "line " + std::to_string(rec.line) + ": column '" + doc.header[c] + "': cannot read '" + *cell +
                        "' as " + kind_name(t.schema.fields[c].kind),
                    rec.line);
      }
      t.columns[c].push_back(std::move(*v));
    }
  }
  return t;
}

}  // namespace pdrill
