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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/store/column.hpp"

namespace pdrill {

/// A materialized expression column, encoded in the owning shard's chunk
/// layout.
struct VirtualColumn {
  std::string key;  // canonical expression text; also the field name
  ValueKind kind = ValueKind::kStr;
  Column column;
};

/// Per-shard registry of virtual fields. First-time materialization of a key
/// runs exactly once even under concurrent requests; later lookups return
/// the published column.
class VirtualFieldRegistry {
 public:
  template <typename Make>
  std::shared_ptr<const VirtualColumn> get_or_create(const std::string& key, Make&& make) {
    std::shared_ptr<Slot> slot;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto& s = slots_[key];
      if (!s) s = std::make_shared<Slot>();
      slot = s;
    }
    std::call_once(slot->once, [&] {
      evaluations_.fetch_add(1, std::memory_order_relaxed);
      slot->column = std::make_shared<const VirtualColumn>(make());
    });
    return slot->column;
  }

  std::shared_ptr<const VirtualColumn> find(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = slots_.find(key);
    if (it == slots_.end()) return nullptr;
    return it->second->column;
  }

  std::vector<std::string> keys() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    for (const auto& [k, s] : slots_) {
      if (s->column) out.push_back(k);
    }
    return out;
  }

  /// Number of materializations performed (not lookups).
  std::uint64_t evaluations() const { return evaluations_.load(std::memory_order_relaxed); }

 private:
  struct Slot {
    std::once_flag once;
    std::shared_ptr<const VirtualColumn> column;
  };
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> evaluations_{0};
};

/// A horizontal slice of a table: per-column global dictionaries plus the
/// chunk layout shared by all columns. Immutable once built, apart from the
/// virtual field registry.
class Shard {
 public:
  Shard() : virtual_fields_(std::make_shared<VirtualFieldRegistry>()) {}

  std::uint32_t shard_id = 0;
  Schema schema;
  std::vector<Column> columns;           // aligned with schema.fields
  std::vector<std::uint32_t> chunk_rows;  // row count per chunk

  std::size_t chunk_count() const { return chunk_rows.size(); }
  std::size_t row_count() const {
    std::size_t n = 0;
    for (auto r : chunk_rows) n += r;
    return n;
  }

  const Column& column(std::string_view field) const { return columns[schema.require(field)]; }

  /// dict(chunk.dict(chunk.elems[row])) for a base column.
  Value decode_element(std::string_view field, std::size_t chunk, std::size_t row) const {
    return column(field).decode(chunk, row);
  }

  /// Reconstructs the shard's rows in stored order.
  Table decode_table() const {
    Table t;
    t.schema = schema;
    for (const auto& c : columns) t.columns.push_back(decode_column(c));
    return t;
  }

  VirtualFieldRegistry& virtual_fields() const { return *virtual_fields_; }

  /// Structural equality; the virtual field registry is query-time state and
  /// does not participate.
  friend bool operator==(const Shard& a, const Shard& b) {
    return a.shard_id == b.shard_id && a.schema == b.schema && a.columns == b.columns && a.chunk_rows == b.chunk_rows;
  }

 private:
  std::shared_ptr<VirtualFieldRegistry> virtual_fields_;
};

/// Encodes an already ordered table into a shard with the given chunking.
inline Shard build_shard(std::uint32_t shard_id, const Table& table, std::span<const ChunkRange> chunks,
                         const EncodeOptions& options = {}) {
  table.schema.validate();
  if (table.columns.size() != table.schema.fields.size()) {
    throw Error(ErrorCode::kSchemaViolation, "table column count does not match schema");
  }
  Shard s;
  s.shard_id = shard_id;
  s.schema = table.schema;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    const Field& f = table.schema.fields[i];
    if (table.columns[i].size() != table.row_count()) {
      throw Error(ErrorCode::kSchemaViolation, "column '" + f.name + "' has a different row count");
    }
    if (!f.nullable) {
      for (const auto& v : table.columns[i]) {
        if (v.is_null()) throw Error(ErrorCode::kSchemaViolation, "null in non-nullable field '" + f.name + "'");
      }
    }
    s.columns.push_back(encode_column(table.columns[i], f.kind, chunks, options));
  }
  for (const auto& c : chunks) s.chunk_rows.push_back(static_cast<std::uint32_t>(c.size()));
  return s;
}

}  // namespace pdrill
