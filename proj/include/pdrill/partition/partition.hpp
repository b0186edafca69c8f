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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/store/column.hpp"

namespace pdrill {

inline constexpr std::size_t kDefaultMaxChunkRows = 50000;

struct PartitionSpec {
  std::vector<std::string> fields;
  std::size_t max_chunk_rows = kDefaultMaxChunkRows;

  void validate(const Schema& schema) const {
    if (max_chunk_rows < 1) throw Error(ErrorCode::kInvalidArgument, "max_chunk_rows must be at least 1");
    for (const auto& f : fields) schema.require(f);
  }
};

/// Stable lexicographic sort of the rows by the spec fields.
inline std::vector<std::size_t> reorder_rows(const Table& table, const PartitionSpec& spec) {
  std::vector<const std::vector<Value>*> keys;
  for (const auto& f : spec.fields) keys.push_back(&table.columns[table.schema.require(f)]);
  std::vector<std::size_t> perm(table.row_count());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    for (const auto* col : keys) {
      const int c = compare((*col)[a], (*col)[b]);
      if (c != 0) return c < 0;
    }
    return false;
  });
  return perm;
}

inline Table apply_permutation(const Table& table, const std::vector<std::size_t>& perm) {
  Table out;
  out.schema = table.schema;
  out.columns.resize(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out.columns[c].reserve(perm.size());
    for (auto r : perm) out.columns[c].push_back(table.columns[c][r]);
  }
  return out;
}

/// Heaviest-first composite range partitioning of rows already ordered by
/// reorder_rows. Chunks whose spec fields are all single-valued stay
/// oversized.
inline std::vector<ChunkRange> partition(const Table& table, const PartitionSpec& spec) {
  spec.validate(table.schema);
  const std::size_t n = table.row_count();
  std::vector<ChunkRange> done;
  if (n == 0) return done;
  std::vector<const std::vector<Value>*> keys;
  for (const auto& f : spec.fields) keys.push_back(&table.columns[table.schema.require(f)]);

  auto heavier = [](const ChunkRange& a, const ChunkRange& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.begin > b.begin;
  };
  std::priority_queue<ChunkRange, std::vector<ChunkRange>, decltype(heavier)> pending(heavier);
  pending.push({0, n});

  while (!pending.empty()) {
    const ChunkRange c = pending.top();
    if (c.size() <= spec.max_chunk_rows) break;
    pending.pop();
    // All earlier spec fields are single-valued here, so the first field with
    // two distinct values is sorted within the chunk.
    const std::vector<Value>* col = nullptr;
    for (const auto* k : keys) {
      if (compare((*k)[c.begin], (*k)[c.end - 1]) != 0) {
        col = k;
        break;
      }
    }
    if (col == nullptr) {
      done.push_back(c);
      continue;
    }
    const auto first = col->begin() + static_cast<std::ptrdiff_t>(c.begin);
    const auto last = col->begin() + static_cast<std::ptrdiff_t>(c.end);
    const Value& mid_value = (*col)[c.begin + c.size() / 2];
    const std::size_t lo = static_cast<std::size_t>(std::lower_bound(first, last, mid_value) - col->begin());
    const std::size_t hi = static_cast<std::size_t>(std::upper_bound(first, last, mid_value) - col->begin());
    // Distance to the midpoint in doubled units; ties go to the later cut.
    const auto dist = [&](std::size_t p) {
      const long long twice = 2 * static_cast<long long>(p) - static_cast<long long>(2 * c.begin + c.size());
      return twice < 0 ? -twice : twice;
    };
    std::size_t cut;
    if (lo == c.begin) {
      cut = hi;
    } else if (hi == c.end) {
      cut = lo;
    } else {
      cut = dist(hi) <= dist(lo) ? hi : lo;
    }
    pending.push({c.begin, cut});
    pending.push({cut, c.end});
  }
  while (!pending.empty()) {
    done.push_back(pending.top());
    pending.pop();
  }
  std::sort(done.begin(), done.end(), [](const ChunkRange& a, const ChunkRange& b) { return a.begin < b.begin; });
  return done;
}

/// Per-chunk [min, max] of each spec field; diagnostic only.
struct ChunkRangeMeta {
  std::vector<std::pair<Value, Value>> bounds;  // aligned with spec.fields
};

inline std::vector<ChunkRangeMeta> chunk_range_meta(const Table& table, const PartitionSpec& spec,
                                                    const std::vector<ChunkRange>& chunks) {
  std::vector<ChunkRangeMeta> out;
  for (const auto& c : chunks) {
    ChunkRangeMeta m;
    for (const auto& f : spec.fields) {
      const auto& col = table.columns[table.schema.require(f)];
      auto [lo, hi] = std::minmax_element(col.begin() + static_cast<std::ptrdiff_t>(c.begin),
                                          col.begin() + static_cast<std::ptrdiff_t>(c.end));
      m.bounds.emplace_back(*lo, *hi);
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace pdrill
