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
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/store/dictionary.hpp"
#include "pdrill/store/elements.hpp"

namespace pdrill {

/// Half-open row range [begin, end) of one chunk.
struct ChunkRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ChunkRange&, const ChunkRange&) = default;
};

struct ColumnChunk {
  ChunkDictionary dict;
  Elements elems;

  std::uint32_t global_id(std::size_t row) const { return dict.global_ids[elems[row]]; }
  std::size_t byte_size() const { return dict.byte_size() + 1 + elems.payload_bytes(); }

  friend bool operator==(const ColumnChunk&, const ColumnChunk&) = default;
};

/// One column of a shard: its global dictionary plus one ColumnChunk per
/// shard chunk.
struct Column {
  GlobalDictionary dict;
  std::vector<ColumnChunk> chunks;

  Value decode(std::size_t chunk, std::size_t row) const {
    if (chunk >= chunks.size()) throw Error(ErrorCode::kIndexOutOfRange, "chunk " + std::to_string(chunk) + " out of range");
    const ColumnChunk& cc = chunks[chunk];
    if (row >= cc.elems.size()) throw Error(ErrorCode::kIndexOutOfRange, "row " + std::to_string(row) + " out of range");
    return dict.value_at(cc.dict.global_id_at(cc.elems[row]));
  }

  std::size_t elements_bytes() const {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.elems.payload_bytes();
    return n;
  }
  std::size_t chunk_dict_bytes() const {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.dict.byte_size();
    return n;
  }

  friend bool operator==(const Column&, const Column&) = default;
};

struct EncodeOptions {
  ElementsPolicy elements = ElementsPolicy::kAdaptive;
  DictRepr string_dict = DictRepr::kTrie;
};

/// Double dictionary encoding of one column: value -> global-id (rank in the
/// sorted distinct values) -> chunk-id (rank within the chunk's global-ids).
/// `chunks` must tile [0, values.size()) contiguously with non-empty ranges.
inline Column encode_column(std::span<const Value> values, ValueKind kind, std::span<const ChunkRange> chunks,
                            const EncodeOptions& options = {}) {
  std::size_t expect = 0;
  for (const auto& c : chunks) {
    if (c.begin != expect || c.end <= c.begin) {
      throw Error(ErrorCode::kInvalidArgument, "chunk boundaries must tile the rows with non-empty ranges");
    }
    expect = c.end;
  }
  if (expect != values.size()) throw Error(ErrorCode::kInvalidArgument, "chunk boundaries do not cover all rows");

  // Provisional ids in first-seen order, then ranks.
  std::unordered_map<Value, std::uint32_t, ValueHasher> seen;
  std::vector<Value> distinct;
  std::vector<std::uint32_t> provisional(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    const Value& v = values[r];
    if (!v.is_null() && v.kind() != kind) {
      throw Error(ErrorCode::kSchemaViolation, std::string("value of kind ") + kind_name(v.kind()) + " at row " +
                                                   std::to_string(r) + " in " + kind_name(kind) + " column");
    }
    auto [it, inserted] = seen.try_emplace(v, static_cast<std::uint32_t>(distinct.size()));
    if (inserted) distinct.push_back(v);
    provisional[r] = it->second;
  }
  std::vector<std::uint32_t> order(distinct.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return distinct[a] < distinct[b]; });
  std::vector<std::uint32_t> rank(distinct.size());
  std::vector<Value> sorted;
  sorted.reserve(distinct.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    rank[order[i]] = i;
    sorted.push_back(std::move(distinct[order[i]]));
  }

  Column col;
  const DictRepr repr = kind == ValueKind::kStr ? options.string_dict : DictRepr::kSortedArray;
  col.dict = GlobalDictionary::from_sorted(kind, std::move(sorted), repr);

  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> local(rank.size(), kUnset);
  std::vector<std::uint32_t> ids;
  col.chunks.reserve(chunks.size());
  for (const auto& range : chunks) {
    ColumnChunk cc;
    auto& gids = cc.dict.global_ids;
    for (std::size_t r = range.begin; r < range.end; ++r) {
      const std::uint32_t g = rank[provisional[r]];
      if (local[g] == kUnset) {
        local[g] = 0;
        gids.push_back(g);
      }
    }
    std::sort(gids.begin(), gids.end());
    for (std::uint32_t i = 0; i < gids.size(); ++i) local[gids[i]] = i;
    ids.resize(range.size());
    for (std::size_t r = range.begin; r < range.end; ++r) ids[r - range.begin] = local[rank[provisional[r]]];
    cc.elems = Elements::encode(ids, gids.size(), options.elements);
    for (const auto g : gids) local[g] = kUnset;
    col.chunks.push_back(std::move(cc));
  }
  return col;
}

/// Inverse of encode_column: the values of every row in order.
inline std::vector<Value> decode_column(const Column& col) {
  std::vector<Value> out;
  std::vector<Value> dict = col.dict.values();
  for (const auto& cc : col.chunks) {
    cc.elems.view().for_each([&](std::size_t, std::uint32_t cid) { out.push_back(dict[cc.dict.global_ids[cid]]); });
  }
  return out;
}

}  // namespace pdrill
