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
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/partition/partition.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill {

inline constexpr std::size_t kDefaultShardRows = 10000;
inline constexpr std::uint64_t kDefaultShardSeed = 0x2545f4914f6cdd1dull;

/// Row indices per shard. Rows are ranked by a seeded hash of their index
/// and dealt round-robin, so the assignment is quasi-random and the shard
/// sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> shard_rows(std::size_t rows, std::size_t target,
                                                        std::uint64_t seed = kDefaultShardSeed) {
  if (target < 1) throw Error(ErrorCode::kInvalidArgument, "shard row target must be at least 1");
  const std::size_t n = std::max<std::size_t>(1, (rows + target - 1) / target);
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint64_t idx = r;
    ranked[r] = {hash64(std::span(reinterpret_cast<const std::uint8_t*>(&idx), sizeof idx), seed), r};
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < rows; ++i) out[i % n].push_back(ranked[i].second);
  for (auto& s : out) std::sort(s.begin(), s.end());
  return out;
}

/// Splits a table into shard tables; rows keep their input order inside a
/// shard.
inline std::vector<Table> shard_table(const Table& table, std::size_t target, std::uint64_t seed = kDefaultShardSeed) {
  std::vector<Table> out;
  for (const auto& rows : shard_rows(table.row_count(), target, seed)) out.push_back(apply_permutation(table, rows));
  return out;
}

/// Shards, then reorders, partitions and encodes each shard independently.
inline std::vector<Shard> build_sharded(const Table& table, std::size_t target, const PartitionSpec& spec,
                                        const EncodeOptions& options = {}, std::uint64_t seed = kDefaultShardSeed) {
  spec.validate(table.schema);
  std::vector<Shard> out;
  std::uint32_t id = 0;
  for (const Table& part : shard_table(table, target, seed)) {
    const Table ordered = apply_permutation(part, reorder_rows(part, spec));
    out.push_back(build_shard(id++, ordered, partition(ordered, spec), options));
  }
  return out;
}

}  // namespace pdrill
