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
#include <cstdint>
#include <span>
#include <vector>

#include "pdrill/core/errors.hpp"

namespace pdrill {

using BitMatrix = std::vector<std::vector<std::uint8_t>>;  // rows of 0/1 cells

/// Counter count of a simplified run-length encoding of every bit column,
/// rows visited in `order`: one counter per column to start, plus one per
/// bit change between consecutive rows.
inline std::size_t rle_bit_cost(const BitMatrix& m, std::span<const std::size_t> order) {
  if (order.size() != m.size()) throw Error(ErrorCode::kInvalidArgument, "order length differs from row count");
  if (m.empty()) return 0;
  const std::size_t width = m.front().size();
  std::vector<bool> seen(m.size(), false);
  for (auto r : order) {
    if (r >= m.size() || seen[r]) throw Error(ErrorCode::kInvalidArgument, "order is not a permutation");
    seen[r] = true;
    if (m[r].size() != width) throw Error(ErrorCode::kInvalidArgument, "bit matrix is not rectangular");
  }
  std::size_t cost = width;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& a = m[order[i - 1]];
    const auto& b = m[order[i]];
    for (std::size_t c = 0; c < width; ++c) cost += (a[c] != 0) != (b[c] != 0);
  }
  return cost;
}

inline std::size_t rle_bit_cost(const BitMatrix& m) {
  std::vector<std::size_t> id(m.size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
  return rle_bit_cost(m, id);
}

}  // namespace pdrill
