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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

#ifndef XXH_INLINE_ALL
#define XXH_INLINE_ALL
#endif
#include "xxhash.h"

#include "pdrill/core/value.hpp"

namespace pdrill {

/// XXH64. Test vectors: hash64("", 0) = 0xef46db3751d8e999,
/// hash64("abc", 0) = 0x44bc2cf5ad770999.
inline std::uint64_t hash64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0) {
  return XXH64(bytes.data(), bytes.size(), seed);
}

inline std::uint64_t hash64(std::string_view s, std::uint64_t seed = 0) {
  return XXH64(s.data(), s.size(), seed);
}

/// Hash of a value's canonical byte form: one kind byte followed by the
/// little-endian payload (raw bytes for strings).
inline std::uint64_t hash_value(const Value& v, std::uint64_t seed = 0) {
  std::uint8_t buf[9];
  buf[0] = static_cast<std::uint8_t>(v.kind());
  auto put = [&](std::uint64_t bits, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) buf[1 + i] = static_cast<std::uint8_t>(bits >> (8 * i));
    return XXH64(buf, 1 + n, seed);
  };
  switch (v.kind()) {
    case ValueKind::kNull: return XXH64(buf, 1, seed);
    case ValueKind::kStr: {
      XXH64_state_t state;
      XXH64_reset(&state, seed);
      XXH64_update(&state, buf, 1);
      XXH64_update(&state, v.as_str().data(), v.as_str().size());
      return XXH64_digest(&state);
    }
    case ValueKind::kI64: return put(static_cast<std::uint64_t>(v.as_i64()), 8);
    case ValueKind::kF64: return put(std::bit_cast<std::uint64_t>(v.as_f64()), 8);
    case ValueKind::kDate: return put(static_cast<std::uint32_t>(v.as_date()), 4);
    case ValueKind::kTimestamp: return put(static_cast<std::uint64_t>(v.as_timestamp()), 8);
  }
  return 0;
}

struct ValueHasher {
  std::size_t operator()(const Value& v) const { return static_cast<std::size_t>(hash_value(v)); }
};

}  // namespace pdrill
