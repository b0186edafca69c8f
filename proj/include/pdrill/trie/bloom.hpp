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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"

namespace pdrill {

/// Classic Bloom filter with double hashing over one XXH64 per probe:
/// bits per element = ceil(-log2(fpr) / ln 2), k = round(bits_per_element * ln 2).
class BloomFilter {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ull;

  BloomFilter() = default;

  static std::size_t bits_per_element(double target_fpr) {
    return static_cast<std::size_t>(std::ceil(-std::log2(target_fpr) / std::log(2.0)));
  }

  static BloomFilter build(std::span<const std::string> values, double target_fpr, std::uint64_t seed = kDefaultSeed) {
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "bloom target fpr must be in (0, 1)");
    }
    BloomFilter f;
    f.seed_ = seed;
    if (values.empty()) return f;
    const std::size_t bpe = bits_per_element(target_fpr);
    f.hashes_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(bpe * std::log(2.0))));
    f.bit_count_ = std::max<std::uint64_t>(64, values.size() * bpe);
    f.words_.assign((f.bit_count_ + 63) / 64, 0);
    for (const auto& v : values) f.insert(v);
    return f;
  }

  /// False only when `value` was definitely never inserted.
  bool maybe_contains(std::string_view value) const {
    if (bit_count_ == 0) return false;
    const std::uint64_t h = hash64(value, seed_);
    const std::uint64_t h1 = h & 0xffffffffu;
    const std::uint64_t h2 = (h >> 32) | 1u;
    for (std::uint32_t i = 0; i < hashes_; ++i) {
      const std::uint64_t bit = (h1 + i * h2) % bit_count_;
      if (!(words_[bit >> 6] & (std::uint64_t{1} << (bit & 63)))) return false;
    }
    return true;
  }

  std::uint32_t hash_count() const { return hashes_; }
  std::uint64_t bit_count() const { return bit_count_; }
  std::size_t byte_size() const { return words_.size() * 8; }

 private:
  void insert(std::string_view value) {
    const std::uint64_t h = hash64(value, seed_);
    const std::uint64_t h1 = h & 0xffffffffu;
    const std::uint64_t h2 = (h >> 32) | 1u;
    for (std::uint32_t i = 0; i < hashes_; ++i) {
      const std::uint64_t bit = (h1 + i * h2) % bit_count_;
      words_[bit >> 6] |= std::uint64_t{1} << (bit & 63);
    }
  }

  std::uint64_t seed_ = kDefaultSeed;
  std::uint64_t bit_count_ = 0;
  std::uint32_t hashes_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pdrill
