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
#include <iterator>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"
#include "pdrill/core/value.hpp"

namespace pdrill {

/// K-minimum-values distinct counter. Keeps the m smallest distinct 64-bit
/// hashes; a hash h stands for the point h / 2^64 in [0, 1).
class KmvSketch {
 public:
  static constexpr std::size_t kDefaultCapacity = 2048;
  static constexpr std::uint64_t kDefaultSeed = 0x5bd1e9955bd1e995ull;

  explicit KmvSketch(std::size_t m = kDefaultCapacity, bool bias_corrected = false)
      : m_(m), bias_corrected_(bias_corrected) {
    if (m_ < 2) throw Error(ErrorCode::kInvalidArgument, "KMV capacity must be at least 2");
  }

  void add(const Value& v, std::uint64_t seed = kDefaultSeed) { add_hash(hash_value(v, seed)); }

  void add_hash(std::uint64_t h) {
    if (hashes_.size() == m_ && h >= hashes_.back()) return;
    auto it = std::lower_bound(hashes_.begin(), hashes_.end(), h);
    if (it != hashes_.end() && *it == h) return;
    hashes_.insert(it, h);
    if (hashes_.size() > m_) hashes_.pop_back();
  }

  /// Union of both inputs truncated to m (the smaller capacity wins).
  void merge(const KmvSketch& other) {
    std::vector<std::uint64_t> out;
    out.reserve(hashes_.size() + other.hashes_.size());
    std::set_union(hashes_.begin(), hashes_.end(), other.hashes_.begin(), other.hashes_.end(), std::back_inserter(out));
    m_ = std::min(m_, other.m_);
    if (out.size() > m_) out.resize(m_);
    hashes_ = std::move(out);
  }

  /// Exact count below capacity, else m / v with v the largest retained
  /// normalized hash ((m - 1) / v when bias correction is on).
  double estimate() const {
    if (hashes_.size() < m_) return static_cast<double>(hashes_.size());
    const double v = normalized(hashes_.back());
    const double m = static_cast<double>(m_);
    return (bias_corrected_ ? m - 1.0 : m) / v;
  }

  static double normalized(std::uint64_t h) { return std::ldexp(static_cast<double>(h), -64); }

  std::size_t capacity() const { return m_; }
  bool bias_corrected() const { return bias_corrected_; }
  const std::vector<std::uint64_t>& hashes() const { return hashes_; }

  /// Rebuilds a sketch from serialized state; hashes must be strictly
  /// ascending.
  static KmvSketch from_hashes(std::size_t m, std::vector<std::uint64_t> hashes, bool bias_corrected = false) {
    KmvSketch s(m, bias_corrected);
    if (hashes.size() > m || !std::is_sorted(hashes.begin(), hashes.end()) ||
        std::adjacent_find(hashes.begin(), hashes.end()) != hashes.end()) {
      throw Error(ErrorCode::kCorrupt, "invalid KMV state");
    }
    s.hashes_ = std::move(hashes);
    return s;
  }

  friend bool operator==(const KmvSketch&, const KmvSketch&) = default;

 private:
  std::size_t m_;
  bool bias_corrected_;
  std::vector<std::uint64_t> hashes_;
};

}  // namespace pdrill
