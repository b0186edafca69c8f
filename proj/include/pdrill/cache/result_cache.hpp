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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

namespace pdrill {

struct ResultCacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t stores = 0;
  std::size_t entries = 0;
};

/// Per-chunk aggregation results for fully active chunks, keyed by
/// (shard, chunk, fragment). The fragment names the group expression and the
/// aggregate list; the restriction is not part of the key because a fully
/// active chunk contributes every row regardless of which restriction
/// qualified it.
template <typename Accumulators>
class ChunkResultCache {
 public:
  using Ptr = std::shared_ptr<const Accumulators>;

  Ptr lookup(std::uint32_t shard, std::uint32_t chunk, const std::string& fragment) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(std::tie(shard, chunk, fragment));
    if (it == map_.end()) {
      ++stats_.misses;
      return nullptr;
    }
    ++stats_.hits;
    return it->second;
  }

  /// Idempotent: a second store under the same key keeps the first value.
  void store(std::uint32_t shard, std::uint32_t chunk, const std::string& fragment, Ptr value) {
    std::lock_guard<std::mutex> lock(mu_);
    if (map_.emplace(std::make_tuple(shard, chunk, fragment), std::move(value)).second) ++stats_.stores;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    map_.clear();
  }

  ResultCacheStats stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    ResultCacheStats s = stats_;
    s.entries = map_.size();
    return s;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::string>, Ptr, std::less<>> map_;
  ResultCacheStats stats_;
};

}  // namespace pdrill
