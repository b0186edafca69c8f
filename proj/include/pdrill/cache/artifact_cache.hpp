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
#include <compare>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pdrill/cache/codec.hpp"
#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"

namespace pdrill {

enum class ArtifactKind : std::uint8_t { kElements, kChunkDict, kSubDictionary, kChunkResult };

inline const char* artifact_kind_name(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::kElements: return "elements";
    case ArtifactKind::kChunkDict: return "chunk-dict";
    case ArtifactKind::kSubDictionary: return "sub-dictionary";
    case ArtifactKind::kChunkResult: return "chunk-result";
  }
  return "?";
}

struct ArtifactKey {
  std::uint32_t shard = 0;
  std::string field;
  std::uint32_t chunk = 0;
  ArtifactKind kind = ArtifactKind::kElements;

  friend auto operator<=>(const ArtifactKey&, const ArtifactKey&) = default;
  friend bool operator==(const ArtifactKey&, const ArtifactKey&) = default;
};

enum class EvictionPolicy { kTwoQ, kLru };

struct CacheConfig {
  std::size_t budget_bytes = std::size_t{256} << 20;
  double kin_fraction = 0.25;
  double kout_fraction = 0.5;
  std::uint8_t cold_codec = kLzCodec;
  EvictionPolicy policy = EvictionPolicy::kTwoQ;
};

struct CacheStats {
  std::uint64_t hot_hits = 0;
  std::uint64_t cold_hits = 0;
  std::uint64_t loads = 0;      // misses that ran the loader
  std::uint64_t coalesced = 0;  // misses that waited for another loader
  std::uint64_t ghost_hits = 0;
  std::uint64_t demotions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t oversized = 0;  // served without being cached
  std::size_t hot_bytes = 0;
  std::size_t cold_bytes = 0;
  std::size_t entries = 0;
  std::size_t budget_bytes = 0;
};

/// Byte-budgeted two-layer residency for column artifacts. Entries live
/// uncompressed (hot) or compressed with the configured codec (cold); the
/// budget covers both layers. Under the 2Q policy new keys enter the A1in
/// FIFO, keys evicted from A1in are remembered in the A1out ghost list, and
/// only a re-reference through A1out admits a key to the Am LRU, so a
/// one-time scan cannot displace the working set. The LRU policy keeps a
/// single recency list and exists for comparison.
///
/// All operations share one mutex; concurrent misses on the same key run the
/// loader once.
class ArtifactCache {
 public:
  using Payload = std::shared_ptr<const Bytes>;
  using Loader = std::function<Bytes()>;

  /// Fixed per-entry charge on top of the payload bytes.
  static constexpr std::size_t kEntryOverhead = 32;

  explicit ArtifactCache(CacheConfig config = {}, std::shared_ptr<const CodecRegistry> codecs = nullptr)
      : config_(config), codecs_(codecs ? std::move(codecs) : std::make_shared<CodecRegistry>()) {
    codecs_->get(config_.cold_codec);
  }

  Payload get_or_load(const ArtifactKey& key, const Loader& loader) {
    std::unique_lock<std::mutex> lock(mu_);
    if (auto hit = lookup_locked(key)) return hit;

    auto inflight = inflight_.find(key);
    if (inflight != inflight_.end()) {
      auto fut = inflight->second;
      ++stats_.coalesced;
      lock.unlock();
      return fut.get();
    }
    std::promise<Payload> promise;
    inflight_.emplace(key, promise.get_future().share());
    ++stats_.loads;
    lock.unlock();

    Payload payload;
    try {
      payload = std::make_shared<const Bytes>(loader());
    } catch (...) {
      lock.lock();
      inflight_.erase(key);
      promise.set_exception(std::current_exception());
      throw;
    }
    lock.lock();
    admit_locked(key, payload);
    inflight_.erase(key);
    promise.set_value(payload);
    return payload;
  }

  bool contains(const ArtifactKey& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.count(key) != 0;
  }

  /// Residency of a key: "a1in", "am-hot", "am-cold", "ghost" or "absent".
  std::string where(const ArtifactKey& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      if (it->second.queue == Queue::kA1in) return "a1in";
      return it->second.hot ? "am-hot" : "am-cold";
    }
    if (ghost_index_.count(key)) return "ghost";
    return "absent";
  }

  CacheStats stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    CacheStats s = stats_;
    s.hot_bytes = hot_bytes_;
    s.cold_bytes = cold_bytes_;
    s.entries = entries_.size();
    s.budget_bytes = config_.budget_bytes;
    return s;
  }

  const CacheConfig& config() const { return config_; }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.clear();
    a1in_.clear();
    am_.clear();
    ghosts_.clear();
    ghost_index_.clear();
    hot_bytes_ = cold_bytes_ = a1in_bytes_ = 0;
  }

  /// Accounting audit: list membership, byte totals and the budget.
  /// Returns an empty string when consistent, else a description.
  std::string audit() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t hot = 0, cold = 0, a1in = 0;
    if (a1in_.size() + am_.size() != entries_.size()) return "list sizes disagree with entry map";
    for (const auto& k : a1in_) {
      auto it = entries_.find(k);
      if (it == entries_.end() || it->second.queue != Queue::kA1in) return "a1in key not marked a1in";
      if (!it->second.hot) return "a1in entry is cold";
      a1in += it->second.charge;
    }
    for (const auto& k : am_) {
      auto it = entries_.find(k);
      if (it == entries_.end() || it->second.queue != Queue::kAm) return "am key not marked am";
    }
    for (const auto& [k, e] : entries_) {
      (e.hot ? hot : cold) += e.charge;
      if (ghost_index_.count(k)) return "resident key also in ghost list";
    }
    if (hot != hot_bytes_ || cold != cold_bytes_ || a1in != a1in_bytes_) return "byte counters drifted";
    if (hot + cold > config_.budget_bytes) return "over budget";
    if (ghosts_.size() != ghost_index_.size()) return "ghost index drifted";
    return {};
  }

 private:
  enum class Queue { kA1in, kAm };
  struct Entry {
    Payload hot_payload;  // set when hot
    Bytes cold_payload;   // set when cold
    bool hot = true;
    bool no_gain = false;  // compression does not shrink it
    std::size_t raw_size = 0;
    std::size_t charge = 0;
    Queue queue = Queue::kA1in;
    std::list<ArtifactKey>::iterator pos;
  };

  Payload lookup_locked(const ArtifactKey& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    Entry& e = it->second;
    if (e.queue == Queue::kAm) am_.splice(am_.begin(), am_, e.pos);
    if (e.hot) {
      ++stats_.hot_hits;
      return e.hot_payload;
    }
    ++stats_.cold_hits;
    auto payload = std::make_shared<const Bytes>(codecs_->get(config_.cold_codec).decompress(e.cold_payload));
    cold_bytes_ -= e.charge;
    e.cold_payload.clear();
    e.cold_payload.shrink_to_fit();
    e.hot_payload = payload;
    e.hot = true;
    e.charge = payload->size() + kEntryOverhead;
    hot_bytes_ += e.charge;
    evict_to_fit();
    return payload;
  }

  void admit_locked(const ArtifactKey& key, const Payload& payload) {
    if (entries_.count(key)) return;
    const std::size_t charge = payload->size() + kEntryOverhead;
    if (config_.budget_bytes == 0 || charge > config_.budget_bytes) {
      ++stats_.oversized;
      return;
    }
    ++admitted_;
    admitted_bytes_ += charge;
    Entry e;
    e.hot_payload = payload;
    e.raw_size = payload->size();
    e.charge = charge;
    const bool ghost = erase_ghost(key);
    if (config_.policy == EvictionPolicy::kLru || ghost) {
      if (ghost) ++stats_.ghost_hits;
      e.queue = Queue::kAm;
      am_.push_front(key);
      e.pos = am_.begin();
    } else {
      e.queue = Queue::kA1in;
      a1in_.push_back(key);
      e.pos = std::prev(a1in_.end());
      a1in_bytes_ += charge;
    }
    hot_bytes_ += charge;
    entries_.emplace(key, std::move(e));
    evict_to_fit();
  }

  std::size_t used() const { return hot_bytes_ + cold_bytes_; }

  void evict_to_fit() {
    const auto kin = static_cast<std::size_t>(config_.kin_fraction * static_cast<double>(config_.budget_bytes));
    while (used() > config_.budget_bytes && a1in_bytes_ > kin && !a1in_.empty()) evict_a1in_head();
    while (used() > config_.budget_bytes && demote_lru_hot()) {
    }
    while (used() > config_.budget_bytes && !a1in_.empty()) evict_a1in_head();
    while (used() > config_.budget_bytes && !am_.empty()) {
      const ArtifactKey k = am_.back();
      drop(k);
    }
  }

  void evict_a1in_head() {
    const ArtifactKey k = a1in_.front();
    drop(k);
    if (config_.policy == EvictionPolicy::kTwoQ) remember_ghost(k);
  }

  // Compresses the least recently used hot Am entry that shrinks when
  // compressed. Returns false when none is left.
  bool demote_lru_hot() {
    for (auto it = am_.rbegin(); it != am_.rend(); ++it) {
      Entry& e = entries_.at(*it);
      if (!e.hot || e.no_gain) continue;
      Bytes packed = codecs_->get(config_.cold_codec).compress(*e.hot_payload);
      const std::size_t charge = packed.size() + kEntryOverhead;
      if (charge >= e.charge) {
        e.no_gain = true;
        continue;
      }
      hot_bytes_ -= e.charge;
      e.hot_payload.reset();
      e.cold_payload = std::move(packed);
      e.hot = false;
      e.charge = charge;
      cold_bytes_ += charge;
      ++stats_.demotions;
      return true;
    }
    return false;
  }

  void drop(const ArtifactKey& k) {
    auto it = entries_.find(k);
    Entry& e = it->second;
    (e.hot ? hot_bytes_ : cold_bytes_) -= e.charge;
    if (e.queue == Queue::kA1in) {
      a1in_bytes_ -= e.charge;
      a1in_.erase(e.pos);
    } else {
      am_.erase(e.pos);
    }
    entries_.erase(it);
    ++stats_.evictions;
  }

  std::size_t ghost_capacity() const {
    const double avg = admitted_ ? static_cast<double>(admitted_bytes_) / static_cast<double>(admitted_) : 1.0;
    const double slots = static_cast<double>(config_.budget_bytes) / std::max(avg, 1.0);
    return std::max<std::size_t>(8, static_cast<std::size_t>(config_.kout_fraction * slots));
  }

  void remember_ghost(const ArtifactKey& k) {
    ghosts_.push_back(k);
    ghost_index_[k] = std::prev(ghosts_.end());
    while (ghosts_.size() > ghost_capacity()) {
      ghost_index_.erase(ghosts_.front());
      ghosts_.pop_front();
    }
  }

  bool erase_ghost(const ArtifactKey& k) {
    auto it = ghost_index_.find(k);
    if (it == ghost_index_.end()) return false;
    ghosts_.erase(it->second);
    ghost_index_.erase(it);
    return true;
  }

  CacheConfig config_;
  std::shared_ptr<const CodecRegistry> codecs_;
  mutable std::mutex mu_;
  std::map<ArtifactKey, Entry> entries_;
  std::list<ArtifactKey> a1in_;  // front = oldest
  std::list<ArtifactKey> am_;    // front = most recent
  std::list<ArtifactKey> ghosts_;
  std::map<ArtifactKey, std::list<ArtifactKey>::iterator> ghost_index_;
  std::map<ArtifactKey, std::shared_future<Payload>> inflight_;
  std::size_t hot_bytes_ = 0;
  std::size_t cold_bytes_ = 0;
  std::size_t a1in_bytes_ = 0;
  std::uint64_t admitted_ = 0;
  std::uint64_t admitted_bytes_ = 0;
  CacheStats stats_;
};

}  // namespace pdrill
