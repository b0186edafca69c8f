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
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/store/dictionary.hpp"
#include "pdrill/trie/bloom.hpp"
#include "pdrill/trie/trie.hpp"

namespace pdrill {

struct SubDictOptions {
  std::size_t hot_values = 1024;  // F
  std::size_t chunks_per_group = 16;
  double bloom_fpr = 0.01;
};

/// One piece of a split string dictionary: a trie over a subset of the
/// values plus the global-ids of those values (ascending, so the trie's
/// local id indexes `global_ids`).
struct SubDictionary {
  TrieDictionary trie;
  std::vector<std::uint32_t> global_ids;
  BloomFilter bloom;
  std::size_t first_chunk = 0;  // chunk group covered (cold only)
  std::size_t last_chunk = 0;   // exclusive
};

/// Physical split of a string global dictionary into a hot sub-dictionary
/// (frequent values and values shared across chunk groups) and one cold
/// sub-dictionary per group of consecutive chunks. Global-ids stay ranks.
class SubDictionarySet {
 public:
  static constexpr std::uint32_t kHot = 0;
  // The whole-dictionary filter hashes independently of the per-part ones.
  static constexpr std::uint64_t kWholeSeed = 0x2545f4914f6cdd1dull;

  /// `frequency[g]` is the row count of global-id g.
  static SubDictionarySet plan(const GlobalDictionary& dict, const std::vector<ChunkDictionary>& chunk_dicts,
                               const std::vector<std::uint64_t>& frequency, const SubDictOptions& options = {}) {
    if (dict.kind() != ValueKind::kStr) throw Error(ErrorCode::kInvalidArgument, "sub-dictionaries need a string column");
    if (frequency.size() != dict.size()) throw Error(ErrorCode::kInvalidArgument, "frequency must cover every global-id");
    if (options.chunks_per_group == 0) throw Error(ErrorCode::kInvalidArgument, "chunks_per_group must be positive");
    const std::uint32_t first = dict.has_null() ? 1 : 0;
    const std::size_t n = dict.size();
    const std::vector<Value> values = dict.values();

    // Chunk group of each value; kMany when it spans several groups.
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    constexpr std::size_t kMany = static_cast<std::size_t>(-2);
    std::vector<std::size_t> group(n, kNone);
    for (std::size_t k = 0; k < chunk_dicts.size(); ++k) {
      const std::size_t gk = k / options.chunks_per_group;
      for (auto g : chunk_dicts[k].global_ids) {
        if (g >= n) throw Error(ErrorCode::kInvalidArgument, "chunk dictionary references unknown global-id");
        if (group[g] == kNone) {
          group[g] = gk;
        } else if (group[g] != gk) {
          group[g] = kMany;
        }
      }
    }

    std::vector<std::uint32_t> by_freq;
    for (std::uint32_t g = first; g < n; ++g) by_freq.push_back(g);
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return frequency[a] > frequency[b]; });
    std::vector<bool> hot(n, false);
    for (std::size_t i = 0; i < by_freq.size() && i < options.hot_values; ++i) hot[by_freq[i]] = true;
    for (std::uint32_t g = first; g < n; ++g) {
      if (group[g] == kMany || group[g] == kNone) hot[g] = true;
    }

    SubDictionarySet s;
    s.null_id_ = dict.null_id();
    s.assignment_.assign(n, {0, 0});
    const std::size_t groups = (chunk_dicts.size() + options.chunks_per_group - 1) / options.chunks_per_group;
    std::vector<std::vector<std::uint32_t>> members(1 + groups);
    for (std::uint32_t g = first; g < n; ++g) members[hot[g] ? 0 : 1 + group[g]].push_back(g);

    std::vector<std::string> all;
    for (std::uint32_t g = first; g < n; ++g) all.push_back(values[g].as_str());
    s.any_ = BloomFilter::build(all, options.bloom_fpr, kWholeSeed);

    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i > 0 && members[i].empty()) continue;
      SubDictionary sd;
      std::vector<std::string> strs;
      for (auto g : members[i]) strs.push_back(values[g].as_str());
      sd.trie = TrieDictionary::build(strs);
      sd.bloom = BloomFilter::build(strs, options.bloom_fpr);
      sd.global_ids = members[i];
      if (i > 0) {
        sd.first_chunk = (i - 1) * options.chunks_per_group;
        sd.last_chunk = std::min(chunk_dicts.size(), sd.first_chunk + options.chunks_per_group);
      }
      const auto index = static_cast<std::uint32_t>(s.parts_.size());
      for (std::uint32_t local = 0; local < sd.global_ids.size(); ++local) {
        s.assignment_[sd.global_ids[local]] = {index, local};
      }
      s.parts_.push_back(std::move(sd));
    }
    return s;
  }

  const SubDictionary& hot() const { return parts_[kHot]; }
  std::size_t cold_count() const { return parts_.size() - 1; }
  const SubDictionary& part(std::size_t i) const { return parts_.at(i); }
  std::size_t part_count() const { return parts_.size(); }

  /// (sub-dictionary index, local id) of a non-null global-id.
  std::pair<std::uint32_t, std::uint32_t> locate(std::uint32_t gid) const {
    if (gid >= assignment_.size() || (null_id_ && gid == *null_id_)) {
      throw Error(ErrorCode::kIndexOutOfRange, "global-id " + std::to_string(gid) + " has no sub-dictionary entry");
    }
    return assignment_[gid];
  }

  std::string value_at(std::uint32_t gid, const std::function<void(std::uint32_t)>& on_load = {}) const {
    auto [part, local] = locate(gid);
    if (on_load) on_load(part);
    return parts_[part].trie.id_to_value(local);
  }

  /// Global-id of `value`, or nullopt. Sub-dictionaries are consulted (and
  /// reported through `on_load`) only when their Bloom filter admits the
  /// value; an absent value is usually rejected by the whole-dictionary
  /// filter with no load at all.
  std::optional<std::uint32_t> lookup(std::string_view value,
                                      const std::function<void(std::uint32_t)>& on_load = {}) const {
    if (!any_.maybe_contains(value)) return std::nullopt;
    for (std::uint32_t i = 0; i < parts_.size(); ++i) {
      if (!parts_[i].bloom.maybe_contains(value)) continue;
      if (on_load) on_load(i);
      if (auto local = parts_[i].trie.value_to_id(value)) return parts_[i].global_ids[*local];
    }
    return std::nullopt;
  }

  /// Sub-dictionaries needed to decode any value of the given chunks.
  std::set<std::uint32_t> parts_for_chunks(const std::vector<std::size_t>& chunks) const {
    std::set<std::uint32_t> out = {kHot};
    for (auto k : chunks) {
      for (std::uint32_t i = 1; i < parts_.size(); ++i) {
        if (k >= parts_[i].first_chunk && k < parts_[i].last_chunk) out.insert(i);
      }
    }
    return out;
  }

  /// All values in global-id order (Null excluded).
  std::vector<std::string> reassemble() const {
    std::vector<std::string> out(assignment_.size() - (null_id_ ? 1 : 0));
    const std::uint32_t offset = null_id_ ? 1 : 0;
    for (const auto& p : parts_) {
      for (std::uint32_t local = 0; local < p.global_ids.size(); ++local) {
        out[p.global_ids[local] - offset] = p.trie.id_to_value(local);
      }
    }
    return out;
  }

 private:
  std::optional<std::uint32_t> null_id_;
  std::vector<SubDictionary> parts_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> assignment_;
  BloomFilter any_;
};

}  // namespace pdrill
