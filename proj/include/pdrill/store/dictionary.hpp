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
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/trie/trie.hpp"

namespace pdrill {

/// On-disk representation tag of a global dictionary block.
enum class DictRepr : std::uint8_t {
  kSortedArray = 0,
  kTrie = 1,  // strings only
};

/// Sorted distinct values of one column of one shard. The global-id of a
/// value is its rank; Null, when present, is global-id 0.
class GlobalDictionary {
 public:
  GlobalDictionary() = default;

  /// `sorted` must be strictly ascending under the Value order and hold only
  /// Null and values of `kind`.
  static GlobalDictionary from_sorted(ValueKind kind, std::vector<Value> sorted, DictRepr repr = DictRepr::kSortedArray) {
    GlobalDictionary d;
    d.kind_ = kind;
    std::size_t start = 0;
    if (!sorted.empty() && sorted.front().is_null()) {
      d.has_null_ = true;
      start = 1;
    }
    for (std::size_t i = start; i < sorted.size(); ++i) {
      if (sorted[i].kind() != kind) {
        throw Error(ErrorCode::kSchemaViolation, std::string("dictionary value of kind ") + kind_name(sorted[i].kind()) +
                                                     " in " + kind_name(kind) + " column");
      }
      if (i > start && !(sorted[i - 1] < sorted[i])) {
        throw Error(ErrorCode::kInvalidArgument, "dictionary values not strictly ascending");
      }
    }
    sorted.erase(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(start));
    d.values_ = std::move(sorted);
    d.set_repr(repr);
    return d;
  }

  ValueKind kind() const { return kind_; }
  DictRepr repr() const { return repr_; }
  bool has_null() const { return has_null_; }
  std::optional<std::uint32_t> null_id() const {
    if (has_null_) return 0u;
    return std::nullopt;
  }

  std::size_t size() const { return non_null_count() + (has_null_ ? 1 : 0); }

  Value value_at(std::uint32_t gid) const {
    if (gid >= size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "global-id " + std::to_string(gid) + " out of range (" + std::to_string(size()) + ")");
    }
    if (has_null_) {
      if (gid == 0) return Value::null();
      --gid;
    }
    if (repr_ == DictRepr::kTrie) return Value::str(trie_.id_to_value(gid));
    return values_[gid];
  }

  /// Global-id of `v`, which must already be of this column's kind (or Null).
  std::optional<std::uint32_t> lookup_id(const Value& v) const {
    const std::uint32_t offset = has_null_ ? 1 : 0;
    if (v.is_null()) return null_id();
    if (v.kind() != kind_) return std::nullopt;
    if (repr_ == DictRepr::kTrie) {
      auto id = trie_.value_to_id(v.as_str());
      if (!id) return std::nullopt;
      return *id + offset;
    }
    auto it = std::lower_bound(values_.begin(), values_.end(), v);
    if (it == values_.end() || !(*it == v)) return std::nullopt;
    return static_cast<std::uint32_t>(it - values_.begin()) + offset;
  }

  /// Every value in global-id order, Null first when present.
  std::vector<Value> values() const {
    std::vector<Value> out;
    out.reserve(size());
    if (has_null_) out.push_back(Value::null());
    if (repr_ == DictRepr::kTrie) {
      for (auto& s : trie_.enumerate()) out.push_back(Value::str(std::move(s)));
    } else {
      out.insert(out.end(), values_.begin(), values_.end());
    }
    return out;
  }

  /// Same contents in another representation. A trie is only available for
  /// string columns; other kinds stay sorted arrays.
  GlobalDictionary with_repr(DictRepr repr) const {
    GlobalDictionary d = *this;
    if (repr == repr_) return d;
    if (repr_ == DictRepr::kTrie) {
      d.values_.clear();
      for (auto& s : trie_.enumerate()) d.values_.push_back(Value::str(std::move(s)));
      d.trie_ = TrieDictionary();
      d.repr_ = DictRepr::kSortedArray;
    }
    d.set_repr(repr);
    return d;
  }

  /// Serialized dictionary block payload (without the representation tag).
  Bytes serialize_payload() const {
    Bytes out;
    ByteWriter w(out);
    w.u8(has_null_ ? 1 : 0);
    if (repr_ == DictRepr::kTrie) {
      w.raw(trie_.serialize());
      return out;
    }
    w.u32(static_cast<std::uint32_t>(values_.size()));
    for (const auto& v : values_) {
      switch (kind_) {
        case ValueKind::kStr:
          w.u32(static_cast<std::uint32_t>(v.as_str().size()));
          w.raw(v.as_str());
          break;
        case ValueKind::kI64: w.u64(static_cast<std::uint64_t>(v.as_i64())); break;
        case ValueKind::kF64: w.u64(std::bit_cast<std::uint64_t>(v.as_f64())); break;
        case ValueKind::kDate: w.u32(static_cast<std::uint32_t>(v.as_date())); break;
        case ValueKind::kTimestamp: w.u64(static_cast<std::uint64_t>(v.as_timestamp())); break;
        case ValueKind::kNull: break;
      }
    }
    return out;
  }

  static GlobalDictionary deserialize_payload(DictRepr repr, ValueKind kind, std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    GlobalDictionary d;
    d.kind_ = kind;
    const std::uint8_t has_null = r.u8();
    if (has_null > 1) throw Error(ErrorCode::kCorrupt, "bad null flag in dictionary");
    d.has_null_ = has_null == 1;
    if (repr == DictRepr::kTrie) {
      if (kind != ValueKind::kStr) throw Error(ErrorCode::kCorrupt, "trie dictionary on non-string column");
      d.trie_ = TrieDictionary::deserialize(r.raw(r.remaining()));
      d.repr_ = DictRepr::kTrie;
      return d;
    }
    if (repr != DictRepr::kSortedArray) throw Error(ErrorCode::kCorrupt, "unknown dictionary representation");
    const std::uint32_t count = r.u32();
    d.values_.reserve(std::min<std::size_t>(count, r.remaining()));
    for (std::uint32_t i = 0; i < count; ++i) {
      switch (kind) {
        case ValueKind::kStr: {
          const std::uint32_t len = r.u32();
          d.values_.push_back(Value::str(r.str(len)));
          break;
        }
        case ValueKind::kI64: d.values_.push_back(Value::i64(static_cast<std::int64_t>(r.u64()))); break;
        case ValueKind::kF64: d.values_.push_back(Value::f64(std::bit_cast<double>(r.u64()))); break;
        case ValueKind::kDate: d.values_.push_back(Value::date(static_cast<std::int32_t>(r.u32()))); break;
        case ValueKind::kTimestamp:
          d.values_.push_back(Value::timestamp(static_cast<std::int64_t>(r.u64())));
          break;
        case ValueKind::kNull: throw Error(ErrorCode::kCorrupt, "null-kind column");
      }
      if (i > 0 && !(d.values_[i - 1] < d.values_[i])) throw Error(ErrorCode::kCorrupt, "dictionary not ascending");
    }
    if (!r.done()) throw Error(ErrorCode::kCorrupt, "trailing bytes in dictionary block");
    d.repr_ = DictRepr::kSortedArray;
    return d;
  }

  /// Bytes of the serialized payload; the memory-accounting measure.
  std::size_t byte_size() const {
    if (repr_ == DictRepr::kTrie) return 1 + 1 + trie_.arena_bytes();
    std::size_t n = 1 + 4;
    for (const auto& v : values_) {
      switch (kind_) {
        case ValueKind::kStr: n += 4 + v.as_str().size(); break;
        case ValueKind::kDate: n += 4; break;
        default: n += 8; break;
      }
    }
    return n;
  }

  const TrieDictionary* trie() const { return repr_ == DictRepr::kTrie ? &trie_ : nullptr; }

  friend bool operator==(const GlobalDictionary& a, const GlobalDictionary& b) {
    return a.kind_ == b.kind_ && a.has_null_ == b.has_null_ && a.repr_ == b.repr_ && a.values_ == b.values_ &&
           a.trie_ == b.trie_;
  }

 private:
  std::size_t non_null_count() const { return repr_ == DictRepr::kTrie ? trie_.size() : values_.size(); }

  void set_repr(DictRepr repr) {
    if (repr == DictRepr::kTrie && kind_ == ValueKind::kStr) {
      std::vector<std::string> strs;
      strs.reserve(values_.size());
      for (const auto& v : values_) strs.push_back(v.as_str());
      trie_ = TrieDictionary::build(strs);
      values_.clear();
      values_.shrink_to_fit();
      repr_ = DictRepr::kTrie;
    } else {
      repr_ = DictRepr::kSortedArray;
    }
  }

  ValueKind kind_ = ValueKind::kStr;
  bool has_null_ = false;
  DictRepr repr_ = DictRepr::kSortedArray;
  std::vector<Value> values_;
  TrieDictionary trie_;
};

/// Ascending global-ids present in one chunk; the index of a global-id is its
/// chunk-id.
struct ChunkDictionary {
  std::vector<std::uint32_t> global_ids;

  std::size_t size() const { return global_ids.size(); }
  std::uint32_t global_id_at(std::uint32_t chunk_id) const {
    if (chunk_id >= global_ids.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "chunk-id " + std::to_string(chunk_id) + " out of range");
    }
    return global_ids[chunk_id];
  }
  std::optional<std::uint32_t> chunk_id_of(std::uint32_t gid) const {
    auto it = std::lower_bound(global_ids.begin(), global_ids.end(), gid);
    if (it == global_ids.end() || *it != gid) return std::nullopt;
    return static_cast<std::uint32_t>(it - global_ids.begin());
  }
  bool contains(std::uint32_t gid) const { return chunk_id_of(gid).has_value(); }
  std::size_t byte_size() const { return 4 + 4 * global_ids.size(); }

  friend bool operator==(const ChunkDictionary&, const ChunkDictionary&) = default;
};

}  // namespace pdrill
