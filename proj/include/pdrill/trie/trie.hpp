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
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"

namespace pdrill {

// Sorted string dictionary stored as a path-compressed trie over 4-bit
// nibbles (high nibble of each byte first) in a single byte arena.
//
// Arena:  varint value_count, then the root node (absent when empty).
// Node:   u8 header   bit 7     terminal (a stored string ends here)
//                     bit 6     has compressed path
//                     bits 0-4  child count k (0..16)
//         [varint path_len, ceil(path_len / 2) bytes of packed nibbles]
//         ceil(k / 2) bytes of packed child labels, ascending
//         for each child except the last: varint leaf_count, varint byte_size
//         child subtrees, in label order
//
// Strings are enumerated in DFS order with a node's own terminal string
// before its children, which is exactly byte-wise lexicographic order; the
// i-th string in that order has id i. The per-child leaf counts make both
// directions a single root-to-leaf descent that scans at most 16 child
// entries per node. The last child's counts are implied by its parent.
//
// Size bound: arena_bytes() <= arena_bound(n, raw_bytes) = raw_bytes + 24 n + 16.
class TrieDictionary {
 public:
  static constexpr std::uint8_t kLayoutVersion = 1;

  TrieDictionary() { ByteWriter(arena_).varint(0); }

  /// Builds from strictly ascending byte strings; throws kInvalidArgument on
  /// unsorted or duplicate input.
  static TrieDictionary build(std::span<const std::string> sorted) {
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (!(sorted[i - 1] < sorted[i])) {
        throw Error(ErrorCode::kInvalidArgument,
                    "trie input not strictly ascending at position " + std::to_string(i));
      }
    }
    TrieDictionary t;
    t.arena_.clear();
    ByteWriter w(t.arena_);
    w.varint(sorted.size());
    if (!sorted.empty()) {
      Bytes root = build_node(sorted, 0, sorted.size(), 0);
      w.raw(root);
    }
    t.count_ = sorted.size();
    t.root_ = header_size(sorted.size());
    return t;
  }

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  const Bytes& arena() const { return arena_; }
  std::size_t arena_bytes() const { return arena_.size(); }

  static std::size_t arena_bound(std::size_t count, std::size_t raw_bytes) { return raw_bytes + 24 * count + 16; }

  /// Rank of `s`, or nullopt when `s` is not stored.
  std::optional<std::uint32_t> value_to_id(std::string_view s) const {
    if (count_ == 0) return std::nullopt;
    const std::size_t total = 2 * s.size();
    std::size_t depth = 0;
    std::uint64_t rank = 0;
    std::size_t pos = root_;
    for (;;) {
      Node node = parse_node(pos);
      if (node.path_len > 0) {
        if (depth + node.path_len > total) return std::nullopt;
        for (std::size_t i = 0; i < node.path_len; ++i) {
          if (path_nibble(node, i) != nibble_at(s, depth + i)) return std::nullopt;
        }
        depth += node.path_len;
      }
      if (depth == total) {
        if (!node.terminal) return std::nullopt;
        return static_cast<std::uint32_t>(rank);
      }
      if (node.terminal) ++rank;
      const std::uint8_t want = nibble_at(s, depth);
      std::size_t child_pos = node.end;
      bool found = false;
      for (std::size_t i = 0; i < node.child_count; ++i) {
        const std::uint8_t label = node.labels[i];
        if (label == want) {
          found = true;
          break;
        }
        if (label > want) return std::nullopt;
        rank += node.leaf_counts[i];
        child_pos += node.byte_sizes[i];
      }
      if (!found) return std::nullopt;
      ++depth;
      pos = child_pos;
    }
  }

  /// The id-th string in lexicographic order; throws kIndexOutOfRange.
  std::string id_to_value(std::uint32_t id) const {
    if (id >= count_) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "global-id " + std::to_string(id) + " out of range (" + std::to_string(count_) + " values)");
    }
    std::vector<std::uint8_t> nibbles;
    std::uint64_t remaining = id;
    std::size_t pos = root_;
    for (;;) {
      Node node = parse_node(pos);
      for (std::size_t i = 0; i < node.path_len; ++i) nibbles.push_back(path_nibble(node, i));
      if (node.terminal) {
        if (remaining == 0) break;
        --remaining;
      }
      if (node.child_count == 0) throw Error(ErrorCode::kCorrupt, "trie leaf count inconsistent");
      std::size_t child_pos = node.end;
      std::size_t i = 0;
      for (; i + 1 < node.child_count; ++i) {
        if (remaining < node.leaf_counts[i]) break;
        remaining -= node.leaf_counts[i];
        child_pos += node.byte_sizes[i];
      }
      nibbles.push_back(node.labels[i]);
      pos = child_pos;
    }
    if (nibbles.size() % 2 != 0) throw Error(ErrorCode::kCorrupt, "trie path ends mid-byte");
    std::string out(nibbles.size() / 2, '\0');
    for (std::size_t b = 0; b < out.size(); ++b) {
      out[b] = static_cast<char>((nibbles[2 * b] << 4) | nibbles[2 * b + 1]);
    }
    return out;
  }

  /// All strings in id order.
  std::vector<std::string> enumerate() const {
    std::vector<std::string> out;
    out.reserve(count_);
    if (count_ == 0) return out;
    std::vector<std::uint8_t> prefix;
    enumerate_node(root_, prefix, out);
    return out;
  }

  /// Layout version byte followed by the arena.
  Bytes serialize() const {
    Bytes out;
    out.reserve(arena_.size() + 1);
    out.push_back(kLayoutVersion);
    out.insert(out.end(), arena_.begin(), arena_.end());
    return out;
  }

  /// Parses and structurally validates a serialized trie.
  static TrieDictionary deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw Error(ErrorCode::kTruncated, "empty trie block");
    if (bytes[0] != kLayoutVersion) {
      throw Error(ErrorCode::kBadVersion, "unsupported trie layout version " + std::to_string(bytes[0]));
    }
    TrieDictionary t;
    t.arena_.assign(bytes.begin() + 1, bytes.end());
    ByteReader r(t.arena_);
    t.count_ = r.varint();
    t.root_ = r.position();
    if (t.count_ == 0) {
      if (!r.done()) throw Error(ErrorCode::kCorrupt, "trailing bytes after empty trie");
      return t;
    }
    const auto [leaves, end] = t.validate_node(t.root_, 0);
    if (leaves != t.count_) throw Error(ErrorCode::kCorrupt, "trie value count mismatch");
    if (end != t.arena_.size()) throw Error(ErrorCode::kCorrupt, "trailing bytes after trie");
    return t;
  }

  friend bool operator==(const TrieDictionary& a, const TrieDictionary& b) { return a.arena_ == b.arena_; }

 private:
  struct Node {
    bool terminal = false;
    std::size_t child_count = 0;
    std::size_t path_len = 0;
    std::size_t path_pos = 0;  // arena offset of packed path nibbles
    std::array<std::uint8_t, 16> labels{};
    std::array<std::uint64_t, 16> leaf_counts{};
    std::array<std::uint64_t, 16> byte_sizes{};
    std::size_t end = 0;  // offset of the first child
  };

  static std::size_t header_size(std::size_t count) {
    Bytes tmp;
    ByteWriter(tmp).varint(count);
    return tmp.size();
  }

  static std::uint8_t nibble_at(std::string_view s, std::size_t i) {
    const auto byte = static_cast<std::uint8_t>(s[i / 2]);
    return (i % 2 == 0) ? static_cast<std::uint8_t>(byte >> 4) : static_cast<std::uint8_t>(byte & 0x0f);
  }

  static std::size_t nibble_len(const std::string& s) { return 2 * s.size(); }

  std::uint8_t path_nibble(const Node& node, std::size_t i) const {
    const std::uint8_t byte = arena_[node.path_pos + i / 2];
    return (i % 2 == 0) ? static_cast<std::uint8_t>(byte >> 4) : static_cast<std::uint8_t>(byte & 0x0f);
  }

  Node parse_node(std::size_t pos) const {
    ByteReader r(std::span<const std::uint8_t>(arena_).subspan(pos));
    Node n;
    const std::uint8_t header = r.u8();
    n.terminal = (header & 0x80) != 0;
    const bool has_path = (header & 0x40) != 0;
    n.child_count = header & 0x1f;
    if (n.child_count > 16) throw Error(ErrorCode::kCorrupt, "trie node fan-out exceeds 16");
    if (has_path) {
      n.path_len = r.varint();
      n.path_pos = pos + r.position();
      r.raw((n.path_len + 1) / 2);
    }
    if (n.child_count > 0) {
      auto packed = r.raw((n.child_count + 1) / 2);
      for (std::size_t i = 0; i < n.child_count; ++i) {
        const std::uint8_t b = packed[i / 2];
        n.labels[i] = (i % 2 == 0) ? static_cast<std::uint8_t>(b >> 4) : static_cast<std::uint8_t>(b & 0x0f);
      }
      for (std::size_t i = 0; i + 1 < n.child_count; ++i) {
        n.leaf_counts[i] = r.varint();
        n.byte_sizes[i] = r.varint();
      }
    }
    n.end = pos + r.position();
    return n;
  }

  // Returns (leaf count, end offset) of the subtree at pos.
  std::pair<std::uint64_t, std::size_t> validate_node(std::size_t pos, int depth) const {
    if (depth > 65536) throw Error(ErrorCode::kCorrupt, "trie too deep");
    Node node = parse_node(pos);
    if (node.child_count == 0 && !node.terminal) throw Error(ErrorCode::kCorrupt, "trie leaf is not terminal");
    std::uint64_t leaves = node.terminal ? 1 : 0;
    std::size_t child_pos = node.end;
    for (std::size_t i = 0; i < node.child_count; ++i) {
      if (i > 0 && node.labels[i] <= node.labels[i - 1]) throw Error(ErrorCode::kCorrupt, "trie labels not ascending");
      const auto [child_leaves, child_end] = validate_node(child_pos, depth + 1);
      if (i + 1 < node.child_count) {
        if (child_leaves != node.leaf_counts[i] || child_end - child_pos != node.byte_sizes[i]) {
          throw Error(ErrorCode::kCorrupt, "trie child accounting mismatch");
        }
      }
      leaves += child_leaves;
      child_pos = child_end;
    }
    return {leaves, child_pos};
  }

  std::size_t enumerate_node(std::size_t pos, std::vector<std::uint8_t>& prefix, std::vector<std::string>& out) const {
    Node node = parse_node(pos);
    const std::size_t mark = prefix.size();
    for (std::size_t i = 0; i < node.path_len; ++i) prefix.push_back(path_nibble(node, i));
    if (node.terminal) {
      std::string s(prefix.size() / 2, '\0');
      for (std::size_t b = 0; b < s.size(); ++b) s[b] = static_cast<char>((prefix[2 * b] << 4) | prefix[2 * b + 1]);
      out.push_back(std::move(s));
    }
    std::size_t child_pos = node.end;
    for (std::size_t i = 0; i < node.child_count; ++i) {
      prefix.push_back(node.labels[i]);
      child_pos = enumerate_node(child_pos, prefix, out);
      prefix.pop_back();
    }
    prefix.resize(mark);
    return child_pos;
  }

  static std::uint8_t nib(const std::string& s, std::size_t i) { return nibble_at(s, i); }

  // Subtree for sorted[lo, hi), all of which share the first `depth` nibbles.
  static Bytes build_node(std::span<const std::string> sorted, std::size_t lo, std::size_t hi, std::size_t depth) {
    const std::string& first = sorted[lo];
    const std::string& last = sorted[hi - 1];
    const std::size_t limit = std::min(nibble_len(first), nibble_len(last));
    std::size_t end = depth;
    while (end < limit && nib(first, end) == nib(last, end)) ++end;

    const bool terminal = nibble_len(first) == end;
    const std::size_t path_len = end - depth;

    // Group the remaining strings by their next nibble.
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    std::vector<std::uint8_t> labels;
    for (std::size_t i = lo + (terminal ? 1 : 0); i < hi;) {
      const std::uint8_t label = nib(sorted[i], end);
      std::size_t j = i + 1;
      while (j < hi && nib(sorted[j], end) == label) ++j;
      groups.emplace_back(i, j);
      labels.push_back(label);
      i = j;
    }

    std::vector<Bytes> children;
    children.reserve(groups.size());
    for (const auto& [a, b] : groups) children.push_back(build_node(sorted, a, b, end + 1));

    Bytes out;
    ByteWriter w(out);
    std::uint8_t header = static_cast<std::uint8_t>(groups.size());
    if (terminal) header |= 0x80;
    if (path_len > 0) header |= 0x40;
    w.u8(header);
    if (path_len > 0) {
      w.varint(path_len);
      for (std::size_t i = 0; i < path_len; i += 2) {
        std::uint8_t b = static_cast<std::uint8_t>(nib(first, depth + i) << 4);
        if (i + 1 < path_len) b |= nib(first, depth + i + 1);
        w.u8(b);
      }
    }
    for (std::size_t i = 0; i < labels.size(); i += 2) {
      std::uint8_t b = static_cast<std::uint8_t>(labels[i] << 4);
      if (i + 1 < labels.size()) b |= labels[i + 1];
      w.u8(b);
    }
    for (std::size_t i = 0; i + 1 < groups.size(); ++i) {
      w.varint(groups[i].second - groups[i].first);
      w.varint(children[i].size());
    }
    for (const auto& c : children) w.raw(c);
    return out;
  }

  Bytes arena_;
  std::size_t count_ = 0;
  std::size_t root_ = 1;
};

}  // namespace pdrill
