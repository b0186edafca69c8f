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
#include <string>
#include <vector>

#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"

namespace pdrill {

/// Physical layout of a chunk's chunk-id sequence. The numeric values are the
/// on-disk variant tags.
enum class ElementsKind : std::uint8_t {
  kConstant = 0,  // every row has chunk-id 0, no payload
  kBitSet = 1,    // row r at bit (r % 8) of byte r / 8, LSB first
  kBytes1 = 2,
  kBytes2 = 3,
  kBytes4 = 4,
};

inline const char* elements_kind_name(ElementsKind k) {
  switch (k) {
    case ElementsKind::kConstant: return "constant";
    case ElementsKind::kBitSet: return "bitset";
    case ElementsKind::kBytes1: return "bytes1";
    case ElementsKind::kBytes2: return "bytes2";
    case ElementsKind::kBytes4: return "bytes4";
  }
  return "?";
}

enum class ElementsPolicy {
  kAdaptive,  // pick the narrowest layout for the chunk-dictionary cardinality
  kFixed32,   // always 4 bytes per row (the unoptimized baseline)
};

inline ElementsKind elements_kind_for(std::size_t cardinality) {
  if (cardinality <= 1) return ElementsKind::kConstant;
  if (cardinality == 2) return ElementsKind::kBitSet;
  if (cardinality <= (1u << 8)) return ElementsKind::kBytes1;
  if (cardinality <= (1u << 16)) return ElementsKind::kBytes2;
  return ElementsKind::kBytes4;
}

inline std::size_t elements_payload_size(ElementsKind kind, std::size_t rows) {
  switch (kind) {
    case ElementsKind::kConstant: return 0;
    case ElementsKind::kBitSet: return (rows + 7) / 8;
    case ElementsKind::kBytes1: return rows;
    case ElementsKind::kBytes2: return rows * 2;
    case ElementsKind::kBytes4: return rows * 4;
  }
  return 0;
}

/// Non-owning view over an encoded chunk-id sequence.
class ElementsView {
 public:
  ElementsView() = default;
  ElementsView(ElementsKind kind, std::size_t rows, std::span<const std::uint8_t> payload)
      : kind_(kind), rows_(rows), payload_(payload) {}

  ElementsKind kind() const { return kind_; }
  std::size_t size() const { return rows_; }
  std::span<const std::uint8_t> payload() const { return payload_; }

  std::uint32_t operator[](std::size_t row) const {
    const std::uint8_t* p = payload_.data();
    switch (kind_) {
      case ElementsKind::kConstant: return 0;
      case ElementsKind::kBitSet: return (p[row >> 3] >> (row & 7)) & 1u;
      case ElementsKind::kBytes1: return p[row];
      case ElementsKind::kBytes2: return static_cast<std::uint32_t>(p[2 * row]) | (static_cast<std::uint32_t>(p[2 * row + 1]) << 8);
      case ElementsKind::kBytes4:
        return static_cast<std::uint32_t>(p[4 * row]) | (static_cast<std::uint32_t>(p[4 * row + 1]) << 8) |
               (static_cast<std::uint32_t>(p[4 * row + 2]) << 16) | (static_cast<std::uint32_t>(p[4 * row + 3]) << 24);
    }
    return 0;
  }

  /// Calls fn(row, chunk_id) for every row, dispatching on the layout once
  /// outside the loop.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const std::uint8_t* p = payload_.data();
    const std::size_t n = rows_;
    switch (kind_) {
      case ElementsKind::kConstant:
        for (std::size_t r = 0; r < n; ++r) fn(r, 0u);
        break;
      case ElementsKind::kBitSet:
        for (std::size_t r = 0; r < n; ++r) fn(r, static_cast<std::uint32_t>((p[r >> 3] >> (r & 7)) & 1u));
        break;
      case ElementsKind::kBytes1:
        for (std::size_t r = 0; r < n; ++r) fn(r, static_cast<std::uint32_t>(p[r]));
        break;
      case ElementsKind::kBytes2:
        for (std::size_t r = 0; r < n; ++r) fn(r, static_cast<std::uint32_t>(p[2 * r]) | (static_cast<std::uint32_t>(p[2 * r + 1]) << 8));
        break;
      case ElementsKind::kBytes4:
        for (std::size_t r = 0; r < n; ++r) fn(r, (*this)[r]);
        break;
    }
  }

 private:
  ElementsKind kind_ = ElementsKind::kConstant;
  std::size_t rows_ = 0;
  std::span<const std::uint8_t> payload_;
};

/// Owning chunk-id sequence.
class Elements {
 public:
  Elements() = default;
  Elements(ElementsKind kind, std::size_t rows, Bytes payload) : kind_(kind), rows_(rows), payload_(std::move(payload)) {
    if (payload_.size() != elements_payload_size(kind_, rows_)) {
      throw Error(ErrorCode::kCorrupt, "elements payload has " + std::to_string(payload_.size()) + " bytes, expected " +
                                           std::to_string(elements_payload_size(kind_, rows_)));
    }
  }

  /// Encodes `ids` (each < cardinality) with the layout chosen by `policy`.
  static Elements encode(std::span<const std::uint32_t> ids, std::size_t cardinality,
                         ElementsPolicy policy = ElementsPolicy::kAdaptive) {
    const ElementsKind kind =
        policy == ElementsPolicy::kFixed32 ? ElementsKind::kBytes4 : elements_kind_for(cardinality);
    const std::size_t n = ids.size();
    Bytes payload(elements_payload_size(kind, n), 0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint32_t id = ids[r];
      if (id >= cardinality) throw Error(ErrorCode::kInvalidArgument, "chunk-id exceeds chunk-dictionary size");
      switch (kind) {
        case ElementsKind::kConstant: break;
        case ElementsKind::kBitSet: payload[r >> 3] |= static_cast<std::uint8_t>((id & 1u) << (r & 7)); break;
        case ElementsKind::kBytes1: payload[r] = static_cast<std::uint8_t>(id); break;
        case ElementsKind::kBytes2:
          payload[2 * r] = static_cast<std::uint8_t>(id);
          payload[2 * r + 1] = static_cast<std::uint8_t>(id >> 8);
          break;
        case ElementsKind::kBytes4:
          for (int b = 0; b < 4; ++b) payload[4 * r + b] = static_cast<std::uint8_t>(id >> (8 * b));
          break;
      }
    }
    return Elements(kind, n, std::move(payload));
  }

  ElementsKind kind() const { return kind_; }
  std::size_t size() const { return rows_; }
  const Bytes& payload() const { return payload_; }
  std::size_t payload_bytes() const { return payload_.size(); }

  ElementsView view() const { return ElementsView(kind_, rows_, payload_); }
  std::uint32_t operator[](std::size_t row) const { return view()[row]; }

  std::vector<std::uint32_t> decode() const {
    std::vector<std::uint32_t> out(rows_);
    view().for_each([&](std::size_t r, std::uint32_t id) { out[r] = id; });
    return out;
  }

  friend bool operator==(const Elements&, const Elements&) = default;

 private:
  ElementsKind kind_ = ElementsKind::kConstant;
  std::size_t rows_ = 0;
  Bytes payload_;
};

}  // namespace pdrill
