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
#include <cstring>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"

namespace pdrill {

/// Block compressor identified by a one-byte id.
struct Codec {
  std::uint8_t id = 0;
  std::string name;
  std::function<Bytes(std::span<const std::uint8_t>)> compress;
  std::function<Bytes(std::span<const std::uint8_t>)> decompress;
};

inline constexpr std::uint8_t kIdentityCodec = 0;
inline constexpr std::uint8_t kLzCodec = 1;

inline Codec identity_codec() {
  auto copy = [](std::span<const std::uint8_t> in) { return Bytes(in.begin(), in.end()); };
  return Codec{kIdentityCodec, "identity", copy, copy};
}

namespace lz {

// Byte-oriented LZ77 block format:
//   varint decoded size, then sequences of
//   token (high nibble literal count, low nibble match length - 4),
//   extra literal-count bytes when the nibble is 15 (each adds 0..255, a byte
//   below 255 ends the run), literals, and unless the block ends here a
//   u16 little-endian offset plus extra match-length bytes encoded likewise.
// The last sequence carries literals only.

inline constexpr std::size_t kMinMatch = 4;
inline constexpr int kHashBits = 14;
inline constexpr std::size_t kMaxOffset = 65535;

inline std::uint32_t read32(const std::uint8_t* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

inline std::uint32_t hash4(std::uint32_t v) { return (v * 2654435761u) >> (32 - kHashBits); }

inline void put_length(Bytes& out, std::size_t extra) {
  while (extra >= 255) {
    out.push_back(255);
    extra -= 255;
  }
  out.push_back(static_cast<std::uint8_t>(extra));
}

inline void emit(Bytes& out, const std::uint8_t* lit, std::size_t lit_len, std::size_t offset, std::size_t match_len) {
  const std::size_t ml = match_len ? match_len - kMinMatch : 0;
  const std::uint8_t token = static_cast<std::uint8_t>((std::min<std::size_t>(lit_len, 15) << 4) | std::min<std::size_t>(ml, 15));
  out.push_back(token);
  if (lit_len >= 15) put_length(out, lit_len - 15);
  out.insert(out.end(), lit, lit + lit_len);
  if (match_len == 0) return;
  out.push_back(static_cast<std::uint8_t>(offset));
  out.push_back(static_cast<std::uint8_t>(offset >> 8));
  if (ml >= 15) put_length(out, ml - 15);
}

inline Bytes compress(std::span<const std::uint8_t> in) {
  Bytes out;
  ByteWriter(out).varint(in.size());
  const std::uint8_t* base = in.data();
  const std::size_t n = in.size();
  std::vector<std::int64_t> table(std::size_t{1} << kHashBits, -1);
  std::size_t anchor = 0;
  std::size_t i = 0;
  while (n >= kMinMatch && i + kMinMatch <= n) {
    const std::uint32_t v = read32(base + i);
    const std::uint32_t h = hash4(v);
    const std::int64_t cand = table[h];
    table[h] = static_cast<std::int64_t>(i);
    if (cand >= 0 && i - static_cast<std::size_t>(cand) <= kMaxOffset && read32(base + cand) == v) {
      std::size_t len = kMinMatch;
      while (i + len < n && base[cand + static_cast<std::int64_t>(len)] == base[i + len]) ++len;
      emit(out, base + anchor, i - anchor, i - static_cast<std::size_t>(cand), len);
      // Seed the table inside long matches sparsely.
      for (std::size_t j = i + 1; j + kMinMatch <= n && j < i + len; j += 2) {
        table[hash4(read32(base + j))] = static_cast<std::int64_t>(j);
      }
      i += len;
      anchor = i;
    } else {
      ++i;
    }
  }
  emit(out, base + anchor, n - anchor, 0, 0);
  return out;
}

inline std::size_t get_length(ByteReader& r, std::size_t nibble) {
  std::size_t len = nibble;
  if (nibble == 15) {
    std::uint8_t b;
    do {
      b = r.u8();
      len += b;
    } while (b == 255);
  }
  return len;
}

inline Bytes decompress(std::span<const std::uint8_t> in) {
  try {
    ByteReader r(in);
    const std::uint64_t size = r.varint();
    if (size > (std::uint64_t{1} << 40)) throw Error(ErrorCode::kCorrupt, "implausible decoded size");
    Bytes out;
    out.reserve(static_cast<std::size_t>(size));
    while (true) {
      const std::uint8_t token = r.u8();
      const std::size_t lit = get_length(r, token >> 4);
      auto bytes = r.raw(lit);
      if (out.size() + lit > size) throw Error(ErrorCode::kCorrupt, "literal run overflows block");
      out.insert(out.end(), bytes.begin(), bytes.end());
      if (r.done()) break;
      const std::size_t offset = r.u16();
      const std::size_t len = get_length(r, token & 15) + kMinMatch;
      if (offset == 0 || offset > out.size()) throw Error(ErrorCode::kCorrupt, "match offset out of range");
      if (out.size() + len > size) throw Error(ErrorCode::kCorrupt, "match overflows block");
      const std::size_t from = out.size() - offset;
      for (std::size_t k = 0; k < len; ++k) out.push_back(out[from + k]);
    }
    if (out.size() != size) throw Error(ErrorCode::kCorrupt, "decoded size mismatch");
    return out;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorrupt) throw;
    throw Error(ErrorCode::kCorrupt, std::string("lz block: ") + e.what());
  }
}

}  // namespace lz

inline Codec lz_codec() { return Codec{kLzCodec, "lz", lz::compress, lz::decompress}; }

/// Codecs by id. Identity and the LZ codec are always present; others (for
/// example an entropy coder for benchmarks) can be registered.
class CodecRegistry {
 public:
  CodecRegistry() {
    add(identity_codec());
    add(lz_codec());
  }

  void add(Codec c) {
    const std::uint8_t id = c.id;
    codecs_[id] = std::move(c);
  }

  const Codec& get(std::uint8_t id) const {
    auto it = codecs_.find(id);
    if (it == codecs_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown codec id " + std::to_string(id));
    return it->second;
  }

  const Codec& by_name(const std::string& name) const {
    for (const auto& [id, c] : codecs_) {
      if (c.name == name) return c;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown codec '" + name + "'");
  }

  std::vector<std::uint8_t> ids() const {
    std::vector<std::uint8_t> out;
    for (const auto& [id, c] : codecs_) out.push_back(id);
    return out;
  }

 private:
  std::map<std::uint8_t, Codec> codecs_;
};

}  // namespace pdrill
