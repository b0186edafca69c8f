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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill {

// Shard file layout (all integers little-endian):
//
//   "PDRL" u16 version
//   u16 table-name length, bytes; u32 shard_id
//   u16 field count; per field: u16 name length, bytes, u8 kind, u8 nullable
//   per column: u8 dictionary representation, u64 payload length, payload
//   u32 chunk count; per chunk: u32 row_count, then per column:
//       u32 chunk-dict entries, u32 global-ids, u8 elements kind, payload
//   u8 checksum algorithm (1 = XXH64 seed 0), u64 checksum of all prior bytes

inline constexpr char kShardMagic[4] = {'P', 'D', 'R', 'L'};
inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr std::uint8_t kChecksumXxh64 = 1;
inline constexpr std::size_t kTrailerBytes = 9;

inline Bytes write_shard(const Shard& s) {
  Bytes out;
  ByteWriter w(out);
  w.raw(std::string_view(kShardMagic, 4));
  w.u16(kShardVersion);
  if (s.schema.table_name.size() > 0xffff) throw Error(ErrorCode::kInvalidArgument, "table name too long");
  w.u16(static_cast<std::uint16_t>(s.schema.table_name.size()));
  w.raw(s.schema.table_name);
  w.u32(s.shard_id);
  w.u16(static_cast<std::uint16_t>(s.schema.fields.size()));
  for (const auto& f : s.schema.fields) {
    if (f.name.size() > 0xffff) throw Error(ErrorCode::kInvalidArgument, "field name too long");
    w.u16(static_cast<std::uint16_t>(f.name.size()));
    w.raw(f.name);
    w.u8(static_cast<std::uint8_t>(f.kind));
    w.u8(f.nullable ? 1 : 0);
  }
  for (const auto& c : s.columns) {
    const Bytes payload = c.dict.serialize_payload();
    w.u8(static_cast<std::uint8_t>(c.dict.repr()));
    w.u64(payload.size());
    w.raw(payload);
  }
  w.u32(static_cast<std::uint32_t>(s.chunk_rows.size()));
  for (std::size_t k = 0; k < s.chunk_rows.size(); ++k) {
    w.u32(s.chunk_rows[k]);
    for (const auto& c : s.columns) {
      const ColumnChunk& cc = c.chunks[k];
      w.u32(static_cast<std::uint32_t>(cc.dict.global_ids.size()));
      for (auto g : cc.dict.global_ids) w.u32(g);
      w.u8(static_cast<std::uint8_t>(cc.elems.kind()));
      w.raw(cc.elems.payload());
    }
  }
  const std::uint64_t sum = hash64(std::span<const std::uint8_t>(out), 0);
  w.u8(kChecksumXxh64);
  w.u64(sum);
  return out;
}

namespace detail {

// Parses everything between the version and the trailer. Structural errors
// other than running out of input raise kCorrupt.
inline Shard parse_shard_body(ByteReader& r) {
  Shard s;
  s.schema.table_name = r.str(r.u16());
  s.shard_id = r.u32();
  const std::uint16_t nfields = r.u16();
  for (std::uint16_t i = 0; i < nfields; ++i) {
    Field f;
    f.name = r.str(r.u16());
    const std::uint8_t kind = r.u8();
    if (kind == 0 || kind > static_cast<std::uint8_t>(ValueKind::kTimestamp)) {
      throw Error(ErrorCode::kCorrupt, "bad kind tag for field '" + f.name + "'");
    }
    f.kind = static_cast<ValueKind>(kind);
    const std::uint8_t nullable = r.u8();
    if (nullable > 1) throw Error(ErrorCode::kCorrupt, "bad nullable flag");
    f.nullable = nullable == 1;
    s.schema.fields.push_back(std::move(f));
  }
  try {
    s.schema.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorrupt, std::string("invalid schema: ") + e.what());
  }
  for (const auto& f : s.schema.fields) {
    const std::uint8_t repr = r.u8();
    if (repr > static_cast<std::uint8_t>(DictRepr::kTrie)) throw Error(ErrorCode::kCorrupt, "bad dictionary tag");
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw Error(ErrorCode::kTruncated, "dictionary block exceeds input");
    Column c;
    c.dict = GlobalDictionary::deserialize_payload(static_cast<DictRepr>(repr), f.kind, r.raw(len));
    s.columns.push_back(std::move(c));
  }
  const std::uint32_t nchunks = r.u32();
  for (std::uint32_t k = 0; k < nchunks; ++k) {
    const std::uint32_t rows = r.u32();
    if (rows == 0) throw Error(ErrorCode::kCorrupt, "empty chunk");
    s.chunk_rows.push_back(rows);
    for (auto& c : s.columns) {
      ColumnChunk cc;
      const std::uint32_t entries = r.u32();
      if (entries == 0 || entries > rows) throw Error(ErrorCode::kCorrupt, "bad chunk-dictionary size");
      if (std::size_t{entries} * 4 > r.remaining()) throw Error(ErrorCode::kTruncated, "chunk dictionary exceeds input");
      cc.dict.global_ids.reserve(entries);
      for (std::uint32_t i = 0; i < entries; ++i) {
        const std::uint32_t g = r.u32();
        if (g >= c.dict.size() || (i > 0 && g <= cc.dict.global_ids.back())) {
          throw Error(ErrorCode::kCorrupt, "bad chunk-dictionary entry");
        }
        cc.dict.global_ids.push_back(g);
      }
      const std::uint8_t tag = r.u8();
      if (tag > static_cast<std::uint8_t>(ElementsKind::kBytes4)) throw Error(ErrorCode::kCorrupt, "bad elements tag");
      const auto kind = static_cast<ElementsKind>(tag);
      auto payload = r.raw(elements_payload_size(kind, rows));
      cc.elems = Elements(kind, rows, Bytes(payload.begin(), payload.end()));
      bool ok = true;
      cc.elems.view().for_each([&](std::size_t, std::uint32_t id) { ok = ok && id < entries; });
      if (!ok) throw Error(ErrorCode::kCorrupt, "chunk-id exceeds chunk-dictionary size");
      c.chunks.push_back(std::move(cc));
    }
  }
  return s;
}

}  // namespace detail

/// Inverse of write_shard. Failure modes are distinguished: kBadMagic,
/// kBadVersion, kTruncated (input ends early), kChecksumMismatch (content
/// altered), kCorrupt (checksum valid but structure invalid).
inline Shard read_shard(std::span<const std::uint8_t> data) {
  if (data.size() < 4) throw Error(ErrorCode::kTruncated, "shard file shorter than its magic");
  if (!std::equal(data.begin(), data.begin() + 4, kShardMagic)) throw Error(ErrorCode::kBadMagic, "not a shard file");
  ByteReader head(data);
  head.raw(4);
  const std::uint16_t version = head.u16();
  if (version != kShardVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported shard format version " + std::to_string(version));
  }
  const bool has_trailer = data.size() >= 6 + kTrailerBytes;
  bool checksum_ok = false;
  if (has_trailer) {
    const auto body = data.first(data.size() - kTrailerBytes);
    ByteReader tr(data.subspan(data.size() - kTrailerBytes));
    const std::uint8_t algo = tr.u8();
    const std::uint64_t stored = tr.u64();
    checksum_ok = algo == kChecksumXxh64 && hash64(body, 0) == stored;
  }
  if (!checksum_ok) {
    // Tell a short file from an altered one by how far the structure parses.
    ByteReader r(has_trailer ? data.first(data.size() - kTrailerBytes) : data);
    r.raw(6);
    try {
      detail::parse_shard_body(r);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kTruncated) throw Error(ErrorCode::kTruncated, "shard file is truncated");
    }
    if (!has_trailer) throw Error(ErrorCode::kTruncated, "shard file is truncated");
    throw Error(ErrorCode::kChecksumMismatch, "shard checksum mismatch");
  }
  ByteReader r(data.first(data.size() - kTrailerBytes));
  r.raw(6);
  Shard s;
  try {
    s = detail::parse_shard_body(r);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorrupt, std::string("malformed shard: ") + e.what());
  }
  if (!r.done()) throw Error(ErrorCode::kCorrupt, "trailing bytes before checksum");
  return s;
}

inline void write_shard_file(const Shard& s, const std::filesystem::path& path) {
  const Bytes bytes = write_shard(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

inline Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline Shard read_shard_file(const std::filesystem::path& path) { return read_shard(read_file_bytes(path)); }

}  // namespace pdrill
