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

// Requires linking against zlib.

#include <zlib.h>

#include <cstdint>
#include <span>

#include "pdrill/cache/codec.hpp"
#include "pdrill/core/bytes.hpp"
#include "pdrill/core/errors.hpp"

namespace pdrill {

inline constexpr std::uint8_t kZlibCodec = 2;

/// Deflate (LZ77 plus Huffman coding); slower and smaller than the LZ codec.
inline Codec zlib_codec(int level = 6) {
  auto compress = [level](std::span<const std::uint8_t> in) {
    Bytes out;
    ByteWriter(out).varint(in.size());
    const std::size_t header = out.size();
    uLongf len = compressBound(static_cast<uLong>(in.size()));
    out.resize(header + len);
    if (compress2(out.data() + header, &len, in.data(), static_cast<uLong>(in.size()), level) != Z_OK) {
      throw Error(ErrorCode::kInternal, "zlib compression failed");
    }
    out.resize(header + len);
    return out;
  };
  auto decompress = [](std::span<const std::uint8_t> in) {
    ByteReader r(in);
    const std::uint64_t size = r.varint();
    if (size > (std::uint64_t{1} << 40)) throw Error(ErrorCode::kCorrupt, "implausible decoded size");
    Bytes out(static_cast<std::size_t>(size));
    uLongf len = static_cast<uLongf>(size);
    const auto rest = in.subspan(r.position());
    if (uncompress(out.data(), &len, rest.data(), static_cast<uLong>(rest.size())) != Z_OK || len != size) {
      throw Error(ErrorCode::kCorrupt, "zlib block is corrupt");
    }
    return out;
  };
  return Codec{kZlibCodec, "zlib", compress, decompress};
}

}  // namespace pdrill
