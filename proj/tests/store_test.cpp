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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "pdrill/store/format.hpp"
#include "pdrill/store/rle_cost.hpp"
#include "pdrill/store/shard.hpp"
#include "test_util.hpp"

namespace pdrill {
namespace {

using testing::desk_d1;
using testing::even_chunks;
using testing::single_chunk;

std::vector<Value> strs(std::initializer_list<const char*> xs) {
  std::vector<Value> out;
  for (auto x : xs) out.push_back(Value::str(x));
  return out;
}

TEST(Elements, KindFollowsCardinality) {
  EXPECT_EQ(elements_kind_for(1), ElementsKind::kConstant);
  EXPECT_EQ(elements_kind_for(2), ElementsKind::kBitSet);
  EXPECT_EQ(elements_kind_for(3), ElementsKind::kBytes1);
  EXPECT_EQ(elements_kind_for(256), ElementsKind::kBytes1);
  EXPECT_EQ(elements_kind_for(257), ElementsKind::kBytes2);
  EXPECT_EQ(elements_kind_for(65536), ElementsKind::kBytes2);
  EXPECT_EQ(elements_kind_for(65537), ElementsKind::kBytes4);
}

TEST(Elements, BitSetPacksLsbFirst) {
  std::vector<std::uint32_t> ids = {1, 0, 1, 1, 0, 0, 0, 0, 1};
  auto e = Elements::encode(ids, 2);
  ASSERT_EQ(e.kind(), ElementsKind::kBitSet);
  ASSERT_EQ(e.payload().size(), 2u);
  EXPECT_EQ(e.payload()[0], 0b00001101);
  EXPECT_EQ(e.payload()[1], 0b00000001);
  EXPECT_EQ(e.decode(), ids);
}

TEST(Elements, MultiByteLittleEndian) {
  std::vector<std::uint32_t> ids = {0x0102, 0x0304};
  auto e = Elements::encode(ids, 1000);
  ASSERT_EQ(e.kind(), ElementsKind::kBytes2);
  EXPECT_EQ(e.payload(), (Bytes{0x02, 0x01, 0x04, 0x03}));
}

TEST(Elements, RejectsIdOutOfRange) {
  std::vector<std::uint32_t> ids = {0, 3};
  EXPECT_THROW(Elements::encode(ids, 3), Error);
}

TEST(EncodeColumn, SpecExampleBab) {
  auto values = strs({"b", "a", "b"});
  auto ranges = single_chunk(3);
  Column c = encode_column(values, ValueKind::kStr, ranges);
  EXPECT_EQ(c.dict.values(), strs({"a", "b"}));
  EXPECT_EQ(c.chunks[0].dict.global_ids, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(c.chunks[0].elems.kind(), ElementsKind::kBitSet);
  EXPECT_EQ(c.chunks[0].elems.decode(), (std::vector<std::uint32_t>{1, 0, 1}));
  EXPECT_EQ(c.decode(0, 0), Value::str("b"));
  EXPECT_EQ(c.decode(0, 1), Value::str("a"));
  EXPECT_EQ(decode_column(c), values);
}

TEST(EncodeColumn, ConstantHasNoPayload) {
  auto values = strs({"x", "x", "x"});
  auto ranges = single_chunk(3);
  Column c = encode_column(values, ValueKind::kStr, ranges);
  EXPECT_EQ(c.dict.size(), 1u);
  EXPECT_EQ(c.chunks[0].elems.kind(), ElementsKind::kConstant);
  EXPECT_EQ(c.chunks[0].elems.payload_bytes(), 0u);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(c.decode(0, r), Value::str("x"));
}

TEST(EncodeColumn, MixedKindsRejected) {
  std::vector<Value> values = {Value::str("a"), Value::i64(1)};
  auto ranges = single_chunk(2);
  try {
    encode_column(values, ValueKind::kStr, ranges);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
  }
}

TEST(EncodeColumn, BadBoundariesRejected) {
  auto values = strs({"a", "b", "c"});
  std::vector<ChunkRange> gap = {{0, 1}, {2, 3}};
  std::vector<ChunkRange> empty = {{0, 0}, {0, 3}};
  std::vector<ChunkRange> short_cover = {{0, 2}};
  EXPECT_THROW(encode_column(values, ValueKind::kStr, gap), Error);
  EXPECT_THROW(encode_column(values, ValueKind::kStr, empty), Error);
  EXPECT_THROW(encode_column(values, ValueKind::kStr, short_cover), Error);
}

TEST(EncodeColumn, NullIsGlobalIdZero) {
  std::vector<Value> values = {Value::i64(5), Value::null(), Value::i64(-2)};
  auto ranges = single_chunk(3);
  Column c = encode_column(values, ValueKind::kI64, ranges);
  ASSERT_TRUE(c.dict.has_null());
  EXPECT_EQ(c.dict.value_at(0), Value::null());
  EXPECT_EQ(c.dict.value_at(1), Value::i64(-2));
  EXPECT_EQ(*c.dict.lookup_id(Value::i64(5)), 2u);
  EXPECT_EQ(decode_column(c), values);
}

TEST(EncodeColumn, ChunkDictionariesHoldExactlyLocalIds) {
  auto values = strs({"c", "a", "c", "b", "b", "d"});
  std::vector<ChunkRange> ranges = {{0, 3}, {3, 6}};
  Column c = encode_column(values, ValueKind::kStr, ranges);
  EXPECT_EQ(c.chunks[0].dict.global_ids, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(c.chunks[1].dict.global_ids, (std::vector<std::uint32_t>{1, 3}));
  EXPECT_EQ(decode_column(c), values);
}

TEST(EncodeColumn, DecodeIndexErrors) {
  auto values = strs({"a"});
  auto ranges = single_chunk(1);
  Column c = encode_column(values, ValueKind::kStr, ranges);
  try {
    c.decode(0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
  EXPECT_THROW(c.decode(1, 0), Error);
}

// Exact element payload sizes at the cardinality breakpoints.
TEST(EncodeColumn, PayloadFormulaAtBreakpoints) {
  for (std::size_t card : {1u, 2u, 3u, 255u, 256u, 257u, 65536u, 65537u}) {
    const std::size_t n = std::max<std::size_t>(card, 1000) + 3;
    std::vector<Value> values;
    for (std::size_t r = 0; r < n; ++r) values.push_back(Value::i64(static_cast<std::int64_t>(r % card)));
    auto ranges = single_chunk(n);
    Column c = encode_column(values, ValueKind::kI64, ranges);
    std::size_t expect;
    if (card == 1) {
      expect = 0;
    } else if (card == 2) {
      expect = (n + 7) / 8;
    } else if (card <= 256) {
      expect = n;
    } else if (card <= 65536) {
      expect = 2 * n;
    } else {
      expect = 4 * n;
    }
    EXPECT_EQ(c.elements_bytes(), expect) << "cardinality " << card;
  }
}

Table random_table(std::mt19937_64& rng, std::size_t rows) {
  Table t;
  t.schema.table_name = "t";
  t.schema.fields = {{"s", ValueKind::kStr, true},
                     {"i", ValueKind::kI64, true},
                     {"f", ValueKind::kF64, false},
                     {"d", ValueKind::kDate, false},
                     {"ts", ValueKind::kTimestamp, false}};
  t.columns.resize(5);
  std::uniform_int_distribution<int> small(0, 20);
  for (std::size_t r = 0; r < rows; ++r) {
    const int k = small(rng);
    t.columns[0].push_back(k == 0 ? Value::null() : Value::str("v" + std::to_string(k % 7)));
    t.columns[1].push_back(k == 1 ? Value::null() : Value::i64(static_cast<std::int64_t>(rng() % 500) - 250));
    t.columns[2].push_back(Value::f64(static_cast<double>(rng() % 64) * 0.25));
    t.columns[3].push_back(Value::date(static_cast<std::int32_t>(rng() % 5000)));
    t.columns[4].push_back(Value::timestamp(static_cast<std::int64_t>(rng() % 1000000)));
  }
  return t;
}

TEST(Shard, RandomRoundtripAcrossChunkings) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rows = 1 + rng() % 400;
    Table t = random_table(rng, rows);
    const std::size_t chunk = 1 + rng() % 64;
    auto ranges = even_chunks(rows, chunk);
    for (auto policy : {ElementsPolicy::kAdaptive, ElementsPolicy::kFixed32}) {
      for (auto repr : {DictRepr::kTrie, DictRepr::kSortedArray}) {
        Shard s = build_shard(3, t, ranges, {policy, repr});
        Table back = s.decode_table();
        ASSERT_EQ(back.columns, t.columns);
        for (std::size_t r = 0; r < rows; r += 17) EXPECT_EQ(back.row(r), t.row(r));
        Shard again = read_shard(write_shard(s));
        ASSERT_EQ(again, s);
        EXPECT_EQ(write_shard(again), write_shard(s));
      }
    }
  }
}

TEST(Shard, DecodeElementFollowsDoubleLookup) {
  Table t = desk_d1();
  std::vector<ChunkRange> ranges = {{0, 2}, {2, 4}, {4, 6}};
  Shard s = build_shard(0, t, ranges);
  EXPECT_EQ(s.decode_element("country", 1, 1), Value::str("fr"));
  EXPECT_EQ(s.decode_element("latency", 2, 0), Value::i64(30));
  EXPECT_THROW(s.decode_element("country", 3, 0), Error);
  EXPECT_THROW(s.decode_element("nope", 0, 0), Error);
}

TEST(Shard, NonNullableRejectsNull) {
  Table t = desk_d1();
  t.columns[0][2] = Value::null();
  auto ranges = single_chunk(6);
  EXPECT_THROW(build_shard(0, t, ranges), Error);
}

TEST(Format, EmptyTableRoundtrips) {
  Table t;
  t.schema.table_name = "empty";
  t.schema.fields = {{"a", ValueKind::kStr, false}, {"b", ValueKind::kF64, true}};
  t.columns.resize(2);
  Shard s = build_shard(9, t, {});
  Bytes bytes = write_shard(s);
  Shard back = read_shard(bytes);
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.chunk_count(), 0u);
  EXPECT_EQ(back.schema, t.schema);
}

ErrorCode read_error(const Bytes& b) {
  try {
    read_shard(b);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(Format, DistinctParseErrors) {
  Table t = desk_d1();
  std::vector<ChunkRange> ranges = {{0, 2}, {2, 4}, {4, 6}};
  const Bytes good = write_shard(build_shard(0, t, ranges));

  Bytes magic = good;
  magic[0] = 'X';
  EXPECT_EQ(read_error(magic), ErrorCode::kBadMagic);

  Bytes version = good;
  version[4] = 2;
  EXPECT_EQ(read_error(version), ErrorCode::kBadVersion);

  for (std::size_t cut : {std::size_t{2}, std::size_t{8}, good.size() / 2, good.size() - 1}) {
    Bytes shortened(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(read_error(shortened), ErrorCode::kTruncated) << "cut at " << cut;
  }
}

TEST(Format, EverySingleByteCorruptionDetected) {
  Table t = desk_d1();
  std::vector<ChunkRange> ranges = {{0, 2}, {2, 4}, {4, 6}};
  const Bytes good = write_shard(build_shard(0, t, ranges));
  for (std::size_t i = 0; i < good.size(); ++i) {
    for (std::uint8_t flip : {std::uint8_t{0x01}, std::uint8_t{0x80}}) {
      Bytes bad = good;
      bad[i] ^= flip;
      EXPECT_NE(read_error(bad), ErrorCode::kInternal) << "byte " << i;
    }
  }
  Bytes payload = good;
  payload[good.size() - 12] ^= 0x04;
  EXPECT_EQ(read_error(payload), ErrorCode::kChecksumMismatch);
}

TEST(Format, FileRoundtrip) {
  Table t = desk_d1();
  auto ranges = single_chunk(6);
  Shard s = build_shard(1, t, ranges);
  auto path = std::filesystem::temp_directory_path() / "pdrill_store_test.pdrl";
  write_shard_file(s, path);
  EXPECT_EQ(read_shard_file(path), s);
  std::filesystem::remove(path);
  EXPECT_THROW(read_shard_file(path), Error);
}

TEST(RleCost, FigureThreeExample) {
  BitMatrix m = {{0, 1, 0}, {0, 1, 1}, {1, 1, 0}};
  EXPECT_EQ(rle_bit_cost(m), 6u);
}

TEST(RleCost, SingleRowIsWidth) {
  BitMatrix m = {{1, 0, 1, 1, 0}};
  EXPECT_EQ(rle_bit_cost(m), 5u);
}

TEST(RleCost, OrderMatters) {
  BitMatrix m = {{0, 0}, {1, 1}, {0, 0}};
  std::vector<std::size_t> id = {0, 1, 2};
  std::vector<std::size_t> better = {0, 2, 1};
  EXPECT_EQ(rle_bit_cost(m, id), 6u);
  EXPECT_EQ(rle_bit_cost(m, better), 4u);
  std::size_t best = 1000;
  std::vector<std::size_t> p = {0, 1, 2};
  do {
    best = std::min(best, rle_bit_cost(m, p));
  } while (std::next_permutation(p.begin(), p.end()));
  EXPECT_EQ(best, 4u);
}

TEST(RleCost, RejectsBadShapes) {
  BitMatrix ragged = {{0, 1}, {1}};
  EXPECT_THROW(rle_bit_cost(ragged), Error);
  BitMatrix m = {{0}, {1}};
  std::vector<std::size_t> dup = {0, 0};
  EXPECT_THROW(rle_bit_cost(m, dup), Error);
}

// Independent run-length encoder: counts runs per column.
std::size_t count_runs(const BitMatrix& m, const std::vector<std::size_t>& order) {
  if (m.empty()) return 0;
  std::size_t runs = 0;
  for (std::size_t c = 0; c < m[0].size(); ++c) {
    std::vector<std::pair<int, int>> encoded;
    for (auto r : order) {
      if (encoded.empty() || encoded.back().first != m[r][c]) {
        encoded.push_back({m[r][c], 1});
      } else {
        ++encoded.back().second;
      }
    }
    runs += encoded.size();
  }
  return runs;
}

TEST(RleCost, MatchesDirectEncoderOnRandomMatrices) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng() % 10;
    const std::size_t cols = 1 + rng() % 10;
    BitMatrix m(rows, std::vector<std::uint8_t>(cols));
    for (auto& row : m) {
      for (auto& b : row) b = rng() & 1;
    }
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EXPECT_EQ(rle_bit_cost(m, order), count_runs(m, order));
  }
}

}  // namespace
}  // namespace pdrill
