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
#include <cmath>
#include <random>

#include "pdrill/ingest/oracle.hpp"
#include "pdrill/partition/partition.hpp"
#include "pdrill/query/engine.hpp"
#include "query_gen.hpp"
#include "test_util.hpp"

namespace pdrill {
namespace {

using testing::desk_d1;

const char* kExampleQuery =
    "SELECT search_string, COUNT(*) as c FROM data\n"
    "WHERE search_string IN\n"
    "      (\"la redoute\", \"voyages snfc\")\n"
    "GROUP BY search_string ORDER BY c DESC LIMIT 10;";

const char* kQuery1 = "SELECT country, COUNT(*) as c FROM data\nGROUP BY country ORDER BY c DESC LIMIT 10;";
const char* kQuery2 =
    "SELECT date(timestamp) as date, COUNT(*),\nSUM(latency) FROM data\nGROUP BY date ORDER BY date ASC LIMIT 10;";
const char* kQuery3 = "SELECT table_name, COUNT(*) as c FROM data\nGROUP BY table_name ORDER BY c DESC LIMIT 10;";

Shard d1_by_country() {
  const Table t = desk_d1();
  const std::vector<ChunkRange> chunks = {{0, 2}, {2, 4}, {4, 6}};
  return build_shard(0, t, chunks);
}

std::vector<std::vector<Value>> rows(std::initializer_list<std::vector<Value>> r) { return r; }

Value S(const char* s) { return Value::str(s); }
Value I(std::int64_t v) { return Value::i64(v); }

const std::vector<std::string>& figure1_dictionary() {
  static const std::vector<std::string> d = {"ab in den Urlaub", "amazon",          "cheap tickets",    "chaussures",
                                             "cheap flights",    "ebay",            "fashingskostüme",  "immobilienscout",
                                             "karnevalskostüme", "la redoute",      "pages jaunes",     "voyages snfc",
                                             "yellow pages"};
  return d;
}

// Figure-1 shaped search_string column: three chunks whose contents follow
// the figure's chunk dictionaries and elements.
Table figure1_table() {
  const auto& dict = figure1_dictionary();
  const std::vector<std::vector<int>> chunk_dicts = {{1, 2, 4, 5, 12}, {0, 1, 5, 6, 7, 8}, {1, 3, 5, 10, 11}};
  // The figure's last chunk lists an element 5 for a 5-entry dictionary; it
  // is left out.
  const std::vector<std::vector<int>> elems = {
      {3, 2, 0, 4, 0, 0, 2, 1, 3, 2}, {5, 2, 1, 4, 3, 0, 0, 0, 1, 5, 5}, {0, 0, 2, 4, 3, 4, 4, 4, 2, 1}};
  Table t;
  t.schema.table_name = "data";
  t.schema.fields = {{"search_string", ValueKind::kStr, false}};
  t.columns.resize(1);
  for (std::size_t c = 0; c < 3; ++c) {
    for (int e : elems[c]) t.columns[0].push_back(Value::str(dict[chunk_dicts[c][e]]));
  }
  return t;
}

// The figure's global dictionary also lists values that occur in no chunk
// ("la redoute"). Rebuild the column's dictionary over all of them; the
// id remapping is monotone so chunk dictionaries stay sorted.
Shard figure1_shard(const Table& t) {
  Shard s = build_shard(0, t, std::vector<ChunkRange>{{0, 10}, {10, 21}, {21, 31}},
                        {ElementsPolicy::kAdaptive, DictRepr::kSortedArray});
  std::vector<Value> all;
  for (const auto& v : figure1_dictionary()) all.push_back(Value::str(v));
  std::sort(all.begin(), all.end());
  const GlobalDictionary full = GlobalDictionary::from_sorted(ValueKind::kStr, all);
  Column& col = s.columns[0];
  for (auto& cc : col.chunks) {
    for (auto& g : cc.dict.global_ids) g = *full.lookup_id(col.dict.value_at(g));
  }
  col.dict = full;
  return s;
}

// ---------------------------------------------------------------------------
// Parser

TEST(Parser, ExampleQueryVerbatim) {
  const QueryAst q = parse(kExampleQuery);
  ASSERT_EQ(q.select.size(), 2u);
  EXPECT_EQ(q.select[1].alias, "c");
  EXPECT_EQ(q.from, "data");
  ASSERT_TRUE(q.where);
  EXPECT_EQ(q.where->op, ExprOp::kIn);
  EXPECT_FALSE(q.where->negated);
  ASSERT_EQ(q.where->args.size(), 3u);
  EXPECT_EQ(q.where->args[1]->literal, S("la redoute"));
  EXPECT_EQ(q.where->args[2]->literal, S("voyages snfc"));
  ASSERT_EQ(q.group_by.size(), 1u);
  EXPECT_EQ(q.group_by[0]->name, "search_string");
  ASSERT_EQ(q.order_by.size(), 1u);
  EXPECT_TRUE(q.order_by[0].desc);
  EXPECT_EQ(q.order_by[0].expr->name, "c");
  EXPECT_EQ(q.limit, 10);
}

TEST(Parser, ExperimentQueries) {
  for (const char* sql : {kQuery1, kQuery2, kQuery3}) EXPECT_NO_THROW(parse(sql)) << sql;
  const QueryAst q2 = parse(kQuery2);
  EXPECT_EQ(q2.select[0].expr->op, ExprOp::kCall);
  EXPECT_EQ(q2.select[0].expr->name, "date");
  EXPECT_EQ(q2.select[0].alias, "date");
  EXPECT_EQ(q2.group_by[0]->op, ExprOp::kColumn);
  EXPECT_FALSE(q2.order_by[0].desc);
}

TEST(Parser, TrailingGroupByIsSyntaxError) {
  try {
    parse("SELECT COUNT(*) FROM data GROUP BY");
    FAIL() << "expected a syntax error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSyntax);
    ASSERT_TRUE(e.position());
    EXPECT_EQ(*e.position(), 34u);
  }
}

TEST(Parser, KeywordsCaseInsensitiveAndQuotes) {
  const QueryAst a = parse("select country, count(*) AS c from data where country in ('de', \"fr\") group by country");
  const QueryAst b = parse("SELECT country, COUNT(*) AS c FROM data WHERE country IN (\"de\", 'fr') GROUP BY country");
  EXPECT_EQ(to_sql(a), to_sql(b));
  const QueryAst c = parse("SELECT `weird name`, COUNT(*) FROM data GROUP BY `weird name`");
  EXPECT_EQ(c.select[0].expr->name, "weird name");
}

TEST(Parser, UnknownFunctionAndAggregateInWhere) {
  try {
    parse("SELECT frobnicate(x) FROM data");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownFunction);
    EXPECT_EQ(*e.position(), 7u);
  }
  try {
    parse("SELECT COUNT(*) FROM data WHERE SUM(x) > 1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_EQ(*e.position(), 32u);
  }
}

TEST(Parser, Precedence) {
  const QueryAst q = parse("SELECT a FROM t WHERE NOT a = 1 OR b IN (1, -2) AND c IS NOT NULL");
  EXPECT_EQ(to_sql(q.where), "(NOT (a = 1) OR (b IN (1, -2) AND c IS NOT NULL))");
  const QueryAst r = parse("SELECT 1 + 2 * 3 - -x % 4 FROM t");
  EXPECT_EQ(to_sql(r.select[0].expr), "((1 + (2 * 3)) - ((-x) % 4))");
}

TEST(Parser, RenderRoundTrips) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::string sql = testing::random_query(rng);
    const std::string once = to_sql(parse(sql));
    EXPECT_EQ(to_sql(parse(once)), once) << sql;
  }
}

TEST(Parser, SyntaxErrors) {
  for (const char* sql : {"", "SELECT", "SELECT a FROM", "SELECT a FROM t WHERE", "SELECT a FROM t LIMIT x",
                          "SELECT a FROM t WHERE a IN ()", "SELECT 'open FROM t", "SELECT a FROM t extra",
                          "SELECT a b c FROM t", "SELECT SUM(DISTINCT a) FROM t"}) {
    try {
      parse(sql);
      ADD_FAILURE() << "accepted: " << sql;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSyntax) << sql;
      EXPECT_TRUE(e.position()) << sql;
    }
  }
}

TEST(Parser, CanonicalKeySortsCommutativeOperands) {
  EXPECT_EQ(canonical_key(parse_expression("b + a")), canonical_key(parse_expression("a   +  b")));
  EXPECT_EQ(canonical_key(parse_expression("CONCAT(x, y)")), canonical_key(parse_expression("concat(x, y)")));
  EXPECT_NE(canonical_key(parse_expression("a - b")), canonical_key(parse_expression("b - a")));
  EXPECT_EQ(canonical_key(parse_expression("x IN (3, 1, 2)")), canonical_key(parse_expression("x IN (1, 2, 3)")));
}

// ---------------------------------------------------------------------------
// Analyzer

TEST(Analyzer, GroupByAliasAndOrderByAlias) {
  Schema s;
  s.table_name = "data";
  s.fields = {{"timestamp", ValueKind::kTimestamp, false}, {"latency", ValueKind::kI64, false}};
  const BoundQuery q = analyze(parse(kQuery2), s);
  ASSERT_EQ(q.group_keys.size(), 1u);
  EXPECT_EQ(to_sql(q.group_keys[0]), "date(timestamp)");
  EXPECT_EQ(q.outputs[0].expr->op, ExprOp::kGroupRef);
  EXPECT_EQ(q.outputs[0].kind, ValueKind::kDate);
  EXPECT_EQ(q.outputs[1].name, "COUNT(*)");
  EXPECT_EQ(q.outputs[2].kind, ValueKind::kI64);
  ASSERT_EQ(q.order.size(), 1u);
  EXPECT_EQ(q.order[0].expr->op, ExprOp::kGroupRef);
}

TEST(Analyzer, Errors) {
  const Schema s = desk_d1().schema;
  auto code = [&](const char* sql) {
    try {
      analyze(parse(sql), s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInternal;
  };
  EXPECT_EQ(code("SELECT country, latency FROM data GROUP BY country"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code("SELECT country FROM data GROUP BY country ORDER BY nope"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code("SELECT nope FROM data"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code("SELECT SUM(country) FROM data"), ErrorCode::kTypeMismatch);
  EXPECT_EQ(code("SELECT COUNT(*) FROM data WHERE latency = 'x'"), ErrorCode::kTypeMismatch);
  EXPECT_EQ(code("SELECT COUNT(*) FROM data WHERE latency"), ErrorCode::kTypeMismatch);
  EXPECT_EQ(code("SELECT SUM(COUNT(*)) FROM data"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code("SELECT country FROM data"), ErrorCode::kInvalidArgument);
}

TEST(Analyzer, DedupesAggregates) {
  const BoundQuery q = analyze(parse("SELECT SUM(latency), SUM(latency) + 1, COUNT(*) FROM data HAVING COUNT(*) > 1 ORDER BY SUM(latency)"),
                               desk_d1().schema);
  EXPECT_EQ(q.aggregates.size(), 2u);
}

// ---------------------------------------------------------------------------
// KMV

TEST(Kmv, ExactBelowCapacity) {
  KmvSketch k(1000);
  for (int rep = 0; rep < 3; ++rep) {
    for (int i = 0; i < 5; ++i) k.add(Value::i64(i));
  }
  EXPECT_EQ(k.estimate(), 5.0);
}

TEST(Kmv, EstimatorIsMOverV) {
  KmvSketch k(2);
  k.add_hash(static_cast<std::uint64_t>(0.2 * 18446744073709551616.0));
  k.add_hash(static_cast<std::uint64_t>(0.1 * 18446744073709551616.0));
  k.add_hash(static_cast<std::uint64_t>(0.7 * 18446744073709551616.0));  // larger than the max: ignored
  EXPECT_NEAR(k.estimate(), 10.0, 1e-9);
  KmvSketch bc(2, true);
  bc.merge(k);
  EXPECT_NEAR(bc.estimate(), 5.0, 1e-9);
}

TEST(Kmv, MonotoneAndDuplicateInvariant) {
  KmvSketch k(64);
  double last = 0;
  for (int i = 0; i < 5000; ++i) {
    k.add(Value::i64(i));
    const double e = k.estimate();
    EXPECT_GE(e, last);
    last = e;
    const auto before = k.hashes();
    k.add(Value::i64(i / 2));
    EXPECT_EQ(k.hashes(), before);
  }
  EXPECT_EQ(k.hashes().size(), 64u);
  EXPECT_TRUE(std::is_sorted(k.hashes().begin(), k.hashes().end()));
}

TEST(Kmv, MergeEqualsSketchOfUnion) {
  KmvSketch a(128), b(128), all(128);
  for (int i = 0; i < 3000; ++i) {
    (i % 3 ? a : b).add(Value::i64(i));
    all.add(Value::i64(i));
  }
  a.merge(b);
  EXPECT_EQ(a.hashes(), all.hashes());
}

TEST(Kmv, RelativeErrorSmallTrial) {
  std::vector<double> errs;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    KmvSketch k(1024);
    for (int i = 0; i < 100000; ++i) k.add(Value::i64(i), seed);
    errs.push_back(std::fabs(k.estimate() - 100000.0) / 100000.0);
  }
  std::sort(errs.begin(), errs.end());
  EXPECT_LE(errs[errs.size() / 2], 0.05);
}

// ---------------------------------------------------------------------------
// Restriction splitting

Schema split_schema() {
  Schema s;
  s.table_name = "t";
  s.fields = {{"x", ValueKind::kI64, true}, {"y", ValueKind::kStr, true}, {"a", ValueKind::kI64, true}};
  return s;
}

SplitRestriction split_sql(const std::string& where) {
  const BoundQuery q = analyze(parse("SELECT COUNT(*) FROM t WHERE " + where), split_schema());
  return split_restriction(q.where);
}

TEST(Split, SpecialOperatorsStayOnTop) {
  const auto s = split_sql("abs(x) IN (1, 2) AND lower(y) = 'q'");
  EXPECT_EQ(s.root.describe(), "And(In(vf[abs(x)], {1, 2}), Eq(vf[lower(y)], 'q'))");
  ASSERT_EQ(s.virtual_fields.size(), 2u);
  EXPECT_EQ(s.virtual_fields[0].name, "abs(x)");
  EXPECT_EQ(s.virtual_fields[1].name, "lower(y)");
}

TEST(Split, BareColumnNeedsNoVirtualField) {
  const auto s = split_sql("a = 5");
  EXPECT_EQ(s.root.describe(), "Eq(a, 5)");
  EXPECT_TRUE(s.virtual_fields.empty());
  const auto n = split_sql("NOT (a IN (1))");
  EXPECT_EQ(n.root.describe(), "Not(In(a, {1}))");
  EXPECT_TRUE(n.virtual_fields.empty());
}

TEST(Split, ResidualAndConstants) {
  EXPECT_EQ(split_sql("a > x").root.describe(), "Residual(a > x)");
  EXPECT_EQ(split_sql("3 < a").root.describe(), "Cmp(a > 3)");
  EXPECT_EQ(split_sql("1 = 1 AND a != 2").root.describe(), "And(True, Neq(a, 2))");
  EXPECT_EQ(split_sql("a IN (NULL)").root.describe(), "False");
  EXPECT_EQ(split_sql("a NOT IN (NULL)").root.describe(), "IsNotNull(a)");
  EXPECT_EQ(split_sql("a + x = 3").root.describe(), "Eq(vf[(a + x)], 3)");
  EXPECT_EQ(split_sql("x + a = 3").virtual_fields[0].name, "(a + x)");
}

// ---------------------------------------------------------------------------
// Classification

TEST(Classify, ExampleWalkthrough) {
  const Table t = figure1_table();
  const Shard s = figure1_shard(t);
  const GlobalDictionary& d = s.column("search_string").dict;
  EXPECT_EQ(d.lookup_id(S("la redoute")), 9u);
  EXPECT_EQ(d.lookup_id(S("voyages snfc")), 11u);
  EXPECT_EQ(s.column("search_string").chunks[2].dict.chunk_id_of(11), 4u);
  EXPECT_EQ(s.decode_table().columns, t.columns);
  const BoundQuery q = analyze(parse(kExampleQuery), s.schema);
  EXPECT_EQ(classify_chunks(s, q),
            (std::vector<ChunkStatus>{ChunkStatus::kSkipped, ChunkStatus::kSkipped, ChunkStatus::kPartial}));
  QueryOptions opt;
  opt.trace = true;
  const QueryResult r = execute(s, q, opt);
  EXPECT_EQ(r.stats.chunks_scanned, 1u);
  EXPECT_NEAR(r.stats.chunk_skipped_fraction(), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.result.rows, oracle::run(q, t));
  EXPECT_EQ(r.result.rows, rows({{S("voyages snfc"), I(4)}}));
}

TEST(Classify, AbsentValueSkipsEverything) {
  const Shard s = d1_by_country();
  const BoundQuery q = analyze(parse("SELECT COUNT(*) FROM data WHERE country IN ('xx')"), s.schema);
  for (auto st : classify_chunks(s, q)) EXPECT_EQ(st, ChunkStatus::kSkipped);
}

TEST(Classify, EqualityOnPartitionedD1) {
  const Shard s = d1_by_country();
  const BoundQuery q = analyze(parse("SELECT COUNT(*) FROM data WHERE country = \"fr\""), s.schema);
  EXPECT_EQ(classify_chunks(s, q), (std::vector<ChunkStatus>{ChunkStatus::kSkipped, ChunkStatus::kFullyActive,
                                                             ChunkStatus::kSkipped}));
}

TEST(Classify, SoundOnRandomTables) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Table t = testing::random_table(rng, 1 + rng() % 400);
    const auto chunks = testing::even_chunks(t.row_count(), 1 + rng() % 60);
    const Shard s = build_shard(0, t, chunks);
    const std::string sql = "SELECT COUNT(*) FROM t WHERE " + [&] {
      std::string q = testing::random_query(rng);
      auto w = q.find(" WHERE ");
      if (w == std::string::npos) return std::string("s1 = 'a'");
      auto end = q.find(" GROUP BY ", w);
      if (end == std::string::npos) end = q.find(" HAVING ", w);
      if (end == std::string::npos) end = q.find(" ORDER BY ", w);
      if (end == std::string::npos) end = q.find(" LIMIT ", w);
      return q.substr(w + 7, end == std::string::npos ? std::string::npos : end - w - 7);
    }();
    const BoundQuery q = analyze(parse(sql), s.schema);
    const auto statuses = classify_chunks(s, q);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      Table part;
      part.schema = t.schema;
      part.columns.resize(t.columns.size());
      for (std::size_t col = 0; col < t.columns.size(); ++col) {
        part.columns[col].assign(t.columns[col].begin() + chunks[c].begin, t.columns[col].begin() + chunks[c].end);
      }
      const std::int64_t matches = oracle::run(q, part)[0][0].as_i64();
      if (statuses[c] == ChunkStatus::kSkipped) {
        EXPECT_EQ(matches, 0) << sql;
      }
      if (statuses[c] == ChunkStatus::kFullyActive) {
        EXPECT_EQ(matches, static_cast<std::int64_t>(chunks[c].size())) << sql;
      }
      const auto mask = chunk_row_mask(s, q, c);
      EXPECT_EQ(std::count(mask.begin(), mask.end(), 1), matches) << sql;
    }
  }
}

// ---------------------------------------------------------------------------
// Per-chunk group-by

TEST(ChunkGroupBy, CountsArrayOnOneChunk) {
  const Shard s = d1_by_country();
  const BoundQuery q = analyze(parse("SELECT country, COUNT(*) FROM data GROUP BY country"), s.schema);
  EXPECT_EQ(chunk_accumulators(s, q, 0).counts, (std::vector<std::uint64_t>{2}));
  const std::vector<std::uint8_t> none(2, 0);
  EXPECT_EQ(chunk_accumulators(s, q, 0, &none).counts, (std::vector<std::uint64_t>{0}));
}

TEST(Execute, SumByCountry) {
  const Shard s = d1_by_country();
  const QueryResult r = run_sql({&s}, "SELECT country, SUM(latency) FROM data GROUP BY country");
  EXPECT_EQ(r.result.rows, rows({{S("de"), I(30)}, {S("fr"), I(40)}, {S("us"), I(60)}}));
  EXPECT_EQ(r.result.columns[1].name, "SUM(latency)");
}

TEST(Execute, TieBreakByKeyAndLimit) {
  const Shard s = d1_by_country();
  const std::string q1 = "SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT ";
  EXPECT_EQ(run_sql({&s}, q1 + "2").result.rows, rows({{S("de"), I(2)}, {S("fr"), I(2)}}));
  EXPECT_TRUE(run_sql({&s}, q1 + "0").result.rows.empty());
  const QueryResult full = run_sql({&s}, q1 + "10");
  EXPECT_EQ(full.result.rows, rows({{S("de"), I(2)}, {S("fr"), I(2)}, {S("us"), I(2)}}));
}

TEST(Execute, SameResultForOneOrThreeChunks) {
  const Table t = desk_d1();
  const Shard one = build_shard(0, t, testing::single_chunk(6));
  const Shard three = d1_by_country();
  for (const char* sql : {"SELECT country, COUNT(*) as c, AVG(latency) FROM data GROUP BY country ORDER BY c DESC",
                          "SELECT latency, MIN(country), MAX(country) FROM data GROUP BY latency",
                          "SELECT COUNT(DISTINCT latency) FROM data WHERE country != 'de'"}) {
    EXPECT_EQ(run_sql({&one}, sql).result, run_sql({&three}, sql).result) << sql;
  }
}

TEST(Execute, NothingMatches) {
  const Shard s = d1_by_country();
  const QueryResult r = run_sql({&s}, "SELECT country, COUNT(*) FROM data WHERE country IN ('zz') GROUP BY country");
  EXPECT_TRUE(r.result.rows.empty());
  EXPECT_EQ(r.stats.skipped_fraction(), 1.0);
  const QueryResult u = run_sql({&s}, "SELECT COUNT(*), SUM(latency), MIN(country) FROM data WHERE country = 'zz'");
  EXPECT_EQ(u.result.rows, rows({{I(0), Value::null(), Value::null()}}));
}

TEST(Execute, StatsFractionsSumToOne) {
  const Shard s = d1_by_country();
  QueryResultCache rc;
  QueryOptions opt;
  opt.result_cache = &rc;
  const std::string sql = "SELECT latency, COUNT(*) FROM data WHERE country IN ('de', 'fr') AND latency != 25 GROUP BY latency";
  for (int i = 0; i < 2; ++i) {
    const QueryResult r = run_sql({&s}, sql, opt);
    EXPECT_NEAR(r.stats.skipped_fraction() + r.stats.cached_fraction() + r.stats.scanned_fraction(), 1.0, 1e-12);
    EXPECT_EQ(r.stats.chunks_skipped, 1u);
    EXPECT_EQ(r.stats.chunks_cached, i == 0 ? 0u : 1u);
  }
}

TEST(Execute, ResultCacheShiftsScannedToCached) {
  const Shard s = d1_by_country();
  QueryResultCache rc;
  QueryOptions opt;
  opt.result_cache = &rc;
  const std::string sql = "SELECT country, SUM(latency) FROM data WHERE country IN ('de', 'us') GROUP BY country";
  const QueryResult a = run_sql({&s}, sql, opt);
  const QueryResult b = run_sql({&s}, sql, opt);
  EXPECT_EQ(a.stats.chunks_scanned, 2u);
  EXPECT_EQ(a.stats.chunks_cached, 0u);
  EXPECT_EQ(b.stats.chunks_scanned, 0u);
  EXPECT_EQ(b.stats.chunks_cached, 2u);
  EXPECT_EQ(a.result, b.result);
  // A different drill-down that fully covers the same chunks reuses them.
  const QueryResult c =
      run_sql({&s}, "SELECT country, SUM(latency) FROM data WHERE country != 'fr' GROUP BY country", opt);
  EXPECT_EQ(c.stats.chunks_cached, 2u);
  // Partial chunks are never stored.
  run_sql({&s}, "SELECT country, SUM(latency) FROM data WHERE latency > 22 GROUP BY country", opt);
  EXPECT_EQ(rc.stats().entries, 2u);
}

TEST(Execute, LateMaterializationOfKeys) {
  std::mt19937_64 rng(3);
  const Table t = testing::random_table(rng, 3000);
  const Shard s = build_shard(0, t, testing::even_chunks(3000, 500));
  const QueryResult r = run_sql({&s}, "SELECT i2, COUNT(*) AS c FROM t GROUP BY i2 ORDER BY c DESC LIMIT 5");
  EXPECT_EQ(r.result.rows.size(), 5u);
  EXPECT_GT(r.stats.groups, 500u);
  EXPECT_EQ(r.stats.keys_materialized, 5u);
}

TEST(VirtualField, DateOfTimestamp) {
  Table t;
  t.schema.table_name = "data";
  t.schema.fields = {{"timestamp", ValueKind::kTimestamp, false}, {"latency", ValueKind::kI64, false}};
  t.columns.resize(2);
  const std::int64_t feb28 = 1330387200;  // 2012-02-28 00:00:00
  const std::int64_t secs[] = {feb28 + 5, feb28 + 100, feb28 + 86400 + 7, feb28 + 86400 + 9, feb28 + 2 * 86400 + 1,
                               feb28 + 2 * 86400 + 50};
  for (int i = 0; i < 6; ++i) {
    t.columns[0].push_back(Value::timestamp(secs[i]));
    t.columns[1].push_back(Value::i64(i));
  }
  const Shard s = build_shard(0, t, std::vector<ChunkRange>{{0, 2}, {2, 4}, {4, 6}});
  const BoundQuery q = analyze(parse("SELECT COUNT(*) FROM data WHERE date(timestamp) IN ('2012-02-29')"), s.schema);
  EXPECT_EQ(classify_chunks(s, q), (std::vector<ChunkStatus>{ChunkStatus::kSkipped, ChunkStatus::kFullyActive,
                                                             ChunkStatus::kSkipped}));
  auto vc = s.virtual_fields().find("date(timestamp)");
  ASSERT_TRUE(vc);
  EXPECT_EQ(vc->column.dict.size(), 3u);
  EXPECT_EQ(vc->column.dict.value_at(1).to_string(), "2012-02-29");
  const std::uint64_t evals = s.virtual_fields().evaluations();
  const QueryResult r = run_sql({&s}, kQuery2);
  EXPECT_EQ(s.virtual_fields().evaluations(), evals);
  EXPECT_EQ(r.stats.virtual_fields_created, 0u);
  ASSERT_EQ(r.result.rows.size(), 3u);
  EXPECT_EQ(r.result.rows[0][0].to_string(), "2012-02-28");
  EXPECT_EQ(r.result.rows[1][2], I(5));
  EXPECT_EQ(materialize_virtual_field(s, q.where->args[0]).get(), vc.get());
}

TEST(VirtualField, CompositeGroupByMatchesOracle) {
  std::mt19937_64 rng(5);
  const Table t = testing::random_table(rng, 2000);
  const Shard s = build_shard(0, t, testing::even_chunks(2000, 300));
  const std::string sql = "SELECT s1, i1, COUNT(*), SUM(i2) FROM t GROUP BY s1, i1";
  const BoundQuery q = analyze(parse(sql), s.schema);
  const QueryResult r = execute(s, q);
  EXPECT_EQ(r.result.rows, oracle::run(q, t));
  EXPECT_TRUE(s.virtual_fields().find("composite(s1, i1)"));
}

TEST(CompositeKey, EncodingPreservesOrder) {
  std::mt19937_64 rng(9);
  const std::vector<ValueKind> kinds = {ValueKind::kStr, ValueKind::kI64, ValueKind::kF64, ValueKind::kDate};
  auto random_tuple = [&] {
    std::vector<Value> v;
    v.push_back(rng() % 5 == 0 ? Value::null() : Value::str(testing::random_string(rng, 3, 3)));
    v.push_back(rng() % 5 == 0 ? Value::null() : Value::i64(static_cast<std::int64_t>(rng() % 7) - 3));
    v.push_back(Value::f64((static_cast<int>(rng() % 9) - 4) * 0.5));
    v.push_back(Value::date(static_cast<std::int32_t>(rng() % 5) - 2));
    return v;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_tuple();
    const auto b = random_tuple();
    const std::string ea = encode_key_tuple(a);
    const std::string eb = encode_key_tuple(b);
    EXPECT_EQ(decode_key_tuple(ea, kinds), a);
    EXPECT_EQ(ea < eb, key_less(a, b));
    EXPECT_EQ(ea == eb, !key_less(a, b) && !key_less(b, a));
  }
}

// ---------------------------------------------------------------------------
// Differential against the oracle

TEST(Differential, RandomQueriesAcrossLayouts) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const Table t = testing::random_table(rng, rng() % 1500);
    PartitionSpec spec;
    spec.fields = {trial % 2 ? "s1" : "s2", "i1"};
    spec.max_chunk_rows = 1 + rng() % 400;
    const Table ordered = apply_permutation(t, reorder_rows(t, spec));
    const Shard s = build_shard(0, ordered, partition(ordered, spec));
    for (int k = 0; k < 5; ++k) {
      const std::string sql = testing::random_query(rng);
      SCOPED_TRACE(sql);
      const BoundQuery q = analyze(parse(sql), s.schema);
      const auto expect = oracle::run(q, t);
      const QueryResult got = execute(s, q);
      std::string why;
      EXPECT_TRUE(testing::rows_match(got.result.rows, expect, 1e-9, &why)) << why;
    }
  }
}

TEST(Differential, MultiShardMergeAndCaches) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const Table t = testing::random_table(rng, rng() % 1200);
    const std::size_t nshards = 1 + rng() % 3;
    std::vector<Shard> shards;
    for (std::size_t i = 0; i < nshards; ++i) {
      Table part;
      part.schema = t.schema;
      part.columns.resize(t.columns.size());
      for (std::size_t r = i; r < t.row_count(); r += nshards) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) part.columns[c].push_back(t.columns[c][r]);
      }
      shards.push_back(build_shard(static_cast<std::uint32_t>(i), part, testing::even_chunks(part.row_count(), 1 + rng() % 200)));
    }
    std::vector<const Shard*> ptrs;
    for (const auto& s : shards) ptrs.push_back(&s);
    CacheConfig cc;
    cc.budget_bytes = trial % 3 == 0 ? 0 : (trial % 3 == 1 ? 4096 : std::size_t{1} << 30);
    ArtifactCache cache(cc);
    QueryResultCache rc;
    QueryOptions opt;
    opt.cache = &cache;
    opt.result_cache = &rc;
    for (int k = 0; k < 5; ++k) {
      const std::string sql = testing::random_query(rng);
      SCOPED_TRACE(sql);
      const BoundQuery q = analyze(parse(sql), t.schema);
      const auto expect = oracle::run(q, t);
      for (int rep = 0; rep < 2; ++rep) {
        std::string why;
        EXPECT_TRUE(testing::rows_match(execute(ptrs, q, opt).result.rows, expect, 1e-9, &why)) << why;
      }
    }
    EXPECT_EQ(cache.audit(), "");
  }
}

TEST(Differential, NullGroupsAndOrderInvariance) {
  std::mt19937_64 rng(8);
  const Table t = testing::random_table(rng, 800);
  const std::string sql = "SELECT s1, COUNT(*), SUM(f1), MIN(i1) FROM t GROUP BY s1";
  const BoundQuery q = analyze(parse(sql), t.schema);
  const auto expect = oracle::run(q, t);
  ASSERT_TRUE(expect[0][0].is_null());
  for (std::size_t threshold : {std::size_t{800}, std::size_t{2}, std::size_t{1000}}) {
    PartitionSpec spec;
    spec.fields = {"s1", "s2"};
    spec.max_chunk_rows = threshold;
    for (bool reorder : {false, true}) {
      const Table ordered = reorder ? apply_permutation(t, reorder_rows(t, spec)) : t;
      const Shard s = build_shard(0, ordered, reorder ? partition(ordered, spec) : testing::even_chunks(800, threshold));
      EXPECT_EQ(execute(s, q).result.rows, expect);
    }
  }
}

}  // namespace
}  // namespace pdrill
