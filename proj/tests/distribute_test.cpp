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
#include <random>
#include <set>

#include "pdrill/distribute/dispatch.hpp"
#include "pdrill/distribute/sharding.hpp"
#include "query_gen.hpp"
#include "test_util.hpp"

namespace pdrill {
namespace {

Schema ax_schema() {
  Schema s;
  s.table_name = "t";
  s.fields = {{"a", ValueKind::kStr, false}, {"x", ValueKind::kI64, false}};
  return s;
}

std::vector<const Shard*> ptrs(const std::vector<Shard>& shards) {
  std::vector<const Shard*> out;
  for (const auto& s : shards) out.push_back(&s);
  return out;
}

std::vector<Shard> random_shards(std::mt19937_64& rng, Table& table_out, std::size_t rows, std::size_t nshards) {
  table_out = testing::random_table(rng, rows);
  PartitionSpec spec;
  spec.fields = {"s1", "s2"};
  spec.max_chunk_rows = 64;
  return build_sharded(table_out, std::max<std::size_t>(1, (rows + nshards - 1) / nshards), spec);
}

// ---------------------------------------------------------------------------
// Sharding

TEST(Sharding, HundredRowsTargetForty) {
  const auto shards = shard_rows(100, 40);
  ASSERT_EQ(shards.size(), 3u);
  for (const auto& s : shards) {
    EXPECT_GE(s.size(), 27u);
    EXPECT_LE(s.size(), 39u);
  }
}

TEST(Sharding, DisjointCover) {
  for (std::size_t rows : {0, 1, 7, 1000, 1001}) {
    const auto shards = shard_rows(rows, 100, 42);
    std::vector<std::size_t> all;
    for (const auto& s : shards) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), rows);
    for (std::size_t i = 0; i < rows; ++i) EXPECT_EQ(all[i], i);
  }
  EXPECT_EQ(shard_rows(1, 10000).size(), 1u);
  EXPECT_THROW(shard_rows(5, 0), Error);
}

TEST(Sharding, QuasiRandomNotContiguous) {
  const auto shards = shard_rows(1000, 250, 7);
  ASSERT_EQ(shards.size(), 4u);
  // Contiguous slicing would put rows 0..249 together.
  EXPECT_LT(std::count_if(shards[0].begin(), shards[0].end(), [](std::size_t r) { return r < 250; }), 150);
  EXPECT_NE(shard_rows(1000, 250, 7), shard_rows(1000, 250, 8));
  EXPECT_EQ(shard_rows(1000, 250, 7), shard_rows(1000, 250, 7));
}

TEST(Sharding, BuildShardsKeepsRows) {
  std::mt19937_64 rng(4);
  const Table t = testing::random_table(rng, 900);
  PartitionSpec spec;
  spec.fields = {"s1"};
  spec.max_chunk_rows = 50;
  const auto shards = build_sharded(t, 300, spec);
  ASSERT_EQ(shards.size(), 3u);
  std::multiset<std::vector<Value>, decltype(&key_less)> a(&key_less), b(&key_less);
  for (std::size_t r = 0; r < t.row_count(); ++r) a.insert(t.row(r));
  for (const auto& s : shards) {
    EXPECT_EQ(s.row_count(), 300u);
    const Table d = s.decode_table();
    for (std::size_t r = 0; r < d.row_count(); ++r) b.insert(d.row(r));
  }
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
}

// ---------------------------------------------------------------------------
// Rewrite

TEST(Rewrite, SumExampleMatchesUnionAllForm) {
  const AggregationPlan p = rewrite_for_tree("SELECT a, SUM(x) FROM t GROUP BY a", ax_schema());
  EXPECT_EQ(p.leaf_sql, "SELECT a, SUM(x) AS p0 FROM t GROUP BY a");
  EXPECT_EQ(p.root_sql, "SELECT a, SUM(p0) FROM (children) GROUP BY a");
  EXPECT_EQ(p.union_sql({"S1", "S2"}),
            "SELECT a, SUM(p0) FROM (SELECT a, SUM(x) AS p0 FROM S1 GROUP BY a) UNION ALL "
            "(SELECT a, SUM(x) AS p0 FROM S2 GROUP BY a) GROUP BY a");
}

TEST(Rewrite, AvgBecomesSumOverSumOfOne) {
  const AggregationPlan p = rewrite_for_tree("SELECT a, AVG(x) AS m FROM t GROUP BY a", ax_schema());
  EXPECT_EQ(p.leaf_sql, "SELECT a, SUM(x) AS p0, SUM(1) AS p1 FROM t GROUP BY a");
  EXPECT_EQ(p.root_sql, "SELECT a, (SUM(p0) / SUM(p1)) AS m FROM (children) GROUP BY a");
}

TEST(Rewrite, CountStarAndNullableAvg) {
  Schema s = ax_schema();
  s.fields[1].nullable = true;
  const AggregationPlan p = rewrite_for_tree("SELECT COUNT(*), AVG(x), COUNT(x), MIN(a) FROM t WHERE x > 3", s);
  EXPECT_EQ(p.leaf_sql, "SELECT SUM(1) AS p0, SUM(x) AS p1, COUNT(x) AS p2, MIN(a) AS p3 FROM t WHERE x > 3");
  EXPECT_EQ(p.internal_sql, "SELECT SUM(p0) AS p0, SUM(p1) AS p1, SUM(p2) AS p2, MIN(p3) AS p3 FROM (children)");
}

TEST(Rewrite, HavingOrderLimitStayAtRoot) {
  const AggregationPlan p =
      rewrite_for_tree("SELECT a, COUNT(*) AS c FROM t WHERE x != 2 GROUP BY a HAVING c > 1 ORDER BY c DESC LIMIT 3",
                       ax_schema());
  EXPECT_EQ(p.leaf_sql, "SELECT a, SUM(1) AS p0 FROM t WHERE x != 2 GROUP BY a");
  EXPECT_EQ(p.root_sql,
            "SELECT a, SUM(p0) AS c FROM (children) GROUP BY a HAVING SUM(p0) > 1 ORDER BY SUM(p0) DESC LIMIT 3");
  EXPECT_FALSE(p.leaf.limit);
  EXPECT_TRUE(p.leaf.order.empty());
}

TEST(Rewrite, ExpressionKeysAndDistinct) {
  std::mt19937_64 rng(1);
  const Table t = testing::random_table(rng, 1);
  const AggregationPlan p =
      rewrite_for_tree("SELECT date(ts) AS day, COUNT(DISTINCT s2) FROM t GROUP BY day", t.schema);
  EXPECT_EQ(p.leaf_sql, "SELECT date(ts) AS k0, COUNT(DISTINCT s2) AS p0 FROM t GROUP BY date(ts)");
  EXPECT_EQ(p.partials[0].merge, MergeOp::kSketch);
  EXPECT_EQ(p.root_sql, "SELECT k0 AS day, KMV_ESTIMATE(KMV_UNION(p0)) FROM (children) GROUP BY k0");
}

TEST(Rewrite, Errors) {
  EXPECT_THROW(rewrite_for_tree("SELECT a, SUM(x) FROM t GROUP BY a", ax_schema(), 1), Error);
  try {
    rewrite_for_tree("SELECT 1 FROM t", ax_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

// ---------------------------------------------------------------------------
// Wire format

TEST(Wire, PartialJsonRoundTrip) {
  PartialTable t;
  KmvSketch k(4);
  for (int i = 0; i < 10; ++i) k.add(Value::i64(i));
  t.rows.push_back({{Value::str("a\"b"), Value::null()}, {{Value::i64(-5), std::nullopt}, {Value(), k}}});
  t.rows.push_back({{Value::date(-3), Value::timestamp(1330387200)},
                    {{Value::f64(0.1), std::nullopt}, {Value::i64(std::int64_t{1} << 60), std::nullopt}}});
  std::uint32_t shard = 0;
  EXPECT_EQ(partial_from_json(partial_to_json(7, t), &shard), t);
  EXPECT_EQ(shard, 7u);
  EXPECT_THROW(partial_from_json("{"), Error);
  EXPECT_THROW(partial_from_json(R"({"shard":1,"rows":[{"key":[{"q":1}],"cells":[]}]})"), Error);
}

TEST(Wire, FirstAnswerWins) {
  AnswerBoard b;
  EXPECT_TRUE(b.accept(3, "x"));
  EXPECT_FALSE(b.accept(3, "y"));
  EXPECT_EQ(b.answers().at(3), "x");
}

// ---------------------------------------------------------------------------
// Tree execution

TEST(Tree, MatchesSingleNodeOnD1) {
  const Table t = testing::desk_d1();
  PartitionSpec spec;
  spec.fields = {"country"};
  spec.max_chunk_rows = 2;
  const auto shards = build_sharded(t, 2, spec);
  ASSERT_EQ(shards.size(), 3u);
  const Shard whole = build_shard(0, t, testing::single_chunk(6));
  ClusterConfig c;
  c.workers = 3;
  for (const char* sql : {"SELECT country, SUM(latency) FROM data GROUP BY country",
                          "SELECT country, COUNT(*) AS c FROM data GROUP BY country ORDER BY c DESC LIMIT 2",
                          "SELECT AVG(latency), MIN(country), MAX(latency) FROM data WHERE country != 'de'",
                          "SELECT COUNT(*) FROM data WHERE country = 'zz'"}) {
    EXPECT_EQ(run_distributed(ptrs(shards), sql, c).result, run_sql({&whole}, sql).result) << sql;
  }
}

TEST(Tree, RandomQueriesTwoAndThreeLevels) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    Table t;
    const auto shards = random_shards(rng, t, 400 + rng() % 1200, 8);
    ASSERT_EQ(shards.size(), 8u);
    const Shard whole = build_shard(0, t, testing::even_chunks(t.row_count(), 128));
    ClusterConfig c;
    c.workers = 5;
    c.seed = trial;
    for (int k = 0; k < 6; ++k) {
      const std::string sql = testing::random_query(rng);
      SCOPED_TRACE(sql);
      const ResultSet single = run_sql({&whole}, sql).result;
      for (std::size_t levels : {2, 3, 4}) {
        c.levels = levels;
        const DistributedResult d = run_distributed(ptrs(shards), sql, c);
        std::string why;
        EXPECT_TRUE(testing::rows_match(d.result.rows, single.rows, 1e-9, &why)) << levels << ": " << why;
        EXPECT_EQ(d.result.columns, single.columns);
        EXPECT_EQ(d.stats.nodes_per_level.size(), levels);
      }
    }
  }
}

TEST(Tree, MinOverThreeLevelsEqualsOneLevel) {
  std::mt19937_64 rng(12);
  Table t;
  const auto shards = random_shards(rng, t, 2000, 8);
  const Shard whole = build_shard(0, t, testing::single_chunk(2000));
  const std::string sql = "SELECT s1, MIN(i1), MIN(f1), MIN(s2), MAX(ts) FROM t GROUP BY s1";
  ClusterConfig c;
  c.levels = 3;
  c.fan_in = 2;
  const DistributedResult d = run_distributed(ptrs(shards), sql, c);
  EXPECT_EQ(d.result, run_sql({&whole}, sql).result);
  EXPECT_EQ(d.stats.nodes_per_level, (std::vector<std::size_t>{8, 4, 2, 1}));
}

TEST(Tree, LayoutFollowsLevels) {
  EXPECT_EQ(detail::tree_groups(8, 2, 32).size(), 3u);
  EXPECT_EQ(detail::tree_groups(8, 3, 32).size(), 4u);
  EXPECT_EQ(detail::tree_groups(100, 1, 32).size(), 4u);
}

// ---------------------------------------------------------------------------
// Dispatch

TEST(Dispatch, PlacementPrimaryAndReplicaDiffer) {
  std::vector<const Shard*> none(10, nullptr);
  const ShardAssignment a = ShardAssignment::make(none, 4);
  for (std::size_t s = 0; s < 10; ++s) {
    EXPECT_EQ(a.placement[s].first, s % 4);
    EXPECT_EQ(a.placement[s].second, (s + 1) % 4);
  }
  EXPECT_THROW(ShardAssignment::make(none, 1), Error);
}

TEST(Dispatch, SlowPrimaryServedByReplica) {
  std::mt19937_64 rng(5);
  Table t;
  const auto shards = random_shards(rng, t, 800, 8);
  const std::string sql = "SELECT s1, COUNT(*), SUM(i2) FROM t GROUP BY s1";
  ClusterConfig c;
  c.workers = 8;
  const DistributedResult base = run_distributed(ptrs(shards), sql, c);
  c.specs.resize(8);
  c.specs[2].slow_factor = 10.0;
  const DistributedResult slow = run_distributed(ptrs(shards), sql, c);
  EXPECT_EQ(slow.result, base.result);
  EXPECT_TRUE(slow.stats.shards[2].replica_served);
  EXPECT_EQ(slow.stats.shards[2].served_by, 3u);
  EXPECT_GE(slow.stats.late_responses, 1u);
}

TEST(Dispatch, SingleFailureToleratedDoubleFailureReported) {
  std::mt19937_64 rng(6);
  Table t;
  const auto shards = random_shards(rng, t, 800, 8);
  const std::string sql = "SELECT s2, MAX(i1) FROM t GROUP BY s2";
  ClusterConfig c;
  c.workers = 8;
  const ResultSet expect = run_distributed(ptrs(shards), sql, c).result;
  c.specs.resize(8);
  c.specs[4].failed = true;  // primary of shard 4, replica of shard 3
  const DistributedResult one = run_distributed(ptrs(shards), sql, c);
  EXPECT_EQ(one.result, expect);
  EXPECT_EQ(one.stats.failed_responses, 2u);
  EXPECT_TRUE(one.stats.shards[4].replica_served);
  c.specs[5].failed = true;  // shard 4 now has no live copy
  try {
    run_distributed(ptrs(shards), sql, c);
    FAIL() << "double failure must not return a result";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDistributed);
    EXPECT_NE(std::string(e.what()).find("shard 4"), std::string::npos) << e.what();
  }
}

TEST(Dispatch, Timeout) {
  const Table t = testing::desk_d1();
  const Shard s0 = build_shard(0, t, testing::single_chunk(6));
  ClusterConfig c;
  c.workers = 2;
  c.timeout_ms = 100;
  c.specs = {WorkerSpec{200, 0, 1, 0, false}, WorkerSpec{300, 0, 1, 0, false}};
  try {
    run_distributed({&s0}, "SELECT COUNT(*) FROM data", c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(Dispatch, DeterministicUnderSeed) {
  std::mt19937_64 rng(8);
  Table t;
  const auto shards = random_shards(rng, t, 1000, 8);
  ClusterConfig c;
  c.workers = 6;
  c.seed = 99;
  c.specs.assign(6, WorkerSpec{5, 20, 1, 0.3, false});
  const std::string sql = "SELECT i1, SUM(f1), COUNT(DISTINCT s2) FROM t GROUP BY i1";
  auto run = [&] {
    try {
      const DistributedResult d = run_distributed(ptrs(shards), sql, c);
      std::vector<std::size_t> served;
      for (const auto& s : d.stats.shards) served.push_back(s.served_by);
      return std::make_tuple(std::string(), served, d.stats.elapsed_ms, d.result);
    } catch (const Error& e) {
      return std::make_tuple(std::string(e.what()), std::vector<std::size_t>{}, 0.0, ResultSet{});
    }
  };
  EXPECT_EQ(run(), run());
}

TEST(Dispatch, RandomFailuresNeverSilent) {
  std::mt19937_64 rng(10);
  Table t;
  const auto shards = random_shards(rng, t, 600, 8);
  const std::string sql = "SELECT s1, COUNT(*) FROM t GROUP BY s1";
  const Shard whole = build_shard(0, t, testing::single_chunk(600));
  const ResultSet expect = run_sql({&whole}, sql).result;
  int ok = 0, failed = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    ClusterConfig c;
    c.workers = 4;
    c.seed = seed;
    c.specs.assign(4, WorkerSpec{5, 5, 1, 0.25, false});
    try {
      EXPECT_EQ(run_distributed(ptrs(shards), sql, c).result, expect);
      ++ok;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDistributed);
      ++failed;
    }
  }
  EXPECT_GT(ok, 0);
  EXPECT_GT(failed, 0);
}

}  // namespace
}  // namespace pdrill
