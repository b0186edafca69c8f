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
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdrill/cache/codec.hpp"
#include "pdrill/ingest/synth.hpp"
#include "pdrill/partition/partition.hpp"
#include "pdrill/query/analyze.hpp"
#include "pdrill/query/engine.hpp"
#include "pdrill/query/parser.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill::bench {

inline const std::array<const char*, 3> kQueries = {
    "SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT 10",
    "SELECT date(timestamp) as date, COUNT(*), SUM(latency) FROM data GROUP BY date ORDER BY date ASC LIMIT 10",
    "SELECT table_name, COUNT(*) as c FROM data GROUP BY table_name ORDER BY c DESC LIMIT 10",
};

// Stored columns each query touches; "day" holds the materialized date(timestamp).
inline const std::array<std::vector<std::string>, 3> kQueryColumns = {
    std::vector<std::string>{"country"}, std::vector<std::string>{"day", "latency"},
    std::vector<std::string>{"table_name"}};

struct BenchConfig {
  synth::LogConfig data;
  std::vector<std::string> partition_fields = {"country", "table_name"};
  std::size_t max_chunk_rows = 10000;
  std::size_t runs = 5;

  static BenchConfig from_json(const nlohmann::json& j) {
    BenchConfig c;
    c.data.rows = j.value("rows", c.data.rows);
    c.data.countries = j.value("countries", c.data.countries);
    c.data.table_names = j.value("table_names", c.data.table_names);
    c.data.seed = j.value("seed", c.data.seed);
    c.data.days = j.value("days", c.data.days);
    c.partition_fields = j.value("partition_fields", c.partition_fields);
    c.max_chunk_rows = j.value("max_chunk_rows", c.max_chunk_rows);
    c.runs = j.value("runs", c.runs);
    if (c.data.rows == 0 || c.max_chunk_rows == 0 || c.runs == 0) {
      throw Error(ErrorCode::kInvalidArgument, "rows, max_chunk_rows and runs must be positive");
    }
    return c;
  }
};

/// Sizes of one stored column under one configuration, in bytes.
struct ColumnSizes {
  std::size_t elements = 0;
  std::size_t chunk_dicts = 0;
  std::size_t dict = 0;
  std::size_t elements_lz = 0;
  std::size_t chunk_dicts_lz = 0;
  std::size_t dict_lz = 0;

  std::size_t local() const { return elements + chunk_dicts; }
  std::size_t overall() const { return local() + dict; }
  std::size_t local_lz() const { return elements_lz + chunk_dicts_lz; }
  std::size_t overall_lz() const { return local_lz() + dict_lz; }

  ColumnSizes& operator+=(const ColumnSizes& o) {
    elements += o.elements;
    chunk_dicts += o.chunk_dicts;
    dict += o.dict;
    elements_lz += o.elements_lz;
    chunk_dicts_lz += o.chunk_dicts_lz;
    dict_lz += o.dict_lz;
    return *this;
  }
};

struct Variant {
  std::string name;
  std::size_t chunks = 0;
  std::array<double, 3> latency_ms{};
  std::array<ColumnSizes, 3> query;  // summed over each query's columns
  std::vector<std::pair<std::string, ColumnSizes>> columns;

  const ColumnSizes& column(const std::string& n) const {
    for (const auto& [k, v] : columns) {
      if (k == n) return v;
    }
    throw Error(ErrorCode::kInvalidArgument, "no column '" + n + "'");
  }
};

struct Gate {
  std::string name;
  double value = 0;
  double threshold = 0;
  bool pass = false;
};

struct BenchReport {
  std::size_t rows = 0;
  std::size_t distinct_countries = 0;
  std::size_t distinct_table_names = 0;
  std::vector<Variant> variants;  // Basic, Chunks, OptCols, OptDicts, +Reorder
  std::vector<Gate> gates;

  const Variant& variant(const std::string& n) const {
    for (const auto& v : variants) {
      if (v.name == n) return v;
    }
    throw Error(ErrorCode::kInvalidArgument, "no variant '" + n + "'");
  }
  bool all_pass() const {
    return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
  }

  nlohmann::json to_json() const;
  std::string to_text() const;
};

namespace detail {

inline std::size_t lz_size(std::span<const std::uint8_t> b) { return b.empty() ? 0 : lz::compress(b).size(); }

inline ColumnSizes measure(const Column& col) {
  ColumnSizes s;
  const Bytes dict = col.dict.serialize_payload();
  s.dict = col.dict.byte_size();
  s.dict_lz = lz_size(dict);
  for (const auto& cc : col.chunks) {
    s.elements += 1 + cc.elems.payload_bytes();  // layout tag + payload
    s.elements_lz += lz_size(cc.elems.payload());
    Bytes cd;
    ByteWriter w(cd);
    w.u32(static_cast<std::uint32_t>(cc.dict.global_ids.size()));
    for (auto g : cc.dict.global_ids) w.u32(g);
    s.chunk_dicts += cc.dict.byte_size();
    s.chunk_dicts_lz += lz_size(cd);
  }
  return s;
}

inline Variant run_variant(const std::string& name, const Table& ordered, const std::vector<ChunkRange>& chunks,
                           const EncodeOptions& enc, const BenchConfig& cfg) {
  Variant v;
  v.name = name;
  v.chunks = chunks.size();
  const Shard shard = build_shard(0, ordered, chunks, enc);
  for (std::size_t c = 0; c < shard.columns.size(); ++c) {
    v.columns.emplace_back(shard.schema.fields[c].name, measure(shard.columns[c]));
  }
  for (std::size_t q = 0; q < kQueries.size(); ++q) {
    for (const auto& col : kQueryColumns[q]) v.query[q] += v.column(col);
    const BoundQuery bq = analyze(parse(kQueries[q]), shard.schema);
    QueryOptions opt;
    opt.parallel = false;
    execute(shard, bq, opt);  // materializes date(timestamp) before timing
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < cfg.runs; ++r) execute(shard, bq, opt);
    v.latency_ms[q] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() /
                      double(cfg.runs);
  }
  return v;
}

inline double ratio(std::size_t a, std::size_t b) { return double(std::max<std::size_t>(a, 1)) / double(std::max<std::size_t>(b, 1)); }

}  // namespace detail

/// Step-wise storage ladder on a generated log table. Every variant stores
/// the same rows; they differ in chunking, element layout, dictionary
/// representation and row order.
inline BenchReport run_bench(const BenchConfig& cfg) {
  Table base = synth::generate_logs(cfg.data);
  {
    std::vector<Value> day;
    day.reserve(base.row_count());
    for (const auto& ts : base.columns[0]) day.push_back(Value::date(days_from_epoch_seconds(ts.as_timestamp())));
    base.schema.fields.push_back({"day", ValueKind::kDate, false});
    base.columns.push_back(std::move(day));
  }
  BenchReport report;
  report.rows = base.row_count();

  PartitionSpec spec;
  spec.fields = cfg.partition_fields;
  spec.max_chunk_rows = cfg.max_chunk_rows;
  const std::vector<std::size_t> sorted = reorder_rows(base, spec);
  const Table reordered = apply_permutation(base, sorted);
  const std::vector<ChunkRange> chunks = partition(reordered, spec);

  const EncodeOptions fixed{ElementsPolicy::kFixed32, DictRepr::kSortedArray};
  const EncodeOptions adaptive{ElementsPolicy::kAdaptive, DictRepr::kSortedArray};
  const EncodeOptions trie{ElementsPolicy::kAdaptive, DictRepr::kTrie};

  report.variants.push_back(detail::run_variant("Basic", base, {{0, base.row_count()}}, fixed, cfg));
  {
    // Same chunks as the sorted layout, rows inside each chunk in input order.
    std::vector<std::size_t> grouped;
    grouped.reserve(sorted.size());
    for (const auto& c : chunks) {
      const std::size_t mark = grouped.size();
      grouped.insert(grouped.end(), sorted.begin() + std::ptrdiff_t(c.begin), sorted.begin() + std::ptrdiff_t(c.end));
      std::sort(grouped.begin() + std::ptrdiff_t(mark), grouped.end());
    }
    const Table chunked = apply_permutation(base, grouped);
    report.variants.push_back(detail::run_variant("Chunks", chunked, chunks, fixed, cfg));
    report.variants.push_back(detail::run_variant("OptCols", chunked, chunks, adaptive, cfg));
    report.variants.push_back(detail::run_variant("OptDicts", chunked, chunks, trie, cfg));
  }
  report.variants.push_back(detail::run_variant("+Reorder", reordered, chunks, trie, cfg));

  const Shard probe = build_shard(0, base, std::vector<ChunkRange>{{0, base.row_count()}}, adaptive);
  report.distinct_countries = probe.column("country").dict.size();
  report.distinct_table_names = probe.column("table_name").dict.size();

  const Variant& basic = report.variant("Basic");
  const Variant& chunked = report.variant("Chunks");
  const Variant& optcols = report.variant("OptCols");
  const Variant& optdicts = report.variant("OptDicts");
  const Variant& reord = report.variant("+Reorder");
  const std::string lead = cfg.partition_fields.empty() ? "country" : cfg.partition_fields.front();
  auto gate = [&](std::string n, double value, double threshold) {
    report.gates.push_back({std::move(n), value, threshold, value >= threshold});
  };
  gate("optcols element shrink on " + lead,
       detail::ratio(chunked.column(lead).elements, optcols.column(lead).elements), 50.0);
  gate("trie dictionary shrink on table_name",
       detail::ratio(optcols.column("table_name").dict, optdicts.column("table_name").dict), 5.0);
  std::size_t basic_lz = 0, chunks_lz = 0, plain_lz = 0, sorted_lz = 0;
  for (std::size_t q = 0; q < 3; ++q) {
    basic_lz += basic.query[q].overall_lz();
    chunks_lz += chunked.query[q].overall_lz();
    plain_lz += optdicts.query[q].local_lz();
    sorted_lz += reord.query[q].local_lz();
  }
  // Strictly smaller after partitioning: ratio above 1.
  const double q1 = detail::ratio(basic.query[0].overall_lz(), chunked.query[0].overall_lz());
  report.gates.push_back({"compressed Query 1 columns, unpartitioned / partitioned", q1, 1.0, q1 > 1.0});
  const double all = detail::ratio(basic_lz, chunks_lz);
  report.gates.push_back({"compressed query columns, unpartitioned / partitioned", all, 1.0, all > 1.0});
  gate("compressed elements+chunk-dicts, input order / reordered", detail::ratio(plain_lz, sorted_lz), 1.1);
  return report;
}

inline nlohmann::json BenchReport::to_json() const {
  nlohmann::json j;
  j["rows"] = rows;
  j["distinct_countries"] = distinct_countries;
  j["distinct_table_names"] = distinct_table_names;
  for (const auto& v : variants) {
    nlohmann::json e;
    e["name"] = v.name;
    e["chunks"] = v.chunks;
    e["latency_ms"] = v.latency_ms;
    for (std::size_t q = 0; q < 3; ++q) {
      const ColumnSizes& s = v.query[q];
      e["queries"].push_back({{"elements_bytes", s.local()},
                              {"overall_bytes", s.overall()},
                              {"compressed_bytes", s.overall_lz()},
                              {"compressed_elements_bytes", s.local_lz()}});
    }
    j["variants"].push_back(std::move(e));
  }
  for (const auto& g : gates) {
    j["gates"].push_back({{"name", g.name}, {"value", g.value}, {"threshold", g.threshold}, {"pass", g.pass}});
  }
  return j;
}

inline std::string BenchReport::to_text() const {
  std::string out;
  char buf[256];
  auto mb = [](std::size_t b) { return double(b) / 1e6; };
  std::snprintf(buf, sizeof buf, "%zu rows, %zu countries, %zu table names\n\n", rows, distinct_countries,
                distinct_table_names);
  out += buf;
  auto header = [&](const char* title, const char* left, const char* right) {
    out += title;
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-10s %-30s %s\n", "", left, right);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s   %9s %9s %9s\n", "Query", "1", "2", "3", "1", "2", "3");
    out += buf;
  };
  header("Latency and memory", "latency in ms", "memory in MB");
  for (const auto& v : variants) {
    std::snprintf(buf, sizeof buf, "%-10s %9.2f %9.2f %9.2f   %9.3f %9.3f %9.3f\n", v.name.c_str(), v.latency_ms[0],
                  v.latency_ms[1], v.latency_ms[2], mb(v.query[0].overall()), mb(v.query[1].overall()),
                  mb(v.query[2].overall()));
    out += buf;
  }
  out += "\n";
  header("Elements and chunk-dictionaries vs overall", "elements in MB", "overall in MB");
  for (const auto& v : variants) {
    std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f   %9.3f %9.3f %9.3f\n", v.name.c_str(),
                  mb(v.query[0].local()), mb(v.query[1].local()), mb(v.query[2].local()), mb(v.query[0].overall()),
                  mb(v.query[1].overall()), mb(v.query[2].overall()));
    out += buf;
  }
  out += "\n";
  header("LZ applied to each artifact", "uncompressed in MB", "compressed in MB");
  for (const auto& v : variants) {
    std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f   %9.3f %9.3f %9.3f\n", v.name.c_str(),
                  mb(v.query[0].overall()), mb(v.query[1].overall()), mb(v.query[2].overall()),
                  mb(v.query[0].overall_lz()), mb(v.query[1].overall_lz()), mb(v.query[2].overall_lz()));
    out += buf;
  }
  out += "\nSummary, overall MB\n";
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s\n", "Query", "1", "2", "3");
  out += buf;
  for (const auto& v : variants) {
    if (v.name == "+Reorder") continue;
    std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f\n", v.name.c_str(), mb(v.query[0].overall()),
                  mb(v.query[1].overall()), mb(v.query[2].overall()));
    out += buf;
  }
  const Variant& od = variant("OptDicts");
  const Variant& ro = variant("+Reorder");
  std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f\n", "+Codec", mb(od.query[0].overall_lz()),
                mb(od.query[1].overall_lz()), mb(od.query[2].overall_lz()));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f\n", "+Reorder", mb(ro.query[0].overall_lz()),
                mb(ro.query[1].overall_lz()), mb(ro.query[2].overall_lz()));
  out += buf;
  out += "\nGates\n";
  for (const auto& g : gates) {
    std::snprintf(buf, sizeof buf, "%-4s %-58s %10.3f  (>= %.2f)\n", g.pass ? "PASS" : "FAIL", g.name.c_str(), g.value,
                  g.threshold);
    out += buf;
  }
  return out;
}

}  // namespace pdrill::bench
