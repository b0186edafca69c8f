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
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pdrill/distribute/sharding.hpp"
#include "pdrill/ingest/csv.hpp"
#include "pdrill/ingest/store.hpp"
#include "pdrill/store/format.hpp"

namespace pdrill {

struct IngestConfig {
  std::vector<std::filesystem::path> inputs;
  std::string schema;      // "name:type,..." overrides; other columns are inferred
  std::string table_name;  // defaults to the first input's stem
  PartitionSpec partition;
  std::size_t shard_rows = kDefaultShardRows;
  std::uint64_t shard_seed = kDefaultShardSeed;
  EncodeOptions encode;
  std::filesystem::path out;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

struct ElementsUsage {
  std::size_t chunks = 0;
  std::size_t bytes = 0;
};

struct ColumnReport {
  std::string name;
  ValueKind kind = ValueKind::kStr;
  std::size_t dict_entries = 0;  // summed over shards
  std::size_t dict_bytes = 0;
  std::size_t chunk_dict_bytes = 0;
  std::size_t elements_bytes = 0;
  std::map<std::string, ElementsUsage> elements;  // by layout name
};

struct ImportReport {
  std::string table;
  std::uint64_t rows = 0;
  std::size_t shards = 0;
  std::size_t chunks = 0;
  std::map<std::size_t, std::size_t> chunk_histogram;  // power-of-two upper bound -> chunks
  std::vector<ColumnReport> columns;
  std::vector<std::pair<std::string, std::size_t>> files;  // relative path, bytes

  const ColumnReport& column(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return c;
    }
    throw Error(ErrorCode::kInvalidArgument, "no column '" + name + "' in report");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["table"] = table;
    j["rows"] = rows;
    j["shards"] = shards;
    j["chunks"] = chunks;
    auto& h = j["chunk_histogram"] = nlohmann::json::array();
    for (const auto& [upper, n] : chunk_histogram) h.push_back({{"max_rows", upper}, {"chunks", n}});
    auto& cols = j["columns"] = nlohmann::json::array();
    for (const auto& c : columns) {
      nlohmann::json e = {{"name", c.name},
                          {"type", kind_name(c.kind)},
                          {"dict_entries", c.dict_entries},
                          {"dict_bytes", c.dict_bytes},
                          {"chunk_dict_bytes", c.chunk_dict_bytes},
                          {"elements_bytes", c.elements_bytes}};
      for (const auto& [k, u] : c.elements) e["elements"][k] = {{"chunks", u.chunks}, {"bytes", u.bytes}};
      cols.push_back(std::move(e));
    }
    auto& fs = j["files"] = nlohmann::json::array();
    for (const auto& [p, b] : files) fs.push_back({{"path", p}, {"bytes", b}});
    return j;
  }

  std::string to_text() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "table %s: %llu rows, %zu shards, %zu chunks\n", table.c_str(),
                  static_cast<unsigned long long>(rows), shards, chunks);
    out += buf;
    out += "chunk sizes:\n";
    for (const auto& [upper, n] : chunk_histogram) {
      std::snprintf(buf, sizeof buf, "  <= %-10zu %zu\n", upper, n);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-20s %-9s %10s %12s %12s %12s  %s\n", "column", "type", "dict", "dict_bytes",
                  "chunk_dicts", "elements", "layouts");
    out += buf;
    for (const auto& c : columns) {
      std::string layouts;
      for (const auto& [k, u] : c.elements) {
        if (!layouts.empty()) layouts += ' ';
        layouts += k + ":" + std::to_string(u.chunks);
      }
      std::snprintf(buf, sizeof buf, "%-20s %-9s %10zu %12zu %12zu %12zu  ", c.name.c_str(), kind_name(c.kind),
                    c.dict_entries, c.dict_bytes, c.chunk_dict_bytes, c.elements_bytes);
      out += buf;
      out += layouts + "\n";
    }
    return out;
  }
};

inline ImportReport describe_shards(const std::string& table, const std::vector<Shard>& shards) {
  ImportReport r;
  r.table = table;
  r.shards = shards.size();
  if (shards.empty()) return r;
  for (const auto& f : shards.front().schema.fields) r.columns.push_back({f.name, f.kind, 0, 0, 0, 0, {}});
  for (const auto& s : shards) {
    r.rows += s.row_count();
    r.chunks += s.chunk_count();
    for (auto n : s.chunk_rows) r.chunk_histogram[std::bit_ceil(std::max<std::size_t>(n, 1))]++;
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
      const Column& col = s.columns[c];
      ColumnReport& cr = r.columns[c];
      cr.dict_entries += col.dict.size();
      cr.dict_bytes += col.dict.byte_size();
      cr.chunk_dict_bytes += col.chunk_dict_bytes();
      cr.elements_bytes += col.elements_bytes();
      for (const auto& cc : col.chunks) {
        auto& u = cr.elements[elements_kind_name(cc.elems.kind())];
        u.chunks++;
        u.bytes += cc.elems.payload_bytes();
      }
    }
  }
  return r;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string shard_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard-%05zu.pdrl", i);
  return buf;
}

}  // namespace detail

/// Shards, reorders, partitions and encodes `table`, then writes the shard
/// files under `out/<table>/` and records the table in the manifest. Shards
/// are built in parallel; output bytes do not depend on the thread count.
inline ImportReport import_table(const Table& table, const IngestConfig& cfg) {
  table.schema.validate();
  cfg.partition.validate(table.schema);
  if (cfg.out.empty()) throw Error(ErrorCode::kInvalidArgument, "no output directory");
  const std::string& name = table.schema.table_name;
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name == "." || name == "..") {
    throw Error(ErrorCode::kInvalidArgument, "bad table name '" + name + "'");
  }

  const std::vector<std::vector<std::size_t>> rows = shard_rows(table.row_count(), cfg.shard_rows, cfg.shard_seed);
  std::vector<Shard> shards(rows.size());
  detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
    const Table part = apply_permutation(table, rows[i]);
    const Table ordered = apply_permutation(part, reorder_rows(part, cfg.partition));
    shards[i] = build_shard(static_cast<std::uint32_t>(i), ordered, partition(ordered, cfg.partition), cfg.encode);
  });

  std::error_code ec;
  std::filesystem::create_directories(cfg.out / name, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + (cfg.out / name).string() + "': " + ec.message());
  for (const auto& de : std::filesystem::directory_iterator(cfg.out / name)) {
    if (de.path().extension() == ".pdrl") std::filesystem::remove(de.path());
  }

  TableEntry entry;
  entry.name = name;
  entry.rows = table.row_count();
  entry.partition = cfg.partition;
  entry.shard_rows = cfg.shard_rows;
  entry.shard_seed = cfg.shard_seed;
  ImportReport report = describe_shards(name, shards);
  std::vector<std::size_t> sizes(shards.size());
  detail::parallel_for(shards.size(), cfg.threads, [&](std::size_t i) {
    const auto path = cfg.out / name / detail::shard_file_name(i);
    write_shard_file(shards[i], path);
    sizes[i] = std::filesystem::file_size(path);
  });
  for (std::size_t i = 0; i < shards.size(); ++i) {
    entry.shard_files.push_back(name + "/" + detail::shard_file_name(i));
    report.files.emplace_back(entry.shard_files.back(), sizes[i]);
  }

  Manifest m;
  if (std::filesystem::exists(cfg.out / kManifestName)) m = Manifest::read(cfg.out);
  m.upsert(std::move(entry));
  m.write(cfg.out);
  return report;
}

/// Reads and types the configured CSV inputs as one table. Every input must
/// carry the same header.
inline Table read_csv_inputs(const IngestConfig& cfg) {
  if (cfg.inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no input files");
  CsvDocument all;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const Bytes b = read_file_bytes(cfg.inputs[i]);
    CsvDocument doc;
    try {
      doc = parse_csv(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
    } catch (const Error& e) {
      throw Error(e.code(), cfg.inputs[i].string() + ": " + e.what(), e.position());
    }
    if (i == 0) {
      all.header = doc.header;
    } else if (doc.header != all.header) {
      throw Error(ErrorCode::kSchemaViolation, cfg.inputs[i].string() + ": header differs from the first input");
    }
    for (auto& r : doc.records) all.records.push_back(std::move(r));
  }
  const std::string name = cfg.table_name.empty() ? cfg.inputs.front().stem().string() : cfg.table_name;
  return csv_to_table(all, name, parse_schema_overrides(cfg.schema));
}

inline ImportReport ingest_csv(const IngestConfig& cfg) { return import_table(read_csv_inputs(cfg), cfg); }

}  // namespace pdrill
