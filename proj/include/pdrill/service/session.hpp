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
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "pdrill/cache/artifact_cache.hpp"
#include "pdrill/cache/zlib_codec.hpp"
#include "pdrill/distribute/dispatch.hpp"
#include "pdrill/ingest/store.hpp"
#include "pdrill/query/analyze.hpp"
#include "pdrill/query/engine.hpp"
#include "pdrill/query/parser.hpp"

namespace pdrill {

struct SessionConfig {
  std::size_t cache_bytes = std::size_t{256} << 20;
  std::uint8_t cold_codec = kLzCodec;
  bool result_cache = true;
};

struct FieldProfile {
  Field field;
  std::size_t distinct = 0;  // exact, across shards
  std::string role;          // dimension, measure or time
  bool partition_key = false;
};

struct SessionTotals {
  std::uint64_t queries = 0;
  std::uint64_t failed = 0;
  double latency_ms = 0;
  QueryStats stats;  // summed without traces
};

/// The query path shared by the CLI and the HTTP service: one loaded store,
/// one artifact cache, one chunk-result cache and cumulative accounting.
/// Safe to call concurrently.
class Session {
 public:
  Session(Store store, SessionConfig config = {})
      : store_(std::move(store)), config_(config), codecs_(std::make_shared<CodecRegistry>()) {
    codecs_->add(zlib_codec());
    CacheConfig cc;
    cc.budget_bytes = config_.cache_bytes;
    cc.cold_codec = config_.cold_codec;
    cache_ = std::make_unique<ArtifactCache>(cc, codecs_);
  }

  const Store& store() const { return store_; }

  /// Resolves the FROM table, binds and executes.
  QueryResult query(const std::string& sql, bool trace = false) {
    try {
      const QueryAst ast = parse(sql);
      const StoreTable& table = store_.table(ast.from);
      const BoundQuery q = analyze(ast, table.schema);
      QueryResult r = execute(table.shard_ptrs(), q, options(trace));
      record(r.stats);
      return r;
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      ++totals_.queries;
      ++totals_.failed;
      throw;
    }
  }

  /// Same query through the simulated aggregation tree.
  DistributedResult query_tree(const std::string& sql, ClusterConfig cluster) {
    try {
      const QueryAst ast = parse(sql);
      const StoreTable& table = store_.table(ast.from);
      cluster.query = options(false);
      DistributedResult r = run_distributed(table.shard_ptrs(), sql, cluster);
      record(r.stats.query);
      return r;
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      ++totals_.queries;
      ++totals_.failed;
      throw;
    }
  }

  /// Field list with exact distinct counts and role hints; computed once
  /// per table.
  const std::vector<FieldProfile>& profile(const std::string& name) {
    const StoreTable& table = store_.table(name);
    std::lock_guard<std::mutex> lock(profile_mu_);
    auto it = profiles_.find(name);
    if (it != profiles_.end()) return it->second;
    std::vector<FieldProfile> out;
    for (std::size_t c = 0; c < table.schema.fields.size(); ++c) {
      FieldProfile p;
      p.field = table.schema.fields[c];
      std::set<Value> values;
      for (const auto& s : table.shards) {
        for (auto& v : s->columns[c].dict.values()) values.insert(std::move(v));
      }
      p.distinct = values.size();
      const auto& keys = table.entry.partition.fields;
      p.partition_key = std::find(keys.begin(), keys.end(), p.field.name) != keys.end();
      switch (p.field.kind) {
        case ValueKind::kDate:
        case ValueKind::kTimestamp: p.role = "time"; break;
        case ValueKind::kI64:
        case ValueKind::kF64: p.role = p.distinct <= 64 ? "dimension" : "measure"; break;
        default: p.role = "dimension"; break;
      }
      out.push_back(std::move(p));
    }
    return profiles_.emplace(name, std::move(out)).first->second;
  }

  SessionTotals totals() const {
    std::lock_guard<std::mutex> lock(mu_);
    return totals_;
  }
  CacheStats cache_stats() const { return cache_->stats(); }
  ResultCacheStats result_cache_stats() const { return results_.stats(); }

 private:
  QueryOptions options(bool trace) {
    QueryOptions opt;
    opt.cache = cache_.get();
    opt.result_cache = config_.result_cache ? &results_ : nullptr;
    opt.trace = trace;
    return opt;
  }

  void record(const QueryStats& s) {
    QueryStats copy = s;
    copy.trace.clear();
    std::lock_guard<std::mutex> lock(mu_);
    ++totals_.queries;
    totals_.latency_ms += s.latency_ms;
    totals_.stats.add(copy);
    totals_.stats.groups += s.groups;
    totals_.stats.keys_materialized += s.keys_materialized;
  }

  Store store_;
  SessionConfig config_;
  std::shared_ptr<CodecRegistry> codecs_;
  std::unique_ptr<ArtifactCache> cache_;
  QueryResultCache results_;
  mutable std::mutex mu_;
  SessionTotals totals_;
  std::mutex profile_mu_;
  std::map<std::string, std::vector<FieldProfile>> profiles_;
};

}  // namespace pdrill
