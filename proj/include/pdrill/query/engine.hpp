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
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/cache/artifact_cache.hpp"
#include "pdrill/cache/result_cache.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/core/hash.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/analyze.hpp"
#include "pdrill/query/eval.hpp"
#include "pdrill/query/kmv.hpp"
#include "pdrill/query/parser.hpp"
#include "pdrill/query/restriction.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill {

// ---------------------------------------------------------------------------
// Accumulators

inline constexpr std::uint32_t kNoGid = std::numeric_limits<std::uint32_t>::max();

/// Per-group state of one aggregate, stored column-wise. Which arrays are
/// populated depends on the aggregate.
struct AggArrays {
  std::vector<std::uint64_t> n;     // non-null inputs (COUNT, SUM, AVG)
  std::vector<std::uint64_t> isum;  // wrapping integer sum
  std::vector<double> fsum;
  std::vector<std::uint32_t> best;  // measure global-id for MIN / MAX
  std::vector<KmvSketch> kmv;

  friend bool operator==(const AggArrays&, const AggArrays&) = default;
};

/// Result of the group-by over one chunk, indexed by the group field's
/// chunk-id (or by global-id once merged at shard level).
struct ChunkAccumulators {
  std::vector<std::uint64_t> counts;
  std::vector<AggArrays> aggs;

  friend bool operator==(const ChunkAccumulators&, const ChunkAccumulators&) = default;
};

using QueryResultCache = ChunkResultCache<ChunkAccumulators>;

// ---------------------------------------------------------------------------
// Options, stats, results

struct QueryOptions {
  ArtifactCache* cache = nullptr;              // elements are read through it when set
  QueryResultCache* result_cache = nullptr;    // fully active chunk results
  std::size_t kmv_capacity = KmvSketch::kDefaultCapacity;
  std::uint64_t kmv_seed = KmvSketch::kDefaultSeed;
  bool kmv_bias_corrected = false;
  bool trace = false;     // record per-chunk decisions
  bool parallel = true;   // one task per shard
};

struct ChunkTrace {
  std::uint32_t shard = 0;
  std::uint32_t chunk = 0;
  ChunkStatus status = ChunkStatus::kSkipped;
  bool cached = false;
  std::uint64_t rows = 0;
};

struct QueryStats {
  std::uint64_t shards = 0;
  std::uint64_t chunks_total = 0;
  std::uint64_t chunks_skipped = 0;
  std::uint64_t chunks_cached = 0;
  std::uint64_t chunks_scanned = 0;
  std::uint64_t chunks_fully_active = 0;
  std::uint64_t chunks_partial = 0;
  std::uint64_t rows_total = 0;
  std::uint64_t rows_skipped = 0;
  std::uint64_t rows_cached = 0;
  std::uint64_t rows_scanned = 0;
  std::uint64_t rows_matched = 0;
  std::uint64_t groups = 0;
  std::uint64_t keys_materialized = 0;
  std::uint64_t virtual_fields_created = 0;
  std::uint64_t kmv_seed = 0;
  double latency_ms = 0;
  std::vector<ChunkTrace> trace;

  // Row-weighted; an empty input counts as fully skipped.
  double skipped_fraction() const { return rows_total ? double(rows_skipped) / double(rows_total) : 1.0; }
  double cached_fraction() const { return rows_total ? double(rows_cached) / double(rows_total) : 0.0; }
  double scanned_fraction() const { return rows_total ? double(rows_scanned) / double(rows_total) : 0.0; }
  double chunk_skipped_fraction() const {
    return chunks_total ? double(chunks_skipped) / double(chunks_total) : 1.0;
  }
  double chunk_cached_fraction() const { return chunks_total ? double(chunks_cached) / double(chunks_total) : 0.0; }
  double chunk_scanned_fraction() const {
    return chunks_total ? double(chunks_scanned) / double(chunks_total) : 0.0;
  }

  void add(const QueryStats& o) {
    shards += o.shards;
    chunks_total += o.chunks_total;
    chunks_skipped += o.chunks_skipped;
    chunks_cached += o.chunks_cached;
    chunks_scanned += o.chunks_scanned;
    chunks_fully_active += o.chunks_fully_active;
    chunks_partial += o.chunks_partial;
    rows_total += o.rows_total;
    rows_skipped += o.rows_skipped;
    rows_cached += o.rows_cached;
    rows_scanned += o.rows_scanned;
    rows_matched += o.rows_matched;
    virtual_fields_created += o.virtual_fields_created;
    trace.insert(trace.end(), o.trace.begin(), o.trace.end());
  }
};

struct ResultColumn {
  std::string name;
  ValueKind kind = ValueKind::kNull;
  friend bool operator==(const ResultColumn&, const ResultColumn&) = default;
};

struct ResultSet {
  std::vector<ResultColumn> columns;
  std::vector<std::vector<Value>> rows;
  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

struct QueryResult {
  ResultSet result;
  QueryStats stats;
};

// ---------------------------------------------------------------------------
// Composite group keys

/// Order-preserving byte encoding of a key tuple: comparing encodings as
/// byte strings orders tuples like element-wise Value comparison.
inline std::string encode_key_tuple(const std::vector<Value>& values) {
  std::string out;
  auto be = [&](std::uint64_t x, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  };
  for (const auto& v : values) {
    if (v.is_null()) {
      out.push_back('\0');
      continue;
    }
    out.push_back('\1');
    switch (v.kind()) {
      case ValueKind::kStr:
        for (char c : v.as_str()) {
          out.push_back(c);
          if (c == '\0') out.push_back('\xff');
        }
        out.push_back('\0');
        out.push_back('\0');
        break;
      case ValueKind::kI64: be(static_cast<std::uint64_t>(v.as_i64()) ^ (1ull << 63), 8); break;
      case ValueKind::kTimestamp: be(static_cast<std::uint64_t>(v.as_timestamp()) ^ (1ull << 63), 8); break;
      case ValueKind::kDate: be(static_cast<std::uint32_t>(v.as_date()) ^ (1u << 31), 4); break;
      case ValueKind::kF64: {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v.as_f64());
        bits = (bits >> 63) ? ~bits : bits ^ (1ull << 63);
        be(bits, 8);
        break;
      }
      case ValueKind::kNull: break;
    }
  }
  return out;
}

inline std::vector<Value> decode_key_tuple(std::string_view s, const std::vector<ValueKind>& kinds) {
  std::vector<Value> out;
  std::size_t i = 0;
  auto need = [&](std::size_t n) {
    if (i + n > s.size()) throw Error(ErrorCode::kCorrupt, "truncated composite key");
  };
  auto be = [&](int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t x = 0;
    for (int b = 0; b < bytes; ++b) x = (x << 8) | static_cast<std::uint8_t>(s[i++]);
    return x;
  };
  for (ValueKind k : kinds) {
    need(1);
    if (s[i++] == '\0') {
      out.push_back(Value::null());
      continue;
    }
    switch (k) {
      case ValueKind::kStr: {
        std::string v;
        while (true) {
          need(1);
          const char c = s[i++];
          if (c != '\0') {
            v.push_back(c);
            continue;
          }
          need(1);
          const char d = s[i++];
          if (d == '\0') break;
          v.push_back('\0');
        }
        out.push_back(Value::str(std::move(v)));
        break;
      }
      case ValueKind::kI64: out.push_back(Value::i64(static_cast<std::int64_t>(be(8) ^ (1ull << 63)))); break;
      case ValueKind::kTimestamp:
        out.push_back(Value::timestamp(static_cast<std::int64_t>(be(8) ^ (1ull << 63))));
        break;
      case ValueKind::kDate:
        out.push_back(Value::date(static_cast<std::int32_t>(static_cast<std::uint32_t>(be(4)) ^ (1u << 31))));
        break;
      case ValueKind::kF64: {
        std::uint64_t bits = be(8);
        bits = (bits >> 63) ? bits ^ (1ull << 63) : ~bits;
        out.push_back(Value::f64(std::bit_cast<double>(bits)));
        break;
      }
      case ValueKind::kNull: out.push_back(Value::null()); break;
    }
  }
  if (i != s.size()) throw Error(ErrorCode::kCorrupt, "trailing bytes in composite key");
  return out;
}

inline std::string composite_key_name(const std::vector<ExprPtr>& keys) {
  std::string s = "composite(";
  for (std::size_t i = 0; i < keys.size(); ++i) s += (i ? ", " : "") + canonical_key(keys[i]);
  return s + ")";
}

// ---------------------------------------------------------------------------
// Virtual fields

namespace detail {

inline std::vector<ChunkRange> chunk_ranges(const Shard& shard) {
  std::vector<ChunkRange> out;
  std::size_t at = 0;
  for (auto n : shard.chunk_rows) {
    out.push_back({at, at + n});
    at += n;
  }
  return out;
}

inline void collect_columns(const Expr& e, std::vector<std::size_t>& out) {
  if (e.op == ExprOp::kColumn) {
    if (std::find(out.begin(), out.end(), e.index) == out.end()) out.push_back(e.index);
  }
  for (const auto& a : e.args) collect_columns(*a, out);
}

/// Row access over decoded values of selected columns of one chunk.
struct DecodedChunk {
  std::vector<std::vector<Value>> by_column;  // indexed by schema position, empty if unused
  std::size_t row = 0;
  Value column(std::size_t i) const { return by_column[i][row]; }
  Value group(std::size_t) const { throw Error(ErrorCode::kInternal, "group reference in a row expression"); }
  Value agg(std::size_t) const { throw Error(ErrorCode::kInternal, "aggregate reference in a row expression"); }
};

inline DecodedChunk decode_chunk(const Shard& shard, std::size_t chunk, const std::vector<std::size_t>& columns) {
  DecodedChunk d;
  d.by_column.resize(shard.schema.fields.size());
  for (auto ci : columns) {
    const Column& col = shard.columns[ci];
    const ColumnChunk& cc = col.chunks[chunk];
    std::vector<Value> dict_values;
    dict_values.reserve(cc.dict.size());
    for (auto g : cc.dict.global_ids) dict_values.push_back(col.dict.value_at(g));
    auto& out = d.by_column[ci];
    out.resize(cc.elems.size());
    cc.elems.view().for_each([&](std::size_t r, std::uint32_t cid) { out[r] = dict_values[cid]; });
  }
  return d;
}

}  // namespace detail

/// Evaluates `expr` (bound against the shard's schema) on every row and
/// stores the result as an encoded column in the shard's chunk layout,
/// once per canonical key.
inline std::shared_ptr<const VirtualColumn> materialize_virtual_field(const Shard& shard, const ExprPtr& expr,
                                                                      const std::string& key) {
  return shard.virtual_fields().get_or_create(key, [&] {
    std::vector<std::size_t> cols;
    detail::collect_columns(*expr, cols);
    std::vector<Value> values;
    values.reserve(shard.row_count());
    for (std::size_t c = 0; c < shard.chunk_count(); ++c) {
      detail::DecodedChunk d = detail::decode_chunk(shard, c, cols);
      for (d.row = 0; d.row < shard.chunk_rows[c]; ++d.row) values.push_back(eval_value(*expr, d));
    }
    VirtualColumn vc;
    vc.key = key;
    vc.kind = expr->kind == ValueKind::kNull ? ValueKind::kStr : expr->kind;
    const auto ranges = detail::chunk_ranges(shard);
    vc.column = encode_column(values, vc.kind, ranges);
    return vc;
  });
}

inline std::shared_ptr<const VirtualColumn> materialize_virtual_field(const Shard& shard, const ExprPtr& expr) {
  return materialize_virtual_field(shard, expr, canonical_key(expr));
}

/// Virtual column holding the order-preserving encoding of several group
/// keys; multi-field GROUP BY runs as a single-field group-by over it.
inline std::shared_ptr<const VirtualColumn> materialize_composite_key(const Shard& shard,
                                                                      const std::vector<ExprPtr>& keys) {
  return shard.virtual_fields().get_or_create(composite_key_name(keys), [&] {
    std::vector<std::size_t> cols;
    for (const auto& k : keys) detail::collect_columns(*k, cols);
    std::vector<Value> values;
    values.reserve(shard.row_count());
    std::vector<Value> tuple(keys.size());
    for (std::size_t c = 0; c < shard.chunk_count(); ++c) {
      detail::DecodedChunk d = detail::decode_chunk(shard, c, cols);
      for (d.row = 0; d.row < shard.chunk_rows[c]; ++d.row) {
        for (std::size_t k = 0; k < keys.size(); ++k) tuple[k] = eval_value(*keys[k], d);
        values.push_back(Value::str(encode_key_tuple(tuple)));
      }
    }
    VirtualColumn vc;
    vc.key = composite_key_name(keys);
    vc.kind = ValueKind::kStr;
    vc.column = encode_column(values, ValueKind::kStr, detail::chunk_ranges(shard), {ElementsPolicy::kAdaptive, DictRepr::kSortedArray});
    return vc;
  });
}

// ---------------------------------------------------------------------------
// Finalization shared by all execution paths

/// Groups in ascending key order with lazily produced keys and final
/// aggregate values.
struct GroupTable {
  std::size_t size = 0;
  std::function<Value(std::size_t group, std::size_t key)> key;
  std::function<Value(std::size_t group, std::size_t agg)> agg;
};

namespace detail {

struct GroupCtx {
  const GroupTable* table;
  std::size_t g;
  Value column(std::size_t) const { throw Error(ErrorCode::kInternal, "column reference after aggregation"); }
  Value group(std::size_t k) const { return table->key(g, k); }
  Value agg(std::size_t a) const { return table->agg(g, a); }
};

}  // namespace detail

/// HAVING, ORDER BY (ties by ascending group key), LIMIT, then output
/// expressions. Keys are requested only for the groups that need them.
inline ResultSet finalize(const BoundQuery& q, const GroupTable& t) {
  ResultSet rs;
  for (const auto& o : q.outputs) rs.columns.push_back({o.name, o.kind});
  std::vector<std::size_t> order;
  order.reserve(t.size);
  for (std::size_t g = 0; g < t.size; ++g) {
    if (q.having && !eval_predicate(*q.having, detail::GroupCtx{&t, g})) continue;
    order.push_back(g);
  }
  const std::size_t limit =
      q.limit ? static_cast<std::size_t>(std::min<std::int64_t>(*q.limit, static_cast<std::int64_t>(order.size())))
              : order.size();
  if (!q.order.empty() && limit > 0) {
    // Sort keys; a plain single-field group key orders like its position.
    const bool single_key = q.group_keys.size() == 1;
    std::vector<bool> by_position(q.order.size());
    for (std::size_t i = 0; i < q.order.size(); ++i) {
      by_position[i] = single_key && q.order[i].expr->op == ExprOp::kGroupRef;
    }
    std::vector<std::vector<Value>> keys(t.size);
    for (auto g : order) {
      keys[g].resize(q.order.size());
      for (std::size_t i = 0; i < q.order.size(); ++i) {
        if (!by_position[i]) keys[g][i] = eval_value(*q.order[i].expr, detail::GroupCtx{&t, g});
      }
    }
    auto less = [&](std::size_t a, std::size_t b) {
      for (std::size_t i = 0; i < q.order.size(); ++i) {
        int c = by_position[i] ? (a < b ? -1 : (a > b ? 1 : 0)) : compare_values(keys[a][i], keys[b][i]);
        if (q.order[i].desc) c = -c;
        if (c != 0) return c < 0;
      }
      return a < b;
    };
    if (limit < order.size()) {
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), less);
    } else {
      std::sort(order.begin(), order.end(), less);
    }
  }
  order.resize(limit);
  for (auto g : order) {
    std::vector<Value> row;
    row.reserve(q.outputs.size());
    for (const auto& o : q.outputs) row.push_back(eval_value(*o.expr, detail::GroupCtx{&t, g}));
    rs.rows.push_back(std::move(row));
  }
  return rs;
}

// ---------------------------------------------------------------------------
// Mergeable partial results (multi-shard and distributed execution)

struct AggState {
  std::uint64_t n = 0;
  std::uint64_t isum = 0;
  double fsum = 0.0;
  Value best;  // MIN / MAX; Null when no input
  std::optional<KmvSketch> kmv;

  friend bool operator==(const AggState&, const AggState&) = default;
};

struct PartialGroup {
  std::vector<Value> key;
  std::uint64_t count = 0;
  std::vector<AggState> aggs;

  friend bool operator==(const PartialGroup&, const PartialGroup&) = default;
};

/// Groups sorted ascending by key. An ungrouped query always carries exactly
/// one group with an empty key.
struct PartialResult {
  std::vector<PartialGroup> groups;
  friend bool operator==(const PartialResult&, const PartialResult&) = default;
};

inline bool key_less(const std::vector<Value>& a, const std::vector<Value>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](const Value& x, const Value& y) { return compare(x, y) < 0; });
}

inline void merge_agg_state(const AggSpec& spec, AggState& dst, const AggState& src) {
  dst.n += src.n;
  dst.isum += src.isum;
  dst.fsum += src.fsum;
  if (!src.best.is_null()) {
    if (dst.best.is_null()) {
      dst.best = src.best;
    } else {
      const int c = compare_values(src.best, dst.best);
      if ((spec.func == AggFunc::kMin && c < 0) || (spec.func == AggFunc::kMax && c > 0)) dst.best = src.best;
    }
  }
  if (src.kmv) {
    if (dst.kmv) {
      dst.kmv->merge(*src.kmv);
    } else {
      dst.kmv = src.kmv;
    }
  }
}

/// Merges partials in the given order; equal keys combine.
inline PartialResult merge_partials(const BoundQuery& q, const std::vector<PartialResult>& parts) {
  std::map<std::vector<Value>, PartialGroup, decltype(&key_less)> merged(&key_less);
  for (const auto& p : parts) {
    for (const auto& g : p.groups) {
      auto [it, inserted] = merged.try_emplace(g.key, g);
      if (inserted) continue;
      it->second.count += g.count;
      for (std::size_t a = 0; a < q.aggregates.size(); ++a) merge_agg_state(q.aggregates[a], it->second.aggs[a], g.aggs[a]);
    }
  }
  PartialResult out;
  for (auto& [k, g] : merged) out.groups.push_back(std::move(g));
  if (!q.grouped() && out.groups.empty()) {
    PartialGroup g;
    g.aggs.resize(q.aggregates.size());
    out.groups.push_back(std::move(g));
  }
  return out;
}

inline Value final_agg_value(const AggSpec& spec, std::uint64_t count, const AggState& s) {
  switch (spec.func) {
    case AggFunc::kCountStar: return Value::i64(static_cast<std::int64_t>(count));
    case AggFunc::kCount: return Value::i64(static_cast<std::int64_t>(s.n));
    case AggFunc::kCountDistinct:
      return Value::i64(s.kmv ? static_cast<std::int64_t>(std::llround(s.kmv->estimate())) : 0);
    case AggFunc::kSum:
      if (s.n == 0) return Value::null();
      if (spec.result_kind == ValueKind::kF64) return Value::f64(s.fsum);
      return Value::i64(static_cast<std::int64_t>(s.isum));
    case AggFunc::kAvg:
      if (s.n == 0) return Value::null();
      if (spec.arg_kind == ValueKind::kF64) return Value::f64(s.fsum / static_cast<double>(s.n));
      return Value::f64(static_cast<double>(static_cast<std::int64_t>(s.isum)) / static_cast<double>(s.n));
    case AggFunc::kMin:
    case AggFunc::kMax: return s.best;
  }
  return Value::null();
}

inline ResultSet finalize_partial(const BoundQuery& q, const PartialResult& p, QueryStats* stats = nullptr) {
  GroupTable t;
  t.size = p.groups.size();
  t.key = [&](std::size_t g, std::size_t k) { return p.groups[g].key[k]; };
  t.agg = [&](std::size_t g, std::size_t a) {
    return final_agg_value(q.aggregates[a], p.groups[g].count, p.groups[g].aggs[a]);
  };
  if (stats) stats->groups = p.groups.size();
  return finalize(q, t);
}

// ---------------------------------------------------------------------------
// Per-shard execution

namespace detail {

/// Element chunk-ids of one column chunk, read through the artifact cache
/// when one is configured.
class ElementsSource {
 public:
  ElementsSource(const Shard& shard, ArtifactCache* cache) : shard_(shard), cache_(cache) {}

  std::vector<std::uint32_t> decode(const std::string& field, const Column& col, std::size_t chunk) const {
    const Elements& e = col.chunks[chunk].elems;
    std::vector<std::uint32_t> out(e.size());
    auto fill = [&](const ElementsView& v) { v.for_each([&](std::size_t r, std::uint32_t cid) { out[r] = cid; }); };
    if (!cache_ || e.kind() == ElementsKind::kConstant) {
      fill(e.view());
      return out;
    }
    ArtifactKey key{shard_.shard_id, field, static_cast<std::uint32_t>(chunk), ArtifactKind::kElements};
    auto payload = cache_->get_or_load(key, [&] { return e.payload(); });
    if (payload->size() != e.payload_bytes()) throw Error(ErrorCode::kCorrupt, "cached elements have the wrong size");
    fill(ElementsView(e.kind(), e.size(), *payload));
    return out;
  }

 private:
  const Shard& shard_;
  ArtifactCache* cache_;
};

struct ResolvedField {
  std::string name;  // cache / registry name
  const Column* column = nullptr;
  std::shared_ptr<const VirtualColumn> hold;
};

struct CompiledNode {
  RestrictionOp op = RestrictionOp::kConst;
  std::vector<CompiledNode> children;
  bool constant = false;
  ResolvedField field;
  GidRanges ranges;
  ExprPtr residual;
  std::vector<std::size_t> residual_columns;
};

class ShardRun {
 public:
  ShardRun(const Shard& shard, const BoundQuery& q, const SplitRestriction& split, const QueryOptions& opt)
      : shard_(shard), q_(q), opt_(opt), elements_(shard, opt.cache) {
    const std::uint64_t evals_before = shard.virtual_fields().evaluations();
    root_ = compile(split.root);
    if (q.group_keys.size() == 1) {
      group_ = resolve(q.group_keys[0]);
    } else if (q.group_keys.size() > 1) {
      auto vc = materialize_composite_key(shard, q.group_keys);
      group_ = {vc->key, &vc->column, vc};
      for (const auto& k : q.group_keys) key_kinds_.push_back(k->kind);
    }
    for (const auto& a : q.aggregates) measures_.push_back(prepare_measure(a));
    fragment_ = (q.grouped() ? group_.name : std::string("<all>")) + "|kmv:" + std::to_string(opt.kmv_capacity) + ":" +
                std::to_string(opt.kmv_seed) + (opt.kmv_bias_corrected ? ":bc" : "");
    for (const auto& a : q.aggregates) fragment_ += "|" + a.key;
    stats_.virtual_fields_created = shard.virtual_fields().evaluations() - evals_before;
  }

  /// Shard-level accumulators indexed by the group field's global-id.
  const ChunkAccumulators& run() {
    const std::size_t groups = q_.grouped() ? group_.column->dict.size() : 1;
    total_ = empty_accumulators(groups);
    stats_.shards = 1;
    for (std::size_t c = 0; c < shard_.chunk_count(); ++c) run_chunk(c);
    return total_;
  }

  const QueryStats& stats() const { return stats_; }

  /// Present groups in ascending key order, as global-ids (0 when ungrouped).
  std::vector<std::uint32_t> present_groups() const {
    std::vector<std::uint32_t> out;
    if (!q_.grouped()) return {0};
    for (std::uint32_t g = 0; g < total_.counts.size(); ++g) {
      if (total_.counts[g] > 0) out.push_back(g);
    }
    return out;
  }

  std::vector<Value> group_key(std::uint32_t gid) const {
    if (!q_.grouped()) return {};
    const Value v = group_.column->dict.value_at(gid);
    if (q_.group_keys.size() == 1) return {v};
    return decode_key_tuple(v.as_str(), key_kinds_);
  }

  AggState agg_state(std::size_t a, std::uint32_t gid) const {
    const AggArrays& arr = total_.aggs[a];
    AggState s;
    if (!arr.n.empty()) s.n = arr.n[gid];
    if (!arr.isum.empty()) s.isum = arr.isum[gid];
    if (!arr.fsum.empty()) s.fsum = arr.fsum[gid];
    if (!arr.best.empty() && arr.best[gid] != kNoGid) s.best = measures_[a].field.column->dict.value_at(arr.best[gid]);
    if (!arr.kmv.empty()) s.kmv = arr.kmv[gid];
    return s;
  }

  std::uint64_t count(std::uint32_t gid) const { return total_.counts[gid]; }

  ChunkStatus status(std::size_t chunk) const { return classify(root_, chunk); }
  std::vector<std::uint8_t> mask(std::size_t chunk) const { return row_mask(root_, chunk); }
  ChunkAccumulators accumulate(std::size_t chunk, const std::vector<std::uint8_t>* mask) const {
    return aggregate_chunk(chunk, mask);
  }

 private:
  struct Measure {
    AggFunc func = AggFunc::kCountStar;
    ResolvedField field;
    bool integer = false;                 // I64 arithmetic
    std::vector<std::int64_t> ivals;      // by global-id
    std::vector<double> fvals;            // by global-id
    std::vector<std::uint64_t> hashes;    // by global-id
  };

  ResolvedField resolve(const ExprPtr& e) {
    if (e->op == ExprOp::kColumn) return {e->name, &shard_.column(e->name), nullptr};
    auto vc = materialize_virtual_field(shard_, e);
    return {vc->key, &vc->column, vc};
  }

  CompiledNode compile(const Restriction& r) {
    CompiledNode n;
    n.op = r.op;
    n.constant = r.constant;
    switch (r.op) {
      case RestrictionOp::kAnd:
      case RestrictionOp::kOr:
      case RestrictionOp::kNot:
        for (const auto& c : r.children) n.children.push_back(compile(c));
        break;
      case RestrictionOp::kConst: break;
      case RestrictionOp::kResidual:
        n.residual = r.residual;
        collect_columns(*r.residual, n.residual_columns);
        break;
      default:
        n.field = resolve(r.field.expr);
        n.ranges = leaf_gid_ranges(r, n.field.column->dict);
        break;
    }
    return n;
  }

  Measure prepare_measure(const AggSpec& a) {
    Measure m;
    m.func = a.func;
    if (a.func == AggFunc::kCountStar) return m;
    m.field = resolve(a.arg);
    const GlobalDictionary& dict = m.field.column->dict;
    m.integer = dict.kind() == ValueKind::kI64;
    if (a.func == AggFunc::kSum || a.func == AggFunc::kAvg || a.func == AggFunc::kCountDistinct) {
      const std::vector<Value> values = dict.values();
      if (a.func == AggFunc::kCountDistinct) {
        m.hashes.reserve(values.size());
        for (const auto& v : values) m.hashes.push_back(hash_value(v, opt_.kmv_seed));
      } else if (m.integer) {
        for (const auto& v : values) m.ivals.push_back(v.is_null() ? 0 : v.as_i64());
      } else {
        for (const auto& v : values) m.fvals.push_back(v.is_null() ? 0.0 : as_double(v));
      }
    }
    return m;
  }

  ChunkAccumulators empty_accumulators(std::size_t groups) const {
    ChunkAccumulators acc;
    acc.counts.assign(groups, 0);
    acc.aggs.resize(q_.aggregates.size());
    for (std::size_t a = 0; a < q_.aggregates.size(); ++a) {
      AggArrays& arr = acc.aggs[a];
      switch (measures_[a].func) {
        case AggFunc::kCountStar: break;
        case AggFunc::kCount: arr.n.assign(groups, 0); break;
        case AggFunc::kSum:
        case AggFunc::kAvg:
          arr.n.assign(groups, 0);
          if (measures_[a].integer) {
            arr.isum.assign(groups, 0);
          } else {
            arr.fsum.assign(groups, 0.0);
          }
          break;
        case AggFunc::kMin:
        case AggFunc::kMax: arr.best.assign(groups, kNoGid); break;
        case AggFunc::kCountDistinct:
          arr.kmv.assign(groups, KmvSketch(opt_.kmv_capacity, opt_.kmv_bias_corrected));
          break;
      }
    }
    return acc;
  }

  ChunkStatus classify(const CompiledNode& n, std::size_t chunk) const {
    switch (n.op) {
      case RestrictionOp::kConst: return n.constant ? ChunkStatus::kFullyActive : ChunkStatus::kSkipped;
      case RestrictionOp::kResidual: return ChunkStatus::kPartial;
      case RestrictionOp::kAnd: {
        ChunkStatus s = ChunkStatus::kFullyActive;
        for (const auto& c : n.children) {
          s = combine_and(s, classify(c, chunk));
          if (s == ChunkStatus::kSkipped) break;
        }
        return s;
      }
      case RestrictionOp::kOr: {
        ChunkStatus s = ChunkStatus::kSkipped;
        for (const auto& c : n.children) {
          s = combine_or(s, classify(c, chunk));
          if (s == ChunkStatus::kFullyActive) break;
        }
        return s;
      }
      case RestrictionOp::kNot: return negate(classify(n.children[0], chunk));
      default: {
        const ChunkDictionary& cd = n.field.column->chunks[chunk].dict;
        return status_from_count(count_in_chunk(n.ranges, cd), cd.size());
      }
    }
  }

  std::vector<std::uint8_t> row_mask(const CompiledNode& n, std::size_t chunk) const {
    const std::size_t rows = shard_.chunk_rows[chunk];
    const ChunkStatus s = classify(n, chunk);
    if (s == ChunkStatus::kSkipped) return std::vector<std::uint8_t>(rows, 0);
    if (s == ChunkStatus::kFullyActive) return std::vector<std::uint8_t>(rows, 1);
    switch (n.op) {
      case RestrictionOp::kAnd:
      case RestrictionOp::kOr: {
        const bool is_and = n.op == RestrictionOp::kAnd;
        std::vector<std::uint8_t> m(rows, is_and ? 1 : 0);
        for (const auto& c : n.children) {
          const auto cm = row_mask(c, chunk);
          for (std::size_t r = 0; r < rows; ++r) m[r] = is_and ? (m[r] & cm[r]) : (m[r] | cm[r]);
        }
        return m;
      }
      case RestrictionOp::kNot: {
        auto m = row_mask(n.children[0], chunk);
        for (auto& b : m) b ^= 1;
        return m;
      }
      case RestrictionOp::kResidual: {
        DecodedChunk d = decode_chunk(shard_, chunk, n.residual_columns);
        std::vector<std::uint8_t> m(rows);
        for (d.row = 0; d.row < rows; ++d.row) m[d.row] = eval_predicate(*n.residual, d) ? 1 : 0;
        return m;
      }
      default: {
        std::vector<std::uint8_t> cid_mask;
        count_in_chunk(n.ranges, n.field.column->chunks[chunk].dict, &cid_mask);
        const auto ids = elements_.decode(n.field.name, *n.field.column, chunk);
        std::vector<std::uint8_t> m(rows);
        for (std::size_t r = 0; r < rows; ++r) m[r] = cid_mask[ids[r]];
        return m;
      }
    }
  }

  void run_chunk(std::size_t chunk) {
    const std::uint64_t rows = shard_.chunk_rows[chunk];
    stats_.chunks_total++;
    stats_.rows_total += rows;
    const ChunkStatus status = classify(root_, chunk);
    bool cached = false;
    if (status == ChunkStatus::kSkipped) {
      stats_.chunks_skipped++;
      stats_.rows_skipped += rows;
    } else {
      std::shared_ptr<const ChunkAccumulators> acc;
      std::vector<std::uint8_t> mask;
      if (status == ChunkStatus::kFullyActive) {
        stats_.chunks_fully_active++;
        if (opt_.result_cache) acc = opt_.result_cache->lookup(shard_.shard_id, static_cast<std::uint32_t>(chunk), fragment_);
        cached = acc != nullptr;
      } else {
        stats_.chunks_partial++;
        mask = row_mask(root_, chunk);
      }
      if (!acc) {
        auto fresh = std::make_shared<const ChunkAccumulators>(aggregate_chunk(chunk, mask.empty() ? nullptr : &mask));
        if (status == ChunkStatus::kFullyActive && opt_.result_cache) {
          opt_.result_cache->store(shard_.shard_id, static_cast<std::uint32_t>(chunk), fragment_, fresh);
        }
        acc = std::move(fresh);
      }
      if (cached) {
        stats_.chunks_cached++;
        stats_.rows_cached += rows;
      } else {
        stats_.chunks_scanned++;
        stats_.rows_scanned += rows;
      }
      merge_chunk(chunk, *acc);
    }
    if (opt_.trace) {
      stats_.trace.push_back({shard_.shard_id, static_cast<std::uint32_t>(chunk), status, cached, rows});
    }
  }

  /// The counts-array loop: accumulators indexed by the group chunk-id of
  /// each active row.
  ChunkAccumulators aggregate_chunk(std::size_t chunk, const std::vector<std::uint8_t>* mask) const {
    const std::size_t rows = shard_.chunk_rows[chunk];
    const std::size_t groups = q_.grouped() ? group_.column->chunks[chunk].dict.size() : 1;
    ChunkAccumulators acc = empty_accumulators(groups);
    std::vector<std::uint32_t> group_ids;
    if (q_.grouped()) {
      group_ids = elements_.decode(group_.name, *group_.column, chunk);
    } else {
      group_ids.assign(rows, 0);
    }
    auto active = [&](std::size_t r) { return !mask || (*mask)[r]; };
    for (std::size_t r = 0; r < rows; ++r) {
      if (active(r)) acc.counts[group_ids[r]]++;
    }
    for (std::size_t a = 0; a < measures_.size(); ++a) {
      const Measure& m = measures_[a];
      if (m.func == AggFunc::kCountStar) continue;
      const ColumnChunk& mc = m.field.column->chunks[chunk];
      const auto& gids = mc.dict.global_ids;
      const bool has_null = m.field.column->dict.has_null();
      const auto ids = elements_.decode(m.field.name, *m.field.column, chunk);
      AggArrays& arr = acc.aggs[a];
      for (std::size_t r = 0; r < rows; ++r) {
        if (!active(r)) continue;
        const std::uint32_t g = gids[ids[r]];
        if (has_null && g == 0) continue;
        const std::uint32_t k = group_ids[r];
        switch (m.func) {
          case AggFunc::kCount: arr.n[k]++; break;
          case AggFunc::kSum:
          case AggFunc::kAvg:
            arr.n[k]++;
            if (m.integer) {
              arr.isum[k] += static_cast<std::uint64_t>(m.ivals[g]);
            } else {
              arr.fsum[k] += m.fvals[g];
            }
            break;
          case AggFunc::kMin:
            if (arr.best[k] == kNoGid || g < arr.best[k]) arr.best[k] = g;
            break;
          case AggFunc::kMax:
            if (arr.best[k] == kNoGid || g > arr.best[k]) arr.best[k] = g;
            break;
          case AggFunc::kCountDistinct: arr.kmv[k].add_hash(m.hashes[g]); break;
          case AggFunc::kCountStar: break;
        }
      }
    }
    return acc;
  }

  void merge_chunk(std::size_t chunk, const ChunkAccumulators& acc) {
    const std::vector<std::uint32_t>* gids = q_.grouped() ? &group_.column->chunks[chunk].dict.global_ids : nullptr;
    for (std::size_t c = 0; c < acc.counts.size(); ++c) {
      if (acc.counts[c] == 0) continue;
      stats_.rows_matched += acc.counts[c];
      const std::uint32_t g = gids ? (*gids)[c] : 0;
      total_.counts[g] += acc.counts[c];
      for (std::size_t a = 0; a < acc.aggs.size(); ++a) {
        const AggArrays& src = acc.aggs[a];
        AggArrays& dst = total_.aggs[a];
        if (!src.n.empty()) dst.n[g] += src.n[c];
        if (!src.isum.empty()) dst.isum[g] += src.isum[c];
        if (!src.fsum.empty()) dst.fsum[g] += src.fsum[c];
        if (!src.best.empty() && src.best[c] != kNoGid) {
          const bool is_min = measures_[a].func == AggFunc::kMin;
          if (dst.best[g] == kNoGid || (is_min ? src.best[c] < dst.best[g] : src.best[c] > dst.best[g])) {
            dst.best[g] = src.best[c];
          }
        }
        if (!src.kmv.empty()) dst.kmv[g].merge(src.kmv[c]);
      }
    }
  }

  const Shard& shard_;
  const BoundQuery& q_;
  const QueryOptions& opt_;
  ElementsSource elements_;
  CompiledNode root_;
  ResolvedField group_;
  std::vector<ValueKind> key_kinds_;
  std::vector<Measure> measures_;
  std::string fragment_;
  ChunkAccumulators total_;
  QueryStats stats_;
};

}  // namespace detail

/// Classification of every chunk of `shard` under the query's WHERE.
inline std::vector<ChunkStatus> classify_chunks(const Shard& shard, const BoundQuery& q) {
  const SplitRestriction split = split_restriction(q.where);
  const QueryOptions opt;
  detail::ShardRun run(shard, q, split, opt);
  std::vector<ChunkStatus> out;
  for (std::size_t c = 0; c < shard.chunk_count(); ++c) out.push_back(run.status(c));
  return out;
}

/// Rows of `chunk` that satisfy the query's WHERE, from dictionaries and
/// elements only.
inline std::vector<std::uint8_t> chunk_row_mask(const Shard& shard, const BoundQuery& q, std::size_t chunk) {
  const SplitRestriction split = split_restriction(q.where);
  const QueryOptions opt;
  detail::ShardRun run(shard, q, split, opt);
  return run.mask(chunk);
}

/// The per-chunk group-by accumulators (indexed by group chunk-id) for the
/// rows selected by `mask` (all rows when null).
inline ChunkAccumulators chunk_accumulators(const Shard& shard, const BoundQuery& q, std::size_t chunk,
                                            const std::vector<std::uint8_t>* mask = nullptr) {
  const SplitRestriction split = split_restriction(q.where);
  const QueryOptions opt;
  detail::ShardRun run(shard, q, split, opt);
  return run.accumulate(chunk, mask);
}

/// Aggregates one shard into a mergeable partial result.
inline PartialResult execute_partial(const Shard& shard, const BoundQuery& q, const QueryOptions& opt = {},
                                     QueryStats* stats = nullptr) {
  const SplitRestriction split = split_restriction(q.where);
  detail::ShardRun run(shard, q, split, opt);
  run.run();
  PartialResult p;
  for (auto gid : run.present_groups()) {
    PartialGroup g;
    g.key = run.group_key(gid);
    g.count = run.count(gid);
    for (std::size_t a = 0; a < q.aggregates.size(); ++a) g.aggs.push_back(run.agg_state(a, gid));
    p.groups.push_back(std::move(g));
  }
  if (stats) stats->add(run.stats());
  return p;
}

/// Executes a bound query over the shards of one table.
inline QueryResult execute(const std::vector<const Shard*>& shards, const BoundQuery& q, const QueryOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  QueryResult out;
  out.stats.kmv_seed = opt.kmv_seed;
  for (const Shard* s : shards) {
    if (!(s->schema == q.schema)) throw Error(ErrorCode::kSchemaViolation, "shard schema differs from the query's table");
  }
  if (shards.size() == 1) {
    const SplitRestriction split = split_restriction(q.where);
    detail::ShardRun run(*shards[0], q, split, opt);
    run.run();
    const std::vector<std::uint32_t> present = run.present_groups();
    std::vector<std::optional<std::vector<Value>>> keys(present.size());
    std::uint64_t materialized = 0;
    GroupTable t;
    t.size = present.size();
    t.key = [&](std::size_t g, std::size_t k) {
      if (!keys[g]) {
        keys[g] = run.group_key(present[g]);
        ++materialized;
      }
      return (*keys[g])[k];
    };
    t.agg = [&](std::size_t g, std::size_t a) {
      return final_agg_value(q.aggregates[a], run.count(present[g]), run.agg_state(a, present[g]));
    };
    out.result = finalize(q, t);
    out.stats.add(run.stats());
    out.stats.groups = present.size();
    out.stats.keys_materialized = materialized;
  } else {
    std::vector<PartialResult> parts(shards.size());
    std::vector<QueryStats> stats(shards.size());
    if (opt.parallel && shards.size() > 1) {
      std::vector<std::future<void>> tasks;
      for (std::size_t i = 0; i < shards.size(); ++i) {
        tasks.push_back(std::async(std::launch::async, [&, i] { parts[i] = execute_partial(*shards[i], q, opt, &stats[i]); }));
      }
      for (auto& t : tasks) t.get();
    } else {
      for (std::size_t i = 0; i < shards.size(); ++i) parts[i] = execute_partial(*shards[i], q, opt, &stats[i]);
    }
    for (const auto& s : stats) out.stats.add(s);
    const PartialResult merged = merge_partials(q, parts);
    out.result = finalize_partial(q, merged, &out.stats);
    out.stats.keys_materialized = merged.groups.size();
  }
  out.stats.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline QueryResult execute(const Shard& shard, const BoundQuery& q, const QueryOptions& opt = {}) {
  return execute(std::vector<const Shard*>{&shard}, q, opt);
}

/// Parses, binds and executes `sql` against shards whose schema is `schema`.
inline QueryResult run_sql(const std::vector<const Shard*>& shards, const std::string& sql, const QueryOptions& opt = {}) {
  if (shards.empty()) throw Error(ErrorCode::kInvalidArgument, "no shards to query");
  const BoundQuery q = analyze(parse(sql), shards[0]->schema);
  return execute(shards, q, opt);
}

}  // namespace pdrill
