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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/query/analyze.hpp"
#include "pdrill/query/engine.hpp"
#include "pdrill/query/parser.hpp"

namespace pdrill {

inline constexpr std::size_t kDefaultFanIn = 32;

/// How an internal node combines one partial column of its children.
enum class MergeOp { kSum, kMin, kMax, kSketch };

inline const char* merge_op_name(MergeOp op) {
  switch (op) {
    case MergeOp::kSum: return "SUM";
    case MergeOp::kMin: return "MIN";
    case MergeOp::kMax: return "MAX";
    case MergeOp::kSketch: return "KMV_UNION";
  }
  return "?";
}

/// One column emitted by the leaf query next to the group keys.
struct PartialColumn {
  std::string alias;  // p0, p1, ...
  std::string leaf;   // leaf aggregate text, e.g. "SUM(latency)"
  MergeOp merge = MergeOp::kSum;
  ValueKind kind = ValueKind::kI64;
  bool count = false;  // a count: no input reads as 0, not NULL
};

/// How the root rebuilds one aggregate of the original query.
struct RootAggregate {
  AggFunc func = AggFunc::kCountStar;
  std::size_t first = 0;   // partial column
  std::size_t second = 0;  // AVG only: the count column
};

struct AggregationPlan {
  BoundQuery query;  // the original query, evaluated at the root
  std::vector<std::string> key_names;
  std::vector<PartialColumn> partials;
  std::vector<RootAggregate> root;
  std::string leaf_sql;
  std::string internal_sql;  // FROM placeholder "children"
  std::string root_sql;      // FROM placeholder "children"
  BoundQuery leaf;           // leaf_sql bound against the table schema
  std::size_t levels = 2;
  std::size_t fan_in = kDefaultFanIn;

  /// Full query text of a two-level tree over named shards, in the form
  /// SELECT .. FROM (leaf S1) UNION ALL (leaf S2) .. GROUP BY ..
  std::string union_sql(const std::vector<std::string>& shard_names) const {
    std::string from;
    for (std::size_t i = 0; i < shard_names.size(); ++i) {
      std::string leaf = leaf_sql;
      const std::string marker = " FROM " + quote_ident(query.table);
      leaf.replace(leaf.find(marker), marker.size(), " FROM " + shard_names[i]);
      from += (i ? " UNION ALL (" : "(") + leaf + ")";
    }
    std::string out = root_sql;
    out.replace(out.find("(children)"), 10, from);
    return out;
  }
};

namespace detail {

inline bool plain_non_null_column(const AggSpec& spec, const Schema& schema) {
  return spec.arg->op == ExprOp::kColumn && !schema.fields[spec.arg->index].nullable;
}

/// SQL of a bound post-aggregation expression with group references named
/// and aggregates replaced by their root merge expressions.
inline std::string render_root(const Expr& e, const AggregationPlan& p) {
  return to_sql(e, [&](const Expr& n) -> std::optional<std::string> {
    if (n.op == ExprOp::kGroupRef) return quote_ident(p.key_names[n.index]);
    if (n.op != ExprOp::kAggRef) return std::nullopt;
    const RootAggregate& r = p.root[n.index];
    const std::string a = quote_ident(p.partials[r.first].alias);
    switch (r.func) {
      case AggFunc::kAvg: return "(SUM(" + a + ") / SUM(" + quote_ident(p.partials[r.second].alias) + "))";
      case AggFunc::kMin: return "MIN(" + a + ")";
      case AggFunc::kMax: return "MAX(" + a + ")";
      case AggFunc::kCountDistinct: return "KMV_ESTIMATE(KMV_UNION(" + a + "))";
      default: return "SUM(" + a + ")";
    }
  });
}

inline std::string group_by_clause(const AggregationPlan& p) {
  if (p.key_names.empty()) return "";
  std::string s = " GROUP BY ";
  for (std::size_t i = 0; i < p.key_names.size(); ++i) s += (i ? ", " : "") + quote_ident(p.key_names[i]);
  return s;
}

}  // namespace detail

/// Rewrites a query into leaf, internal and root stages of an aggregation
/// tree. WHERE runs at the leaves; HAVING, ORDER BY and LIMIT only at the
/// root.
inline AggregationPlan rewrite_for_tree(const QueryAst& ast, const Schema& schema, std::size_t levels = 2,
                                        std::size_t fan_in = kDefaultFanIn) {
  if (levels < 2) throw Error(ErrorCode::kInvalidArgument, "an aggregation tree needs at least 2 levels");
  if (fan_in < 2) throw Error(ErrorCode::kInvalidArgument, "fan-in must be at least 2");
  AggregationPlan p;
  p.levels = levels;
  p.fan_in = fan_in;
  p.query = analyze(ast, schema);
  const BoundQuery& q = p.query;

  std::vector<std::string> leaf_select;
  for (std::size_t k = 0; k < q.group_keys.size(); ++k) {
    const ExprPtr& key = q.group_keys[k];
    if (key->op == ExprOp::kColumn) {
      p.key_names.push_back(key->name);
      leaf_select.push_back(quote_ident(key->name));
    } else {
      p.key_names.push_back("k" + std::to_string(k));
      leaf_select.push_back(to_sql(key) + " AS k" + std::to_string(k));
    }
  }

  auto add_partial = [&](const std::string& leaf, MergeOp merge, ValueKind kind, bool count) {
    for (std::size_t i = 0; i < p.partials.size(); ++i) {
      if (p.partials[i].leaf == leaf) return i;
    }
    PartialColumn c;
    c.alias = "p" + std::to_string(p.partials.size());
    c.leaf = leaf;
    c.merge = merge;
    c.kind = kind;
    c.count = count;
    p.partials.push_back(c);
    leaf_select.push_back(leaf + " AS " + c.alias);
    return p.partials.size() - 1;
  };

  for (const AggSpec& a : q.aggregates) {
    RootAggregate r;
    r.func = a.func;
    const std::string arg = a.arg ? to_sql(a.arg) : "";
    switch (a.func) {
      case AggFunc::kCountStar: r.first = add_partial("SUM(1)", MergeOp::kSum, ValueKind::kI64, true); break;
      case AggFunc::kCount: r.first = add_partial("COUNT(" + arg + ")", MergeOp::kSum, ValueKind::kI64, true); break;
      case AggFunc::kSum: r.first = add_partial("SUM(" + arg + ")", MergeOp::kSum, a.result_kind, false); break;
      case AggFunc::kMin: r.first = add_partial("MIN(" + arg + ")", MergeOp::kMin, a.result_kind, false); break;
      case AggFunc::kMax: r.first = add_partial("MAX(" + arg + ")", MergeOp::kMax, a.result_kind, false); break;
      case AggFunc::kAvg: {
        const ValueKind sum_kind = a.arg_kind == ValueKind::kF64 ? ValueKind::kF64 : ValueKind::kI64;
        r.first = add_partial("SUM(" + arg + ")", MergeOp::kSum, sum_kind, false);
        // AVG(x) = SUM(x) / SUM(1); with nulls the denominator counts only
        // the non-null inputs.
        r.second = detail::plain_non_null_column(a, schema)
                       ? add_partial("SUM(1)", MergeOp::kSum, ValueKind::kI64, true)
                       : add_partial("COUNT(" + arg + ")", MergeOp::kSum, ValueKind::kI64, true);
        break;
      }
      case AggFunc::kCountDistinct:
        r.first = add_partial("COUNT(DISTINCT " + arg + ")", MergeOp::kSketch, ValueKind::kI64, true);
        break;
    }
    p.root.push_back(r);
  }
  if (leaf_select.empty()) throw Error(ErrorCode::kUnsupported, "query has nothing to aggregate");

  std::string select;
  for (std::size_t i = 0; i < leaf_select.size(); ++i) select += (i ? ", " : "") + leaf_select[i];
  p.leaf_sql = "SELECT " + select + " FROM " + quote_ident(q.table);
  if (ast.where) p.leaf_sql += " WHERE " + to_sql(ast.where);
  if (!q.group_keys.empty()) {
    p.leaf_sql += " GROUP BY ";
    for (std::size_t k = 0; k < q.group_keys.size(); ++k) p.leaf_sql += (k ? ", " : "") + to_sql(q.group_keys[k]);
  }
  p.leaf = analyze(parse(p.leaf_sql), schema);

  std::string inner;
  for (const auto& k : p.key_names) inner += (inner.empty() ? "" : ", ") + quote_ident(k);
  for (const auto& c : p.partials) {
    inner += (inner.empty() ? "" : ", ") + std::string(merge_op_name(c.merge)) + "(" + c.alias + ") AS " + c.alias;
  }
  p.internal_sql = "SELECT " + inner + " FROM (children)" + detail::group_by_clause(p);

  std::string outer;
  for (std::size_t i = 0; i < q.outputs.size(); ++i) {
    outer += (i ? ", " : "") + detail::render_root(*q.outputs[i].expr, p);
    if (i < ast.select.size() && !ast.select[i].alias.empty()) outer += " AS " + quote_ident(ast.select[i].alias);
  }
  p.root_sql = "SELECT " + outer + " FROM (children)" + detail::group_by_clause(p);
  if (q.having) p.root_sql += " HAVING " + detail::render_root(*q.having, p);
  if (!q.order.empty()) {
    p.root_sql += " ORDER BY ";
    for (std::size_t i = 0; i < q.order.size(); ++i) {
      p.root_sql += (i ? ", " : "") + detail::render_root(*q.order[i].expr, p) + (q.order[i].desc ? " DESC" : " ASC");
    }
  }
  if (q.limit) p.root_sql += " LIMIT " + std::to_string(*q.limit);
  return p;
}

inline AggregationPlan rewrite_for_tree(const std::string& sql, const Schema& schema, std::size_t levels = 2,
                                        std::size_t fan_in = kDefaultFanIn) {
  return rewrite_for_tree(parse(sql), schema, levels, fan_in);
}

// ---------------------------------------------------------------------------
// Partial aggregates on the wire

/// One cell of a partial row: a value, or a sketch for KMV columns.
struct PartialCell {
  Value value;
  std::optional<KmvSketch> sketch;
  friend bool operator==(const PartialCell&, const PartialCell&) = default;
};

struct PartialRow {
  std::vector<Value> key;
  std::vector<PartialCell> cells;
  friend bool operator==(const PartialRow&, const PartialRow&) = default;
};

/// Rows sorted ascending by key.
struct PartialTable {
  std::vector<PartialRow> rows;
  friend bool operator==(const PartialTable&, const PartialTable&) = default;
};

/// Leaf stage: runs the leaf query on one shard.
inline PartialTable run_leaf(const AggregationPlan& p, const Shard& shard, const QueryOptions& opt = {},
                             QueryStats* stats = nullptr) {
  const PartialResult r = execute_partial(shard, p.leaf, opt, stats);
  const std::size_t nkeys = p.key_names.size();
  PartialTable out;
  for (const auto& g : r.groups) {
    PartialRow row;
    row.key = g.key;
    for (std::size_t i = 0; i < p.partials.size(); ++i) {
      const std::size_t a = p.leaf.outputs[nkeys + i].expr->index;
      const AggSpec& spec = p.leaf.aggregates[a];
      PartialCell cell;
      if (p.partials[i].merge == MergeOp::kSketch) {
        cell.sketch = g.aggs[a].kmv ? *g.aggs[a].kmv : KmvSketch(opt.kmv_capacity, opt.kmv_bias_corrected);
      } else {
        cell.value = final_agg_value(spec, g.count, g.aggs[a]);
      }
      row.cells.push_back(std::move(cell));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace detail {

inline void merge_cell(const PartialColumn& c, PartialCell& dst, const PartialCell& src) {
  if (c.merge == MergeOp::kSketch) {
    if (!src.sketch) return;
    if (dst.sketch) {
      dst.sketch->merge(*src.sketch);
    } else {
      dst.sketch = src.sketch;
    }
    return;
  }
  if (src.value.is_null()) return;
  if (dst.value.is_null()) {
    dst.value = src.value;
    return;
  }
  switch (c.merge) {
    case MergeOp::kSum:
      if (c.kind == ValueKind::kF64) {
        dst.value = Value::f64(dst.value.as_f64() + src.value.as_f64());
      } else {
        dst.value = Value::i64(static_cast<std::int64_t>(static_cast<std::uint64_t>(dst.value.as_i64()) +
                                                         static_cast<std::uint64_t>(src.value.as_i64())));
      }
      break;
    case MergeOp::kMin:
      if (compare_values(src.value, dst.value) < 0) dst.value = src.value;
      break;
    case MergeOp::kMax:
      if (compare_values(src.value, dst.value) > 0) dst.value = src.value;
      break;
    case MergeOp::kSketch: break;
  }
}

}  // namespace detail

/// Internal node: re-aggregates its children's partial rows by key.
inline PartialTable merge_partial_tables(const AggregationPlan& p, const std::vector<PartialTable>& children) {
  std::map<std::vector<Value>, PartialRow, decltype(&key_less)> merged(&key_less);
  for (const auto& child : children) {
    for (const auto& row : child.rows) {
      if (row.cells.size() != p.partials.size()) throw Error(ErrorCode::kCorrupt, "partial row has the wrong width");
      auto [it, inserted] = merged.try_emplace(row.key, row);
      if (inserted) continue;
      for (std::size_t i = 0; i < p.partials.size(); ++i) detail::merge_cell(p.partials[i], it->second.cells[i], row.cells[i]);
    }
  }
  PartialTable out;
  for (auto& [k, row] : merged) out.rows.push_back(std::move(row));
  return out;
}

/// Root: merged partials to the final result (HAVING, ORDER BY, LIMIT).
inline ResultSet finalize_tree(const AggregationPlan& p, const PartialTable& merged) {
  const BoundQuery& q = p.query;
  std::vector<PartialRow> rows = merged.rows;
  if (!q.grouped() && rows.empty()) {
    PartialRow empty;
    empty.cells.resize(p.partials.size());
    rows.push_back(std::move(empty));
  }
  auto cell = [&](std::size_t g, std::size_t i) -> Value {
    const Value& v = rows[g].cells[i].value;
    if (v.is_null() && p.partials[i].count) return Value::i64(0);
    return v;
  };
  GroupTable t;
  t.size = rows.size();
  t.key = [&](std::size_t g, std::size_t k) { return rows[g].key[k]; };
  t.agg = [&](std::size_t g, std::size_t a) -> Value {
    const RootAggregate& r = p.root[a];
    switch (r.func) {
      case AggFunc::kAvg: {
        const Value sum = cell(g, r.first);
        const std::int64_t n = cell(g, r.second).as_i64();
        if (n == 0 || sum.is_null()) return Value::null();
        return Value::f64(as_double(sum) / static_cast<double>(n));
      }
      case AggFunc::kCountDistinct: {
        const auto& s = rows[g].cells[r.first].sketch;
        return Value::i64(s ? static_cast<std::int64_t>(std::llround(s->estimate())) : 0);
      }
      default: return cell(g, r.first);
    }
  };
  return finalize(q, t);
}

// JSON transport of partial tables. Values carry their kind so shards with
// different dictionaries agree on the key.

inline nlohmann::json value_to_wire(const Value& v) {
  using nlohmann::json;
  switch (v.kind()) {
    case ValueKind::kNull: return nullptr;
    case ValueKind::kStr: return json{{"s", v.as_str()}};
    case ValueKind::kI64: return json{{"i", v.as_i64()}};
    case ValueKind::kF64: {
      const double d = v.as_f64();
      if (std::isnan(d)) return json{{"f", "nan"}};
      if (std::isinf(d)) return json{{"f", d > 0 ? "inf" : "-inf"}};
      return json{{"f", d}};
    }
    case ValueKind::kDate: return json{{"d", v.as_date()}};
    case ValueKind::kTimestamp: return json{{"t", v.as_timestamp()}};
  }
  return nullptr;
}

inline Value value_from_wire(const nlohmann::json& j) {
  if (j.is_null()) return Value::null();
  if (!j.is_object() || j.size() != 1) throw Error(ErrorCode::kCorrupt, "malformed wire value");
  const auto& [tag, v] = *j.items().begin();
  if (tag == "s" && v.is_string()) return Value::str(v.get<std::string>());
  if (tag == "i" && v.is_number_integer()) return Value::i64(v.get<std::int64_t>());
  if (tag == "f") {
    if (v.is_number()) return Value::f64(v.get<double>());
    if (v == "nan") return Value::f64(std::numeric_limits<double>::quiet_NaN());
    if (v == "inf") return Value::f64(std::numeric_limits<double>::infinity());
    if (v == "-inf") return Value::f64(-std::numeric_limits<double>::infinity());
  }
  if (tag == "d" && v.is_number_integer()) return Value::date(v.get<std::int32_t>());
  if (tag == "t" && v.is_number_integer()) return Value::timestamp(v.get<std::int64_t>());
  throw Error(ErrorCode::kCorrupt, "malformed wire value '" + tag + "'");
}

inline std::string partial_to_json(std::uint32_t shard, const PartialTable& t) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json key = json::array();
    for (const auto& v : r.key) key.push_back(value_to_wire(v));
    json cells = json::array();
    for (const auto& c : r.cells) {
      if (c.sketch) {
        cells.push_back(json{{"kmv", {{"m", c.sketch->capacity()},
                                      {"bc", c.sketch->bias_corrected()},
                                      {"h", c.sketch->hashes()}}}});
      } else {
        cells.push_back(value_to_wire(c.value));
      }
    }
    rows.push_back(json{{"key", std::move(key)}, {"cells", std::move(cells)}});
  }
  return json{{"shard", shard}, {"rows", std::move(rows)}}.dump();
}

inline PartialTable partial_from_json(const std::string& text, std::uint32_t* shard = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("partial result is not JSON: ") + e.what());
  }
  try {
    if (shard) *shard = j.at("shard").get<std::uint32_t>();
    PartialTable t;
    for (const auto& r : j.at("rows")) {
      PartialRow row;
      for (const auto& v : r.at("key")) row.key.push_back(value_from_wire(v));
      for (const auto& c : r.at("cells")) {
        PartialCell cell;
        if (c.is_object() && c.contains("kmv")) {
          const auto& k = c.at("kmv");
          cell.sketch = KmvSketch::from_hashes(k.at("m").get<std::size_t>(), k.at("h").get<std::vector<std::uint64_t>>(),
                                               k.at("bc").get<bool>());
        } else {
          cell.value = value_from_wire(c);
        }
        row.cells.push_back(std::move(cell));
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("malformed partial result: ") + e.what());
  }
}

}  // namespace pdrill
