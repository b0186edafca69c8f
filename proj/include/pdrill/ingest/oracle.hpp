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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/analyze.hpp"

namespace pdrill::oracle {

// Brute-force reference evaluation over raw rows. It takes the analyzer's
// binding (which columns, keys and aggregates) but evaluates everything on
// its own: no dictionaries, chunks, sketches or shared evaluator.

namespace detail {

inline int cmp(const Value& a, const Value& b) {
  const bool an = a.kind() == ValueKind::kI64 || a.kind() == ValueKind::kF64;
  const bool bn = b.kind() == ValueKind::kI64 || b.kind() == ValueKind::kF64;
  if (an && bn && a.kind() != b.kind()) {
    long double x = a.kind() == ValueKind::kI64 ? (long double)a.as_i64() : (long double)a.as_f64();
    long double y = b.kind() == ValueKind::kI64 ? (long double)b.as_i64() : (long double)b.as_f64();
    if (x < y) return -1;
    if (x > y) return 1;
    return 0;
  }
  return compare(a, b);
}

struct Row {
  const std::vector<Value>* cells = nullptr;
  const std::vector<Value>* keys = nullptr;
  const std::vector<Value>* aggs = nullptr;
};

Value value_of(const Expr& e, const Row& row);

inline bool truth(const Expr& e, const Row& row) {
  switch (e.op) {
    case ExprOp::kAnd: {
      bool all = true;
      for (const auto& a : e.args) all = all && truth(*a, row);
      return all;
    }
    case ExprOp::kOr: {
      bool any = false;
      for (const auto& a : e.args) any = any || truth(*a, row);
      return any;
    }
    case ExprOp::kNot: return !truth(*e.args[0], row);
    case ExprOp::kIsNull: {
      const bool null = value_of(*e.args[0], row).is_null();
      return e.negated ? !null : null;
    }
    case ExprOp::kIn: {
      const Value x = value_of(*e.args[0], row);
      if (x.is_null()) return false;
      bool hit = false;
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        const Value& v = e.args[i]->literal;
        if (!v.is_null() && cmp(x, v) == 0) hit = true;
      }
      return e.negated ? !hit : hit;
    }
    case ExprOp::kCompare: {
      const Value a = value_of(*e.args[0], row);
      const Value b = value_of(*e.args[1], row);
      if (a.is_null() || b.is_null()) return false;
      const int c = cmp(a, b);
      switch (e.cmp) {
        case CompareOp::kEq: return c == 0;
        case CompareOp::kNe: return c != 0;
        case CompareOp::kLt: return c < 0;
        case CompareOp::kLe: return c <= 0;
        case CompareOp::kGt: return c > 0;
        case CompareOp::kGe: return c >= 0;
      }
      return false;
    }
    default: throw Error(ErrorCode::kInternal, "oracle: not a condition");
  }
}

inline double num(const Value& v) { return v.kind() == ValueKind::kI64 ? double(v.as_i64()) : v.as_f64(); }

inline Value value_of(const Expr& e, const Row& row) {
  switch (e.op) {
    case ExprOp::kColumn: return (*row.cells)[e.index];
    case ExprOp::kLiteral: return e.literal;
    case ExprOp::kGroupRef: return (*row.keys)[e.index];
    case ExprOp::kAggRef: return (*row.aggs)[e.index];
    case ExprOp::kNeg: {
      const Value a = value_of(*e.args[0], row);
      if (a.is_null()) return a;
      if (a.kind() == ValueKind::kI64) return Value::i64(std::int64_t(~std::uint64_t(a.as_i64()) + 1));
      return Value::f64(-a.as_f64());
    }
    case ExprOp::kArith: {
      const Value a = value_of(*e.args[0], row);
      const Value b = value_of(*e.args[1], row);
      if (a.is_null() || b.is_null()) return Value::null();
      const bool ints = a.kind() == ValueKind::kI64 && b.kind() == ValueKind::kI64;
      switch (e.arith) {
        case ArithOp::kDiv:
          if (num(b) == 0) return Value::null();
          return Value::f64(num(a) / num(b));
        case ArithOp::kMod:
          if (b.as_i64() == 0) return Value::null();
          if (b.as_i64() == -1) return Value::i64(0);
          return Value::i64(a.as_i64() % b.as_i64());
        case ArithOp::kAdd:
          if (ints) return Value::i64(std::int64_t(std::uint64_t(a.as_i64()) + std::uint64_t(b.as_i64())));
          return Value::f64(num(a) + num(b));
        case ArithOp::kSub:
          if (ints) return Value::i64(std::int64_t(std::uint64_t(a.as_i64()) - std::uint64_t(b.as_i64())));
          return Value::f64(num(a) - num(b));
        case ArithOp::kMul:
          if (ints) return Value::i64(std::int64_t(std::uint64_t(a.as_i64()) * std::uint64_t(b.as_i64())));
          return Value::f64(num(a) * num(b));
      }
      return Value::null();
    }
    case ExprOp::kCall: {
      std::vector<Value> args;
      for (const auto& a : e.args) {
        args.push_back(value_of(*a, row));
        if (args.back().is_null()) return Value::null();
      }
      if (e.name == "date") {
        const Value& a = args[0];
        if (a.kind() == ValueKind::kDate) return a;
        const std::int64_t secs = a.kind() == ValueKind::kTimestamp ? a.as_timestamp() : a.as_i64();
        std::int64_t days = secs / 86400;
        if (secs % 86400 < 0) --days;
        return Value::date(std::int32_t(days));
      }
      if (e.name == "concat") {
        std::string s;
        for (const auto& a : args) s += a.to_string();
        return Value::str(s);
      }
      if (e.name == "lower" || e.name == "upper") {
        std::string s = args[0].as_str();
        for (auto& c : s) c = char(e.name == "lower" ? std::tolower((unsigned char)c) : std::toupper((unsigned char)c));
        return Value::str(s);
      }
      if (e.name == "abs") {
        const Value& a = args[0];
        if (a.kind() == ValueKind::kF64) return Value::f64(std::fabs(a.as_f64()));
        if (a.as_i64() < 0) return Value::i64(std::int64_t(~std::uint64_t(a.as_i64()) + 1));
        return a;
      }
      throw Error(ErrorCode::kUnknownFunction, "oracle: unknown function " + e.name);
    }
    default: throw Error(ErrorCode::kInternal, "oracle: not a value");
  }
}

struct Acc {
  std::uint64_t rows = 0;
  std::uint64_t n = 0;
  std::uint64_t isum = 0;
  double fsum = 0;
  bool has = false;
  Value best;
  std::set<Value> distinct;
};

struct TupleLess {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      const int c = compare(a[i], b[i]);
      if (c) return c < 0;
    }
    return a.size() < b.size();
  }
};

}  // namespace detail

/// Row-scan evaluation of a bound query. COUNT(DISTINCT) is exact.
inline std::vector<std::vector<Value>> run(const BoundQuery& q, const Table& table) {
  using namespace detail;
  std::map<std::vector<Value>, std::vector<Acc>, TupleLess> groups;
  if (!q.grouped()) groups[{}].resize(q.aggregates.size() + 1);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const std::vector<Value> cells = table.row(r);
    Row row{&cells, nullptr, nullptr};
    if (q.where && !truth(*q.where, row)) continue;
    std::vector<Value> key;
    for (const auto& k : q.group_keys) key.push_back(value_of(*k, row));
    auto& accs = groups[key];
    accs.resize(q.aggregates.size() + 1);
    accs[0].rows++;
    for (std::size_t a = 0; a < q.aggregates.size(); ++a) {
      const AggSpec& spec = q.aggregates[a];
      if (spec.func == AggFunc::kCountStar) continue;
      const Value v = value_of(*spec.arg, row);
      if (v.is_null()) continue;
      Acc& acc = accs[a + 1];
      acc.n++;
      switch (spec.func) {
        case AggFunc::kSum:
        case AggFunc::kAvg:
          if (v.kind() == ValueKind::kI64) {
            acc.isum += std::uint64_t(v.as_i64());
          } else {
            acc.fsum += v.as_f64();
          }
          break;
        case AggFunc::kMin:
          if (!acc.has || cmp(v, acc.best) < 0) acc.best = v;
          acc.has = true;
          break;
        case AggFunc::kMax:
          if (!acc.has || cmp(v, acc.best) > 0) acc.best = v;
          acc.has = true;
          break;
        case AggFunc::kCountDistinct: acc.distinct.insert(v); break;
        default: break;
      }
    }
  }

  struct Out {
    std::vector<Value> key;
    std::vector<Value> aggs;
  };
  std::vector<Out> outs;
  for (auto& [key, accs] : groups) {
    Out o;
    o.key = key;
    for (std::size_t a = 0; a < q.aggregates.size(); ++a) {
      const AggSpec& spec = q.aggregates[a];
      const Acc& acc = accs[a + 1];
      switch (spec.func) {
        case AggFunc::kCountStar: o.aggs.push_back(Value::i64(std::int64_t(accs[0].rows))); break;
        case AggFunc::kCount: o.aggs.push_back(Value::i64(std::int64_t(acc.n))); break;
        case AggFunc::kCountDistinct: o.aggs.push_back(Value::i64(std::int64_t(acc.distinct.size()))); break;
        case AggFunc::kSum:
          if (acc.n == 0) {
            o.aggs.push_back(Value::null());
          } else if (spec.arg_kind == ValueKind::kF64) {
            o.aggs.push_back(Value::f64(acc.fsum));
          } else {
            o.aggs.push_back(Value::i64(std::int64_t(acc.isum)));
          }
          break;
        case AggFunc::kAvg:
          if (acc.n == 0) {
            o.aggs.push_back(Value::null());
          } else if (spec.arg_kind == ValueKind::kF64) {
            o.aggs.push_back(Value::f64(acc.fsum / double(acc.n)));
          } else {
            o.aggs.push_back(Value::f64(double(std::int64_t(acc.isum)) / double(acc.n)));
          }
          break;
        case AggFunc::kMin:
        case AggFunc::kMax: o.aggs.push_back(acc.has ? acc.best : Value::null()); break;
      }
    }
    Row row{nullptr, &o.key, &o.aggs};
    if (q.having && !truth(*q.having, row)) continue;
    outs.push_back(std::move(o));
  }

  // Sort by the ORDER BY keys, then by group key (outs is already in key
  // order, so a stable sort keeps that as the tie-break).
  std::vector<std::vector<Value>> sort_keys(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    Row row{nullptr, &outs[i].key, &outs[i].aggs};
    for (const auto& o : q.order) sort_keys[i].push_back(value_of(*o.expr, row));
  }
  std::vector<std::size_t> idx(outs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t k = 0; k < q.order.size(); ++k) {
      int c = cmp(sort_keys[a][k], sort_keys[b][k]);
      if (q.order[k].desc) c = -c;
      if (c) return c < 0;
    }
    return false;
  });
  std::vector<std::vector<Value>> result;
  for (std::size_t i : idx) {
    if (q.limit && result.size() >= std::size_t(*q.limit)) break;
    Row row{nullptr, &outs[i].key, &outs[i].aggs};
    std::vector<Value> line;
    for (const auto& o : q.outputs) line.push_back(value_of(*o.expr, row));
    result.push_back(std::move(line));
  }
  return result;
}

/// Row-by-row equality; doubles within `rel` relative difference.
inline bool rows_match(const std::vector<std::vector<Value>>& a, const std::vector<std::vector<Value>>& b,
                       double rel, std::string* why = nullptr) {
  if (a.size() != b.size()) {
    if (why) *why = "row count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    return false;
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != b[r].size()) {
      if (why) *why = "column count differs at row " + std::to_string(r);
      return false;
    }
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      const Value& x = a[r][c];
      const Value& y = b[r][c];
      bool same = x == y;
      if (!same && x.kind() == ValueKind::kF64 && y.kind() == ValueKind::kF64) {
        const double d = std::fabs(x.as_f64() - y.as_f64());
        same = d <= rel * std::max(std::fabs(x.as_f64()), std::fabs(y.as_f64()));
      }
      if (!same) {
        if (why) *why = "row " + std::to_string(r) + " col " + std::to_string(c) + ": " + x.to_string() + " vs " + y.to_string();
        return false;
      }
    }
  }
  return true;
}

}  // namespace pdrill::oracle
