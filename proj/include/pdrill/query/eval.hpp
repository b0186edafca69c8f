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

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/ast.hpp"

namespace pdrill {

/// Value order used by comparisons and ORDER BY: integers and doubles
/// compare numerically, everything else by the Value order (Null first).
inline int compare_values(const Value& a, const Value& b) {
  if (a.kind() != b.kind() && is_numeric(a.kind()) && is_numeric(b.kind())) {
    const long double x = a.kind() == ValueKind::kI64 ? static_cast<long double>(a.as_i64()) : a.as_f64();
    const long double y = b.kind() == ValueKind::kI64 ? static_cast<long double>(b.as_i64()) : b.as_f64();
    return x < y ? -1 : (y < x ? 1 : 0);
  }
  return compare(a, b);
}

inline bool compare_holds(CompareOp op, int c) {
  switch (op) {
    case CompareOp::kEq: return c == 0;
    case CompareOp::kNe: return c != 0;
    case CompareOp::kLt: return c < 0;
    case CompareOp::kLe: return c <= 0;
    case CompareOp::kGt: return c > 0;
    case CompareOp::kGe: return c >= 0;
  }
  return false;
}

/// Two-valued comparison: false whenever either side is Null.
inline bool compare_non_null(CompareOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return false;
  return compare_holds(op, compare_values(a, b));
}

/// `x [NOT] IN (list)`: false for a Null x; Null list entries never match.
inline bool in_list(const Value& x, const std::vector<ExprPtr>& args, bool negated) {
  if (x.is_null()) return false;
  bool found = false;
  for (std::size_t i = 1; i < args.size() && !found; ++i) {
    const Value& v = args[i]->literal;
    found = !v.is_null() && compare_values(x, v) == 0;
  }
  return found != negated;
}

inline double as_double(const Value& v) {
  return v.kind() == ValueKind::kI64 ? static_cast<double>(v.as_i64()) : v.as_f64();
}

inline Value apply_arith(ArithOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  const bool ints = a.kind() == ValueKind::kI64 && b.kind() == ValueKind::kI64;
  if (op == ArithOp::kDiv) {
    const double d = as_double(b);
    if (d == 0.0) return Value::null();
    return Value::f64(as_double(a) / d);
  }
  if (op == ArithOp::kMod) {
    if (!ints) throw Error(ErrorCode::kTypeMismatch, "% requires integers");
    const std::int64_t d = b.as_i64();
    if (d == 0) return Value::null();
    if (d == -1) return Value::i64(0);
    return Value::i64(a.as_i64() % d);
  }
  if (ints) {
    const auto x = static_cast<std::uint64_t>(a.as_i64());
    const auto y = static_cast<std::uint64_t>(b.as_i64());
    std::uint64_t r = 0;
    switch (op) {
      case ArithOp::kAdd: r = x + y; break;
      case ArithOp::kSub: r = x - y; break;
      default: r = x * y; break;
    }
    return Value::i64(static_cast<std::int64_t>(r));
  }
  const double x = as_double(a);
  const double y = as_double(b);
  switch (op) {
    case ArithOp::kAdd: return Value::f64(x + y);
    case ArithOp::kSub: return Value::f64(x - y);
    default: return Value::f64(x * y);
  }
}

inline Value apply_negate(const Value& a) {
  if (a.is_null()) return a;
  if (a.kind() == ValueKind::kI64) return Value::i64(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(a.as_i64())));
  return Value::f64(-a.as_f64());
}

/// Scalar functions. Any Null argument yields Null.
inline Value apply_function(const std::string& fn, const std::vector<Value>& args) {
  for (const auto& a : args) {
    if (a.is_null()) return Value::null();
  }
  if (fn == "date") {
    const Value& a = args.at(0);
    switch (a.kind()) {
      case ValueKind::kTimestamp: return Value::date(days_from_epoch_seconds(a.as_timestamp()));
      case ValueKind::kI64: return Value::date(days_from_epoch_seconds(a.as_i64()));
      case ValueKind::kDate: return a;
      default: break;
    }
  } else if (fn == "concat") {
    std::string s;
    for (const auto& a : args) s += a.to_string();
    return Value::str(std::move(s));
  } else if (fn == "lower" || fn == "upper") {
    std::string s = args.at(0).as_str();
    for (auto& c : s) {
      c = static_cast<char>(fn == "lower" ? std::tolower(static_cast<unsigned char>(c))
                                          : std::toupper(static_cast<unsigned char>(c)));
    }
    return Value::str(std::move(s));
  } else if (fn == "abs") {
    const Value& a = args.at(0);
    if (a.kind() == ValueKind::kI64) return a.as_i64() < 0 ? apply_negate(a) : a;
    if (a.kind() == ValueKind::kF64) return Value::f64(std::fabs(a.as_f64()));
  }
  throw Error(ErrorCode::kUnknownFunction, "cannot evaluate " + fn + "()");
}

/// Evaluates a bound value expression. `Ctx` supplies
///   Value column(std::size_t schema_index), Value group(std::size_t),
///   Value agg(std::size_t).
template <typename Ctx>
Value eval_value(const Expr& e, const Ctx& ctx);

template <typename Ctx>
bool eval_predicate(const Expr& e, const Ctx& ctx) {
  switch (e.op) {
    case ExprOp::kAnd:
      for (const auto& a : e.args) {
        if (!eval_predicate(*a, ctx)) return false;
      }
      return true;
    case ExprOp::kOr:
      for (const auto& a : e.args) {
        if (eval_predicate(*a, ctx)) return true;
      }
      return false;
    case ExprOp::kNot: return !eval_predicate(*e.args[0], ctx);
    case ExprOp::kCompare: return compare_non_null(e.cmp, eval_value(*e.args[0], ctx), eval_value(*e.args[1], ctx));
    case ExprOp::kIn: return in_list(eval_value(*e.args[0], ctx), e.args, e.negated);
    case ExprOp::kIsNull: return eval_value(*e.args[0], ctx).is_null() != e.negated;
    default: throw Error(ErrorCode::kInternal, "not a condition: " + to_sql(std::make_shared<Expr>(e)));
  }
}

template <typename Ctx>
Value eval_value(const Expr& e, const Ctx& ctx) {
  switch (e.op) {
    case ExprOp::kColumn: return ctx.column(e.index);
    case ExprOp::kLiteral: return e.literal;
    case ExprOp::kGroupRef: return ctx.group(e.index);
    case ExprOp::kAggRef: return ctx.agg(e.index);
    case ExprOp::kArith: return apply_arith(e.arith, eval_value(*e.args[0], ctx), eval_value(*e.args[1], ctx));
    case ExprOp::kNeg: return apply_negate(eval_value(*e.args[0], ctx));
    case ExprOp::kCall: {
      std::vector<Value> args;
      args.reserve(e.args.size());
      for (const auto& a : e.args) args.push_back(eval_value(*a, ctx));
      return apply_function(e.name, args);
    }
    default: throw Error(ErrorCode::kInternal, "not a value expression: " + to_sql(std::make_shared<Expr>(e)));
  }
}

}  // namespace pdrill
