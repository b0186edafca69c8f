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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/core/value.hpp"

namespace pdrill {

enum class ExprOp {
  kColumn,     // name
  kLiteral,    // literal
  kCall,       // name(args)
  kAggregate,  // name(args), name upper-case; args empty for COUNT(*)
  kArith,      // args[0] arith args[1]
  kNeg,        // -args[0]
  kCompare,    // args[0] cmp args[1]
  kAnd,        // args...
  kOr,         // args...
  kNot,        // NOT args[0]
  kIn,         // args[0] [NOT] IN (args[1..]); negated for NOT IN
  kIsNull,     // args[0] IS [NOT] NULL; negated for IS NOT NULL
  // Post-aggregation references produced by the analyzer.
  kGroupRef,  // index
  kAggRef,    // index
};

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };
enum class ArithOp { kAdd, kSub, kMul, kDiv, kMod };

inline const char* compare_op_text(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

inline const char* arith_op_text(ArithOp op) {
  switch (op) {
    case ArithOp::kAdd: return "+";
    case ArithOp::kSub: return "-";
    case ArithOp::kMul: return "*";
    case ArithOp::kDiv: return "/";
    case ArithOp::kMod: return "%";
  }
  return "?";
}

/// Mirror image of a comparison: a op b  <=>  b flip(op) a.
inline CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return CompareOp::kGt;
    case CompareOp::kLe: return CompareOp::kGe;
    case CompareOp::kGt: return CompareOp::kLt;
    case CompareOp::kGe: return CompareOp::kLe;
    default: return op;
  }
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprOp op = ExprOp::kLiteral;
  std::string name;
  Value literal;
  std::vector<ExprPtr> args;
  CompareOp cmp = CompareOp::kEq;
  ArithOp arith = ArithOp::kAdd;
  bool negated = false;
  bool distinct = false;
  std::size_t index = 0;
  std::size_t pos = 0;  // byte offset in the query text
  // Set by the analyzer: result kind of a value expression, or predicate
  // for boolean-valued nodes. Columns also get `index` = schema position.
  ValueKind kind = ValueKind::kNull;
  bool predicate = false;

  static ExprPtr column(std::string n, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kColumn;
    e->name = std::move(n);
    e->pos = pos;
    return e;
  }
  static ExprPtr lit(Value v, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kLiteral;
    e->literal = std::move(v);
    e->pos = pos;
    return e;
  }
  static ExprPtr make(ExprOp op, std::vector<ExprPtr> args, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args = std::move(args);
    e->pos = pos;
    return e;
  }
  static ExprPtr compare(CompareOp c, ExprPtr a, ExprPtr b, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kCompare;
    e->cmp = c;
    e->args = {std::move(a), std::move(b)};
    e->pos = pos;
    return e;
  }
  static ExprPtr arithmetic(ArithOp o, ExprPtr a, ExprPtr b, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kArith;
    e->arith = o;
    e->args = {std::move(a), std::move(b)};
    e->pos = pos;
    return e;
  }
  static ExprPtr call(std::string fn, std::vector<ExprPtr> args, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kCall;
    e->name = std::move(fn);
    e->args = std::move(args);
    e->pos = pos;
    return e;
  }
  static ExprPtr aggregate(std::string fn, std::vector<ExprPtr> args, bool distinct, std::size_t pos = 0) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::kAggregate;
    e->name = std::move(fn);
    e->args = std::move(args);
    e->distinct = distinct;
    e->pos = pos;
    return e;
  }
  static ExprPtr ref(ExprOp op, std::size_t i) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->index = i;
    return e;
  }
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;  // empty when not given
};

struct OrderItem {
  ExprPtr expr;
  bool desc = false;
};

struct QueryAst {
  std::vector<SelectItem> select;
  std::string from;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  ExprPtr having;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
};

inline bool is_aggregate_name(std::string_view upper) {
  return upper == "COUNT" || upper == "SUM" || upper == "MIN" || upper == "MAX" || upper == "AVG";
}

/// Deterministic scalar functions known to the analyzer and evaluator.
inline bool is_scalar_function(std::string_view lower) {
  return lower == "date" || lower == "concat" || lower == "lower" || lower == "upper" || lower == "abs";
}

inline bool contains_aggregate(const ExprPtr& e) {
  if (!e) return false;
  if (e->op == ExprOp::kAggregate || e->op == ExprOp::kAggRef) return true;
  return std::any_of(e->args.begin(), e->args.end(), [](const ExprPtr& a) { return contains_aggregate(a); });
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string quote_string(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

inline std::string quote_ident(const std::string& s) {
  bool plain = !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_');
  for (char c : s) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  if (plain) return s;
  std::string out = "`";
  for (char c : s) {
    if (c == '`') out += '`';
    out += c;
  }
  return out + "`";
}

inline std::string literal_sql(const Value& v) {
  switch (v.kind()) {
    case ValueKind::kNull: return "NULL";
    case ValueKind::kStr: return quote_string(v.as_str());
    case ValueKind::kF64: {
      std::string s = v.to_string();
      if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos) s += ".0";
      return s;
    }
    case ValueKind::kDate:
    case ValueKind::kTimestamp: return quote_string(v.to_string());
    case ValueKind::kI64: return v.to_string();
  }
  return "NULL";
}

namespace detail {

inline bool commutative(const Expr& e) {
  if (e.op == ExprOp::kAnd || e.op == ExprOp::kOr) return true;
  if (e.op == ExprOp::kArith) return e.arith == ArithOp::kAdd || e.arith == ArithOp::kMul;
  if (e.op == ExprOp::kCompare) return e.cmp == CompareOp::kEq || e.cmp == CompareOp::kNe;
  return false;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

using RenderHook = std::function<std::optional<std::string>(const Expr&)>;

inline std::string render(const Expr& e, bool canonical, const RenderHook* hook = nullptr) {
  if (hook) {
    if (auto s = (*hook)(e)) return *s;
  }
  auto sub = [&](const ExprPtr& a) { return render(*a, canonical, hook); };
  std::vector<std::string> parts;
  for (const auto& a : e.args) parts.push_back(sub(a));
  if (canonical && commutative(e)) std::sort(parts.begin(), parts.end());
  auto join = [&](std::size_t from, const std::string& sep) {
    std::string s;
    for (std::size_t i = from; i < parts.size(); ++i) s += (i > from ? sep : "") + parts[i];
    return s;
  };
  switch (e.op) {
    case ExprOp::kColumn: return quote_ident(e.name);
    case ExprOp::kLiteral: return literal_sql(e.literal);
    case ExprOp::kCall: return lower(e.name) + "(" + join(0, ", ") + ")";
    case ExprOp::kAggregate:
      if (parts.empty()) return upper(e.name) + "(*)";
      return upper(e.name) + "(" + (e.distinct ? "DISTINCT " : "") + join(0, ", ") + ")";
    case ExprOp::kArith: return "(" + parts[0] + " " + arith_op_text(e.arith) + " " + parts[1] + ")";
    case ExprOp::kNeg: return "(-" + parts[0] + ")";
    case ExprOp::kCompare: return parts[0] + " " + compare_op_text(e.cmp) + " " + parts[1];
    case ExprOp::kAnd: return "(" + join(0, " AND ") + ")";
    case ExprOp::kOr: return "(" + join(0, " OR ") + ")";
    case ExprOp::kNot: return "NOT (" + parts[0] + ")";
    case ExprOp::kIn: {
      std::vector<std::string> items(parts.begin() + 1, parts.end());
      if (canonical) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
      }
      std::string list;
      for (std::size_t i = 0; i < items.size(); ++i) list += (i ? ", " : "") + items[i];
      return parts[0] + (e.negated ? " NOT IN (" : " IN (") + list + ")";
    }
    case ExprOp::kIsNull: return parts[0] + (e.negated ? " IS NOT NULL" : " IS NULL");
    case ExprOp::kGroupRef: return "$g" + std::to_string(e.index);
    case ExprOp::kAggRef: return "$a" + std::to_string(e.index);
  }
  return "?";
}

}  // namespace detail

/// SQL text of an expression.
inline std::string to_sql(const ExprPtr& e) { return e ? detail::render(*e, false) : std::string(); }

/// SQL text where `hook` may supply the text of any node.
inline std::string to_sql(const Expr& e, const detail::RenderHook& hook) { return detail::render(e, false, &hook); }

/// Normalized expression text used to identify virtual fields and result
/// cache fragments: lower-case function names, single spacing, sorted
/// operands of commutative operators.
inline std::string canonical_key(const ExprPtr& e) { return e ? detail::render(*e, true) : std::string(); }

inline std::string to_sql(const QueryAst& q) {
  std::string s = "SELECT ";
  for (std::size_t i = 0; i < q.select.size(); ++i) {
    if (i) s += ", ";
    s += to_sql(q.select[i].expr);
    if (!q.select[i].alias.empty()) s += " AS " + quote_ident(q.select[i].alias);
  }
  s += " FROM " + quote_ident(q.from);
  if (q.where) s += " WHERE " + to_sql(q.where);
  if (!q.group_by.empty()) {
    s += " GROUP BY ";
    for (std::size_t i = 0; i < q.group_by.size(); ++i) s += (i ? ", " : "") + to_sql(q.group_by[i]);
  }
  if (q.having) s += " HAVING " + to_sql(q.having);
  if (!q.order_by.empty()) {
    s += " ORDER BY ";
    for (std::size_t i = 0; i < q.order_by.size(); ++i) {
      s += (i ? ", " : "") + to_sql(q.order_by[i].expr) + (q.order_by[i].desc ? " DESC" : " ASC");
    }
  }
  if (q.limit) s += " LIMIT " + std::to_string(*q.limit);
  return s;
}

}  // namespace pdrill
