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
#include <optional>
#include <string>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/schema.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/ast.hpp"

namespace pdrill {

enum class AggFunc { kCountStar, kCount, kCountDistinct, kSum, kMin, kMax, kAvg };

inline const char* agg_func_name(AggFunc f) {
  switch (f) {
    case AggFunc::kCountStar:
    case AggFunc::kCount:
    case AggFunc::kCountDistinct: return "COUNT";
    case AggFunc::kSum: return "SUM";
    case AggFunc::kMin: return "MIN";
    case AggFunc::kMax: return "MAX";
    case AggFunc::kAvg: return "AVG";
  }
  return "?";
}

struct AggSpec {
  AggFunc func = AggFunc::kCountStar;
  ExprPtr arg;  // bound scalar expression; null for COUNT(*)
  ValueKind arg_kind = ValueKind::kNull;
  ValueKind result_kind = ValueKind::kI64;
  std::string key;  // canonical text, e.g. "SUM(latency)"
};

struct OutputColumn {
  std::string name;
  ExprPtr expr;  // over kGroupRef / kAggRef / literals
  ValueKind kind = ValueKind::kNull;
};

struct OrderKey {
  ExprPtr expr;  // over kGroupRef / kAggRef / literals
  bool desc = false;
};

/// A query resolved against a schema. Scalar expressions (where, group
/// keys, aggregate arguments) reference columns by schema index; outputs,
/// having and order keys are evaluated once per group.
struct BoundQuery {
  std::string table;
  Schema schema;
  ExprPtr where;
  std::vector<ExprPtr> group_keys;
  std::vector<AggSpec> aggregates;
  std::vector<OutputColumn> outputs;
  ExprPtr having;
  std::vector<OrderKey> order;
  std::optional<std::int64_t> limit;

  bool grouped() const { return !group_keys.empty(); }
};

namespace detail {

inline bool has_column(const ExprPtr& e) {
  if (e->op == ExprOp::kColumn) return true;
  for (const auto& a : e->args) {
    if (has_column(a)) return true;
  }
  return false;
}

inline bool orderable_pair(ValueKind a, ValueKind b) {
  if (a == ValueKind::kNull || b == ValueKind::kNull) return true;
  if (is_numeric(a) && is_numeric(b)) return true;
  return a == b;
}

class Binder {
 public:
  Binder(const QueryAst& ast, const Schema& schema) : ast_(ast), schema_(schema) {}

  BoundQuery run() {
    BoundQuery q;
    q.table = ast_.from;
    q.schema = schema_;
    if (ast_.where) {
      q.where = bind_scalar(ast_.where, "WHERE");
      require_predicate(q.where, "WHERE");
    }
    for (const auto& g : ast_.group_by) {
      ExprPtr bound = bind_group_key(g);
      if (bound->predicate) fail(ErrorCode::kTypeMismatch, "GROUP BY expression must be a value", g->pos);
      const std::string key = canonical_key(bound);
      bool dup = false;
      for (const auto& k : group_keys_) dup = dup || canonical_key(k) == key;
      if (!dup) group_keys_.push_back(bound);
    }
    q.group_keys = group_keys_;
    for (const auto& item : ast_.select) {
      OutputColumn out;
      out.name = item.alias.empty() ? to_sql(item.expr) : item.alias;
      out.expr = bind_post(item.expr, "SELECT");
      if (out.expr->predicate) fail(ErrorCode::kTypeMismatch, "select item must be a value", item.expr->pos);
      out.kind = out.expr->kind;
      q.outputs.push_back(std::move(out));
    }
    outputs_ = &q.outputs;
    if (ast_.having) {
      q.having = bind_post(substitute_aliases(ast_.having), "HAVING");
      require_predicate(q.having, "HAVING");
    }
    for (const auto& o : ast_.order_by) {
      OrderKey k;
      k.desc = o.desc;
      k.expr = bind_order(o.expr);
      if (k.expr->predicate) fail(ErrorCode::kTypeMismatch, "ORDER BY expression must be a value", o.expr->pos);
      q.order.push_back(std::move(k));
    }
    if (ast_.limit && *ast_.limit < 0) fail(ErrorCode::kInvalidArgument, "LIMIT must be non-negative", std::nullopt);
    q.limit = ast_.limit;
    q.aggregates = aggregates_;
    return q;
  }

 private:
  [[noreturn]] static void fail(ErrorCode code, const std::string& msg, std::optional<std::size_t> pos) {
    throw Error(code, pos ? msg + " at position " + std::to_string(*pos) : msg, pos);
  }

  static void require_predicate(const ExprPtr& e, const char* clause) {
    if (!e->predicate) fail(ErrorCode::kTypeMismatch, std::string(clause) + " requires a condition", e->pos);
  }

  const OutputColumn* find_alias(const std::string& name) const {
    if (!outputs_) return nullptr;
    const OutputColumn* hit = nullptr;
    for (std::size_t i = 0; i < ast_.select.size(); ++i) {
      if (ast_.select[i].alias == name) {
        if (hit) fail(ErrorCode::kInvalidArgument, "ambiguous alias '" + name + "'", std::nullopt);
        hit = &(*outputs_)[i];
      }
    }
    return hit;
  }

  /// HAVING may name select aliases; they stand for the aliased expression.
  ExprPtr substitute_aliases(const ExprPtr& e) const {
    if (e->op == ExprOp::kColumn && !schema_.index_of(e->name) && find_alias(e->name)) {
      for (const auto& item : ast_.select) {
        if (item.alias == e->name) return item.expr;
      }
    }
    if (e->args.empty()) return e;
    auto n = std::make_shared<Expr>(*e);
    for (auto& a : n->args) a = substitute_aliases(a);
    return n;
  }

  ExprPtr bind_group_key(const ExprPtr& g) {
    if (g->op == ExprOp::kColumn && !schema_.index_of(g->name)) {
      for (const auto& item : ast_.select) {
        if (item.alias == g->name) {
          if (contains_aggregate(item.expr)) {
            fail(ErrorCode::kInvalidArgument, "GROUP BY alias '" + g->name + "' refers to an aggregate", g->pos);
          }
          return bind_scalar(item.expr, "GROUP BY");
        }
      }
    }
    if (g->op == ExprOp::kLiteral) fail(ErrorCode::kUnsupported, "GROUP BY a constant is not supported", g->pos);
    return bind_scalar(g, "GROUP BY");
  }

  ExprPtr bind_order(const ExprPtr& e) {
    if (e->op == ExprOp::kColumn) {
      if (const OutputColumn* out = find_alias(e->name)) return out->expr;
    }
    try {
      return bind_post(e, "ORDER BY");
    } catch (const Error& err) {
      if (e->op == ExprOp::kColumn && !schema_.index_of(e->name)) {
        fail(ErrorCode::kInvalidArgument, "unknown ORDER BY alias or column '" + e->name + "'", e->pos);
      }
      throw;
    }
  }

  /// Binds an expression evaluated per row.
  ExprPtr bind_scalar(const ExprPtr& e, const char* clause) {
    switch (e->op) {
      case ExprOp::kColumn: {
        auto idx = schema_.index_of(e->name);
        if (!idx) fail(ErrorCode::kInvalidArgument, "unknown column '" + e->name + "'", e->pos);
        auto n = std::make_shared<Expr>(*e);
        n->index = *idx;
        n->kind = schema_.fields[*idx].kind;
        return n;
      }
      case ExprOp::kLiteral: {
        auto n = std::make_shared<Expr>(*e);
        n->kind = e->literal.kind();
        return n;
      }
      case ExprOp::kAggregate:
        fail(ErrorCode::kInvalidArgument, std::string("aggregate ") + e->name + " is not allowed in " + clause, e->pos);
      case ExprOp::kGroupRef:
      case ExprOp::kAggRef: fail(ErrorCode::kInternal, "unexpected reference node", e->pos);
      default: break;
    }
    std::vector<ExprPtr> args;
    for (const auto& a : e->args) args.push_back(bind_scalar(a, clause));
    return type_node(*e, std::move(args));
  }

  /// Binds an expression evaluated once per group.
  ExprPtr bind_post(const ExprPtr& e, const char* clause) {
    if (e->op == ExprOp::kAggregate) return bind_aggregate(e);
    if (!contains_aggregate(e)) {
      if (e->op == ExprOp::kLiteral) return bind_scalar(e, clause);
      ExprPtr scalar = bind_scalar(e, clause);
      const std::string key = canonical_key(scalar);
      for (std::size_t i = 0; i < group_keys_.size(); ++i) {
        if (canonical_key(group_keys_[i]) == key) {
          auto r = std::make_shared<Expr>(*Expr::ref(ExprOp::kGroupRef, i));
          r->kind = group_keys_[i]->kind;
          r->pos = e->pos;
          return r;
        }
      }
      if (!has_column(scalar)) return scalar;
      if (e->op == ExprOp::kColumn) {
        fail(ErrorCode::kInvalidArgument,
             "column '" + e->name + "' must appear in GROUP BY or inside an aggregate (" + clause + ")", e->pos);
      }
    }
    std::vector<ExprPtr> args;
    for (const auto& a : e->args) args.push_back(bind_post(a, clause));
    return type_node(*e, std::move(args));
  }

  ExprPtr bind_aggregate(const ExprPtr& e) {
    AggSpec spec;
    const std::string fn = detail::upper(e->name);
    if (e->args.empty()) {
      if (fn != "COUNT") fail(ErrorCode::kSyntax, fn + " requires an argument", e->pos);
      spec.func = AggFunc::kCountStar;
      spec.result_kind = ValueKind::kI64;
    } else {
      if (e->args.size() != 1) fail(ErrorCode::kSyntax, fn + " takes one argument", e->pos);
      for (const auto& a : e->args) {
        if (contains_aggregate(a)) fail(ErrorCode::kInvalidArgument, "nested aggregates are not allowed", a->pos);
      }
      spec.arg = bind_scalar(e->args[0], "an aggregate argument");
      if (spec.arg->predicate) fail(ErrorCode::kTypeMismatch, fn + " argument must be a value", e->pos);
      spec.arg_kind = spec.arg->kind;
      const bool numeric = is_numeric(spec.arg_kind) || spec.arg_kind == ValueKind::kNull;
      if (fn == "COUNT") {
        spec.func = e->distinct ? AggFunc::kCountDistinct : AggFunc::kCount;
        spec.result_kind = ValueKind::kI64;
      } else if (fn == "SUM") {
        if (!numeric) fail(ErrorCode::kTypeMismatch, std::string("SUM over ") + kind_name(spec.arg_kind), e->pos);
        spec.func = AggFunc::kSum;
        spec.result_kind = spec.arg_kind == ValueKind::kF64 ? ValueKind::kF64 : ValueKind::kI64;
      } else if (fn == "AVG") {
        if (!numeric) fail(ErrorCode::kTypeMismatch, std::string("AVG over ") + kind_name(spec.arg_kind), e->pos);
        spec.func = AggFunc::kAvg;
        spec.result_kind = ValueKind::kF64;
      } else if (fn == "MIN" || fn == "MAX") {
        spec.func = fn == "MIN" ? AggFunc::kMin : AggFunc::kMax;
        spec.result_kind = spec.arg_kind;
      } else {
        fail(ErrorCode::kUnknownFunction, "unknown aggregate '" + fn + "'", e->pos);
      }
    }
    spec.key = spec.arg ? fn + "(" + (e->distinct ? "DISTINCT " : "") + canonical_key(spec.arg) + ")" : "COUNT(*)";
    std::size_t index = aggregates_.size();
    for (std::size_t i = 0; i < aggregates_.size(); ++i) {
      if (aggregates_[i].key == spec.key) index = i;
    }
    if (index == aggregates_.size()) aggregates_.push_back(spec);
    auto r = std::make_shared<Expr>(*Expr::ref(ExprOp::kAggRef, index));
    r->kind = aggregates_[index].result_kind;
    r->pos = e->pos;
    return r;
  }

  /// Computes the type of `e` given already bound arguments, coercing
  /// literals compared with typed expressions.
  ExprPtr type_node(const Expr& e, std::vector<ExprPtr> args) {
    auto n = std::make_shared<Expr>(e);
    n->args = std::move(args);
    auto value_arg = [&](std::size_t i) {
      if (n->args[i]->predicate) fail(ErrorCode::kTypeMismatch, "condition used as a value", n->args[i]->pos);
      return n->args[i]->kind;
    };
    switch (e.op) {
      case ExprOp::kAnd:
      case ExprOp::kOr:
      case ExprOp::kNot:
        for (const auto& a : n->args) {
          if (!a->predicate) fail(ErrorCode::kTypeMismatch, "operand of AND/OR/NOT must be a condition", a->pos);
        }
        n->predicate = true;
        return n;
      case ExprOp::kIsNull:
        value_arg(0);
        n->predicate = true;
        return n;
      case ExprOp::kCompare: {
        for (std::size_t i = 0; i < 2; ++i) value_arg(i);
        coerce_literal(n->args[1], n->args[0]->kind);
        coerce_literal(n->args[0], n->args[1]->kind);
        if (!orderable_pair(n->args[0]->kind, n->args[1]->kind)) {
          fail(ErrorCode::kTypeMismatch,
               std::string("cannot compare ") + kind_name(n->args[0]->kind) + " with " + kind_name(n->args[1]->kind),
               e.pos);
        }
        n->predicate = true;
        return n;
      }
      case ExprOp::kIn: {
        const ValueKind k = value_arg(0);
        for (std::size_t i = 1; i < n->args.size(); ++i) {
          if (n->args[i]->op != ExprOp::kLiteral) {
            fail(ErrorCode::kUnsupported, "IN lists may only contain literals", n->args[i]->pos);
          }
          coerce_literal(n->args[i], k);
          if (!orderable_pair(k, n->args[i]->kind)) {
            fail(ErrorCode::kTypeMismatch,
                 std::string("IN list value of kind ") + kind_name(n->args[i]->kind) + " for " + kind_name(k),
                 n->args[i]->pos);
          }
        }
        n->predicate = true;
        return n;
      }
      case ExprOp::kArith: {
        const ValueKind a = value_arg(0);
        const ValueKind b = value_arg(1);
        auto ok = [](ValueKind k) { return is_numeric(k) || k == ValueKind::kNull; };
        if (!ok(a) || !ok(b)) {
          fail(ErrorCode::kTypeMismatch,
               std::string("arithmetic on ") + kind_name(a) + " and " + kind_name(b), e.pos);
        }
        if (e.arith == ArithOp::kDiv) {
          n->kind = ValueKind::kF64;
        } else if (e.arith == ArithOp::kMod) {
          if (a == ValueKind::kF64 || b == ValueKind::kF64) fail(ErrorCode::kTypeMismatch, "% requires integers", e.pos);
          n->kind = ValueKind::kI64;
        } else {
          n->kind = (a == ValueKind::kF64 || b == ValueKind::kF64) ? ValueKind::kF64 : ValueKind::kI64;
        }
        return n;
      }
      case ExprOp::kNeg: {
        const ValueKind a = value_arg(0);
        if (!is_numeric(a) && a != ValueKind::kNull) fail(ErrorCode::kTypeMismatch, "negation of a non-number", e.pos);
        n->kind = a == ValueKind::kNull ? ValueKind::kI64 : a;
        return n;
      }
      case ExprOp::kCall: return type_call(n);
      default: return n;
    }
  }

  static void coerce_literal(ExprPtr& lit, ValueKind target) {
    if (lit->op != ExprOp::kLiteral || lit->literal.is_null() || target == ValueKind::kNull) return;
    if (lit->kind == target || (is_numeric(lit->kind) && is_numeric(target))) return;
    auto v = coerce_to(lit->literal, target);
    if (!v) return;
    auto n = std::make_shared<Expr>(*lit);
    n->literal = *v;
    n->kind = target;
    lit = n;
  }

  ExprPtr type_call(std::shared_ptr<Expr> n) {
    const std::string& fn = n->name;
    auto arity = [&](std::size_t k) {
      if (n->args.size() != k) {
        fail(ErrorCode::kInvalidArgument, fn + "() takes " + std::to_string(k) + " argument(s)", n->pos);
      }
    };
    for (const auto& a : n->args) {
      if (a->predicate) fail(ErrorCode::kTypeMismatch, "condition used as a function argument", a->pos);
    }
    if (fn == "date") {
      arity(1);
      const ValueKind k = n->args[0]->kind;
      if (k != ValueKind::kTimestamp && k != ValueKind::kDate && k != ValueKind::kI64 && k != ValueKind::kNull) {
        fail(ErrorCode::kTypeMismatch, std::string("date() of ") + kind_name(k), n->pos);
      }
      n->kind = ValueKind::kDate;
    } else if (fn == "concat") {
      if (n->args.empty()) fail(ErrorCode::kInvalidArgument, "concat() needs arguments", n->pos);
      n->kind = ValueKind::kStr;
    } else if (fn == "lower" || fn == "upper") {
      arity(1);
      const ValueKind k = n->args[0]->kind;
      if (k != ValueKind::kStr && k != ValueKind::kNull) {
        fail(ErrorCode::kTypeMismatch, fn + "() of " + kind_name(k), n->pos);
      }
      n->kind = ValueKind::kStr;
    } else if (fn == "abs") {
      arity(1);
      const ValueKind k = n->args[0]->kind;
      if (!is_numeric(k) && k != ValueKind::kNull) fail(ErrorCode::kTypeMismatch, std::string("abs() of ") + kind_name(k), n->pos);
      n->kind = k == ValueKind::kNull ? ValueKind::kI64 : k;
    } else {
      fail(ErrorCode::kUnknownFunction, "unknown function '" + fn + "'", n->pos);
    }
    return n;
  }

  const QueryAst& ast_;
  const Schema& schema_;
  std::vector<ExprPtr> group_keys_;
  std::vector<AggSpec> aggregates_;
  const std::vector<OutputColumn>* outputs_ = nullptr;
};

}  // namespace detail

/// Resolves names, types and aggregates of `ast` against `schema`.
inline BoundQuery analyze(const QueryAst& ast, const Schema& schema) { return detail::Binder(ast, schema).run(); }

}  // namespace pdrill
