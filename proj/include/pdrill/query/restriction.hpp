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
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/core/value.hpp"
#include "pdrill/query/ast.hpp"
#include "pdrill/query/eval.hpp"
#include "pdrill/store/dictionary.hpp"

namespace pdrill {

enum class RestrictionOp {
  kAnd,
  kOr,
  kNot,
  kIn,
  kNotIn,
  kEq,
  kNeq,
  kCmp,        // field <, <=, >, >= literal
  kIsNull,
  kIsNotNull,
  kConst,      // decided without looking at data
  kResidual,   // row predicate over several fields
};

/// The operand of a leaf: a stored column or a virtual field keyed by its
/// canonical expression text.
struct FieldRef {
  bool is_virtual = false;
  std::string name;  // column name, or canonical key of the expression
  ExprPtr expr;      // bound expression (a kColumn node for stored columns)
  ValueKind kind = ValueKind::kNull;
};

struct Restriction {
  RestrictionOp op = RestrictionOp::kConst;
  std::vector<Restriction> children;  // kAnd, kOr, kNot
  FieldRef field;                     // leaves other than kConst / kResidual
  std::vector<Value> values;          // kIn, kNotIn (non-empty), kEq, kNeq, kCmp (one)
  CompareOp cmp = CompareOp::kEq;     // kCmp
  bool constant = false;              // kConst
  ExprPtr residual;                   // kResidual: bound predicate

  std::string describe() const;
};

inline std::string Restriction::describe() const {
  auto list = [&] {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + literal_sql(values[i]);
    return s;
  };
  auto join = [&](const char* name) {
    std::string s = std::string(name) + "(";
    for (std::size_t i = 0; i < children.size(); ++i) s += (i ? ", " : "") + children[i].describe();
    return s + ")";
  };
  const std::string f = field.is_virtual ? "vf[" + field.name + "]" : field.name;
  switch (op) {
    case RestrictionOp::kAnd: return join("And");
    case RestrictionOp::kOr: return join("Or");
    case RestrictionOp::kNot: return join("Not");
    case RestrictionOp::kIn: return "In(" + f + ", {" + list() + "})";
    case RestrictionOp::kNotIn: return "NotIn(" + f + ", {" + list() + "})";
    case RestrictionOp::kEq: return "Eq(" + f + ", " + list() + ")";
    case RestrictionOp::kNeq: return "Neq(" + f + ", " + list() + ")";
    case RestrictionOp::kCmp: return std::string("Cmp(") + f + " " + compare_op_text(cmp) + " " + list() + ")";
    case RestrictionOp::kIsNull: return "IsNull(" + f + ")";
    case RestrictionOp::kIsNotNull: return "IsNotNull(" + f + ")";
    case RestrictionOp::kConst: return constant ? "True" : "False";
    case RestrictionOp::kResidual: return "Residual(" + to_sql(residual) + ")";
  }
  return "?";
}

struct SplitRestriction {
  Restriction root;
  std::vector<FieldRef> virtual_fields;  // distinct, in first-use order
};

namespace detail {

inline bool references_columns(const ExprPtr& e) {
  if (e->op == ExprOp::kColumn) return true;
  return std::any_of(e->args.begin(), e->args.end(), [](const ExprPtr& a) { return references_columns(a); });
}

struct NoRow {
  Value column(std::size_t) const { throw Error(ErrorCode::kInternal, "constant expression reads a column"); }
  Value group(std::size_t) const { throw Error(ErrorCode::kInternal, "constant expression reads a group"); }
  Value agg(std::size_t) const { throw Error(ErrorCode::kInternal, "constant expression reads an aggregate"); }
};

class Splitter {
 public:
  Restriction split(const ExprPtr& e) {
    Restriction r;
    switch (e->op) {
      case ExprOp::kAnd:
      case ExprOp::kOr:
      case ExprOp::kNot:
        r.op = e->op == ExprOp::kAnd ? RestrictionOp::kAnd : e->op == ExprOp::kOr ? RestrictionOp::kOr : RestrictionOp::kNot;
        for (const auto& a : e->args) r.children.push_back(split(a));
        return r;
      default: break;
    }
    if (!references_columns(e)) return constant(eval_predicate(*e, NoRow{}));
    switch (e->op) {
      case ExprOp::kCompare: {
        const ExprPtr& a = e->args[0];
        const ExprPtr& b = e->args[1];
        const bool ca = references_columns(a);
        const bool cb = references_columns(b);
        if (ca && cb) return residual(e);
        const ExprPtr& side = ca ? a : b;
        const Value lit = eval_value(*(ca ? b : a), NoRow{});
        if (lit.is_null()) return constant(false);
        const CompareOp op = ca ? e->cmp : flip(e->cmp);
        r.field = field(side);
        r.values = {lit};
        r.cmp = op;
        r.op = op == CompareOp::kEq ? RestrictionOp::kEq : op == CompareOp::kNe ? RestrictionOp::kNeq : RestrictionOp::kCmp;
        return r;
      }
      case ExprOp::kIn: {
        r.field = field(e->args[0]);
        for (std::size_t i = 1; i < e->args.size(); ++i) {
          if (!e->args[i]->literal.is_null()) r.values.push_back(e->args[i]->literal);
        }
        if (r.values.empty()) {
          if (!e->negated) return constant(false);
          r.op = RestrictionOp::kIsNotNull;
          return r;
        }
        r.op = e->negated ? RestrictionOp::kNotIn : RestrictionOp::kIn;
        return r;
      }
      case ExprOp::kIsNull:
        r.field = field(e->args[0]);
        r.op = e->negated ? RestrictionOp::kIsNotNull : RestrictionOp::kIsNull;
        return r;
      default: return residual(e);
    }
  }

  std::vector<FieldRef> virtual_fields;

 private:
  static Restriction constant(bool v) {
    Restriction r;
    r.op = RestrictionOp::kConst;
    r.constant = v;
    return r;
  }

  Restriction residual(const ExprPtr& e) {
    Restriction r;
    r.op = RestrictionOp::kResidual;
    r.residual = e;
    return r;
  }

  FieldRef field(const ExprPtr& e) {
    FieldRef f;
    f.expr = e;
    f.kind = e->kind;
    if (e->op == ExprOp::kColumn) {
      f.name = e->name;
      return f;
    }
    f.is_virtual = true;
    f.name = canonical_key(e);
    bool seen = false;
    for (const auto& v : virtual_fields) seen = seen || v.name == f.name;
    if (!seen) virtual_fields.push_back(f);
    return f;
  }
};

}  // namespace detail

/// Splits a bound WHERE condition at AND / OR / NOT / IN / NOT IN / = / !=
/// and ordered comparisons against literals. Each leaf operand that is not a
/// plain column becomes a virtual-field candidate; comparisons between two
/// column expressions stay residual row predicates.
inline SplitRestriction split_restriction(const ExprPtr& where) {
  SplitRestriction out;
  if (!where) {
    out.root.op = RestrictionOp::kConst;
    out.root.constant = true;
    return out;
  }
  detail::Splitter s;
  out.root = s.split(where);
  out.virtual_fields = std::move(s.virtual_fields);
  return out;
}

/// Sorted, disjoint half-open global-id intervals.
using GidRanges = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

namespace detail {

inline GidRanges ranges_from_ids(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  GidRanges out;
  for (auto g : ids) {
    if (!out.empty() && out.back().second == g) {
      out.back().second = g + 1;
    } else {
      out.emplace_back(g, g + 1);
    }
  }
  return out;
}

/// Complement of `in` within [lo, hi).
inline GidRanges complement(const GidRanges& in, std::uint32_t lo, std::uint32_t hi) {
  GidRanges out;
  std::uint32_t at = lo;
  for (auto [a, b] : in) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (a >= b) continue;
    if (a > at) out.emplace_back(at, a);
    at = std::max(at, b);
  }
  if (at < hi) out.emplace_back(at, hi);
  return out;
}

}  // namespace detail

/// Global-ids of `dict` whose value satisfies the leaf. Null never
/// satisfies In / NotIn / Eq / Neq / Cmp.
inline GidRanges leaf_gid_ranges(const Restriction& leaf, const GlobalDictionary& dict) {
  const auto size = static_cast<std::uint32_t>(dict.size());
  const std::uint32_t first = dict.has_null() ? 1 : 0;
  auto matching_ids = [&] {
    std::vector<std::uint32_t> ids;
    for (const auto& v : leaf.values) {
      if (v.kind() == dict.kind()) {
        if (auto id = dict.lookup_id(v)) ids.push_back(*id);
      } else if (is_numeric(v.kind()) && is_numeric(dict.kind())) {
        // Only an integral double can equal an integer, and only an exactly
        // representable integer can equal a double.
        auto c = coerce_to(v, dict.kind());
        if (c && compare_values(*c, v) == 0) {
          if (auto id = dict.lookup_id(*c)) ids.push_back(*id);
        }
      }
    }
    return detail::ranges_from_ids(std::move(ids));
  };
  switch (leaf.op) {
    case RestrictionOp::kIn:
    case RestrictionOp::kEq: return matching_ids();
    case RestrictionOp::kNotIn:
    case RestrictionOp::kNeq: return detail::complement(matching_ids(), first, size);
    case RestrictionOp::kIsNull:
      if (dict.has_null()) return {{0u, 1u}};
      return {};
    case RestrictionOp::kIsNotNull:
      if (first < size) return {{first, size}};
      return {};
    case RestrictionOp::kCmp: {
      // Dictionary order agrees with compare_values within one kind, so the
      // matching ids form one interval found by binary search.
      const Value& lit = leaf.values.at(0);
      auto first_where = [&](auto pred) {
        std::uint32_t lo = first;
        std::uint32_t hi = size;
        while (lo < hi) {
          const std::uint32_t mid = lo + (hi - lo) / 2;
          if (pred(compare_values(dict.value_at(mid), lit))) {
            hi = mid;
          } else {
            lo = mid + 1;
          }
        }
        return lo;
      };
      std::uint32_t lo = first;
      std::uint32_t hi = size;
      switch (leaf.cmp) {
        case CompareOp::kLt: hi = first_where([](int c) { return c >= 0; }); break;
        case CompareOp::kLe: hi = first_where([](int c) { return c > 0; }); break;
        case CompareOp::kGt: lo = first_where([](int c) { return c > 0; }); break;
        case CompareOp::kGe: lo = first_where([](int c) { return c >= 0; }); break;
        default: throw Error(ErrorCode::kInternal, "equality in a range leaf");
      }
      if (lo < hi) return {{lo, hi}};
      return {};
    }
    default: throw Error(ErrorCode::kInternal, "leaf_gid_ranges on a non-leaf");
  }
}

enum class ChunkStatus : std::uint8_t { kSkipped, kFullyActive, kPartial };

inline const char* chunk_status_name(ChunkStatus s) {
  switch (s) {
    case ChunkStatus::kSkipped: return "skipped";
    case ChunkStatus::kFullyActive: return "fully-active";
    case ChunkStatus::kPartial: return "partial";
  }
  return "?";
}

/// Number of chunk-dictionary entries inside `ranges`, and their chunk-ids.
inline std::size_t count_in_chunk(const GidRanges& ranges, const ChunkDictionary& cd,
                                  std::vector<std::uint8_t>* chunk_id_mask = nullptr) {
  std::size_t n = 0;
  if (chunk_id_mask) chunk_id_mask->assign(cd.size(), 0);
  const auto& g = cd.global_ids;
  for (auto [a, b] : ranges) {
    const auto lo = std::lower_bound(g.begin(), g.end(), a) - g.begin();
    const auto hi = std::lower_bound(g.begin() + lo, g.end(), b) - g.begin();
    n += static_cast<std::size_t>(hi - lo);
    if (chunk_id_mask) std::fill(chunk_id_mask->begin() + lo, chunk_id_mask->begin() + hi, 1);
  }
  return n;
}

inline ChunkStatus status_from_count(std::size_t matched, std::size_t entries) {
  if (matched == 0) return ChunkStatus::kSkipped;
  if (matched == entries) return ChunkStatus::kFullyActive;
  return ChunkStatus::kPartial;
}

inline ChunkStatus combine_and(ChunkStatus a, ChunkStatus b) {
  if (a == ChunkStatus::kSkipped || b == ChunkStatus::kSkipped) return ChunkStatus::kSkipped;
  if (a == ChunkStatus::kFullyActive && b == ChunkStatus::kFullyActive) return ChunkStatus::kFullyActive;
  return ChunkStatus::kPartial;
}

inline ChunkStatus combine_or(ChunkStatus a, ChunkStatus b) {
  if (a == ChunkStatus::kFullyActive || b == ChunkStatus::kFullyActive) return ChunkStatus::kFullyActive;
  if (a == ChunkStatus::kSkipped && b == ChunkStatus::kSkipped) return ChunkStatus::kSkipped;
  return ChunkStatus::kPartial;
}

inline ChunkStatus negate(ChunkStatus a) {
  if (a == ChunkStatus::kSkipped) return ChunkStatus::kFullyActive;
  if (a == ChunkStatus::kFullyActive) return ChunkStatus::kSkipped;
  return ChunkStatus::kPartial;
}

}  // namespace pdrill
