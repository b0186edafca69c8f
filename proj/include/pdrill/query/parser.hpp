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
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/query/ast.hpp"

namespace pdrill {

// Grammar (keywords case-insensitive, strings in '...' or "...", identifiers
// bare or in backquotes):
//
//   query     := SELECT item (',' item)* FROM ident [WHERE expr]
//                [GROUP BY expr (',' expr)*] [HAVING expr]
//                [ORDER BY expr [ASC|DESC] (',' ...)*] [LIMIT int] [';']
//   item      := expr [[AS] ident]
//   expr      := and (OR and)*
//   and       := not (AND not)*
//   not       := NOT not | predicate
//   predicate := sum [cmp sum | [NOT] IN '(' sum (',' sum)* ')' | IS [NOT] NULL]
//   sum       := product (('+'|'-') product)*
//   product   := unary (('*'|'/'|'%') unary)*
//   unary     := '-' unary | primary
//   primary   := literal | ident | ident '(' [DISTINCT] [args | '*'] ')' | '(' expr ')'

enum class TokenKind { kIdent, kQuotedIdent, kString, kInteger, kFloat, kSymbol, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto fail = [&](const std::string& msg, std::size_t at) {
    throw Error(ErrorCode::kSyntax, msg + " at position " + std::to_string(at), at);
  };
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) ++i;
      out.push_back({TokenKind::kIdent, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      bool is_float = false;
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      if (i < n && sql[i] == '.') {
        is_float = true;
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
        if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
          is_float = true;
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
      }
      if (i < n && (std::isalpha(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) fail("malformed number", start);
      out.push_back({is_float ? TokenKind::kFloat : TokenKind::kInteger, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      std::string text;
      ++i;
      while (true) {
        if (i >= n) fail(c == '`' ? "unterminated identifier" : "unterminated string", start);
        if (sql[i] == c) {
          if (i + 1 < n && sql[i + 1] == c) {
            text += c;
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (sql[i] == '\\' && c != '`' && i + 1 < n && (sql[i + 1] == c || sql[i + 1] == '\\')) {
          text += sql[i + 1];
          i += 2;
          continue;
        }
        text += sql[i++];
      }
      out.push_back({c == '`' ? TokenKind::kQuotedIdent : TokenKind::kString, text, start});
      continue;
    }
    static constexpr std::string_view two[] = {"<=", ">=", "<>", "!=", "=="};
    bool matched = false;
    for (auto t : two) {
      if (sql.substr(i, 2) == t) {
        out.push_back({TokenKind::kSymbol, std::string(t), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),*+-/%<>=;.").find(c) != std::string_view::npos) {
      out.push_back({TokenKind::kSymbol, std::string(1, c), start});
      ++i;
      continue;
    }
    fail(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({TokenKind::kEnd, "", n});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(tokenize(sql)) {}

  QueryAst parse_query() {
    QueryAst q;
    expect_keyword("SELECT");
    do {
      SelectItem item;
      item.expr = parse_expr();
      if (accept_keyword("AS")) {
        item.alias = expect_ident("alias");
      } else if (peek().kind == TokenKind::kQuotedIdent || (peek().kind == TokenKind::kIdent && !is_reserved(peek().text))) {
        item.alias = expect_ident("alias");
      }
      q.select.push_back(std::move(item));
    } while (accept_symbol(","));
    expect_keyword("FROM");
    q.from = expect_ident("table name");
    if (accept_keyword("WHERE")) {
      q.where = parse_expr();
      if (const Expr* agg = find_aggregate(*q.where)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "aggregate " + agg->name + " is not allowed in WHERE at position " + std::to_string(agg->pos), agg->pos);
      }
    }
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        q.group_by.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) q.having = parse_expr();
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderItem item;
        item.expr = parse_expr();
        if (accept_keyword("DESC")) {
          item.desc = true;
        } else {
          accept_keyword("ASC");
        }
        q.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      const Token& t = peek();
      if (t.kind != TokenKind::kInteger) fail("expected integer after LIMIT", t);
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) fail("LIMIT out of range", t);
      q.limit = v;
      ++at_;
    }
    accept_symbol(";");
    if (peek().kind != TokenKind::kEnd) fail("unexpected '" + peek().text + "'", peek());
    return q;
  }

  ExprPtr parse_standalone_expr() {
    ExprPtr e = parse_expr();
    if (peek().kind != TokenKind::kEnd) fail("unexpected '" + peek().text + "'", peek());
    return e;
  }

 private:
  static bool is_reserved(const std::string& word) {
    static const char* kWords[] = {"SELECT", "FROM", "WHERE", "GROUP", "BY",   "HAVING", "ORDER", "LIMIT", "AS",
                                   "AND",    "OR",   "NOT",   "IN",    "IS",   "NULL",   "ASC",   "DESC",  "DISTINCT"};
    const std::string u = detail::upper(word);
    for (auto w : kWords) {
      if (u == w) return true;
    }
    return false;
  }

  static const Expr* find_aggregate(const Expr& e) {
    if (e.op == ExprOp::kAggregate) return &e;
    for (const auto& a : e.args) {
      if (const Expr* hit = find_aggregate(*a)) return hit;
    }
    return nullptr;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw Error(ErrorCode::kSyntax, msg + " at position " + std::to_string(t.pos), t.pos);
  }

  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(at_ + ahead, tokens_.size() - 1)]; }

  bool is_keyword(const Token& t, std::string_view kw) const {
    return t.kind == TokenKind::kIdent && detail::upper(t.text) == kw;
  }

  bool accept_keyword(std::string_view kw) {
    if (is_keyword(peek(), kw)) {
      ++at_;
      return true;
    }
    return false;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) {
      fail("expected " + std::string(kw) + (peek().kind == TokenKind::kEnd ? " but query ended" : " near '" + peek().text + "'"),
           peek());
    }
  }

  bool accept_symbol(std::string_view s) {
    if (peek().kind == TokenKind::kSymbol && peek().text == s) {
      ++at_;
      return true;
    }
    return false;
  }

  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'", peek());
  }

  std::string expect_ident(const char* what) {
    const Token& t = peek();
    if (t.kind == TokenKind::kQuotedIdent || (t.kind == TokenKind::kIdent && !is_reserved(t.text))) {
      ++at_;
      return t.text;
    }
    fail(std::string("expected ") + what + (t.kind == TokenKind::kEnd ? " but query ended" : " near '" + t.text + "'"), t);
  }

  ExprPtr parse_expr() {
    const std::size_t pos = peek().pos;
    std::vector<ExprPtr> parts = {parse_and()};
    while (accept_keyword("OR")) parts.push_back(parse_and());
    return parts.size() == 1 ? parts[0] : Expr::make(ExprOp::kOr, std::move(parts), pos);
  }

  ExprPtr parse_and() {
    const std::size_t pos = peek().pos;
    std::vector<ExprPtr> parts = {parse_not()};
    while (accept_keyword("AND")) parts.push_back(parse_not());
    return parts.size() == 1 ? parts[0] : Expr::make(ExprOp::kAnd, std::move(parts), pos);
  }

  ExprPtr parse_not() {
    const std::size_t pos = peek().pos;
    if (accept_keyword("NOT")) return Expr::make(ExprOp::kNot, {parse_not()}, pos);
    return parse_predicate();
  }

  ExprPtr parse_predicate() {
    ExprPtr left = parse_sum();
    const Token& t = peek();
    if (t.kind == TokenKind::kSymbol) {
      static const std::pair<std::string_view, CompareOp> kOps[] = {
          {"=", CompareOp::kEq},  {"==", CompareOp::kEq}, {"!=", CompareOp::kNe}, {"<>", CompareOp::kNe},
          {"<", CompareOp::kLt},  {"<=", CompareOp::kLe}, {">", CompareOp::kGt},  {">=", CompareOp::kGe}};
      for (auto [text, op] : kOps) {
        if (t.text == text) {
          ++at_;
          return Expr::compare(op, left, parse_sum(), t.pos);
        }
      }
    }
    const std::size_t pos = t.pos;
    bool negated = false;
    if (is_keyword(peek(), "NOT") && is_keyword(peek(1), "IN")) {
      at_ += 1;
      negated = true;
    }
    if (accept_keyword("IN")) {
      expect_symbol("(");
      std::vector<ExprPtr> args = {left};
      do {
        args.push_back(parse_sum());
      } while (accept_symbol(","));
      expect_symbol(")");
      auto e = std::make_shared<Expr>(*Expr::make(ExprOp::kIn, std::move(args), pos));
      e->negated = negated;
      return e;
    }
    if (accept_keyword("IS")) {
      const bool is_not = accept_keyword("NOT");
      expect_keyword("NULL");
      auto e = std::make_shared<Expr>(*Expr::make(ExprOp::kIsNull, {left}, pos));
      e->negated = is_not;
      return e;
    }
    return left;
  }

  ExprPtr parse_sum() {
    ExprPtr left = parse_product();
    while (true) {
      const Token& t = peek();
      if (accept_symbol("+")) {
        left = Expr::arithmetic(ArithOp::kAdd, left, parse_product(), t.pos);
      } else if (accept_symbol("-")) {
        left = Expr::arithmetic(ArithOp::kSub, left, parse_product(), t.pos);
      } else {
        return left;
      }
    }
  }

  ExprPtr parse_product() {
    ExprPtr left = parse_unary();
    while (true) {
      const Token& t = peek();
      if (accept_symbol("*")) {
        left = Expr::arithmetic(ArithOp::kMul, left, parse_unary(), t.pos);
      } else if (accept_symbol("/")) {
        left = Expr::arithmetic(ArithOp::kDiv, left, parse_unary(), t.pos);
      } else if (accept_symbol("%")) {
        left = Expr::arithmetic(ArithOp::kMod, left, parse_unary(), t.pos);
      } else {
        return left;
      }
    }
  }

  ExprPtr parse_unary() {
    const Token& t = peek();
    if (accept_symbol("-")) {
      ExprPtr inner = parse_unary();
      // Fold negative numeric literals so that IN lists can hold them.
      if (inner->op == ExprOp::kLiteral && inner->literal.kind() == ValueKind::kI64 &&
          inner->literal.as_i64() != INT64_MIN) {
        return Expr::lit(Value::i64(-inner->literal.as_i64()), t.pos);
      }
      if (inner->op == ExprOp::kLiteral && inner->literal.kind() == ValueKind::kF64) {
        return Expr::lit(Value::f64(-inner->literal.as_f64()), t.pos);
      }
      return Expr::make(ExprOp::kNeg, {inner}, t.pos);
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token t = peek();
    switch (t.kind) {
      case TokenKind::kString:
        ++at_;
        return Expr::lit(Value::str(t.text), t.pos);
      case TokenKind::kInteger: {
        ++at_;
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc()) {
          double d = 0;
          std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
          return Expr::lit(Value::f64(d), t.pos);
        }
        return Expr::lit(Value::i64(v), t.pos);
      }
      case TokenKind::kFloat: {
        ++at_;
        double d = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
        return Expr::lit(Value::f64(d), t.pos);
      }
      case TokenKind::kQuotedIdent:
        ++at_;
        return Expr::column(t.text, t.pos);
      case TokenKind::kIdent: {
        if (accept_keyword("NULL")) return Expr::lit(Value::null(), t.pos);
        if (is_reserved(t.text)) fail("unexpected keyword '" + t.text + "'", t);
        ++at_;
        if (!accept_symbol("(")) return Expr::column(t.text, t.pos);
        const std::string upper = detail::upper(t.text);
        if (is_aggregate_name(upper)) {
          if (upper == "COUNT" && accept_symbol("*")) {
            expect_symbol(")");
            return Expr::aggregate(upper, {}, false, t.pos);
          }
          const bool distinct = accept_keyword("DISTINCT");
          ExprPtr arg = parse_expr();
          expect_symbol(")");
          if (distinct && upper != "COUNT") fail("DISTINCT is only supported in COUNT", t);
          return Expr::aggregate(upper, {arg}, distinct, t.pos);
        }
        const std::string fn = detail::lower(t.text);
        if (!is_scalar_function(fn)) {
          throw Error(ErrorCode::kUnknownFunction,
                      "unknown function '" + t.text + "' at position " + std::to_string(t.pos), t.pos);
        }
        std::vector<ExprPtr> args;
        if (!accept_symbol(")")) {
          do {
            args.push_back(parse_expr());
          } while (accept_symbol(","));
          expect_symbol(")");
        }
        return Expr::call(fn, std::move(args), t.pos);
      }
      case TokenKind::kSymbol:
        if (t.text == "(") {
          ++at_;
          ExprPtr e = parse_expr();
          expect_symbol(")");
          return e;
        }
        fail("unexpected '" + t.text + "'", t);
      case TokenKind::kEnd: fail("unexpected end of query", t);
    }
    fail("unexpected token", t);
  }

  std::vector<Token> tokens_;
  std::size_t at_ = 0;
};

inline QueryAst parse(std::string_view sql) { return Parser(sql).parse_query(); }
inline ExprPtr parse_expression(std::string_view sql) { return Parser(sql).parse_standalone_expr(); }

}  // namespace pdrill
