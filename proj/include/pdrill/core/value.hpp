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

#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "pdrill/core/errors.hpp"

namespace pdrill {

/// Kind tags double as the on-disk type tag of a schema field.
enum class ValueKind : std::uint8_t {
  kNull = 0,
  kStr = 1,
  kI64 = 2,
  kF64 = 3,
  kDate = 4,       // days since 1970-01-01 UTC
  kTimestamp = 5,  // seconds since epoch UTC
};

inline const char* kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::kNull: return "null";
    case ValueKind::kStr: return "str";
    case ValueKind::kI64: return "i64";
    case ValueKind::kF64: return "f64";
    case ValueKind::kDate: return "date";
    case ValueKind::kTimestamp: return "timestamp";
  }
  return "?";
}

inline std::optional<ValueKind> kind_from_name(std::string_view name) {
  if (name == "str" || name == "string" || name == "text") return ValueKind::kStr;
  if (name == "i64" || name == "int" || name == "int64" || name == "integer") return ValueKind::kI64;
  if (name == "f64" || name == "float" || name == "double" || name == "real") return ValueKind::kF64;
  if (name == "date") return ValueKind::kDate;
  if (name == "timestamp" || name == "ts") return ValueKind::kTimestamp;
  return std::nullopt;
}

inline bool is_numeric(ValueKind kind) { return kind == ValueKind::kI64 || kind == ValueKind::kF64; }

struct DateDays {
  std::int32_t days = 0;
  friend auto operator<=>(const DateDays&, const DateDays&) = default;
};

struct EpochSeconds {
  std::int64_t seconds = 0;
  friend auto operator<=>(const EpochSeconds&, const EpochSeconds&) = default;
};

// ---------------------------------------------------------------------------
// Calendar helpers (proleptic Gregorian, UTC).

inline std::string format_date(std::int32_t days) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{::std::chrono::days{days}}};
  char buf[32];
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  const unsigned d = static_cast<unsigned>(ymd.day());
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

inline std::int32_t days_from_epoch_seconds(std::int64_t seconds) {
  // floor division so that negative timestamps land on the previous day
  std::int64_t days = seconds / 86400;
  if (seconds % 86400 < 0) --days;
  return static_cast<std::int32_t>(days);
}

namespace detail {

inline bool parse_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Strict "YYYY-MM-DD".
inline std::optional<std::int32_t> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m) ||
      !detail::parse_uint(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count());
}

/// Integer epoch seconds, or "YYYY-MM-DD[ T]HH:MM:SS[Z]".
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  std::int64_t secs = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), secs);
  if (ec == std::errc() && p == s.data() + s.size()) return secs;
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':') return std::nullopt;
  auto day = parse_date(s.substr(0, 10));
  int hh = 0, mm = 0, ss = 0;
  if (!day || !detail::parse_uint(s.substr(11, 2), hh) || !detail::parse_uint(s.substr(14, 2), mm) ||
      !detail::parse_uint(s.substr(17, 2), ss) || hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  return static_cast<std::int64_t>(*day) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

// ---------------------------------------------------------------------------

/// A single cell. Values of different kinds order by kind tag, Null first;
/// within a kind strings compare byte-wise and numerics numerically.
class Value {
 public:
  using Storage = std::variant<std::monostate, std::string, std::int64_t, double, DateDays, EpochSeconds>;

  Value() = default;

  static Value null() { return Value(); }
  static Value str(std::string s) { return Value(Storage(std::in_place_index<1>, std::move(s))); }
  static Value i64(std::int64_t v) { return Value(Storage(std::in_place_index<2>, v)); }
  static Value f64(double v) { return Value(Storage(std::in_place_index<3>, v == 0.0 ? 0.0 : v)); }
  static Value date(std::int32_t days) { return Value(Storage(std::in_place_index<4>, DateDays{days})); }
  static Value timestamp(std::int64_t secs) { return Value(Storage(std::in_place_index<5>, EpochSeconds{secs})); }

  ValueKind kind() const noexcept { return static_cast<ValueKind>(v_.index()); }
  bool is_null() const noexcept { return v_.index() == 0; }

  const std::string& as_str() const { return std::get<1>(v_); }
  std::int64_t as_i64() const { return std::get<2>(v_); }
  double as_f64() const { return std::get<3>(v_); }
  std::int32_t as_date() const { return std::get<4>(v_).days; }
  std::int64_t as_timestamp() const { return std::get<5>(v_).seconds; }

  /// Numeric view of I64/F64 values; nullopt otherwise.
  std::optional<double> number() const {
    if (v_.index() == 2) return static_cast<double>(as_i64());
    if (v_.index() == 3) return as_f64();
    return std::nullopt;
  }

  const Storage& storage() const noexcept { return v_; }

  /// Human/CSV representation. Null renders as the empty string.
  std::string to_string() const {
    switch (kind()) {
      case ValueKind::kNull: return {};
      case ValueKind::kStr: return as_str();
      case ValueKind::kI64: return std::to_string(as_i64());
      case ValueKind::kF64: return format_double(as_f64());
      case ValueKind::kDate: return format_date(as_date());
      case ValueKind::kTimestamp: return std::to_string(as_timestamp());
    }
    return {};
  }

  friend int compare(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index() ? -1 : 1;
    switch (a.kind()) {
      case ValueKind::kNull: return 0;
      case ValueKind::kStr: {
        const int c = a.as_str().compare(b.as_str());
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
      }
      case ValueKind::kI64: return a.as_i64() < b.as_i64() ? -1 : (b.as_i64() < a.as_i64() ? 1 : 0);
      case ValueKind::kF64: return a.as_f64() < b.as_f64() ? -1 : (b.as_f64() < a.as_f64() ? 1 : 0);
      case ValueKind::kDate: return a.as_date() < b.as_date() ? -1 : (b.as_date() < a.as_date() ? 1 : 0);
      case ValueKind::kTimestamp:
        return a.as_timestamp() < b.as_timestamp() ? -1 : (b.as_timestamp() < a.as_timestamp() ? 1 : 0);
    }
    return 0;
  }

  friend bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
  friend std::weak_ordering operator<=>(const Value& a, const Value& b) {
    const int c = compare(a, b);
    return c < 0 ? std::weak_ordering::less : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
  }

 private:
  explicit Value(Storage s) : v_(std::move(s)) {}
  Storage v_;
};

/// Parses `text` as a value of `kind`; nullopt when it does not conform.
/// Doubles must be finite.
inline std::optional<Value> parse_value(std::string_view text, ValueKind kind) {
  switch (kind) {
    case ValueKind::kNull: return Value::null();
    case ValueKind::kStr: return Value::str(std::string(text));
    case ValueKind::kI64: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size() || text.empty()) return std::nullopt;
      return Value::i64(v);
    }
    case ValueKind::kF64: {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
        return std::nullopt;
      }
      return Value::f64(v);
    }
    case ValueKind::kDate: {
      auto d = parse_date(text);
      if (!d) return std::nullopt;
      return Value::date(*d);
    }
    case ValueKind::kTimestamp: {
      auto t = parse_timestamp(text);
      if (!t) return std::nullopt;
      return Value::timestamp(*t);
    }
  }
  return std::nullopt;
}

/// Converts a query literal to the kind of the column it is compared with.
/// Returns nullopt if no lossless conversion exists (the literal can then
/// never be equal to a column value).
inline std::optional<Value> coerce_to(const Value& literal, ValueKind target) {
  if (literal.is_null()) return std::nullopt;
  if (literal.kind() == target) return literal;
  switch (target) {
    case ValueKind::kI64:
      if (literal.kind() == ValueKind::kF64) {
        const double d = literal.as_f64();
        if (std::trunc(d) == d && std::fabs(d) < 9.2e18) return Value::i64(static_cast<std::int64_t>(d));
      }
      if (literal.kind() == ValueKind::kStr) return parse_value(literal.as_str(), target);
      return std::nullopt;
    case ValueKind::kF64:
      if (literal.kind() == ValueKind::kI64) return Value::f64(static_cast<double>(literal.as_i64()));
      if (literal.kind() == ValueKind::kStr) return parse_value(literal.as_str(), target);
      return std::nullopt;
    case ValueKind::kDate:
    case ValueKind::kTimestamp:
      if (literal.kind() == ValueKind::kStr) return parse_value(literal.as_str(), target);
      if (target == ValueKind::kTimestamp && literal.kind() == ValueKind::kI64) {
        return Value::timestamp(literal.as_i64());
      }
      return std::nullopt;
    case ValueKind::kStr:
      return std::nullopt;
    case ValueKind::kNull:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace pdrill
