#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace peripartum {

/// Calendar date as days since 1970-01-01.
struct Date {
  int32_t days = 0;
  auto operator<=>(const Date&) const = default;
};

/// UTC instant with millisecond resolution.
struct Timestamp {
  int64_t ms = 0;
  auto operator<=>(const Timestamp&) const = default;
};

struct Interval {
  int64_t ms = 0;
  auto operator<=>(const Interval&) const = default;
};

/// Exact decimal: unscaled * 10^-scale. Produced by ROUND.
struct Decimal {
  int64_t unscaled = 0;
  int32_t scale = 0;

  bool operator==(const Decimal&) const = default;
  double to_double() const;
  std::string to_string() const;
};

Date make_date(int year, unsigned month, unsigned day);
int year_of(Date d);
int year_of(Timestamp t);
Timestamp start_of(Date d);
Date date_of(Timestamp t);
Timestamp make_timestamp(Date d, int hour, int minute, int second = 0, int millis = 0);

/// Accepts YYYY-MM-DD and DD/MM/YYYY.
std::optional<Date> parse_date(std::string_view text);
/// Accepts "YYYY-MM-DD[ T]HH:MM[:SS[.fff]][Z]" and the DD/MM/YYYY date prefix.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_date(Date d);
/// "YYYY-MM-DD HH:MM:SS.fff"
std::string format_timestamp(Timestamp t);
/// RFC 3339 UTC, "YYYY-MM-DDTHH:MM:SS.fffZ"
std::string format_rfc3339(Timestamp t);

/// Shortest representation that round-trips, always carrying a '.' or exponent.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view text);
std::optional<int64_t> parse_int(std::string_view text);

/// Half-up (away from zero on ties) rounding of the decimal value that the
/// shortest round-trip representation of `v` denotes.
Decimal round_half_up(double v, int digits);

enum class ValueKind { null, boolean, integer, real, decimal, text, date, timestamp, interval };

/// Dynamically typed cell used by rows, SQL evaluation, and serialization.
class Value {
 public:
  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : v_(b) {}
  Value(int v) : v_(static_cast<int64_t>(v)) {}
  Value(int64_t v) : v_(v) {}
  Value(double v) : v_(v) {}
  Value(Decimal v) : v_(v) {}
  Value(std::string v) : v_(std::move(v)) {}
  Value(const char* v) : v_(std::string(v)) {}
  Value(Date v) : v_(v) {}
  Value(Timestamp v) : v_(v) {}
  Value(Interval v) : v_(v) {}

  template <class T>
  static Value from_optional(const std::optional<T>& o) {
    return o ? Value(*o) : Value();
  }

  ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }
  bool is_null() const { return kind() == ValueKind::null; }
  bool is_numeric() const {
    auto k = kind();
    return k == ValueKind::integer || k == ValueKind::real || k == ValueKind::decimal;
  }

  bool as_bool() const { return std::get<bool>(v_); }
  int64_t as_int() const { return std::get<int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  const Decimal& as_decimal() const { return std::get<Decimal>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }
  Date as_date() const { return std::get<Date>(v_); }
  Timestamp as_timestamp() const { return std::get<Timestamp>(v_); }
  Interval as_interval() const { return std::get<Interval>(v_); }

  /// Numeric value widened to double. Precondition: is_numeric().
  double to_double() const;

  /// Text rendering used for CSV output and permissive string comparison.
  std::string to_string() const;

  bool operator==(const Value&) const = default;

 private:
  std::variant<std::monostate, bool, int64_t, double, Decimal, std::string, Date, Timestamp,
               Interval>
      v_;
};

std::string_view to_string(ValueKind k);

/// Total order used for ORDER BY, DISTINCT and UNION: numerics compare by
/// value across representations, NULL sorts after everything, and values of
/// unrelated kinds order by kind.
int compare_for_sort(const Value& a, const Value& b);

}  // namespace peripartum
