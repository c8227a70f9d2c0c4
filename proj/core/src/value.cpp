#include "peripartum/value.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace peripartum {

namespace {

constexpr int64_t kMsPerDay = 86'400'000;

int64_t pow10(int n) {
  int64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

bool read_fixed_int(std::string_view s, size_t pos, size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Parses a date prefix; returns the number of characters consumed or 0.
size_t parse_date_prefix(std::string_view s, Date& out) {
  int y = 0, m = 0, d = 0;
  size_t used = 0;
  if (s.size() >= 10 && s[4] == '-' && s[7] == '-' && read_fixed_int(s, 0, 4, y) &&
      read_fixed_int(s, 5, 2, m) && read_fixed_int(s, 8, 2, d)) {
    used = 10;
  } else if (s.size() >= 10 && s[2] == '/' && s[5] == '/' && read_fixed_int(s, 0, 2, d) &&
             read_fixed_int(s, 3, 2, m) && read_fixed_int(s, 6, 4, y)) {
    used = 10;
  } else {
    return 0;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return 0;
  out = Date{static_cast<int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
  return used;
}

std::chrono::year_month_day civil(Date d) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.days}}};
}

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

double Decimal::to_double() const {
  return static_cast<double>(unscaled) / static_cast<double>(pow10(scale));
}

std::string Decimal::to_string() const {
  const bool negative = unscaled < 0;
  const uint64_t mag = negative ? static_cast<uint64_t>(-(unscaled + 1)) + 1 : unscaled;
  const uint64_t div = static_cast<uint64_t>(pow10(scale));
  std::string out = negative ? "-" : "";
  out += std::to_string(mag / div);
  if (scale > 0) {
    std::string frac = std::to_string(mag % div);
    out += '.';
    out.append(static_cast<size_t>(scale) - frac.size(), '0');
    out += frac;
  }
  return out;
}

Date make_date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  return Date{static_cast<int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

int year_of(Date d) { return static_cast<int>(civil(d).year()); }
int year_of(Timestamp t) { return year_of(date_of(t)); }
Timestamp start_of(Date d) { return Timestamp{static_cast<int64_t>(d.days) * kMsPerDay}; }
Date date_of(Timestamp t) { return Date{static_cast<int32_t>(floor_div(t.ms, kMsPerDay))}; }

Timestamp make_timestamp(Date d, int hour, int minute, int second, int millis) {
  return Timestamp{start_of(d).ms + ((hour * 60LL + minute) * 60 + second) * 1000 + millis};
}

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  Date d;
  size_t used = parse_date_prefix(text, d);
  if (used == 0 || used != text.size()) return std::nullopt;
  return d;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = trim(text);
  Date d;
  size_t pos = parse_date_prefix(text, d);
  if (pos == 0) return std::nullopt;
  int h = 0, mi = 0, s = 0, ms = 0;
  if (pos < text.size()) {
    if (text[pos] != ' ' && text[pos] != 'T') return std::nullopt;
    ++pos;
    if (!read_fixed_int(text, pos, 2, h) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
        !read_fixed_int(text, pos + 3, 2, mi)) {
      return std::nullopt;
    }
    pos += 5;
    if (pos < text.size() && text[pos] == ':') {
      if (!read_fixed_int(text, pos + 1, 2, s)) return std::nullopt;
      pos += 3;
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          if (digits < 3) ms = ms * 10 + (text[pos] - '0');
          ++digits;
          ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 3; ++i) ms *= 10;
      }
    }
    if (pos < text.size() && text[pos] == 'Z') {
      ++pos;
    } else if (text.substr(pos) == "+00:00") {
      pos = text.size();
    }
    if (pos != text.size()) return std::nullopt;
    if (h > 23 || mi > 59 || s > 59) return std::nullopt;
  }
  return make_timestamp(d, h, mi, s, ms);
}

std::string format_date(Date d) {
  auto ymd = civil(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

namespace {
std::string format_time_of_day(Timestamp t, char sep, bool zulu) {
  Date d = date_of(t);
  int64_t rem = t.ms - start_of(d).ms;
  int ms = static_cast<int>(rem % 1000);
  rem /= 1000;
  int s = static_cast<int>(rem % 60);
  rem /= 60;
  int mi = static_cast<int>(rem % 60);
  int h = static_cast<int>(rem / 60);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%c%02d:%02d:%02d.%03d%s", format_date(d).c_str(), sep, h, mi, s,
                ms, zulu ? "Z" : "");
  return buf;
}
}  // namespace

std::string format_timestamp(Timestamp t) { return format_time_of_day(t, ' ', false); }
std::string format_rfc3339(Timestamp t) { return format_time_of_day(t, 'T', true); }

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int64_t> parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

Decimal round_half_up(double v, int digits) {
  if (!std::isfinite(v)) throw std::domain_error("cannot round a non-finite value");
  if (digits < 0 || digits > 15) throw std::domain_error("ROUND digits out of range");
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  std::string_view s(buf, static_cast<size_t>(res.ptr - buf));
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  size_t dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  int64_t mag = 0;
  for (char c : int_part) mag = mag * 10 + (c - '0');
  for (int i = 0; i < digits; ++i) {
    mag = mag * 10 + (static_cast<size_t>(i) < frac_part.size() ? frac_part[i] - '0' : 0);
  }
  if (static_cast<size_t>(digits) < frac_part.size() && frac_part[digits] >= '5') ++mag;
  return Decimal{negative && mag != 0 ? -mag : mag, digits};
}

double Value::to_double() const {
  switch (kind()) {
    case ValueKind::integer: return static_cast<double>(as_int());
    case ValueKind::real: return as_real();
    case ValueKind::decimal: return as_decimal().to_double();
    default: throw std::logic_error("value is not numeric");
  }
}

std::string Value::to_string() const {
  switch (kind()) {
    case ValueKind::null: return "";
    case ValueKind::boolean: return as_bool() ? "true" : "false";
    case ValueKind::integer: return std::to_string(as_int());
    case ValueKind::real: return format_double(as_real());
    case ValueKind::decimal: return as_decimal().to_string();
    case ValueKind::text: return as_text();
    case ValueKind::date: return format_date(as_date());
    case ValueKind::timestamp: return format_timestamp(as_timestamp());
    case ValueKind::interval: {
      int64_t ms = as_interval().ms;
      std::string sign = ms < 0 ? "-" : "";
      if (ms < 0) ms = -ms;
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s%lld:%02lld:%02lld.%03lld", sign.c_str(),
                    static_cast<long long>(ms / 3'600'000), static_cast<long long>(ms / 60'000 % 60),
                    static_cast<long long>(ms / 1000 % 60), static_cast<long long>(ms % 1000));
      return buf;
    }
  }
  return "";
}

std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::null: return "null";
    case ValueKind::boolean: return "boolean";
    case ValueKind::integer: return "integer";
    case ValueKind::real: return "real";
    case ValueKind::decimal: return "decimal";
    case ValueKind::text: return "text";
    case ValueKind::date: return "date";
    case ValueKind::timestamp: return "timestamp";
    case ValueKind::interval: return "interval";
  }
  return "?";
}

int compare_for_sort(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return a.is_null() == b.is_null() ? 0 : (a.is_null() ? 1 : -1);
  auto three_way = [](const auto& x, const auto& y) { return x < y ? -1 : (y < x ? 1 : 0); };
  if (a.is_numeric() && b.is_numeric()) {
    if (a.kind() == ValueKind::integer && b.kind() == ValueKind::integer) {
      return three_way(a.as_int(), b.as_int());
    }
    return three_way(a.to_double(), b.to_double());
  }
  auto temporal = [](const Value& v) -> std::optional<int64_t> {
    if (v.kind() == ValueKind::date) return start_of(v.as_date()).ms;
    if (v.kind() == ValueKind::timestamp) return v.as_timestamp().ms;
    return std::nullopt;
  };
  if (auto ta = temporal(a), tb = temporal(b); ta && tb) return three_way(*ta, *tb);
  if (a.kind() != b.kind()) return three_way(static_cast<int>(a.kind()), static_cast<int>(b.kind()));
  switch (a.kind()) {
    case ValueKind::boolean: return three_way(a.as_bool(), b.as_bool());
    case ValueKind::text: return three_way(a.as_text(), b.as_text());
    case ValueKind::interval: return three_way(a.as_interval().ms, b.as_interval().ms);
    default: return 0;
  }
}

}  // namespace peripartum
