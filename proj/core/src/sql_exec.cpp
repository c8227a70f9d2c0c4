#include "peripartum/sql_exec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>

#include "peripartum/record_json.hpp"

namespace peripartum::sql {

namespace {

using Tuple = std::vector<const Row*>;

int sign(double d) { return d < 0 ? -1 : (d > 0 ? 1 : 0); }

template <class T>
int cmp3(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<Timestamp> as_instant(const Value& v) {
  switch (v.kind()) {
    case ValueKind::timestamp: return v.as_timestamp();
    case ValueKind::date: return start_of(v.as_date());
    case ValueKind::text: {
      if (auto t = parse_timestamp(v.as_text())) return t;
      if (auto d = parse_date(v.as_text())) return start_of(*d);
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

struct ValuesLess {
  bool operator()(const Row& a, const Row& b) const {
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      int c = compare_for_sort(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return a.size() < b.size();
  }
};

Value truth(std::optional<bool> b) { return b ? Value(*b) : Value(); }

std::optional<bool> to_bool(const Value& v) {
  if (v.is_null()) return std::nullopt;
  if (v.kind() != ValueKind::boolean) throw ExecError("expected a boolean, got " + std::string(to_string(v.kind())));
  return v.as_bool();
}

Value numeric_result(double d) { return std::isfinite(d) ? Value(d) : Value(); }

Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  if (op == "||") return Value(a.to_string() + b.to_string());
  ValueKind ka = a.kind(), kb = b.kind();
  if (ka == ValueKind::integer && kb == ValueKind::integer) {
    int64_t x = a.as_int(), y = b.as_int();
    if (op == "+") return Value(x + y);
    if (op == "-") return Value(x - y);
    if (op == "*") return Value(x * y);
    if (op == "/") return y == 0 ? Value() : Value(x / y);
    if (op == "%") return y == 0 ? Value() : Value(x % y);
  }
  if (a.is_numeric() && b.is_numeric()) {
    double x = a.to_double(), y = b.to_double();
    if (op == "+") return numeric_result(x + y);
    if (op == "-") return numeric_result(x - y);
    if (op == "*") return numeric_result(x * y);
    if (op == "/") return y == 0 ? Value() : numeric_result(x / y);
    if (op == "%") return y == 0 ? Value() : numeric_result(std::fmod(x, y));
  }
  if (ka == ValueKind::interval && kb == ValueKind::interval) {
    if (op == "+") return Value(Interval{a.as_interval().ms + b.as_interval().ms});
    if (op == "-") return Value(Interval{a.as_interval().ms - b.as_interval().ms});
  }
  if (ka == ValueKind::interval && b.is_numeric()) {
    double y = b.to_double();
    if (op == "*") return Value(Interval{static_cast<int64_t>(std::llround(a.as_interval().ms * y))});
    if (op == "/") return y == 0 ? Value() : Value(Interval{static_cast<int64_t>(std::llround(a.as_interval().ms / y))});
  }
  if (a.is_numeric() && kb == ValueKind::interval && op == "*") {
    return Value(Interval{static_cast<int64_t>(std::llround(b.as_interval().ms * a.to_double()))});
  }
  if (ka == ValueKind::date && kb == ValueKind::date && op == "-") {
    return Value(static_cast<int64_t>(a.as_date().days - b.as_date().days));
  }
  if (ka == ValueKind::date && kb == ValueKind::integer && (op == "+" || op == "-")) {
    int64_t n = op == "+" ? b.as_int() : -b.as_int();
    return Value(Date{static_cast<int32_t>(a.as_date().days + n)});
  }
  auto ta = as_instant(a), tb = as_instant(b);
  if (op == "-" && ta && tb && (ka == ValueKind::timestamp || kb == ValueKind::timestamp)) {
    return Value(Interval{ta->ms - tb->ms});
  }
  if (ta && kb == ValueKind::interval && (op == "+" || op == "-")) {
    int64_t d = op == "+" ? b.as_interval().ms : -b.as_interval().ms;
    return Value(Timestamp{ta->ms + d});
  }
  if (ka == ValueKind::interval && tb && op == "+") return Value(Timestamp{tb->ms + a.as_interval().ms});
  throw ExecError("operator " + op + " is not defined for " + std::string(to_string(ka)) + " and " +
                  std::string(to_string(kb)));
}

Value extract(const std::string& field, const Value& v) {
  if (v.is_null()) return Value();
  if (v.kind() == ValueKind::interval) {
    int64_t ms = v.as_interval().ms;
    if (field == "epoch") return Value(static_cast<double>(ms) / 1000.0);
    int64_t s = ms / 1000;
    if (field == "day") return Value(s / 86400);
    if (field == "hour") return Value((s / 3600) % 24);
    if (field == "minute") return Value((s / 60) % 60);
    if (field == "second") return Value(static_cast<double>(ms % 60000) / 1000.0);
    throw ExecError("EXTRACT(" + field + ") is not defined for intervals");
  }
  auto t = as_instant(v);
  if (!t) throw ExecError("cannot EXTRACT from '" + v.to_string() + "'");
  if (field == "epoch") return Value(static_cast<double>(t->ms) / 1000.0);
  using namespace std::chrono;
  sys_time<milliseconds> tp{milliseconds{t->ms}};
  sys_days day = floor<days>(tp);
  year_month_day ymd{day};
  hh_mm_ss<milliseconds> hms{tp - day};
  if (field == "year") return Value(static_cast<int64_t>(static_cast<int>(ymd.year())));
  if (field == "month") return Value(static_cast<int64_t>(static_cast<unsigned>(ymd.month())));
  if (field == "day") return Value(static_cast<int64_t>(static_cast<unsigned>(ymd.day())));
  if (field == "quarter") return Value(static_cast<int64_t>((static_cast<unsigned>(ymd.month()) - 1) / 3 + 1));
  if (field == "hour") return Value(static_cast<int64_t>(hms.hours().count()));
  if (field == "minute") return Value(static_cast<int64_t>(hms.minutes().count()));
  if (field == "second") {
    return Value(static_cast<double>(hms.seconds().count()) + static_cast<double>(hms.subseconds().count()) / 1000.0);
  }
  if (field == "dow") return Value(static_cast<int64_t>(weekday{day}.c_encoding()));
  if (field == "doy") {
    sys_days jan1{ymd.year() / January / 1};
    return Value(static_cast<int64_t>((day - jan1).count() + 1));
  }
  throw ExecError("EXTRACT field " + field + " is not supported");
}

}  // namespace

std::optional<int> sql_compare(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  ValueKind ka = a.kind(), kb = b.kind();
  if (a.is_numeric() && b.is_numeric()) {
    if (ka == ValueKind::integer && kb == ValueKind::integer) return cmp3(a.as_int(), b.as_int());
    return sign(a.to_double() - b.to_double());
  }
  if (ka == kb) {
    switch (ka) {
      case ValueKind::boolean: return cmp3(a.as_bool(), b.as_bool());
      case ValueKind::text: return sign(static_cast<double>(a.as_text().compare(b.as_text())));
      case ValueKind::date: return cmp3(a.as_date(), b.as_date());
      case ValueKind::timestamp: return cmp3(a.as_timestamp(), b.as_timestamp());
      case ValueKind::interval: return cmp3(a.as_interval(), b.as_interval());
      default: break;
    }
  }
  bool a_time = ka == ValueKind::date || ka == ValueKind::timestamp;
  bool b_time = kb == ValueKind::date || kb == ValueKind::timestamp;
  if (a_time || b_time) {
    auto ta = as_instant(a), tb = as_instant(b);
    if (ta && tb) return cmp3(ta->ms, tb->ms);
    throw ExecError("cannot compare " + a.to_string() + " with " + b.to_string());
  }
  // permissive: remaining mixes (number against text, tax code against id) compare string forms
  return sign(static_cast<double>(a.to_string().compare(b.to_string())));
}

bool like_match(std::string_view text, std::string_view pattern, bool ci) {
  std::string t = ci ? lower_ascii(text) : std::string(text);
  std::string p = ci ? lower_ascii(pattern) : std::string(pattern);
  // tokenized pattern: '%' any run, '_' any char, otherwise literal (backslash escapes)
  struct Tok {
    char kind;  // '%', '_', 'c'
    char c;
  };
  std::vector<Tok> toks;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == '\\' && i + 1 < p.size()) toks.push_back({'c', p[++i]});
    else if (p[i] == '%') toks.push_back({'%', 0});
    else if (p[i] == '_') toks.push_back({'_', 0});
    else toks.push_back({'c', p[i]});
  }
  size_t ti = 0, pi = 0, star_p = std::string::npos, star_t = 0;
  while (ti < t.size()) {
    if (pi < toks.size() && toks[pi].kind == '%') {
      star_p = pi++;
      star_t = ti;
    } else if (pi < toks.size() && (toks[pi].kind == '_' || toks[pi].c == t[ti])) {
      ++pi;
      ++ti;
    } else if (star_p != std::string::npos) {
      pi = star_p + 1;
      ti = ++star_t;
    } else {
      return false;
    }
  }
  while (pi < toks.size() && toks[pi].kind == '%') ++pi;
  return pi == toks.size();
}

namespace {

class Executor {
 public:
  explicit Executor(const CanonicalStore& store) : store_(store) {}

  std::vector<Row> query(const Query& q, int level) {
    std::vector<OutRow> rows;
    if (q.rest.empty()) {
      rows = select(q.first, level, &q.order_by);
    } else {
      rows = select(q.first, level, nullptr);
      for (const auto& b : q.rest) {
        auto more = select(b.select, level, nullptr);
        rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
        if (b.op == SetOp::union_distinct) dedupe(rows);
      }
      for (auto& r : rows) {
        r.keys.clear();
        for (const auto& o : q.order_by) r.keys.push_back(r.values.at(o.expr.info.output_index));
      }
    }
    if (!q.order_by.empty()) {
      std::stable_sort(rows.begin(), rows.end(), [&](const OutRow& a, const OutRow& b) {
        for (size_t i = 0; i < q.order_by.size(); ++i) {
          int c = compare_for_sort(a.keys[i], b.keys[i]);
          if (c != 0) return q.order_by[i].descending ? c > 0 : c < 0;
        }
        return false;
      });
    }
    std::vector<Row> out;
    out.reserve(rows.size());
    size_t limit = SIZE_MAX;
    if (q.limit) {
      Value l = eval(*q.limit);
      if (l.kind() == ValueKind::integer && l.as_int() >= 0) limit = static_cast<size_t>(l.as_int());
    }
    for (auto& r : rows) {
      if (out.size() >= limit) break;
      out.push_back(std::move(r.values));
    }
    return out;
  }

 private:
  struct OutRow {
    Row values;
    Row keys;
  };

  struct Frame {
    const Tuple* tuple = nullptr;
    const std::vector<Tuple>* group = nullptr;
  };

  using Memo = std::map<Row, Value, ValuesLess>;
  using SetMemo = std::map<Row, std::vector<Value>, ValuesLess>;

  static void dedupe(std::vector<OutRow>& rows) {
    std::set<Row, ValuesLess> seen;
    std::vector<OutRow> kept;
    for (auto& r : rows) {
      if (seen.insert(r.values).second) kept.push_back(std::move(r));
    }
    rows = std::move(kept);
  }

  const std::vector<Row>& base_rows(const std::string& relation) {
    auto it = base_.find(relation);
    if (it != base_.end()) return it->second;
    std::vector<Row> rows;
    bool found = false;
    for_each_record_type([&]<class R>() {
      if (R::kRelation != relation) return;
      found = true;
      const auto& t = store_.template table<R>();
      rows.reserve(t.size());
      for (const auto& [k, r] : t) rows.push_back(to_row(r));
    });
    if (!found) throw ExecError("relation " + relation + " is not stored");
    return base_.emplace(relation, std::move(rows)).first->second;
  }

  Frame& frame(int level) {
    if (static_cast<int>(frames_.size()) <= level) frames_.resize(level + 1);
    return frames_[level];
  }

  const std::vector<Row>& source_rows(const TableRef& t, int level) {
    if (!t.subquery) return base_rows(t.relation);
    derived_.push_back(query(*t.subquery, level + 1));
    return derived_.back();
  }

  std::vector<Tuple> join(const Select& s, int level) {
    std::vector<Tuple> tuples{Tuple{}};
    auto extend = [&](const std::vector<Row>& rows, const Join* j) {
      std::vector<Tuple> next;
      for (const auto& t : tuples) {
        bool matched = false;
        Tuple cand = t;
        cand.push_back(nullptr);
        for (const auto& r : rows) {
          cand.back() = &r;
          if (j && j->on) {
            frame(level) = Frame{&cand, nullptr};
            if (to_bool(eval(*j->on)) != true) continue;
          }
          matched = true;
          next.push_back(cand);
        }
        if (!matched && j && j->kind == JoinKind::left) {
          cand.back() = nullptr;
          next.push_back(cand);
        }
      }
      tuples = std::move(next);
    };
    for (const auto& fi : s.from) {
      extend(source_rows(fi.table, level), nullptr);
      for (const auto& j : fi.joins) extend(source_rows(j.table, level), &j);
    }
    return tuples;
  }

  std::vector<OutRow> select(const Select& s, int level, const std::vector<OrderItem>* order) {
    std::vector<Tuple> tuples = join(s, level);
    if (s.where) {
      std::vector<Tuple> kept;
      for (auto& t : tuples) {
        frame(level) = Frame{&t, nullptr};
        if (to_bool(eval(*s.where)) == true) kept.push_back(std::move(t));
      }
      tuples = std::move(kept);
    }

    std::vector<OutRow> out;
    auto emit = [&]() {
      OutRow r;
      for (const auto& item : s.items) r.values.push_back(eval(item.expr));
      if (order) {
        for (const auto& o : *order) {
          r.keys.push_back(o.expr.info.output_index >= 0 ? r.values[o.expr.info.output_index] : eval(o.expr));
        }
      }
      out.push_back(std::move(r));
    };

    if (!s.info.aggregated) {
      for (const auto& t : tuples) {
        frame(level) = Frame{&t, nullptr};
        emit();
      }
    } else {
      std::vector<std::vector<Tuple>> groups;
      if (s.group_by.empty()) {
        groups.push_back(std::move(tuples));
      } else {
        std::map<Row, size_t, ValuesLess> index;
        for (auto& t : tuples) {
          frame(level) = Frame{&t, nullptr};
          Row key;
          for (const auto& g : s.group_by) key.push_back(eval(g));
          auto [it, fresh] = index.emplace(std::move(key), groups.size());
          if (fresh) groups.emplace_back();
          groups[it->second].push_back(std::move(t));
        }
      }
      Tuple empty;
      for (const auto& g : groups) {
        frame(level) = Frame{g.empty() ? &empty : &g.front(), &g};
        emit();
      }
    }
    if (s.distinct) dedupe(out);
    return out;
  }

  Value column(const Expr& e) {
    const auto& b = e.info.binding;
    if (b.level < 0 || b.level >= static_cast<int>(frames_.size()) || !frames_[b.level].tuple) {
      throw ExecError("column " + e.name + " is not bound");
    }
    const Tuple& t = *frames_[b.level].tuple;
    if (b.source >= static_cast<int>(t.size())) return Value();  // representative of an empty group
    const Row* row = t[b.source];
    return row ? (*row)[b.column] : Value();
  }

  Row outer_key(const Expr& e) {
    Row key;
    for (const auto& b : e.info.outer_refs) {
      Expr probe;
      probe.kind = ExprKind::column;
      probe.info.binding = b;
      key.push_back(column(probe));
    }
    return key;
  }

  std::vector<Row> run_subquery(const Expr& e) {
    // frames above the enclosing level are scratch space for the subquery
    std::vector<Frame> saved(frames_.begin() + std::min<size_t>(frames_.size(), e.info.level + 1), frames_.end());
    auto rows = query(*e.subquery, e.info.level + 1);
    frames_.resize(e.info.level + 1);
    frames_.insert(frames_.end(), saved.begin(), saved.end());
    return rows;
  }

  Value subquery_value(const Expr& e) {
    Row key = outer_key(e);
    auto& memo = memo_[&e];
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    auto rows = run_subquery(e);
    Value v;
    if (e.kind == ExprKind::exists) {
      v = Value(!rows.empty());
    } else {
      if (rows.size() > 1) throw ExecError("more than one row returned by a subquery used as an expression");
      if (!rows.empty()) v = rows[0].at(0);
    }
    memo.emplace(std::move(key), v);
    return v;
  }

  const std::vector<Value>& subquery_set(const Expr& e) {
    Row key = outer_key(e);
    auto& memo = set_memo_[&e];
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Value> vals;
    for (auto& r : run_subquery(e)) vals.push_back(std::move(r.at(0)));
    return memo.emplace(std::move(key), std::move(vals)).first->second;
  }

  static Value membership(const Value& x, const std::vector<Value>& candidates, bool negated) {
    if (x.is_null()) return Value();
    bool saw_null = false;
    for (const auto& c : candidates) {
      auto r = sql_compare(x, c);
      if (!r) saw_null = true;
      else if (*r == 0) return Value(!negated);
    }
    if (saw_null) return Value();
    return Value(negated);
  }

  Value aggregate(const Expr& e) {
    const Expr& arg = e.args.at(0);
    int level = e.info.level;
    if (level < 0 || level >= static_cast<int>(frames_.size()) || !frames_[level].group) {
      throw ExecError("aggregate " + e.name + " evaluated outside a group");
    }
    Frame saved = frames_[level];
    const auto& group = *saved.group;
    if (arg.kind == ExprKind::star) return Value(static_cast<int64_t>(group.size()));
    std::vector<Value> vals;
    for (const auto& t : group) {
      frames_[level] = Frame{&t, nullptr};
      Value v = eval(arg);
      if (!v.is_null()) vals.push_back(std::move(v));
    }
    frames_[level] = saved;
    if (e.distinct) {
      std::set<Row, ValuesLess> seen;
      std::vector<Value> uniq;
      for (auto& v : vals) {
        if (seen.insert(Row{v}).second) uniq.push_back(std::move(v));
      }
      vals = std::move(uniq);
    }
    const std::string& fn = e.name;
    if (fn == "count") return Value(static_cast<int64_t>(vals.size()));
    if (vals.empty()) return Value();
    if (fn == "min" || fn == "max") {
      Value best = vals[0];
      for (const auto& v : vals) {
        int c = compare_for_sort(v, best);
        if ((fn == "min" && c < 0) || (fn == "max" && c > 0)) best = v;
      }
      return best;
    }
    if (vals[0].kind() == ValueKind::interval) {
      int64_t total = 0;
      for (const auto& v : vals) total += v.as_interval().ms;
      if (fn == "sum") return Value(Interval{total});
      return Value(Interval{static_cast<int64_t>(std::llround(static_cast<double>(total) / vals.size()))});
    }
    bool all_int = std::all_of(vals.begin(), vals.end(), [](const Value& v) { return v.kind() == ValueKind::integer; });
    for (const auto& v : vals) {
      if (!v.is_numeric()) throw ExecError(fn + " over non-numeric value '" + v.to_string() + "'");
    }
    if (fn == "sum" && all_int) {
      int64_t total = 0;
      for (const auto& v : vals) total += v.as_int();
      return Value(total);
    }
    double total = 0;
    for (const auto& v : vals) total += v.to_double();
    if (fn == "sum") return Value(total);
    return Value(total / static_cast<double>(vals.size()));
  }

  Value function(const Expr& e) {
    if (e.info.aggregate) return aggregate(e);
    const std::string& fn = e.name;
    if (fn == "coalesce") {
      for (const auto& a : e.args) {
        Value v = eval(a);
        if (!v.is_null()) return v;
      }
      return Value();
    }
    std::vector<Value> args;
    for (const auto& a : e.args) args.push_back(eval(a));
    if (args.empty()) throw ExecError(fn + " needs an argument");
    if (args[0].is_null()) return Value();
    if (fn == "round") {
      int digits = 0;
      if (args.size() > 1) {
        if (args[1].is_null()) return Value();
        digits = static_cast<int>(args[1].to_double());
      }
      if (!args[0].is_numeric()) throw ExecError("round over non-numeric value");
      return Value(round_half_up(args[0].to_double(), digits));
    }
    if (fn == "abs") {
      const Value& v = args[0];
      if (v.kind() == ValueKind::integer) return Value(v.as_int() < 0 ? -v.as_int() : v.as_int());
      if (v.kind() == ValueKind::interval) return Value(Interval{std::abs(v.as_interval().ms)});
      if (v.kind() == ValueKind::decimal) return Value(Decimal{std::abs(v.as_decimal().unscaled), v.as_decimal().scale});
      return Value(std::fabs(v.to_double()));
    }
    if (fn == "lower") return Value(lower_ascii(args[0].to_string()));
    if (fn == "upper") {
      std::string s = args[0].to_string();
      for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return Value(s);
    }
    if (fn == "length") return Value(static_cast<int64_t>(args[0].to_string().size()));
    throw ExecError("function " + fn + " is not supported");
  }

  Value eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::literal: return e.value;
      case ExprKind::param: throw ExecError("unbound parameter :" + e.name);
      case ExprKind::column: return column(e);
      case ExprKind::star: throw ExecError("* is not a value");
      case ExprKind::unary: {
        Value v = eval(e.args[0]);
        if (e.name == "NOT") {
          auto b = to_bool(v);
          return b ? Value(!*b) : Value();
        }
        if (v.is_null() || e.name == "+") return v;
        switch (v.kind()) {
          case ValueKind::integer: return Value(-v.as_int());
          case ValueKind::real: return Value(-v.as_real());
          case ValueKind::decimal: return Value(Decimal{-v.as_decimal().unscaled, v.as_decimal().scale});
          case ValueKind::interval: return Value(Interval{-v.as_interval().ms});
          default: throw ExecError("cannot negate " + v.to_string());
        }
      }
      case ExprKind::binary: {
        const std::string& op = e.name;
        if (op == "AND") {
          auto a = to_bool(eval(e.args[0]));
          if (a == false) return Value(false);
          auto b = to_bool(eval(e.args[1]));
          if (b == false) return Value(false);
          if (a && b) return Value(true);
          return Value();
        }
        if (op == "OR") {
          auto a = to_bool(eval(e.args[0]));
          if (a == true) return Value(true);
          auto b = to_bool(eval(e.args[1]));
          if (b == true) return Value(true);
          if (a && b) return Value(false);
          return Value();
        }
        Value a = eval(e.args[0]);
        Value b = eval(e.args[1]);
        if (op == "=" || op == "<>" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") {
          auto c = sql_compare(a, b);
          if (!c) return Value();
          if (op == "=") return Value(*c == 0);
          if (op == "<>" || op == "!=") return Value(*c != 0);
          if (op == "<") return Value(*c < 0);
          if (op == "<=") return Value(*c <= 0);
          if (op == ">") return Value(*c > 0);
          return Value(*c >= 0);
        }
        return arithmetic(op, a, b);
      }
      case ExprKind::function: return function(e);
      case ExprKind::extract: return extract(e.name, eval(e.args[0]));
      case ExprKind::exists: {
        Value v = subquery_value(e);
        return e.negated ? Value(!v.as_bool()) : v;
      }
      case ExprKind::subquery: return subquery_value(e);
      case ExprKind::in_subquery: {
        Value x = eval(e.args[0]);
        return membership(x, subquery_set(e), e.negated);
      }
      case ExprKind::in_list: {
        Value x = eval(e.args[0]);
        std::vector<Value> cands;
        for (size_t i = 1; i < e.args.size(); ++i) cands.push_back(eval(e.args[i]));
        return membership(x, cands, e.negated);
      }
      case ExprKind::between: {
        Value x = eval(e.args[0]);
        auto lo = sql_compare(x, eval(e.args[1]));
        auto hi = sql_compare(x, eval(e.args[2]));
        std::optional<bool> a = lo ? std::optional<bool>(*lo >= 0) : std::nullopt;
        std::optional<bool> b = hi ? std::optional<bool>(*hi <= 0) : std::nullopt;
        std::optional<bool> r;
        if (a == false || b == false) r = false;
        else if (a && b) r = true;
        if (r && e.negated) r = !*r;
        return truth(r);
      }
      case ExprKind::like: {
        Value x = eval(e.args[0]);
        Value p = eval(e.args[1]);
        if (x.is_null() || p.is_null()) return Value();
        bool m = like_match(x.to_string(), p.to_string(), e.name == "ILIKE");
        return Value(e.negated ? !m : m);
      }
      case ExprKind::is_null: {
        bool n = eval(e.args[0]).is_null();
        return Value(e.negated ? !n : n);
      }
    }
    throw ExecError("unsupported expression");
  }

  const CanonicalStore& store_;
  std::unordered_map<std::string, std::vector<Row>> base_;
  std::deque<std::vector<Row>> derived_;
  std::vector<Frame> frames_;
  std::unordered_map<const Expr*, Memo> memo_;
  std::unordered_map<const Expr*, SetMemo> set_memo_;
};

std::string csv_field(const Value& v) {
  if (v.is_null()) return "";
  std::string s = v.to_string();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json ResultTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(value_to_json(v));
    rs.push_back(std::move(row));
  }
  return {{"columns", columns}, {"rows", std::move(rs)}, {"truncated", truncated}};
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_field(Value(columns[i]));
  out += "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
    out += "\n";
  }
  return out;
}

ResultTable execute(const ResolvedQuery& q, const CanonicalStore& store, const ExecOptions& opts) {
  ResultTable t;
  for (const auto& c : q.columns) t.columns.push_back(c.name);
  Executor ex(store);
  t.rows = ex.query(q.query, 0);
  if (opts.row_limit && t.rows.size() > *opts.row_limit) {
    t.rows.resize(*opts.row_limit);
    t.truncated = true;
  }
  return t;
}

ResultTable execute(const ResolvedPlan& plan, const CanonicalStore& store, const ExecOptions& opts) {
  if (plan.statements.size() != 1) throw ExecError("exactly one statement can be executed");
  return execute(plan.statements[0], store, opts);
}

}  // namespace peripartum::sql
