#include "peripartum/sql_resolver.hpp"

#include <algorithm>
#include <climits>

namespace peripartum::sql {

std::string_view to_string(ResolveErrorKind k) {
  switch (k) {
    case ResolveErrorKind::unknown_table: return "unknown_table";
    case ResolveErrorKind::unknown_column: return "unknown_column";
    case ResolveErrorKind::ambiguous_column: return "ambiguous_column";
    case ResolveErrorKind::duplicate_alias: return "duplicate_alias";
    case ResolveErrorKind::aggregate_misuse: return "aggregate_misuse";
    case ResolveErrorKind::type_mismatch: return "type_mismatch";
    case ResolveErrorKind::unknown_function: return "unknown_function";
    case ResolveErrorKind::unbound_parameter: return "unbound_parameter";
    case ResolveErrorKind::invalid: return "invalid";
  }
  return "";
}

ResolveError::ResolveError(ResolveErrorKind kind, std::string message, Span at)
    : std::runtime_error("line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " +
                         message),
      kind_(kind),
      span_(at) {}

namespace {

using K = ResolveErrorKind;

[[noreturn]] void fail(K kind, std::string msg, const Span& at) { throw ResolveError(kind, std::move(msg), at); }

struct Source {
  std::string name;
  const Relation* rel = nullptr;
  std::vector<OutputColumn> derived;

  size_t size() const { return rel ? rel->columns.size() : derived.size(); }
  std::string column_name(size_t i) const { return rel ? rel->columns[i].name : derived[i].name; }
  int find(const std::string& col) const {
    int hit = -1;
    for (size_t i = 0; i < size(); ++i) {
      if (column_name(i) == col) {
        if (hit >= 0) return -2;  // duplicate output name in a derived table
        hit = static_cast<int>(i);
      }
    }
    return hit;
  }
  OutputColumn describe(size_t i) const {
    if (!rel) return derived[i];
    const Column& c = rel->columns[i];
    return OutputColumn{c.name, logical_type_of(c.type), c.family, rel->name, c.name};
  }
};

struct Scope {
  const Scope* parent = nullptr;
  int level = 0;
  std::vector<Source> sources;
  size_t visible = SIZE_MAX;
};

enum class Clause { select_list, where, group_by, on, order_by, limit, from };

struct Ctx {
  Clause clause = Clause::select_list;
  bool in_aggregate = false;
  bool saw_aggregate = false;
};

std::string_view type_name(LogicalType t) { return to_string(t); }

bool comparable(LogicalType a, LogicalType b) {
  using L = LogicalType;
  if (a == L::null || b == L::null || a == b) return true;
  auto either = [&](L x, L y) { return (a == x && b == y) || (a == y && b == x); };
  // permissive: numbers compare against text by string form
  return either(L::numeric, L::text) || either(L::text, L::date) || either(L::text, L::timestamp) ||
         either(L::date, L::timestamp) || either(L::text, L::interval);
}

bool same_expr(const Expr& a, const Expr& b) {
  if (a.kind == ExprKind::column && b.kind == ExprKind::column) return a.info.binding == b.info.binding;
  if (a.kind != b.kind || a.name != b.name || a.value != b.value || a.distinct != b.distinct ||
      a.negated != b.negated || a.args.size() != b.args.size() || !(a.subquery == b.subquery)) {
    return false;
  }
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (!same_expr(a.args[i], b.args[i])) return false;
  }
  return true;
}

struct GroupInfo {
  int level = 0;
  std::vector<const Expr*> exprs;
  std::set<ColumnBinding> cols;
  std::set<int> whole_sources;  // every primary-key column grouped
};

class Resolver {
 public:
  explicit Resolver(const Catalog& cat) : cat_(cat) {}

  std::vector<OutputColumn> query(Query& q, const Scope* parent, int level) {
    if (q.rest.empty()) {
      auto cols = select(q.first, parent, level, &q.order_by);
      limit(q);
      return cols;
    }
    auto cols = select(q.first, parent, level, nullptr);
    for (auto& b : q.rest) {
      auto other = select(b.select, parent, level, nullptr);
      if (other.size() != cols.size()) {
        fail(K::invalid,
             "each UNION query must have the same number of columns (" + std::to_string(cols.size()) + " vs " +
                 std::to_string(other.size()) + ")",
             b.select.span);
      }
      for (size_t i = 0; i < cols.size(); ++i) {
        LogicalType a = cols[i].type, o = other[i].type;
        if (a == LogicalType::null) {
          cols[i].type = o;
        } else if (o != LogicalType::null && a != o) {
          fail(K::type_mismatch,
               "UNION types " + std::string(type_name(a)) + " and " + std::string(type_name(o)) +
                   " cannot be matched",
               b.select.span);
        }
        if (cols[i].relation != other[i].relation || cols[i].column != other[i].column) {
          cols[i].relation.clear();
          cols[i].column.clear();
        }
        if (cols[i].family != other[i].family) cols[i].family = KeyFamily::plain;
      }
    }
    for (auto& o : q.order_by) {
      int idx = output_reference(o.expr, cols);
      if (idx < 0) {
        fail(K::invalid, "ORDER BY on a UNION result must name an output column", o.expr.span);
      }
      o.expr.info.output_index = idx;
      o.expr.info.type = cols[idx].type;
    }
    limit(q);
    return cols;
  }

 private:
  void limit(Query& q) {
    if (!q.limit) return;
    Scope empty;
    Ctx ctx{Clause::limit};
    expr(*q.limit, empty, ctx);
    if (q.limit->kind != ExprKind::literal || q.limit->value.kind() != ValueKind::integer ||
        q.limit->value.as_int() < 0) {
      fail(K::invalid, "LIMIT must be a non-negative integer literal", q.limit->span);
    }
  }

  /// Output column named by a bare identifier or ordinal, or -1.
  static int output_reference(const Expr& e, const std::vector<OutputColumn>& cols) {
    if (e.kind == ExprKind::literal && e.value.kind() == ValueKind::integer) {
      int64_t n = e.value.as_int();
      if (n < 1 || n > static_cast<int64_t>(cols.size())) {
        fail(K::invalid, "ORDER BY position " + std::to_string(n) + " is not in select list", e.span);
      }
      return static_cast<int>(n - 1);
    }
    if (e.kind != ExprKind::column || !e.qualifier.empty()) return -1;
    int hit = -1;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (cols[i].name == e.name) {
        if (hit >= 0) fail(K::ambiguous_column, "ORDER BY \"" + e.name + "\" is ambiguous", e.span);
        hit = static_cast<int>(i);
      }
    }
    return hit;
  }

  Source table_source(TableRef& t, const Scope* parent, int level) {
    Source s;
    if (t.subquery) {
      s.derived = query(*t.subquery, parent, level + 1);
      for (auto& c : s.derived) {
        c.relation.clear();
        c.column.clear();
      }
      s.name = t.alias;
    } else {
      s.rel = cat_.find(t.relation);
      if (!s.rel) fail(K::unknown_table, "relation \"" + t.relation + "\" does not exist", t.span);
      s.name = t.visible_name();
    }
    return s;
  }

  void add_source(Scope& scope, Source s, const Span& at, SelectInfo& info) {
    if (!s.name.empty()) {
      for (const auto& o : scope.sources) {
        if (o.name == s.name) fail(K::duplicate_alias, "table name \"" + s.name + "\" specified more than once", at);
      }
    }
    info.source_relations.push_back(s.rel ? s.rel->name : "");
    scope.sources.push_back(std::move(s));
  }

  std::vector<OutputColumn> select(Select& s, const Scope* parent, int level, std::vector<OrderItem>* order) {
    Scope scope;
    scope.parent = parent;
    scope.level = level;
    s.info = SelectInfo{};
    s.info.level = level;

    for (auto& fi : s.from) {
      add_source(scope, table_source(fi.table, parent, level), fi.table.span, s.info);
      for (auto& j : fi.joins) {
        add_source(scope, table_source(j.table, parent, level), j.table.span, s.info);
        if (j.on) {
          Ctx ctx{Clause::on};
          expr(*j.on, scope, ctx);
          require_boolean(*j.on, "JOIN/ON");
        }
      }
    }
    scope.visible = SIZE_MAX;

    if (s.where) {
      Ctx ctx{Clause::where};
      expr(*s.where, scope, ctx);
      require_boolean(*s.where, "WHERE");
    }
    for (auto& g : s.group_by) {
      Ctx ctx{Clause::group_by};
      expr(g, scope, ctx);
    }

    // expand stars, resolve items
    std::vector<SelectItem> items;
    bool aggregated = !s.group_by.empty();
    for (auto& item : s.items) {
      if (item.expr.kind == ExprKind::star) {
        bool any = false;
        for (size_t si = 0; si < scope.sources.size(); ++si) {
          const Source& src = scope.sources[si];
          if (!item.expr.qualifier.empty() && src.name != item.expr.qualifier) continue;
          any = true;
          for (size_t ci = 0; ci < src.size(); ++ci) {
            SelectItem col;
            col.expr.kind = ExprKind::column;
            col.expr.span = item.expr.span;
            col.expr.qualifier = src.name;
            col.expr.name = src.column_name(ci);
            bind(col.expr, level, static_cast<int>(si), static_cast<int>(ci), src);
            items.push_back(std::move(col));
          }
        }
        if (!any) {
          if (item.expr.qualifier.empty()) fail(K::invalid, "SELECT * with no tables specified", item.expr.span);
          fail(K::unknown_table, "missing FROM-clause entry for table \"" + item.expr.qualifier + "\"",
               item.expr.span);
        }
        continue;
      }
      Ctx ctx{Clause::select_list};
      expr(item.expr, scope, ctx);
      aggregated = aggregated || ctx.saw_aggregate;
      items.push_back(std::move(item));
    }
    s.items = std::move(items);

    std::vector<OutputColumn> cols;
    for (const auto& item : s.items) cols.push_back(output_of(item));

    if (order) {
      for (auto& o : *order) {
        int idx = output_reference(o.expr, cols);
        if (idx >= 0) {
          o.expr.info.output_index = idx;
          o.expr.info.type = cols[idx].type;
          continue;
        }
        Ctx ctx{Clause::order_by};
        expr(o.expr, scope, ctx);
        aggregated = aggregated || ctx.saw_aggregate;
      }
    }

    s.info.aggregated = aggregated;
    if (aggregated) {
      GroupInfo g;
      g.level = level;
      for (const auto& e : s.group_by) {
        g.exprs.push_back(&e);
        if (e.kind == ExprKind::column && e.info.binding.level == level) g.cols.insert(e.info.binding);
      }
      for (size_t si = 0; si < scope.sources.size(); ++si) {
        const Source& src = scope.sources[si];
        if (!src.rel) continue;
        bool all = true;
        for (const auto& pk : src.rel->primary_key) {
          ColumnBinding b{level, static_cast<int>(si), src.rel->column_index(pk)};
          if (!g.cols.count(b)) all = false;
        }
        if (all) g.whole_sources.insert(static_cast<int>(si));
      }
      for (const auto& item : s.items) grouped(item.expr, g);
      if (order) {
        for (const auto& o : *order) {
          if (o.expr.info.output_index < 0) grouped(o.expr, g);
        }
      }
    }
    return cols;
  }

  static OutputColumn output_of(const SelectItem& item) {
    const Expr& e = item.expr;
    OutputColumn c;
    c.type = e.info.type;
    c.family = e.info.family;
    if (e.kind == ExprKind::column) {
      c.name = e.name;
      c.relation = e.info.relation;
      c.column = e.info.column;
    } else if (e.kind == ExprKind::function) {
      c.name = e.name;
    } else if (e.kind == ExprKind::extract) {
      c.name = "extract";
    } else if (e.kind == ExprKind::exists) {
      c.name = "exists";
    } else if (e.kind == ExprKind::subquery && e.subquery && !e.subquery->first.items.empty()) {
      c.name = output_of(e.subquery->first.items[0]).name;
    } else {
      c.name = "?column?";
    }
    if (!item.alias.empty()) c.name = item.alias;
    return c;
  }

  static void grouped(const Expr& e, const GroupInfo& g) {
    for (const Expr* ge : g.exprs) {
      if (same_expr(e, *ge)) return;
    }
    switch (e.kind) {
      case ExprKind::column: {
        const auto& b = e.info.binding;
        if (b.level != g.level || g.cols.count(b) || g.whole_sources.count(b.source)) return;
        fail(K::aggregate_misuse,
             "column \"" + (e.qualifier.empty() ? "" : e.qualifier + ".") + e.name +
                 "\" must appear in the GROUP BY clause or be used in an aggregate function",
             e.span);
      }
      case ExprKind::function:
        if (e.info.aggregate) return;
        break;
      case ExprKind::exists:
      case ExprKind::subquery:
      case ExprKind::in_subquery:
        for (const auto& b : e.info.outer_refs) {
          if (b.level == g.level && !g.cols.count(b) && !g.whole_sources.count(b.source)) {
            fail(K::aggregate_misuse, "subquery uses ungrouped column from outer query", e.span);
          }
        }
        break;
      default: break;
    }
    for (const auto& a : e.args) grouped(a, g);
  }

  static void require_boolean(const Expr& e, const char* where) {
    if (e.info.type != LogicalType::boolean && e.info.type != LogicalType::null) {
      fail(K::type_mismatch,
           std::string("argument of ") + where + " must be boolean, not " + std::string(type_name(e.info.type)),
           e.span);
    }
  }

  void bind(Expr& e, int level, int source, int column, const Source& src) {
    OutputColumn d = src.describe(static_cast<size_t>(column));
    e.info.binding = ColumnBinding{level, source, column};
    e.info.type = d.type;
    e.info.family = d.family;
    e.info.relation = d.relation;
    e.info.column = d.column;
  }

  void column(Expr& e, const Scope& scope) {
    bool qualifier_seen = false;
    for (const Scope* sc = &scope; sc; sc = sc->parent) {
      int src_hit = -1, col_hit = -1, hits = 0;
      size_t n = std::min(sc->visible, sc->sources.size());
      for (size_t i = 0; i < n; ++i) {
        const Source& src = sc->sources[i];
        if (!e.qualifier.empty()) {
          if (src.name != e.qualifier) continue;
          qualifier_seen = true;
        }
        int c = src.find(e.name);
        if (c == -2) fail(K::ambiguous_column, "column reference \"" + e.name + "\" is ambiguous", e.span);
        if (c >= 0) {
          ++hits;
          src_hit = static_cast<int>(i);
          col_hit = c;
        }
      }
      if (hits > 1) fail(K::ambiguous_column, "column reference \"" + e.name + "\" is ambiguous", e.span);
      if (hits == 1) {
        bind(e, sc->level, src_hit, col_hit, sc->sources[src_hit]);
        if (sc->level < scope.level) note_outer(e.info.binding);
        return;
      }
      if (qualifier_seen) {
        fail(K::unknown_column, "column " + e.qualifier + "." + e.name + " does not exist", e.span);
      }
    }
    if (!e.qualifier.empty()) {
      fail(K::unknown_table, "missing FROM-clause entry for table \"" + e.qualifier + "\"", e.span);
    }
    fail(K::unknown_column, "column \"" + e.name + "\" does not exist", e.span);
  }

  void note_outer(const ColumnBinding& b) {
    for (auto& [lvl, info] : open_) {
      if (lvl >= b.level &&
          std::find(info->outer_refs.begin(), info->outer_refs.end(), b) == info->outer_refs.end()) {
        info->outer_refs.push_back(b);
      }
    }
  }

  std::vector<OutputColumn> subquery(Expr& e, const Scope& scope) {
    e.info.level = scope.level;
    e.info.outer_refs.clear();
    open_.push_back({scope.level, &e.info});
    auto cols = query(*e.subquery, &scope, scope.level + 1);
    open_.pop_back();
    return cols;
  }

  static bool numeric_like(LogicalType t) { return t == LogicalType::numeric || t == LogicalType::null; }

  void arithmetic(Expr& e) {
    using L = LogicalType;
    L a = e.args[0].info.type, b = e.args[1].info.type;
    const std::string& op = e.name;
    auto bad = [&]() {
      fail(K::type_mismatch,
           "operator does not exist: " + std::string(type_name(a)) + " " + op + " " + std::string(type_name(b)),
           e.span);
    };
    if (op == "||") {
      e.info.type = L::text;
      return;
    }
    if (a == L::null && b == L::null) {
      e.info.type = L::null;
      return;
    }
    if (numeric_like(a) && numeric_like(b)) {
      e.info.type = L::numeric;
      return;
    }
    if (op == "+" || op == "-") {
      if (a == L::timestamp && b == L::timestamp && op == "-") {
        e.info.type = L::interval;
      } else if (a == L::date && b == L::date && op == "-") {
        e.info.type = L::numeric;
      } else if ((a == L::timestamp || a == L::date) && (b == L::interval || b == L::null)) {
        e.info.type = L::timestamp;
      } else if (a == L::interval && (b == L::timestamp || b == L::date) && op == "+") {
        e.info.type = L::timestamp;
      } else if (a == L::date && b == L::numeric) {
        e.info.type = L::date;
      } else if ((a == L::interval || a == L::null) && (b == L::interval || b == L::null)) {
        e.info.type = L::interval;
      } else {
        bad();
      }
      return;
    }
    if ((op == "*" || op == "/") && a == L::interval && numeric_like(b)) {
      e.info.type = L::interval;
      return;
    }
    if (op == "*" && numeric_like(a) && b == L::interval) {
      e.info.type = L::interval;
      return;
    }
    bad();
  }

  void function(Expr& e, const Scope& scope, Ctx& ctx) {
    using L = LogicalType;
    const std::string& fn = e.name;
    if (is_aggregate_name(fn)) {
      if (ctx.clause != Clause::select_list && ctx.clause != Clause::order_by) {
        fail(K::aggregate_misuse, "aggregate functions are not allowed here", e.span);
      }
      if (ctx.in_aggregate) fail(K::aggregate_misuse, "aggregate function calls cannot be nested", e.span);
      if (e.args.size() != 1) fail(K::invalid, fn + " takes exactly one argument", e.span);
      ctx.saw_aggregate = true;
      e.info.aggregate = true;
      e.info.level = scope.level;
      if (e.args[0].kind == ExprKind::star) {
        if (fn != "count" || e.distinct) fail(K::invalid, "* is only allowed in COUNT(*)", e.args[0].span);
        e.info.type = L::numeric;
        return;
      }
      Ctx inner = ctx;
      inner.in_aggregate = true;
      expr(e.args[0], scope, inner);
      L a = e.args[0].info.type;
      if (fn == "count") {
        e.info.type = L::numeric;
      } else if (fn == "sum" || fn == "avg") {
        if (!numeric_like(a) && a != L::interval) {
          fail(K::type_mismatch, "function " + fn + "(" + std::string(type_name(a)) + ") does not exist", e.span);
        }
        e.info.type = a == L::null ? L::numeric : a;
      } else {
        e.info.type = a;
        e.info.family = e.args[0].info.family;
      }
      return;
    }
    for (auto& a : e.args) {
      if (a.kind == ExprKind::star) fail(K::invalid, "* is only allowed in COUNT(*)", a.span);
      expr(a, scope, ctx);
    }
    auto arity = [&](size_t lo, size_t hi) {
      if (e.args.size() < lo || e.args.size() > hi) {
        fail(K::invalid, "wrong number of arguments to " + fn, e.span);
      }
    };
    if (fn == "round") {
      arity(1, 2);
      for (const auto& a : e.args) {
        if (!numeric_like(a.info.type)) {
          fail(K::type_mismatch, "function round(" + std::string(type_name(a.info.type)) + ") does not exist",
               e.span);
        }
      }
      e.info.type = L::numeric;
    } else if (fn == "abs") {
      arity(1, 1);
      if (!numeric_like(e.args[0].info.type) && e.args[0].info.type != L::interval) {
        fail(K::type_mismatch, "function abs(" + std::string(type_name(e.args[0].info.type)) + ") does not exist",
             e.span);
      }
      e.info.type = e.args[0].info.type == L::interval ? L::interval : L::numeric;
    } else if (fn == "lower" || fn == "upper") {
      arity(1, 1);
      e.info.type = L::text;
    } else if (fn == "length") {
      arity(1, 1);
      e.info.type = L::numeric;
    } else if (fn == "coalesce") {
      arity(1, SIZE_MAX);
      L t = L::null;
      for (const auto& a : e.args) {
        if (t == L::null) t = a.info.type;
        else if (!comparable(t, a.info.type)) fail(K::type_mismatch, "COALESCE types cannot be matched", a.span);
      }
      e.info.type = t;
    } else {
      fail(K::unknown_function, "function " + fn + " does not exist", e.span);
    }
  }

  void expr(Expr& e, const Scope& scope, Ctx& ctx) {
    using L = LogicalType;
    switch (e.kind) {
      case ExprKind::literal:
        switch (e.value.kind()) {
          case ValueKind::null: e.info.type = L::null; break;
          case ValueKind::boolean: e.info.type = L::boolean; break;
          case ValueKind::integer:
          case ValueKind::real:
          case ValueKind::decimal: e.info.type = L::numeric; break;
          case ValueKind::date: e.info.type = L::date; break;
          case ValueKind::timestamp: e.info.type = L::timestamp; break;
          case ValueKind::interval: e.info.type = L::interval; break;
          case ValueKind::text: e.info.type = L::text; break;
        }
        return;
      case ExprKind::param:
        fail(K::unbound_parameter, "no value supplied for parameter :" + e.name, e.span);
      case ExprKind::column:
        if (ctx.clause == Clause::limit) fail(K::invalid, "LIMIT cannot reference columns", e.span);
        column(e, scope);
        return;
      case ExprKind::star: fail(K::invalid, "* is not allowed here", e.span);
      case ExprKind::unary:
        expr(e.args[0], scope, ctx);
        if (e.name == "NOT") {
          require_boolean(e.args[0], "NOT");
          e.info.type = L::boolean;
        } else {
          L t = e.args[0].info.type;
          if (!numeric_like(t) && t != L::interval) {
            fail(K::type_mismatch, "operator does not exist: " + e.name + " " + std::string(type_name(t)), e.span);
          }
          e.info.type = t == L::null ? L::numeric : t;
        }
        return;
      case ExprKind::binary: {
        expr(e.args[0], scope, ctx);
        expr(e.args[1], scope, ctx);
        const std::string& op = e.name;
        if (op == "AND" || op == "OR") {
          require_boolean(e.args[0], op.c_str());
          require_boolean(e.args[1], op.c_str());
          e.info.type = L::boolean;
        } else if (op == "=" || op == "<>" || op == "<" || op == "<=" || op == ">" || op == ">=") {
          L a = e.args[0].info.type, b = e.args[1].info.type;
          if (!comparable(a, b)) {
            fail(K::type_mismatch,
                 "operator does not exist: " + std::string(type_name(a)) + " " + op + " " +
                     std::string(type_name(b)),
                 e.span);
          }
          e.info.type = L::boolean;
        } else {
          arithmetic(e);
        }
        return;
      }
      case ExprKind::function: function(e, scope, ctx); return;
      case ExprKind::extract: {
        static const std::set<std::string> fields{"year", "month", "day",   "hour", "minute",
                                                  "second", "epoch", "dow", "doy",  "quarter"};
        if (!fields.count(e.name)) fail(K::invalid, "EXTRACT field \"" + e.name + "\" is not supported", e.span);
        expr(e.args[0], scope, ctx);
        L t = e.args[0].info.type;
        if (t != L::date && t != L::timestamp && t != L::interval && t != L::null && t != L::text) {
          fail(K::type_mismatch, "cannot EXTRACT from " + std::string(type_name(t)), e.span);
        }
        e.info.type = L::numeric;
        return;
      }
      case ExprKind::exists:
        subquery(e, scope);
        e.info.type = L::boolean;
        return;
      case ExprKind::subquery: {
        auto cols = subquery(e, scope);
        if (cols.size() != 1) fail(K::invalid, "subquery must return only one column", e.span);
        e.info.type = cols[0].type;
        e.info.family = cols[0].family;
        return;
      }
      case ExprKind::in_subquery: {
        expr(e.args[0], scope, ctx);
        auto cols = subquery(e, scope);
        if (cols.size() != 1) fail(K::invalid, "subquery has too many columns", e.span);
        if (!comparable(e.args[0].info.type, cols[0].type)) {
          fail(K::type_mismatch, "IN operand types cannot be matched", e.span);
        }
        e.info.type = L::boolean;
        return;
      }
      case ExprKind::in_list:
      case ExprKind::between:
        for (auto& a : e.args) expr(a, scope, ctx);
        for (size_t i = 1; i < e.args.size(); ++i) {
          if (!comparable(e.args[0].info.type, e.args[i].info.type)) {
            fail(K::type_mismatch,
                 "cannot compare " + std::string(type_name(e.args[0].info.type)) + " with " +
                     std::string(type_name(e.args[i].info.type)),
                 e.args[i].span);
          }
        }
        e.info.type = L::boolean;
        return;
      case ExprKind::like:
        for (auto& a : e.args) {
          expr(a, scope, ctx);
          if (a.info.type != L::text && a.info.type != L::null) {
            fail(K::type_mismatch,
                 "operator does not exist: " + std::string(type_name(a.info.type)) + " " + e.name + " text", a.span);
          }
        }
        e.info.type = L::boolean;
        return;
      case ExprKind::is_null:
        expr(e.args[0], scope, ctx);
        e.info.type = L::boolean;
        return;
    }
  }

  const Catalog& cat_;
  std::vector<std::pair<int, ExprInfo*>> open_;
};

// ---- parameters -------------------------------------------------------------

template <class F>
void walk_query(Query& q, F& f);

template <class F>
void walk_expr(Expr& e, F& f) {
  f(e);
  for (auto& a : e.args) walk_expr(a, f);
  if (e.subquery) walk_query(*e.subquery, f);
}

template <class F>
void walk_select(Select& s, F& f) {
  for (auto& it : s.items) walk_expr(it.expr, f);
  for (auto& fi : s.from) {
    if (fi.table.subquery) walk_query(*fi.table.subquery, f);
    for (auto& j : fi.joins) {
      if (j.table.subquery) walk_query(*j.table.subquery, f);
      if (j.on) walk_expr(*j.on, f);
    }
  }
  if (s.where) walk_expr(*s.where, f);
  for (auto& g : s.group_by) walk_expr(g, f);
}

template <class F>
void walk_query(Query& q, F& f) {
  walk_select(q.first, f);
  for (auto& b : q.rest) walk_select(b.select, f);
  for (auto& o : q.order_by) walk_expr(o.expr, f);
  if (q.limit) walk_expr(*q.limit, f);
}

}  // namespace

ResolvedQuery resolve_query(const Query& q, const Catalog& catalog) {
  ResolvedQuery out;
  out.query = q;
  out.columns = Resolver(catalog).query(out.query, nullptr, 0);
  return out;
}

ResolvedPlan resolve(const SqlAst& ast, const Catalog& catalog) {
  ResolvedPlan plan;
  for (const auto& q : ast.statements) plan.statements.push_back(resolve_query(q, catalog));
  return plan;
}

std::set<std::string> parameter_names(const Query& q) {
  std::set<std::string> out;
  Query copy = q;
  auto f = [&](Expr& e) {
    if (e.kind == ExprKind::param) out.insert(e.name);
  };
  walk_query(copy, f);
  return out;
}

Query bind_params(const Query& q, const Params& params) {
  Query out = q;
  auto f = [&](Expr& e) {
    if (e.kind != ExprKind::param) return;
    auto it = params.find(e.name);
    if (it == params.end()) fail(K::unbound_parameter, "no value supplied for parameter :" + e.name, e.span);
    e.kind = ExprKind::literal;
    e.value = it->second;
    e.name.clear();
  };
  walk_query(out, f);
  return out;
}

}  // namespace peripartum::sql
