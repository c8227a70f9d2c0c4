#include "peripartum/sql_guard.hpp"

#include <algorithm>

#include "peripartum/sql_parser.hpp"

namespace peripartum::sql {

namespace {

int expr_depth(const Expr& e) {
  int d = e.subquery ? 1 + subquery_depth(*e.subquery) : 0;
  for (const auto& a : e.args) d = std::max(d, expr_depth(a));
  return d;
}

int select_depth(const Select& s) {
  int d = 0;
  auto table = [&](const TableRef& t) {
    if (t.subquery) d = std::max(d, 1 + subquery_depth(*t.subquery));
  };
  for (const auto& it : s.items) d = std::max(d, expr_depth(it.expr));
  for (const auto& fi : s.from) {
    table(fi.table);
    for (const auto& j : fi.joins) {
      table(j.table);
      if (j.on) d = std::max(d, expr_depth(*j.on));
    }
  }
  if (s.where) d = std::max(d, expr_depth(*s.where));
  for (const auto& g : s.group_by) d = std::max(d, expr_depth(g));
  return d;
}

// Visits every expression node, descending into subqueries.
template <class F>
void deep_walk(const Expr& e, F& f);

template <class F>
void deep_walk(const Query& q, F& f) {
  auto sel = [&](const Select& s) {
    for (const auto& it : s.items) deep_walk(it.expr, f);
    for (const auto& fi : s.from) {
      if (fi.table.subquery) deep_walk(*fi.table.subquery, f);
      for (const auto& j : fi.joins) {
        if (j.table.subquery) deep_walk(*j.table.subquery, f);
        if (j.on) deep_walk(*j.on, f);
      }
    }
    if (s.where) deep_walk(*s.where, f);
    for (const auto& g : s.group_by) deep_walk(g, f);
  };
  sel(q.first);
  for (const auto& b : q.rest) sel(b.select);
  for (const auto& o : q.order_by) deep_walk(o.expr, f);
}

template <class F>
void deep_walk(const Expr& e, F& f) {
  f(e);
  for (const auto& a : e.args) deep_walk(a, f);
  if (e.subquery) deep_walk(*e.subquery, f);
}

bool is_column(const Expr& e, std::string_view rel, std::string_view col) {
  return e.kind == ExprKind::column && e.info.relation == rel && e.info.column == col;
}

// ---- L1 ---------------------------------------------------------------------

void lint_l1(const Select& s, std::vector<LintFinding>& out) {
  int level = s.info.level;
  for (const auto& item : s.items) {
    const Expr& e = item.expr;
    if (!is_column(e, "delivery_with_labor", "motivation") || e.info.binding.level != level) continue;
    int source = e.info.binding.source;
    bool filtered = false;
    auto look = [&](const Expr& x) {
      if (is_column(x, "delivery_with_labor", "delivery_subtype") && x.info.binding.level == level &&
          x.info.binding.source == source) {
        filtered = true;
      }
    };
    if (s.where) deep_walk(*s.where, look);
    for (const auto& fi : s.from) {
      for (const auto& j : fi.joins) {
        if (j.on) deep_walk(*j.on, look);
      }
    }
    if (!filtered) {
      out.push_back({LintRule::L1_missing_subtype_filter, Severity::warning, e.span,
                     "delivery_with_labor.motivation is selected without a predicate on delivery_subtype; "
                     "operative and natural deliveries are included"});
    }
  }
}

// ---- L2 ---------------------------------------------------------------------

bool is_constant(const Expr& e) { return e.kind == ExprKind::literal || e.kind == ExprKind::param; }

void lint_l2_expr(const Expr& e, std::vector<LintFinding>& out) {
  for_each_subexpr(e, [&](const Expr& x) {
    if (x.kind != ExprKind::binary || (x.name != "=" && x.name != "<>")) return;
    const Expr& l = x.args[0];
    const Expr& r = x.args[1];
    if (is_constant(l) || is_constant(r)) return;
    LogicalType lt = l.info.type, rt = r.info.type;
    KeyFamily lf = l.info.family, rf = r.info.family;
    bool type_clash = lt != rt && lt != LogicalType::null && rt != LogicalType::null;
    bool family_clash = lf != rf && lf != KeyFamily::plain && rf != KeyFamily::plain;
    if (!type_clash && !family_clash) return;
    std::string msg = print_expr(l) + " (" + std::string(to_string(lt)) + ", " + std::string(to_string(lf)) +
                      ") is compared with " + print_expr(r) + " (" + std::string(to_string(rt)) + ", " +
                      std::string(to_string(rf)) + ")";
    if (!l.info.column.empty() && !r.info.column.empty()) msg += ": " + l.info.column + " vs " + r.info.column;
    out.push_back({LintRule::L2_join_key_type_mismatch, Severity::error, x.span, msg});
  });
}

void lint_l2(const Select& s, std::vector<LintFinding>& out) {
  for (const auto& fi : s.from) {
    for (const auto& j : fi.joins) {
      if (j.on) lint_l2_expr(*j.on, out);
    }
  }
  if (s.where) lint_l2_expr(*s.where, out);
}

// ---- L3 ---------------------------------------------------------------------

void conjuncts(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::binary && e.name == "AND") {
    conjuncts(e.args[0], out);
    conjuncts(e.args[1], out);
  } else {
    out.push_back(&e);
  }
}

bool references_outer(const Expr& e, int enclosing_level) {
  bool hit = false;
  auto f = [&](const Expr& x) {
    if (x.kind == ExprKind::column && x.info.binding.level <= enclosing_level) hit = true;
  };
  deep_walk(e, f);
  return hit;
}

bool fk_links(const Catalog& cat, const Expr& from, const Expr& to) {
  const Relation* r = cat.find(from.info.relation);
  if (!r) return false;
  for (const auto& fk : r->foreign_keys) {
    if (fk.columns.size() == 1 && fk.columns[0] == from.info.column && fk.ref_relation == to.info.relation &&
        fk.ref_columns[0] == to.info.column) {
      return true;
    }
  }
  return false;
}

void lint_l3(const Query& root, const Catalog& cat, std::vector<LintFinding>& out) {
  auto f = [&](const Expr& e) {
    if (e.kind != ExprKind::exists || !e.subquery) return;
    const Query& sub = *e.subquery;
    if (!sub.rest.empty() || e.info.outer_refs.size() != 1) return;
    int outer = e.info.level;
    std::vector<const Expr*> parts;
    if (sub.first.where) conjuncts(*sub.first.where, parts);
    for (const auto& fi : sub.first.from) {
      for (const auto& j : fi.joins) {
        if (j.on) conjuncts(*j.on, parts);
      }
    }
    std::vector<const Expr*> correlated;
    for (const Expr* p : parts) {
      if (references_outer(*p, outer)) correlated.push_back(p);
    }
    for (const auto& it : sub.first.items) {
      if (references_outer(it.expr, outer)) return;
    }
    if (correlated.size() != 1) return;
    const Expr& eq = *correlated[0];
    if (eq.kind != ExprKind::binary || eq.name != "=") return;
    const Expr& a = eq.args[0];
    const Expr& b = eq.args[1];
    if (a.kind != ExprKind::column || b.kind != ExprKind::column) return;
    bool a_outer = a.info.binding.level <= outer, b_outer = b.info.binding.level <= outer;
    if (a_outer == b_outer) return;
    const Expr& in = a_outer ? b : a;
    const Expr& out_col = a_outer ? a : b;
    if (!fk_links(cat, in, out_col) && !fk_links(cat, out_col, in)) return;
    out.push_back({LintRule::L3_exists_replaceable_by_join, Severity::info, e.span,
                   "EXISTS is correlated only by the foreign-key equality " + print_expr(eq) +
                       "; the same rows can be obtained with a join"});
  };
  deep_walk(root, f);
}

}  // namespace

int subquery_depth(const Query& q) {
  int d = select_depth(q.first);
  for (const auto& b : q.rest) d = std::max(d, select_depth(b.select));
  for (const auto& o : q.order_by) d = std::max(d, expr_depth(o.expr));
  return d;
}

nlohmann::json GuardVerdict::to_json() const {
  return {{"accepted", accepted},
          {"reasons", reasons},
          {"statement_count", statement_count},
          {"subquery_depth", subquery_depth},
          {"max_subquery_depth", max_subquery_depth},
          {"row_limit_applied", row_limit_applied},
          {"max_rows", max_rows}};
}

GuardVerdict guardrail(const SqlAst& ast, const GuardLimits& limits) {
  GuardVerdict v;
  v.statement_count = ast.statements.size();
  v.max_subquery_depth = limits.max_subquery_depth;
  v.max_rows = limits.max_rows;
  if (ast.statements.size() != 1) {
    v.reasons.push_back("exactly one SELECT statement is accepted, got " + std::to_string(ast.statements.size()));
  }
  for (const auto& q : ast.statements) v.subquery_depth = std::max(v.subquery_depth, subquery_depth(q));
  if (v.subquery_depth > limits.max_subquery_depth) {
    v.reasons.push_back("subquery depth " + std::to_string(v.subquery_depth) + " exceeds the limit of " +
                        std::to_string(limits.max_subquery_depth));
  }
  v.accepted = v.reasons.empty();
  if (v.accepted) {
    const Query& q = ast.statements[0];
    bool own_limit = q.limit && q.limit->kind == ExprKind::literal && q.limit->value.kind() == ValueKind::integer &&
                     q.limit->value.as_int() >= 0 && static_cast<size_t>(q.limit->value.as_int()) <= limits.max_rows;
    v.row_limit_applied = !own_limit;
  }
  return v;
}

GuardVerdict unsupported_statement_verdict(const std::string& reason, const GuardLimits& limits) {
  GuardVerdict v;
  v.max_subquery_depth = limits.max_subquery_depth;
  v.max_rows = limits.max_rows;
  v.reasons.push_back(reason);
  return v;
}

std::string_view to_string(LintRule r) {
  switch (r) {
    case LintRule::L1_missing_subtype_filter: return "L1_missing_subtype_filter";
    case LintRule::L2_join_key_type_mismatch: return "L2_join_key_type_mismatch";
    case LintRule::L3_exists_replaceable_by_join: return "L3_exists_replaceable_by_join";
  }
  return "";
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "";
}

nlohmann::json LintFinding::to_json() const {
  return {{"rule", to_string(rule)},
          {"severity", to_string(severity)},
          {"message", message},
          {"span", {{"offset", span.offset}, {"length", span.length}, {"line", span.line}, {"column", span.column}}}};
}

std::vector<LintFinding> lint(const ResolvedQuery& q, const Catalog& catalog) {
  std::vector<LintFinding> out;
  for_each_select(q.query, [&](const Select& s) { lint_l1(s, out); });
  for_each_select(q.query, [&](const Select& s) { lint_l2(s, out); });
  lint_l3(q.query, catalog, out);
  return out;
}

std::vector<LintFinding> lint(const ResolvedPlan& plan, const Catalog& catalog) {
  std::vector<LintFinding> out;
  for (const auto& q : plan.statements) {
    auto f = lint(q, catalog);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::parse: return "parse";
    case Stage::resolve: return "resolve";
    case Stage::guardrail: return "guardrail";
    case Stage::lint: return "lint";
    case Stage::execute: return "execute";
  }
  return "";
}

bool SqlCheck::has_finding(LintRule r) const {
  return std::any_of(findings.begin(), findings.end(), [&](const LintFinding& f) { return f.rule == r; });
}

bool SqlCheck::has_lint_error() const {
  return std::any_of(findings.begin(), findings.end(), [](const LintFinding& f) { return f.severity == Severity::error; });
}

nlohmann::json SqlCheck::to_json() const {
  nlohmann::json j;
  j["sql"] = sql;
  j["ok"] = ok();
  j["stage"] = failed_stage ? nlohmann::json(to_string(*failed_stage)) : nlohmann::json(nullptr);
  if (failed_stage) {
    nlohmann::json err{{"message", error}, {"kind", error_kind}};
    if (error_span) err["line"] = error_span->line, err["column"] = error_span->column;
    if (!expected.empty()) err["expected"] = expected;
    j["error"] = err;
  } else {
    j["error"] = nullptr;
  }
  j["verdict"] = verdict.to_json();
  j["findings"] = nlohmann::json::array();
  for (const auto& f : findings) j["findings"].push_back(f.to_json());
  if (plan && plan->statements.size() == 1) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : plan->statements[0].columns) {
      cols.push_back({{"name", c.name}, {"type", to_string(c.type)}});
    }
    j["columns"] = cols;
  }
  return j;
}

SqlCheck check_sql(std::string_view text, const Catalog& catalog, const GuardLimits& limits) {
  SqlCheck c;
  c.sql = std::string(text);
  c.verdict.max_rows = limits.max_rows;
  c.verdict.max_subquery_depth = limits.max_subquery_depth;
  try {
    c.ast = parse_sql(text);
  } catch (const SyntaxError& e) {
    bool unsupported = e.tag() == "unsupported_statement";
    c.failed_stage = unsupported ? Stage::guardrail : Stage::parse;
    c.error = e.what();
    c.error_kind = e.tag();
    c.error_span = e.span();
    c.expected = e.expected();
    if (unsupported) c.verdict = unsupported_statement_verdict(e.what(), limits);
    return c;
  }
  try {
    c.plan = resolve(*c.ast, catalog);
  } catch (const ResolveError& e) {
    c.failed_stage = Stage::resolve;
    c.error = e.what();
    c.error_kind = std::string(to_string(e.kind()));
    c.error_span = e.span();
    return c;
  }
  c.verdict = guardrail(*c.ast, limits);
  if (!c.verdict.accepted) {
    c.failed_stage = Stage::guardrail;
    c.error_kind = "guardrail";
    for (const auto& r : c.verdict.reasons) c.error += (c.error.empty() ? "" : "; ") + r;
    return c;
  }
  c.findings = lint(*c.plan, catalog);
  return c;
}

}  // namespace peripartum::sql
