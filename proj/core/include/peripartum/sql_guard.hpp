#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_ast.hpp"
#include "peripartum/sql_resolver.hpp"

namespace peripartum::sql {

struct GuardLimits {
  size_t max_rows = 1000;
  int max_subquery_depth = 4;
};

struct GuardVerdict {
  bool accepted = false;
  std::vector<std::string> reasons;  // empty when accepted
  size_t statement_count = 0;
  int subquery_depth = 0;
  int max_subquery_depth = 0;
  /// The executor truncates to `max_rows` unless the statement carries its own
  /// LIMIT no larger than that.
  bool row_limit_applied = false;
  size_t max_rows = 0;

  nlohmann::json to_json() const;
};

/// Nesting depth of derived tables and expression subqueries; 0 for a flat SELECT.
int subquery_depth(const Query& q);

GuardVerdict guardrail(const SqlAst& ast, const GuardLimits& limits = {});
/// Verdict for text whose statement kind the parser refused (DDL, DML, ...).
GuardVerdict unsupported_statement_verdict(const std::string& reason, const GuardLimits& limits = {});

enum class LintRule { L1_missing_subtype_filter, L2_join_key_type_mismatch, L3_exists_replaceable_by_join };
enum class Severity { error, warning, info };

std::string_view to_string(LintRule r);
std::string_view to_string(Severity s);

struct LintFinding {
  LintRule rule = LintRule::L1_missing_subtype_filter;
  Severity severity = Severity::info;
  Span span;
  std::string message;

  nlohmann::json to_json() const;
};

std::vector<LintFinding> lint(const ResolvedQuery& q, const Catalog& catalog);
std::vector<LintFinding> lint(const ResolvedPlan& plan, const Catalog& catalog);

/// Validation pipeline: parse, resolve, guardrail, lint. Execution is left to the caller.
enum class Stage { parse, resolve, guardrail, lint, execute };
std::string_view to_string(Stage s);

struct SqlCheck {
  std::string sql;
  std::optional<Stage> failed_stage;
  std::string error;
  std::string error_kind;  // syntax tag or resolve error kind
  std::optional<Span> error_span;
  std::vector<std::string> expected;

  std::optional<SqlAst> ast;
  std::optional<ResolvedPlan> plan;
  GuardVerdict verdict;
  std::vector<LintFinding> findings;

  bool ok() const { return !failed_stage.has_value(); }
  bool has_finding(LintRule r) const;
  bool has_lint_error() const;
  nlohmann::json to_json() const;
};

SqlCheck check_sql(std::string_view text, const Catalog& catalog, const GuardLimits& limits = {});

}  // namespace peripartum::sql
