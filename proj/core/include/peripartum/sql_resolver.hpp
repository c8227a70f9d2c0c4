#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_ast.hpp"

namespace peripartum::sql {

enum class ResolveErrorKind {
  unknown_table,
  unknown_column,
  ambiguous_column,
  duplicate_alias,
  aggregate_misuse,
  type_mismatch,
  unknown_function,
  unbound_parameter,
  invalid
};

std::string_view to_string(ResolveErrorKind k);

class ResolveError : public std::runtime_error {
 public:
  ResolveError(ResolveErrorKind kind, std::string message, Span at);

  ResolveErrorKind kind() const { return kind_; }
  const Span& span() const { return span_; }

 private:
  ResolveErrorKind kind_;
  Span span_;
};

struct OutputColumn {
  std::string name;
  LogicalType type = LogicalType::null;
  KeyFamily family = KeyFamily::plain;
  std::string relation;  // set when the column is a plain catalog column
  std::string column;

  bool operator==(const OutputColumn&) const = default;
};

/// A statement with every identifier bound and every expression typed.
/// Star items are expanded in `query`.
struct ResolvedQuery {
  Query query;
  std::vector<OutputColumn> columns;
};

struct ResolvedPlan {
  std::vector<ResolvedQuery> statements;
};

ResolvedQuery resolve_query(const Query& q, const Catalog& catalog);
ResolvedPlan resolve(const SqlAst& ast, const Catalog& catalog);

using Params = std::map<std::string, Value>;

std::set<std::string> parameter_names(const Query& q);
/// Replaces `:name` placeholders with typed literals. Throws ResolveError
/// (unbound_parameter) for a placeholder without a value.
Query bind_params(const Query& q, const Params& params);

}  // namespace peripartum::sql
