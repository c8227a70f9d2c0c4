#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/records.hpp"
#include "peripartum/sql_resolver.hpp"
#include "peripartum/store.hpp"

namespace peripartum::sql {

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool truncated = false;  // rows were cut at the row limit

  /// {"columns": [...], "rows": [[...], ...], "truncated": bool}
  nlohmann::json to_json() const;
  std::string to_csv() const;
  bool operator==(const ResultTable&) const = default;
};

struct ExecOptions {
  std::optional<size_t> row_limit;
};

/// Nested-loop evaluation of a resolved statement over a store snapshot.
ResultTable execute(const ResolvedQuery& q, const CanonicalStore& store, const ExecOptions& opts = {});
/// Executes the single statement of a plan that passed the guardrail.
ResultTable execute(const ResolvedPlan& plan, const CanonicalStore& store, const ExecOptions& opts = {});

/// Value-level helpers shared with the ROUND contract and tests.
/// SQL comparison: nullopt when either side is NULL. Numbers compare by value,
/// dates against timestamps at midnight, text against dates by parsing, and
/// numbers against text by their string forms.
std::optional<int> sql_compare(const Value& a, const Value& b);
bool like_match(std::string_view text, std::string_view pattern, bool case_insensitive);

}  // namespace peripartum::sql
