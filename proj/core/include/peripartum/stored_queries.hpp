#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_exec.hpp"
#include "peripartum/sql_resolver.hpp"
#include "peripartum/store.hpp"

namespace peripartum {

enum class ParamType { integer, numeric, text };
std::string_view to_string(ParamType t);

struct StoredParam {
  std::string name;
  ParamType type = ParamType::integer;
};

struct SortKey {
  size_t column = 0;
  bool descending = false;
};

struct StoredQuery {
  std::string name;
  std::string question;  // natural-language form the query answers
  std::vector<StoredParam> params;
  std::string sql;
  /// Output ordering the result must respect; empty means a multiset.
  std::vector<SortKey> order;
};

class StoredQueryError : public std::runtime_error {
 public:
  enum class Kind { unknown_name, arity, type };
  StoredQueryError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The registered library, in a fixed order. Every template parses and
/// resolves against the canonical catalog (checked on first use).
const std::vector<StoredQuery>& stored_queries();
const StoredQuery& stored_query(std::string_view name);

/// Checks names, arity and types; integers are accepted for numeric parameters.
sql::Params check_params(const StoredQuery& q, const sql::Params& params);
/// Parses "name=value" style text values by the declared parameter type.
sql::Params parse_params(const StoredQuery& q, const std::map<std::string, std::string>& text);
sql::Params params_from_json(const StoredQuery& q, const nlohmann::json& j);

/// Binds parameters as typed literals, resolves, executes.
sql::ResultTable run_stored_query(std::string_view name, const sql::Params& params, const CanonicalStore& store,
                                  const sql::ExecOptions& opts = {});

/// The same answer computed by direct iteration over store records.
sql::ResultTable oracle_eval(std::string_view name, const sql::Params& params, const CanonicalStore& store);

/// Exact for every cell kind except doubles, which match within `rel_tol`
/// relative. Unordered results compare as multisets; ordered ones must also be
/// sorted by the query's sort keys. On mismatch `why` explains the first difference.
bool results_match(const sql::ResultTable& got, const sql::ResultTable& want, const std::vector<SortKey>& order,
                   double rel_tol = 1e-9, std::string* why = nullptr);

}  // namespace peripartum
