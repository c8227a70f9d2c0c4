#pragma once

#include <string>

#include "peripartum/store.hpp"
#include "peripartum/value.hpp"

namespace peripartum {

/// PostgreSQL literal for a cell: NULL, TRUE, 42, 'it''s', DATE '2024-01-31',
/// TIMESTAMP '2024-01-31 10:00:00.000', INTERVAL '90000 milliseconds'.
std::string sql_literal(const Value& v);

/// DDL followed by one INSERT per record in dependency order, inside a single
/// transaction, loadable into an empty PostgreSQL database.
std::string export_sql(const CanonicalStore& store);

}  // namespace peripartum
