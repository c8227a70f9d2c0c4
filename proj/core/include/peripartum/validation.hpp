#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "peripartum/records.hpp"

namespace peripartum {

struct FieldError {
  std::string relation;
  std::string field;
  std::string rule;  // range, length, format, required, enum, order, presence, duplicate
  std::string value;
  std::string message;

  bool operator==(const FieldError&) const = default;
};

/// Field-level invariants of one record: catalog ranges and domains plus the
/// per-type rules that only look at the record itself. Pure.
std::vector<FieldError> validate_fields(const AnyRecord& record);

/// Same checks over a catalog-ordered row; throws CatalogError for an unknown
/// relation. Rows that do not decode into a record report the decode failure.
std::vector<FieldError> validate_row(std::string_view relation, const Row& row);

bool is_tax_code(std::string_view s);

}  // namespace peripartum
