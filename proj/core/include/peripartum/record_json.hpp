#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "peripartum/catalog.hpp"
#include "peripartum/records.hpp"

namespace peripartum {

/// Dates as "YYYY-MM-DD", timestamps as RFC 3339 UTC, intervals as "H:MM:SS.fff".
nlohmann::json value_to_json(const Value& v);

/// Decodes a JSON cell against a column type. Throws RecordDecodeError.
Value value_from_json(const nlohmann::json& j, const Column& column);

/// {"col": value, ...} in catalog column order.
nlohmann::json row_to_json(const Relation& relation, const Row& row);
/// Missing columns decode as NULL.
Row row_from_json(const Relation& relation, const nlohmann::json& values);

/// {"relation": name, "values": {...}}
nlohmann::json record_to_json(const AnyRecord& record);
AnyRecord record_from_json(const nlohmann::json& j);

/// Record whose key columns come from `values`; other columns take defaults.
/// Used for deletes, which only need the key.
AnyRecord key_record_from_json(std::string_view relation, const nlohmann::json& values);

}  // namespace peripartum
