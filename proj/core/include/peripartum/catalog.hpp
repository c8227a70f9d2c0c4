#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peripartum {

enum class ColumnKind {
  bigint,  // surrogate keys and references to them
  integer,
  numeric,
  text,
  fixed_char,
  varchar,
  varchar_array,
  date,
  timestamp,
  boolean,
  jsonb
};

struct ColumnType {
  ColumnKind kind = ColumnKind::text;
  int length = 0;  // fixed_char / varchar only; 0 = unbounded

  bool operator==(const ColumnType&) const = default;
};

/// Join-key family, used to flag equality between unrelated identifiers.
enum class KeyFamily { synthetic_id, tax_code, timestamp, plain };

/// Coarse logical type used by SQL type inference.
enum class LogicalType { null, boolean, numeric, text, date, timestamp, interval };

std::string_view to_string(KeyFamily f);
std::string_view to_string(LogicalType t);
KeyFamily family_of(const ColumnType& t);
LogicalType logical_type_of(const ColumnType& t);
std::string sql_type_name(const ColumnType& t);

/// Inclusive numeric bounds; either side may be open.
struct ValueRange {
  std::optional<double> min;
  std::optional<double> max;

  bool operator==(const ValueRange&) const = default;
  bool contains(double v) const {
    return (!min || v >= *min) && (!max || v <= *max);
  }
};

struct Column {
  std::string name;
  ColumnType type;
  bool nullable = false;
  KeyFamily family = KeyFamily::plain;
  std::vector<std::string> enum_values;  // admissible values when non-empty
  std::optional<ValueRange> range;

  bool operator==(const Column&) const = default;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string ref_relation;
  std::vector<std::string> ref_columns;

  bool operator==(const ForeignKey&) const = default;
};

struct Relation {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;
  std::vector<std::vector<std::string>> unique_constraints;
  std::vector<ForeignKey> foreign_keys;

  const Column* find_column(std::string_view column) const;
  int column_index(std::string_view column) const;
  bool operator==(const Relation&) const = default;
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Catalog {
  std::vector<Relation> relations;

  const Relation* find(std::string_view name) const;
  const Relation& at(std::string_view name) const;
  /// Sub-catalog with only the named relations, in catalog order.
  Catalog restricted_to(const std::vector<std::string>& names) const;
  bool operator==(const Catalog&) const = default;
};

/// Fixed catalog of the 15 canonical relations, in dependency order.
Catalog build_catalog();
/// Process-wide instance of build_catalog().
const Catalog& canonical_catalog();

/// Throws CatalogError when a key or foreign key names a missing relation or column.
void validate_catalog(const Catalog& catalog);

/// Relations ordered so every foreign-key target precedes its referrer; ties keep
/// catalog order. Throws CatalogError on a cycle.
std::vector<const Relation*> dependency_order(const Catalog& catalog);

/// PostgreSQL CREATE TABLE statements, one block per relation, LF line endings.
std::string emit_ddl(const Catalog& catalog);

}  // namespace peripartum
