#include "peripartum/export_sql.hpp"

#include "peripartum/catalog.hpp"
#include "peripartum/records.hpp"

namespace peripartum {

std::string sql_literal(const Value& v) {
  switch (v.kind()) {
    case ValueKind::null: return "NULL";
    case ValueKind::boolean: return v.as_bool() ? "TRUE" : "FALSE";
    case ValueKind::integer: return std::to_string(v.as_int());
    case ValueKind::real: return format_double(v.as_real());
    case ValueKind::decimal: return v.as_decimal().to_string();
    case ValueKind::date: return "DATE '" + format_date(v.as_date()) + "'";
    case ValueKind::timestamp: return "TIMESTAMP '" + format_timestamp(v.as_timestamp()) + "'";
    case ValueKind::interval: return "INTERVAL '" + std::to_string(v.as_interval().ms) + " milliseconds'";
    case ValueKind::text: {
      std::string out = "'";
      for (char c : v.as_text()) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
  }
  return "NULL";
}

std::string export_sql(const CanonicalStore& store) {
  const Catalog& catalog = canonical_catalog();
  std::string out = "BEGIN;\n\n" + emit_ddl(catalog) + "\n";
  for_each_record_type([&]<class R>() {
    const auto& table = store.table<R>();
    if (table.empty()) return;
    const Relation& rel = catalog.at(R::kRelation);
    std::string head = "INSERT INTO " + rel.name + " (";
    for (size_t i = 0; i < rel.columns.size(); ++i) head += (i ? ", " : "") + rel.columns[i].name;
    head += ") VALUES (";
    for (const auto& [key, rec] : table) {
      Row row = to_row(rec);
      out += head;
      for (size_t i = 0; i < row.size(); ++i) out += (i ? ", " : "") + sql_literal(row[i]);
      out += ");\n";
    }
    out += "\n";
  });
  return out + "COMMIT;\n";
}

}  // namespace peripartum
