#include "peripartum/record_json.hpp"

#include <cmath>

namespace peripartum {

using nlohmann::json;

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::null: return nullptr;
    case ValueKind::boolean: return v.as_bool();
    case ValueKind::integer: return v.as_int();
    case ValueKind::real: {
      double d = v.as_real();
      if (!std::isfinite(d)) return nullptr;
      return d;
    }
    case ValueKind::decimal: return v.as_decimal().to_double();
    case ValueKind::text: return v.as_text();
    case ValueKind::date: return format_date(v.as_date());
    case ValueKind::timestamp: return format_rfc3339(v.as_timestamp());
    case ValueKind::interval: return v.to_string();
  }
  return nullptr;
}

namespace {

[[noreturn]] void bad(const Column& c, const json& j, const char* expected) {
  throw RecordDecodeError("column " + c.name + ": expected " + expected + ", got " + j.dump());
}

}  // namespace

Value value_from_json(const json& j, const Column& c) {
  if (j.is_null()) return {};
  switch (c.type.kind) {
    case ColumnKind::bigint:
    case ColumnKind::integer:
      if (j.is_number_integer()) return Value(j.get<int64_t>());
      if (j.is_number_float()) {
        double d = j.get<double>();
        if (std::floor(d) == d && std::fabs(d) < 9e15) return Value(static_cast<int64_t>(d));
      }
      if (j.is_string()) {
        if (auto i = parse_int(j.get<std::string>())) return Value(*i);
      }
      bad(c, j, "integer");
    case ColumnKind::numeric:
      if (j.is_number()) return Value(j.get<double>());
      if (j.is_string()) {
        if (auto d = parse_double(j.get<std::string>())) return Value(*d);
      }
      bad(c, j, "number");
    case ColumnKind::text:
    case ColumnKind::fixed_char:
    case ColumnKind::varchar:
      if (j.is_string()) return Value(j.get<std::string>());
      bad(c, j, "string");
    case ColumnKind::varchar_array:
      if (j.is_array()) {
        std::vector<std::string> items;
        for (const auto& e : j) {
          if (!e.is_string()) bad(c, j, "array of strings");
          items.push_back(e.get<std::string>());
        }
        return Value(format_text_array(items));
      }
      if (j.is_string() && parse_text_array(j.get<std::string>())) return Value(j.get<std::string>());
      bad(c, j, "array of strings");
    case ColumnKind::date:
      if (j.is_string()) {
        if (auto d = parse_date(j.get<std::string>())) return Value(*d);
      }
      bad(c, j, "date");
    case ColumnKind::timestamp:
      if (j.is_string()) {
        if (auto t = parse_timestamp(j.get<std::string>())) return Value(*t);
      }
      bad(c, j, "timestamp");
    case ColumnKind::boolean:
      if (j.is_boolean()) return Value(j.get<bool>());
      bad(c, j, "boolean");
    case ColumnKind::jsonb:
      if (j.is_object()) return Value(j.dump());
      if (j.is_string()) return Value(j.get<std::string>());
      bad(c, j, "object");
  }
  bad(c, j, "value");
}

json row_to_json(const Relation& relation, const Row& row) {
  json out = json::object();
  for (size_t i = 0; i < relation.columns.size() && i < row.size(); ++i) {
    const Column& c = relation.columns[i];
    if (c.type.kind == ColumnKind::varchar_array && row[i].kind() == ValueKind::text) {
      out[c.name] = parse_text_array(row[i].as_text()).value_or(std::vector<std::string>{});
    } else if (c.type.kind == ColumnKind::jsonb && row[i].kind() == ValueKind::text) {
      out[c.name] = json::parse(row[i].as_text(), nullptr, false);
    } else {
      out[c.name] = value_to_json(row[i]);
    }
  }
  return out;
}

Row row_from_json(const Relation& relation, const json& values) {
  if (!values.is_object()) throw RecordDecodeError(relation.name + ": values must be an object");
  for (auto it = values.begin(); it != values.end(); ++it) {
    if (!relation.find_column(it.key())) {
      throw RecordDecodeError(relation.name + ": unknown column " + it.key());
    }
  }
  Row row;
  row.reserve(relation.columns.size());
  for (const auto& c : relation.columns) {
    auto it = values.find(c.name);
    row.push_back(it == values.end() ? Value() : value_from_json(*it, c));
  }
  return row;
}

json record_to_json(const AnyRecord& record) {
  const Relation& rel = canonical_catalog().at(relation_of(record));
  return json{{"relation", rel.name}, {"values", row_to_json(rel, to_row(record))}};
}

AnyRecord record_from_json(const json& j) {
  if (!j.is_object() || !j.contains("relation") || !j["relation"].is_string()) {
    throw RecordDecodeError("record needs a string 'relation'");
  }
  std::string name = j["relation"].get<std::string>();
  const Relation* rel = canonical_catalog().find(name);
  if (!rel) throw RecordDecodeError("unknown relation '" + name + "'");
  return record_from_row(name, row_from_json(*rel, j.value("values", json::object())));
}

AnyRecord key_record_from_json(std::string_view relation, const json& values) {
  const Relation* rel = canonical_catalog().find(relation);
  if (!rel) throw RecordDecodeError("unknown relation '" + std::string(relation) + "'");
  std::optional<Row> row;
  for_each_record_type([&]<class R>() {
    if (R::kRelation == relation) row = to_row(R{});
  });
  Row keyed = row_from_json(*rel, values);
  for (const auto& col : rel->primary_key) {
    int i = rel->column_index(col);
    if (keyed[i].is_null()) throw RecordDecodeError(rel->name + ": key column " + col + " missing");
    (*row)[i] = keyed[i];
  }
  return record_from_row(relation, *row);
}

}  // namespace peripartum
