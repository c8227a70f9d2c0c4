#include "peripartum/catalog.hpp"

#include <cmath>
#include <map>
#include <set>

#include "peripartum/records.hpp"

namespace peripartum {

std::string_view to_string(KeyFamily f) {
  switch (f) {
    case KeyFamily::synthetic_id: return "synthetic_id";
    case KeyFamily::tax_code: return "tax_code";
    case KeyFamily::timestamp: return "timestamp";
    case KeyFamily::plain: return "plain";
  }
  return "plain";
}

std::string_view to_string(LogicalType t) {
  switch (t) {
    case LogicalType::null: return "null";
    case LogicalType::boolean: return "boolean";
    case LogicalType::numeric: return "numeric";
    case LogicalType::text: return "text";
    case LogicalType::date: return "date";
    case LogicalType::timestamp: return "timestamp";
    case LogicalType::interval: return "interval";
  }
  return "null";
}

KeyFamily family_of(const ColumnType& t) {
  switch (t.kind) {
    case ColumnKind::bigint: return KeyFamily::synthetic_id;
    case ColumnKind::fixed_char: return t.length == 16 ? KeyFamily::tax_code : KeyFamily::plain;
    case ColumnKind::timestamp: return KeyFamily::timestamp;
    default: return KeyFamily::plain;
  }
}

LogicalType logical_type_of(const ColumnType& t) {
  switch (t.kind) {
    case ColumnKind::bigint:
    case ColumnKind::integer:
    case ColumnKind::numeric: return LogicalType::numeric;
    case ColumnKind::date: return LogicalType::date;
    case ColumnKind::timestamp: return LogicalType::timestamp;
    case ColumnKind::boolean: return LogicalType::boolean;
    default: return LogicalType::text;
  }
}

std::string sql_type_name(const ColumnType& t) {
  switch (t.kind) {
    case ColumnKind::bigint: return "BIGINT";
    case ColumnKind::integer: return "INTEGER";
    case ColumnKind::numeric: return "NUMERIC";
    case ColumnKind::text: return "TEXT";
    case ColumnKind::fixed_char: return "CHAR(" + std::to_string(t.length) + ")";
    case ColumnKind::varchar:
      return t.length > 0 ? "VARCHAR(" + std::to_string(t.length) + ")" : "VARCHAR";
    case ColumnKind::varchar_array: return "VARCHAR[]";
    case ColumnKind::date: return "DATE";
    case ColumnKind::timestamp: return "TIMESTAMP(3)";
    case ColumnKind::boolean: return "BOOLEAN";
    case ColumnKind::jsonb: return "JSONB";
  }
  return "TEXT";
}

const Column* Relation::find_column(std::string_view column) const {
  for (const auto& c : columns) {
    if (c.name == column) return &c;
  }
  return nullptr;
}

int Relation::column_index(std::string_view column) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return static_cast<int>(i);
  }
  return -1;
}

const Relation* Catalog::find(std::string_view name) const {
  for (const auto& r : relations) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Relation& Catalog::at(std::string_view name) const {
  if (const Relation* r = find(name)) return *r;
  throw CatalogError("unknown relation '" + std::string(name) + "'");
}

Catalog Catalog::restricted_to(const std::vector<std::string>& names) const {
  std::set<std::string, std::less<>> wanted(names.begin(), names.end());
  Catalog out;
  for (const auto& r : relations) {
    if (wanted.count(r.name)) out.relations.push_back(r);
  }
  return out;
}

namespace {

class RelationBuilder {
 public:
  explicit RelationBuilder(std::string name) { rel_.name = std::move(name); }

  RelationBuilder& col(std::string name, ColumnType type, bool nullable = false) {
    Column c;
    c.name = std::move(name);
    c.type = type;
    c.nullable = nullable;
    c.family = family_of(type);
    rel_.columns.push_back(std::move(c));
    return *this;
  }
  RelationBuilder& range(std::optional<double> min, std::optional<double> max) {
    rel_.columns.back().range = ValueRange{min, max};
    return *this;
  }
  RelationBuilder& one_of(std::vector<std::string> values) {
    rel_.columns.back().enum_values = std::move(values);
    return *this;
  }
  RelationBuilder& pk(std::vector<std::string> cols) {
    rel_.primary_key = std::move(cols);
    return *this;
  }
  RelationBuilder& unique(std::vector<std::string> cols) {
    rel_.unique_constraints.push_back(std::move(cols));
    return *this;
  }
  RelationBuilder& fk(std::vector<std::string> cols, std::string target,
                      std::vector<std::string> target_cols) {
    rel_.foreign_keys.push_back({std::move(cols), std::move(target), std::move(target_cols)});
    return *this;
  }
  Relation build() { return std::move(rel_); }

 private:
  Relation rel_;
};

constexpr ColumnType kId{ColumnKind::bigint};
constexpr ColumnType kInt{ColumnKind::integer};
constexpr ColumnType kNumeric{ColumnKind::numeric};
constexpr ColumnType kText{ColumnKind::text};
constexpr ColumnType kTaxCode{ColumnKind::fixed_char, 16};
constexpr ColumnType kDate{ColumnKind::date};
constexpr ColumnType kTimestamp{ColumnKind::timestamp};
constexpr ColumnType kBool{ColumnKind::boolean};
constexpr ColumnType kEnum{ColumnKind::varchar, 32};
constexpr ColumnType kShort{ColumnKind::varchar, 100};
constexpr ColumnType kName{ColumnKind::varchar, 200};
constexpr ColumnType kVarchar{ColumnKind::varchar};

}  // namespace

Catalog build_catalog() {
  Catalog c;
  c.relations.push_back(RelationBuilder("patient")
                            .col("tc", kTaxCode)
                            .col("name", kShort)
                            .col("surname", kShort)
                            .col("birth_date", kDate)
                            .pk({"tc"})
                            .build());
  c.relations.push_back(RelationBuilder("pregnancy")
                            .col("id", kId)
                            .col("patient_tc", kTaxCode)
                            .col("first_exam_date", kDate)
                            .col("parity_full_term", kInt).range(0, std::nullopt)
                            .col("parity_premature", kInt).range(0, std::nullopt)
                            .col("parity_abortions", kInt).range(0, std::nullopt)
                            .col("parity_live_births", kInt).range(0, std::nullopt)
                            .col("maternal_age_at_conception", kInt).range(10, 60)
                            .col("art_used", kBool, true)
                            .col("prior_pregnancy_conditions", kText, true)
                            .col("last_menstruation_date", kDate, true)
                            .col("expected_delivery_date", kDate, true)
                            .pk({"id"})
                            .unique({"patient_tc", "first_exam_date"})
                            .fk({"patient_tc"}, "patient", {"tc"})
                            .build());
  c.relations.push_back(RelationBuilder("condition")
                            .col("id", kId)
                            .col("name", kName)
                            .pk({"id"})
                            .unique({"name"})
                            .build());
  c.relations.push_back(RelationBuilder("pregnancy_condition")
                            .col("pregnancy_id", kId)
                            .col("condition_id", kId)
                            .col("therapy", kText, true)
                            .pk({"pregnancy_id", "condition_id"})
                            .fk({"pregnancy_id"}, "pregnancy", {"id"})
                            .fk({"condition_id"}, "condition", {"id"})
                            .build());
  c.relations.push_back(RelationBuilder("examination")
                            .col("id", kId)
                            .col("pregnancy_id", kId)
                            .col("examination_kind", kEnum).one_of(enum_values<ExaminationKind>())
                            .col("exam_date", kDate)
                            .col("gestational_age_days", kInt).range(0, 320)
                            .col("details", ColumnType{ColumnKind::jsonb})
                            .pk({"id"})
                            .fk({"pregnancy_id"}, "pregnancy", {"id"})
                            .build());
  c.relations.push_back(RelationBuilder("test")
                            .col("id", kId)
                            .col("name", kName)
                            .col("type", ColumnType{ColumnKind::varchar_array})
                            .pk({"id"})
                            .unique({"name"})
                            .build());
  c.relations.push_back(RelationBuilder("examination_test")
                            .col("examination_id", kId)
                            .col("test_id", kId)
                            .col("result", kVarchar)
                            .pk({"examination_id", "test_id"})
                            .fk({"examination_id"}, "examination", {"id"})
                            .fk({"test_id"}, "test", {"id"})
                            .build());
  c.relations.push_back(RelationBuilder("delivery")
                            .col("pregnancy_id", kId)
                            .col("delivery_date", kDate)
                            .col("gestational_age_days", kInt).range(0, 320)
                            .col("robson_score", kInt).range(1, 10)
                            .col("placental_expulsion", kEnum).one_of(enum_values<PlacentalExpulsion>())
                            .col("analgesia", kShort, true)
                            .col("estimated_blood_loss_ml", kInt).range(0, std::nullopt)
                            .col("delivery_type", kEnum).one_of(enum_values<DeliveryType>())
                            .pk({"pregnancy_id"})
                            .fk({"pregnancy_id"}, "pregnancy", {"id"})
                            .build());
  c.relations.push_back(RelationBuilder("programmed_c_section")
                            .col("pregnancy_id", kId)
                            .col("motivation", kText)
                            .pk({"pregnancy_id"})
                            .fk({"pregnancy_id"}, "delivery", {"pregnancy_id"})
                            .build());
  c.relations.push_back(RelationBuilder("delivery_with_labor")
                            .col("pregnancy_id", kId)
                            .col("delivery_subtype", kEnum).one_of(enum_values<LaborSubtype>())
                            .col("motivation", kText, true)
                            .col("laceration", kEnum).one_of(enum_values<Laceration>())
                            .col("episiotomy", kBool)
                            .col("episiotomy_motivation", kText, true)
                            .col("labor_start_time", kTimestamp)
                            .col("expulsion_time", kTimestamp)
                            .col("operative_instrument", kEnum, true).one_of(enum_values<OperativeInstrument>())
                            .pk({"pregnancy_id"})
                            .fk({"pregnancy_id"}, "delivery", {"pregnancy_id"})
                            .build());
  c.relations.push_back(RelationBuilder("induction")
                            .col("pregnancy_id", kId)
                            .col("administration_time", kTimestamp)
                            .col("method", kShort)
                            .col("drug_dosage", kShort, true)
                            .col("completion_rate", kNumeric, true).range(0, 1)
                            .pk({"pregnancy_id", "administration_time"})
                            .fk({"pregnancy_id"}, "delivery_with_labor", {"pregnancy_id"})
                            .build());
  c.relations.push_back(RelationBuilder("newborn")
                            .col("pregnancy_id", kId)
                            .col("birth_time", kTimestamp)
                            .col("weight_g", kInt).range(200, 7000)
                            .col("length_cm", kNumeric, true).range(15, 70)
                            .col("apgar_1", kInt).range(0, 10)
                            .col("apgar_5", kInt).range(0, 10)
                            .col("apgar_10", kInt, true).range(0, 10)
                            .col("ph", kNumeric, true).range(6.5, 7.8)
                            .pk({"pregnancy_id", "birth_time"})
                            .fk({"pregnancy_id"}, "delivery", {"pregnancy_id"})
                            .build());
  c.relations.push_back(RelationBuilder("tracing")
                            .col("tracing_id", kId)
                            .col("pregnancy_id", kId)
                            .col("start_time", kTimestamp)
                            .pk({"tracing_id"})
                            .unique({"tracing_id", "pregnancy_id"})
                            .fk({"pregnancy_id"}, "delivery", {"pregnancy_id"})
                            .build());
  c.relations.push_back(RelationBuilder("measurement")
                            .col("tracing_id", kId)
                            .col("ts", kTimestamp)
                            .col("maternal_heart_rate", kInt, true).range(20, 250)
                            .col("maternal_tocography", kNumeric, true).range(0, std::nullopt)
                            .pk({"tracing_id", "ts"})
                            .fk({"tracing_id"}, "tracing", {"tracing_id"})
                            .build());
  c.relations.push_back(RelationBuilder("newborn_measurement")
                            .col("tracing_id", kId)
                            .col("ts", kTimestamp)
                            .col("pregnancy_id", kId)
                            .col("birth_time", kTimestamp)
                            .col("fetal_heart_rate", kInt).range(30, 300)
                            .pk({"tracing_id", "ts", "pregnancy_id", "birth_time"})
                            .fk({"tracing_id", "ts"}, "measurement", {"tracing_id", "ts"})
                            .fk({"pregnancy_id", "birth_time"}, "newborn", {"pregnancy_id", "birth_time"})
                            .fk({"tracing_id", "pregnancy_id"}, "tracing", {"tracing_id", "pregnancy_id"})
                            .build());
  return c;
}

const Catalog& canonical_catalog() {
  static const Catalog c = build_catalog();
  return c;
}

void validate_catalog(const Catalog& catalog) {
  std::set<std::string> seen;
  for (const auto& rel : catalog.relations) {
    if (!seen.insert(rel.name).second) throw CatalogError("duplicate relation " + rel.name);
    auto require_cols = [&](const Relation& r, const std::vector<std::string>& cols, const char* what) {
      if (cols.empty()) throw CatalogError(rel.name + ": empty " + what);
      for (const auto& col : cols) {
        if (!r.find_column(col)) {
          throw CatalogError(rel.name + ": " + what + " names unknown column " + r.name + "." + col);
        }
      }
    };
    require_cols(rel, rel.primary_key, "primary key");
    for (const auto& u : rel.unique_constraints) require_cols(rel, u, "unique constraint");
    for (const auto& fk : rel.foreign_keys) {
      require_cols(rel, fk.columns, "foreign key");
      const Relation* target = catalog.find(fk.ref_relation);
      if (!target) throw CatalogError(rel.name + ": foreign key references unknown relation " + fk.ref_relation);
      require_cols(*target, fk.ref_columns, "foreign key target");
      if (fk.columns.size() != fk.ref_columns.size()) {
        throw CatalogError(rel.name + ": foreign key arity mismatch");
      }
    }
  }
}

std::vector<const Relation*> dependency_order(const Catalog& catalog) {
  validate_catalog(catalog);
  std::vector<const Relation*> out;
  std::set<std::string> placed;
  std::vector<bool> done(catalog.relations.size(), false);
  while (out.size() < catalog.relations.size()) {
    bool progressed = false;
    for (size_t i = 0; i < catalog.relations.size(); ++i) {
      if (done[i]) continue;
      const Relation& rel = catalog.relations[i];
      bool ready = true;
      for (const auto& fk : rel.foreign_keys) {
        if (fk.ref_relation != rel.name && !placed.count(fk.ref_relation)) ready = false;
      }
      if (!ready) continue;
      out.push_back(&rel);
      placed.insert(rel.name);
      done[i] = true;
      progressed = true;
      break;  // restart so ties resolve in catalog order
    }
    if (!progressed) throw CatalogError("foreign keys form a cycle; catalog cannot be ordered");
  }
  return out;
}

namespace {

std::string bound_text(double v) {
  if (std::floor(v) == v && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return format_double(v);
}

std::string quote_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out;
}

}  // namespace

std::string emit_ddl(const Catalog& catalog) {
  std::string out;
  bool first = true;
  for (const Relation* rel : dependency_order(catalog)) {
    if (!first) out += '\n';
    first = false;
    std::vector<std::string> lines;
    for (const auto& col : rel->columns) {
      std::string line = "    " + col.name + " " + sql_type_name(col.type);
      if (!col.nullable) line += " NOT NULL";
      if (!col.enum_values.empty()) {
        line += " CHECK (" + col.name + " IN (";
        for (size_t i = 0; i < col.enum_values.size(); ++i) {
          line += (i ? ", " : "") + quote_literal(col.enum_values[i]);
        }
        line += "))";
      }
      if (col.range) {
        const auto& r = *col.range;
        if (r.min && r.max) {
          line += " CHECK (" + col.name + " BETWEEN " + bound_text(*r.min) + " AND " + bound_text(*r.max) + ")";
        } else if (r.min) {
          line += " CHECK (" + col.name + " >= " + bound_text(*r.min) + ")";
        } else if (r.max) {
          line += " CHECK (" + col.name + " <= " + bound_text(*r.max) + ")";
        }
      }
      lines.push_back(std::move(line));
    }
    lines.push_back("    PRIMARY KEY (" + join_names(rel->primary_key) + ")");
    for (const auto& u : rel->unique_constraints) lines.push_back("    UNIQUE (" + join_names(u) + ")");
    for (const auto& fk : rel->foreign_keys) {
      lines.push_back("    FOREIGN KEY (" + join_names(fk.columns) + ") REFERENCES " + fk.ref_relation +
                      " (" + join_names(fk.ref_columns) + ")");
    }
    out += "CREATE TABLE " + rel->name + " (\n";
    for (size_t i = 0; i < lines.size(); ++i) {
      out += lines[i];
      out += i + 1 < lines.size() ? ",\n" : "\n";
    }
    out += ");\n";
  }
  return out;
}

}  // namespace peripartum
