#include "peripartum/validation.hpp"

#include <algorithm>
#include <set>

#include "peripartum/catalog.hpp"

namespace peripartum {

bool is_tax_code(std::string_view s) {
  return s.size() == 16 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
         });
}

namespace {

std::string bound(double v) {
  auto s = format_double(v);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s;
}

void check_columns(const Relation& rel, const Row& row, std::vector<FieldError>& out) {
  auto add = [&](const Column& c, std::string rule, const Value& v, std::string msg) {
    out.push_back({rel.name, c.name, std::move(rule), v.to_string(), c.name + " " + std::move(msg)});
  };
  for (size_t i = 0; i < rel.columns.size() && i < row.size(); ++i) {
    const Column& c = rel.columns[i];
    const Value& v = row[i];
    if (v.is_null()) {
      if (!c.nullable) add(c, "required", v, "must not be null");
      continue;
    }
    if (c.range && v.is_numeric() && !c.range->contains(v.to_double())) {
      std::string span;
      if (c.range->min && c.range->max) {
        span = "out of " + bound(*c.range->min) + ".." + bound(*c.range->max);
      } else if (c.range->min) {
        span = "below " + bound(*c.range->min);
      } else {
        span = "above " + bound(*c.range->max);
      }
      add(c, "range", v, v.to_string() + " " + span);
    }
    if (!c.enum_values.empty() && v.kind() == ValueKind::text &&
        std::find(c.enum_values.begin(), c.enum_values.end(), v.as_text()) == c.enum_values.end()) {
      add(c, "enum", v, "value '" + v.as_text() + "' not admissible");
    }
    if (c.type.kind == ColumnKind::fixed_char && v.kind() == ValueKind::text) {
      const auto& s = v.as_text();
      if (static_cast<int>(s.size()) != c.type.length) {
        add(c, "length", v, "has length " + std::to_string(s.size()) + ", expected " +
                                std::to_string(c.type.length));
      } else if (c.family == KeyFamily::tax_code && !is_tax_code(s)) {
        add(c, "format", v, "must be 16 uppercase letters or digits");
      }
    }
    if (c.type.kind == ColumnKind::varchar && c.type.length > 0 && v.kind() == ValueKind::text &&
        static_cast<int>(v.as_text().size()) > c.type.length) {
      add(c, "length", v, "longer than " + std::to_string(c.type.length));
    }
  }
}

FieldError error(std::string_view rel, std::string field, std::string rule, std::string value,
                 std::string message) {
  return {std::string(rel), std::move(field), std::move(rule), std::move(value), std::move(message)};
}

void check_record(const Patient& r, std::vector<FieldError>& out) {
  if (r.name.empty()) out.push_back(error(Patient::kRelation, "name", "required", "", "name is empty"));
  if (r.surname.empty()) {
    out.push_back(error(Patient::kRelation, "surname", "required", "", "surname is empty"));
  }
}

void check_record(const Pregnancy& r, std::vector<FieldError>& out) {
  if (r.last_menstruation_date && r.expected_delivery_date &&
      !(*r.expected_delivery_date > *r.last_menstruation_date)) {
    out.push_back(error(Pregnancy::kRelation, "expected_delivery_date", "order",
                        format_date(*r.expected_delivery_date),
                        "expected_delivery_date must follow last_menstruation_date " +
                            format_date(*r.last_menstruation_date)));
  }
}

void check_record(const Condition& r, std::vector<FieldError>& out) {
  if (r.name.empty()) out.push_back(error(Condition::kRelation, "name", "required", "", "name is empty"));
}

void check_record(const Test& r, std::vector<FieldError>& out) {
  if (r.name.empty()) out.push_back(error(Test::kRelation, "name", "required", "", "name is empty"));
  if (r.type.empty()) {
    out.push_back(error(Test::kRelation, "type", "required", "{}", "type list is empty"));
    return;
  }
  std::set<std::string> seen;
  for (const auto& t : r.type) {
    if (!seen.insert(t).second) {
      out.push_back(error(Test::kRelation, "type", "duplicate", t, "enumerated value '" + t + "' repeated"));
    }
  }
}

void check_record(const DeliveryWithLabor& r, std::vector<FieldError>& out) {
  constexpr auto rel = DeliveryWithLabor::kRelation;
  if (!(r.labor_start_time < r.expulsion_time)) {
    out.push_back(error(rel, "expulsion_time", "order", format_timestamp(r.expulsion_time),
                        "expulsion_time must follow labor_start_time " +
                            format_timestamp(r.labor_start_time)));
  }
  if (r.episiotomy_motivation && !r.episiotomy) {
    out.push_back(error(rel, "episiotomy_motivation", "presence", *r.episiotomy_motivation,
                        "episiotomy_motivation given but episiotomy is false"));
  }
  bool operative = r.delivery_subtype == LaborSubtype::operative;
  if (operative != r.operative_instrument.has_value()) {
    out.push_back(error(rel, "operative_instrument", "presence",
                        r.operative_instrument ? std::string(enum_name(*r.operative_instrument)) : "",
                        operative ? "operative delivery needs operative_instrument"
                                  : "operative_instrument only allowed for operative deliveries"));
  }
  if (r.delivery_subtype != LaborSubtype::natural && !r.motivation) {
    out.push_back(error(rel, "motivation", "required", "",
                        "motivation required for " + std::string(enum_name(r.delivery_subtype)) +
                            " deliveries"));
  }
}

template <class R>
void check_record(const R&, std::vector<FieldError>&) {}

}  // namespace

std::vector<FieldError> validate_fields(const AnyRecord& record) {
  std::vector<FieldError> out;
  const Relation& rel = canonical_catalog().at(relation_of(record));
  check_columns(rel, to_row(record), out);
  std::visit([&](const auto& r) { check_record(r, out); }, record);
  return out;
}

std::vector<FieldError> validate_row(std::string_view relation, const Row& row) {
  const Relation& rel = canonical_catalog().at(relation);
  std::vector<FieldError> out;
  check_columns(rel, row, out);
  if (!out.empty()) return out;
  try {
    AnyRecord r = record_from_row(relation, row);
    std::visit([&](const auto& rec) { check_record(rec, out); }, r);
  } catch (const RecordDecodeError& e) {
    out.push_back({std::string(relation), "", "decode", "", e.what()});
  }
  return out;
}

}  // namespace peripartum
