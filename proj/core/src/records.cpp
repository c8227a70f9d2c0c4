#include "peripartum/records.hpp"

#include <nlohmann/json.hpp>

namespace peripartum {

namespace {

template <class E>
Value enum_value(E e) {
  return Value(std::string(enum_name(e)));
}

template <class E>
Value enum_value(const std::optional<E>& e) {
  return e ? enum_value(*e) : Value();
}

std::string details_to_text(const std::map<std::string, std::string>& details) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : details) j[k] = v;
  return j.dump();
}

class Decoder {
 public:
  Decoder(const Row& row, std::string_view relation, size_t arity)
      : row_(row), relation_(relation) {
    if (row.size() != arity) {
      throw RecordDecodeError(std::string(relation) + ": expected " + std::to_string(arity) +
                              " columns, got " + std::to_string(row.size()));
    }
  }

  int64_t id() { return required(ValueKind::integer, "integer").as_int(); }
  int integer() { return static_cast<int>(id()); }
  std::optional<int> opt_integer() {
    if (peek().is_null()) return skip<int>();
    return integer();
  }
  std::string text() { return required(ValueKind::text, "text").as_text(); }
  std::optional<std::string> opt_text() {
    if (peek().is_null()) return skip<std::string>();
    return text();
  }
  bool boolean() { return required(ValueKind::boolean, "boolean").as_bool(); }
  std::optional<bool> opt_boolean() {
    if (peek().is_null()) return skip<bool>();
    return boolean();
  }
  double real() {
    const Value& v = next();
    if (!v.is_numeric()) fail("numeric");
    return v.to_double();
  }
  std::optional<double> opt_real() {
    if (peek().is_null()) return skip<double>();
    return real();
  }
  Date date() { return required(ValueKind::date, "date").as_date(); }
  std::optional<Date> opt_date() {
    if (peek().is_null()) return skip<Date>();
    return date();
  }
  Timestamp timestamp() { return required(ValueKind::timestamp, "timestamp").as_timestamp(); }

  template <class E>
  E enumeration() {
    std::string t = text();
    auto e = parse_enum<E>(t);
    if (!e) {
      throw RecordDecodeError(std::string(relation_) + ": '" + t + "' is not a valid value for column " +
                              std::to_string(pos_ - 1));
    }
    return *e;
  }
  template <class E>
  std::optional<E> opt_enumeration() {
    if (peek().is_null()) return skip<E>();
    return enumeration<E>();
  }

  std::map<std::string, std::string> details() {
    std::string raw = text();
    nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
    if (!j.is_object()) throw RecordDecodeError(std::string(relation_) + ": details is not a JSON object");
    std::map<std::string, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
      out[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    return out;
  }

  std::vector<std::string> text_array() {
    std::string raw = text();
    auto items = parse_text_array(raw);
    if (!items) throw RecordDecodeError(std::string(relation_) + ": malformed array literal " + raw);
    return *items;
  }

 private:
  const Value& peek() const { return row_.at(pos_); }
  const Value& next() { return row_.at(pos_++); }

  template <class T>
  std::optional<T> skip() {
    ++pos_;
    return std::nullopt;
  }

  const Value& required(ValueKind kind, const char* what) {
    const Value& v = next();
    if (v.kind() != kind) fail(what);
    return v;
  }

  [[noreturn]] void fail(const char* what) const {
    throw RecordDecodeError(std::string(relation_) + ": column " + std::to_string(pos_ - 1) +
                            " expected " + what + ", got " +
                            std::string(to_string(row_.at(pos_ - 1).kind())));
  }

  const Row& row_;
  std::string_view relation_;
  size_t pos_ = 0;
};

template <class T>
std::string key_part(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, Timestamp>) {
    return format_timestamp(v);
  } else {
    return std::to_string(v);
  }
}

template <class K>
std::string key_text(const K& k) {
  if constexpr (requires { std::tuple_size<K>::value; }) {
    std::string out;
    std::apply(
        [&](const auto&... parts) {
          ((out += (out.empty() ? "" : ", ") + key_part(parts)), ...);
        },
        k);
    return out;
  } else {
    return key_part(k);
  }
}

}  // namespace

DeliveryType delivery_type_for(LaborSubtype s) {
  switch (s) {
    case LaborSubtype::natural: return DeliveryType::natural;
    case LaborSubtype::operative: return DeliveryType::operative;
    case LaborSubtype::emergency_c_section: return DeliveryType::emergency_c_section;
  }
  return DeliveryType::natural;
}

std::string format_text_array(const std::vector<std::string>& items) {
  std::string out = "{";
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    const std::string& s = items[i];
    bool plain = !s.empty() && s.find_first_of(",{}\" \\") == std::string::npos &&
                 s != "NULL";
    if (plain) {
      out += s;
    } else {
      out += '"';
      for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
    }
  }
  return out + "}";
}

std::optional<std::vector<std::string>> parse_text_array(std::string_view text) {
  if (text.size() < 2 || text.front() != '{' || text.back() != '}') return std::nullopt;
  text = text.substr(1, text.size() - 2);
  std::vector<std::string> out;
  if (text.empty()) return out;
  size_t i = 0;
  while (true) {
    std::string item;
    if (i < text.size() && text[i] == '"') {
      ++i;
      bool closed = false;
      while (i < text.size()) {
        char c = text[i++];
        if (c == '\\' && i < text.size()) {
          item += text[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          item += c;
        }
      }
      if (!closed) return std::nullopt;
    } else {
      while (i < text.size() && text[i] != ',') item += text[i++];
      if (item.empty()) return std::nullopt;
    }
    out.push_back(std::move(item));
    if (i == text.size()) break;
    if (text[i] != ',') return std::nullopt;
    ++i;
  }
  return out;
}

// Column order here is the catalog column order; catalog_test checks the two agree.

template <>
Row to_row(const Patient& r) {
  return {r.tc, r.name, r.surname, r.birth_date};
}
template <>
Patient from_row(const Row& row) {
  Decoder d(row, Patient::kRelation, 4);
  Patient r;
  r.tc = d.text();
  r.name = d.text();
  r.surname = d.text();
  r.birth_date = d.date();
  return r;
}

template <>
Row to_row(const Pregnancy& r) {
  return {r.id,
          r.patient_tc,
          r.first_exam_date,
          r.parity_full_term,
          r.parity_premature,
          r.parity_abortions,
          r.parity_live_births,
          r.maternal_age_at_conception,
          Value::from_optional(r.art_used),
          Value::from_optional(r.prior_pregnancy_conditions),
          Value::from_optional(r.last_menstruation_date),
          Value::from_optional(r.expected_delivery_date)};
}
template <>
Pregnancy from_row(const Row& row) {
  Decoder d(row, Pregnancy::kRelation, 12);
  Pregnancy r;
  r.id = d.id();
  r.patient_tc = d.text();
  r.first_exam_date = d.date();
  r.parity_full_term = d.integer();
  r.parity_premature = d.integer();
  r.parity_abortions = d.integer();
  r.parity_live_births = d.integer();
  r.maternal_age_at_conception = d.integer();
  r.art_used = d.opt_boolean();
  r.prior_pregnancy_conditions = d.opt_text();
  r.last_menstruation_date = d.opt_date();
  r.expected_delivery_date = d.opt_date();
  return r;
}

template <>
Row to_row(const Condition& r) {
  return {r.id, r.name};
}
template <>
Condition from_row(const Row& row) {
  Decoder d(row, Condition::kRelation, 2);
  Condition r;
  r.id = d.id();
  r.name = d.text();
  return r;
}

template <>
Row to_row(const PregnancyCondition& r) {
  return {r.pregnancy_id, r.condition_id, Value::from_optional(r.therapy)};
}
template <>
PregnancyCondition from_row(const Row& row) {
  Decoder d(row, PregnancyCondition::kRelation, 3);
  PregnancyCondition r;
  r.pregnancy_id = d.id();
  r.condition_id = d.id();
  r.therapy = d.opt_text();
  return r;
}

template <>
Row to_row(const Examination& r) {
  return {r.id, r.pregnancy_id, enum_value(r.kind), r.exam_date, r.gestational_age_days,
          details_to_text(r.details)};
}
template <>
Examination from_row(const Row& row) {
  Decoder d(row, Examination::kRelation, 6);
  Examination r;
  r.id = d.id();
  r.pregnancy_id = d.id();
  r.kind = d.enumeration<ExaminationKind>();
  r.exam_date = d.date();
  r.gestational_age_days = d.integer();
  r.details = d.details();
  return r;
}

template <>
Row to_row(const Test& r) {
  return {r.id, r.name, format_text_array(r.type)};
}
template <>
Test from_row(const Row& row) {
  Decoder d(row, Test::kRelation, 3);
  Test r;
  r.id = d.id();
  r.name = d.text();
  r.type = d.text_array();
  return r;
}

template <>
Row to_row(const ExaminationTest& r) {
  return {r.examination_id, r.test_id, r.result};
}
template <>
ExaminationTest from_row(const Row& row) {
  Decoder d(row, ExaminationTest::kRelation, 3);
  ExaminationTest r;
  r.examination_id = d.id();
  r.test_id = d.id();
  r.result = d.text();
  return r;
}

template <>
Row to_row(const Delivery& r) {
  return {r.pregnancy_id,
          r.delivery_date,
          r.gestational_age_days,
          r.robson_score,
          enum_value(r.placental_expulsion),
          Value::from_optional(r.analgesia),
          r.estimated_blood_loss_ml,
          enum_value(r.delivery_type)};
}
template <>
Delivery from_row(const Row& row) {
  Decoder d(row, Delivery::kRelation, 8);
  Delivery r;
  r.pregnancy_id = d.id();
  r.delivery_date = d.date();
  r.gestational_age_days = d.integer();
  r.robson_score = d.integer();
  r.placental_expulsion = d.enumeration<PlacentalExpulsion>();
  r.analgesia = d.opt_text();
  r.estimated_blood_loss_ml = d.integer();
  r.delivery_type = d.enumeration<DeliveryType>();
  return r;
}

template <>
Row to_row(const ProgrammedCSection& r) {
  return {r.pregnancy_id, r.motivation};
}
template <>
ProgrammedCSection from_row(const Row& row) {
  Decoder d(row, ProgrammedCSection::kRelation, 2);
  ProgrammedCSection r;
  r.pregnancy_id = d.id();
  r.motivation = d.text();
  return r;
}

template <>
Row to_row(const DeliveryWithLabor& r) {
  return {r.pregnancy_id,
          enum_value(r.delivery_subtype),
          Value::from_optional(r.motivation),
          enum_value(r.laceration),
          r.episiotomy,
          Value::from_optional(r.episiotomy_motivation),
          r.labor_start_time,
          r.expulsion_time,
          enum_value(r.operative_instrument)};
}
template <>
DeliveryWithLabor from_row(const Row& row) {
  Decoder d(row, DeliveryWithLabor::kRelation, 9);
  DeliveryWithLabor r;
  r.pregnancy_id = d.id();
  r.delivery_subtype = d.enumeration<LaborSubtype>();
  r.motivation = d.opt_text();
  r.laceration = d.enumeration<Laceration>();
  r.episiotomy = d.boolean();
  r.episiotomy_motivation = d.opt_text();
  r.labor_start_time = d.timestamp();
  r.expulsion_time = d.timestamp();
  r.operative_instrument = d.opt_enumeration<OperativeInstrument>();
  return r;
}

template <>
Row to_row(const Induction& r) {
  return {r.pregnancy_id, r.administration_time, r.method, Value::from_optional(r.drug_dosage),
          Value::from_optional(r.completion_rate)};
}
template <>
Induction from_row(const Row& row) {
  Decoder d(row, Induction::kRelation, 5);
  Induction r;
  r.pregnancy_id = d.id();
  r.administration_time = d.timestamp();
  r.method = d.text();
  r.drug_dosage = d.opt_text();
  r.completion_rate = d.opt_real();
  return r;
}

template <>
Row to_row(const Newborn& r) {
  return {r.pregnancy_id,
          r.birth_time,
          r.weight_g,
          Value::from_optional(r.length_cm),
          r.apgar_1,
          r.apgar_5,
          Value::from_optional(r.apgar_10),
          Value::from_optional(r.ph)};
}
template <>
Newborn from_row(const Row& row) {
  Decoder d(row, Newborn::kRelation, 8);
  Newborn r;
  r.pregnancy_id = d.id();
  r.birth_time = d.timestamp();
  r.weight_g = d.integer();
  r.length_cm = d.opt_real();
  r.apgar_1 = d.integer();
  r.apgar_5 = d.integer();
  r.apgar_10 = d.opt_integer();
  r.ph = d.opt_real();
  return r;
}

template <>
Row to_row(const Tracing& r) {
  return {r.tracing_id, r.pregnancy_id, r.start_time};
}
template <>
Tracing from_row(const Row& row) {
  Decoder d(row, Tracing::kRelation, 3);
  Tracing r;
  r.tracing_id = d.id();
  r.pregnancy_id = d.id();
  r.start_time = d.timestamp();
  return r;
}

template <>
Row to_row(const Measurement& r) {
  return {r.tracing_id, r.ts, Value::from_optional(r.maternal_heart_rate),
          Value::from_optional(r.maternal_tocography)};
}
template <>
Measurement from_row(const Row& row) {
  Decoder d(row, Measurement::kRelation, 4);
  Measurement r;
  r.tracing_id = d.id();
  r.ts = d.timestamp();
  r.maternal_heart_rate = d.opt_integer();
  r.maternal_tocography = d.opt_real();
  return r;
}

template <>
Row to_row(const NewbornMeasurement& r) {
  return {r.tracing_id, r.ts, r.pregnancy_id, r.birth_time, r.fetal_heart_rate};
}
template <>
NewbornMeasurement from_row(const Row& row) {
  Decoder d(row, NewbornMeasurement::kRelation, 5);
  NewbornMeasurement r;
  r.tracing_id = d.id();
  r.ts = d.timestamp();
  r.pregnancy_id = d.id();
  r.birth_time = d.timestamp();
  r.fetal_heart_rate = d.integer();
  return r;
}

Row to_row(const AnyRecord& r) {
  return std::visit([](const auto& rec) { return to_row(rec); }, r);
}

std::string_view relation_of(const AnyRecord& r) {
  return std::visit([](const auto& rec) { return std::decay_t<decltype(rec)>::kRelation; }, r);
}

AnyRecord record_from_row(std::string_view relation, const Row& row) {
  std::optional<AnyRecord> out;
  for_each_record_type([&]<class R>() {
    if (!out && R::kRelation == relation) out = from_row<R>(row);
  });
  if (!out) throw RecordDecodeError("unknown relation '" + std::string(relation) + "'");
  return std::move(*out);
}

template <class R>
std::string describe_key(const typename R::Key& k) {
  return std::string(R::kRelation) + "(" + key_text(k) + ")";
}

std::string describe_key(const AnyRecord& r) {
  return std::visit(
      [](const auto& rec) {
        using R = std::decay_t<decltype(rec)>;
        return describe_key<R>(rec.key());
      },
      r);
}

#define PERIPARTUM_INSTANTIATE_KEY(R) template std::string describe_key<R>(const R::Key&);
PERIPARTUM_INSTANTIATE_KEY(Patient)
PERIPARTUM_INSTANTIATE_KEY(Pregnancy)
PERIPARTUM_INSTANTIATE_KEY(Condition)
PERIPARTUM_INSTANTIATE_KEY(PregnancyCondition)
PERIPARTUM_INSTANTIATE_KEY(Examination)
PERIPARTUM_INSTANTIATE_KEY(Test)
PERIPARTUM_INSTANTIATE_KEY(ExaminationTest)
PERIPARTUM_INSTANTIATE_KEY(Delivery)
PERIPARTUM_INSTANTIATE_KEY(ProgrammedCSection)
PERIPARTUM_INSTANTIATE_KEY(DeliveryWithLabor)
PERIPARTUM_INSTANTIATE_KEY(Induction)
PERIPARTUM_INSTANTIATE_KEY(Newborn)
PERIPARTUM_INSTANTIATE_KEY(Tracing)
PERIPARTUM_INSTANTIATE_KEY(Measurement)
PERIPARTUM_INSTANTIATE_KEY(NewbornMeasurement)
#undef PERIPARTUM_INSTANTIATE_KEY

}  // namespace peripartum
