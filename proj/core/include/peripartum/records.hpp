#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "peripartum/value.hpp"

namespace peripartum {

enum class ExaminationKind { first_trimester, second_trimester, biometric_ultrasound, other };
enum class PlacentalExpulsion { spontaneous, manual, curettage };
enum class DeliveryType { programmed_c_section, natural, operative, emergency_c_section };
/// Ordered by intervention: natural < operative < emergency_c_section.
enum class LaborSubtype { natural, operative, emergency_c_section };
enum class Laceration { none, first_degree, second_degree, third_degree, fourth_degree };
enum class OperativeInstrument { vacuum, forceps };

template <class E>
struct EnumNames;

template <>
struct EnumNames<ExaminationKind> {
  static constexpr std::array<std::string_view, 4> names{"first_trimester", "second_trimester",
                                                         "biometric_ultrasound", "other"};
};
template <>
struct EnumNames<PlacentalExpulsion> {
  static constexpr std::array<std::string_view, 3> names{"spontaneous", "manual", "curettage"};
};
template <>
struct EnumNames<DeliveryType> {
  static constexpr std::array<std::string_view, 4> names{"programmed_c_section", "natural",
                                                         "operative", "emergency_c_section"};
};
template <>
struct EnumNames<LaborSubtype> {
  static constexpr std::array<std::string_view, 3> names{"natural", "operative",
                                                         "emergency_c_section"};
};
template <>
struct EnumNames<Laceration> {
  static constexpr std::array<std::string_view, 5> names{"none", "first_degree", "second_degree",
                                                         "third_degree", "fourth_degree"};
};
template <>
struct EnumNames<OperativeInstrument> {
  static constexpr std::array<std::string_view, 2> names{"vacuum", "forceps"};
};

template <class E>
std::string_view enum_name(E e) {
  return EnumNames<E>::names.at(static_cast<size_t>(e));
}

template <class E>
std::optional<E> parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <class E>
std::vector<std::string> enum_values() {
  return {EnumNames<E>::names.begin(), EnumNames<E>::names.end()};
}

DeliveryType delivery_type_for(LaborSubtype s);

struct Patient {
  static constexpr std::string_view kRelation = "patient";
  using Key = std::string;

  std::string tc;
  std::string name;
  std::string surname;
  Date birth_date;

  Key key() const { return tc; }
  bool operator==(const Patient&) const = default;
};

struct Pregnancy {
  static constexpr std::string_view kRelation = "pregnancy";
  using Key = int64_t;

  int64_t id = 0;
  std::string patient_tc;
  Date first_exam_date;
  int parity_full_term = 0;
  int parity_premature = 0;
  int parity_abortions = 0;
  int parity_live_births = 0;
  int maternal_age_at_conception = 0;
  std::optional<bool> art_used;
  std::optional<std::string> prior_pregnancy_conditions;
  std::optional<Date> last_menstruation_date;
  std::optional<Date> expected_delivery_date;

  Key key() const { return id; }
  bool operator==(const Pregnancy&) const = default;
};

struct Condition {
  static constexpr std::string_view kRelation = "condition";
  using Key = int64_t;

  int64_t id = 0;
  std::string name;

  Key key() const { return id; }
  bool operator==(const Condition&) const = default;
};

/// A condition concurrent with a pregnancy, with its therapy if treated.
struct PregnancyCondition {
  static constexpr std::string_view kRelation = "pregnancy_condition";
  using Key = std::tuple<int64_t, int64_t>;

  int64_t pregnancy_id = 0;
  int64_t condition_id = 0;
  std::optional<std::string> therapy;

  Key key() const { return {pregnancy_id, condition_id}; }
  bool operator==(const PregnancyCondition&) const = default;
};

struct Examination {
  static constexpr std::string_view kRelation = "examination";
  using Key = int64_t;

  int64_t id = 0;
  int64_t pregnancy_id = 0;
  ExaminationKind kind = ExaminationKind::other;
  Date exam_date;
  int gestational_age_days = 0;
  std::map<std::string, std::string> details;

  Key key() const { return id; }
  bool operator==(const Examination&) const = default;
};

struct Test {
  static constexpr std::string_view kRelation = "test";
  using Key = int64_t;

  int64_t id = 0;
  std::string name;
  /// {"string"}, {"numeric"}, or the admissible result values.
  std::vector<std::string> type;

  Key key() const { return id; }
  bool operator==(const Test&) const = default;
};

struct ExaminationTest {
  static constexpr std::string_view kRelation = "examination_test";
  using Key = std::tuple<int64_t, int64_t>;

  int64_t examination_id = 0;
  int64_t test_id = 0;
  std::string result;

  Key key() const { return {examination_id, test_id}; }
  bool operator==(const ExaminationTest&) const = default;
};

struct Delivery {
  static constexpr std::string_view kRelation = "delivery";
  using Key = int64_t;

  int64_t pregnancy_id = 0;
  Date delivery_date;
  int gestational_age_days = 0;
  int robson_score = 1;
  PlacentalExpulsion placental_expulsion = PlacentalExpulsion::spontaneous;
  std::optional<std::string> analgesia;
  int estimated_blood_loss_ml = 0;
  DeliveryType delivery_type = DeliveryType::natural;

  Key key() const { return pregnancy_id; }
  bool operator==(const Delivery&) const = default;
};

struct ProgrammedCSection {
  static constexpr std::string_view kRelation = "programmed_c_section";
  using Key = int64_t;

  int64_t pregnancy_id = 0;
  std::string motivation;

  Key key() const { return pregnancy_id; }
  bool operator==(const ProgrammedCSection&) const = default;
};

struct DeliveryWithLabor {
  static constexpr std::string_view kRelation = "delivery_with_labor";
  using Key = int64_t;

  int64_t pregnancy_id = 0;
  LaborSubtype delivery_subtype = LaborSubtype::natural;
  std::optional<std::string> motivation;
  Laceration laceration = Laceration::none;
  bool episiotomy = false;
  std::optional<std::string> episiotomy_motivation;
  Timestamp labor_start_time;
  Timestamp expulsion_time;
  std::optional<OperativeInstrument> operative_instrument;

  Key key() const { return pregnancy_id; }
  bool operator==(const DeliveryWithLabor&) const = default;
};

struct Induction {
  static constexpr std::string_view kRelation = "induction";
  using Key = std::tuple<int64_t, Timestamp>;

  int64_t pregnancy_id = 0;
  Timestamp administration_time;
  std::string method;
  std::optional<std::string> drug_dosage;
  std::optional<double> completion_rate;

  Key key() const { return {pregnancy_id, administration_time}; }
  bool operator==(const Induction&) const = default;
};

struct Newborn {
  static constexpr std::string_view kRelation = "newborn";
  using Key = std::tuple<int64_t, Timestamp>;

  int64_t pregnancy_id = 0;
  Timestamp birth_time;
  int weight_g = 0;
  std::optional<double> length_cm;
  int apgar_1 = 0;
  int apgar_5 = 0;
  std::optional<int> apgar_10;
  std::optional<double> ph;

  Key key() const { return {pregnancy_id, birth_time}; }
  bool operator==(const Newborn&) const = default;
};

struct Tracing {
  static constexpr std::string_view kRelation = "tracing";
  using Key = int64_t;

  int64_t tracing_id = 0;
  int64_t pregnancy_id = 0;
  Timestamp start_time;

  Key key() const { return tracing_id; }
  bool operator==(const Tracing&) const = default;
};

struct Measurement {
  static constexpr std::string_view kRelation = "measurement";
  using Key = std::tuple<int64_t, Timestamp>;

  int64_t tracing_id = 0;
  Timestamp ts;
  std::optional<int> maternal_heart_rate;
  std::optional<double> maternal_tocography;

  Key key() const { return {tracing_id, ts}; }
  bool operator==(const Measurement&) const = default;
};

struct NewbornMeasurement {
  static constexpr std::string_view kRelation = "newborn_measurement";
  using Key = std::tuple<int64_t, Timestamp, int64_t, Timestamp>;

  int64_t tracing_id = 0;
  Timestamp ts;
  int64_t pregnancy_id = 0;
  Timestamp birth_time;
  int fetal_heart_rate = 0;

  Key key() const { return {tracing_id, ts, pregnancy_id, birth_time}; }
  bool operator==(const NewbornMeasurement&) const = default;
};

template <class... Ts>
struct TypeList {};

/// Every canonical record type, in foreign-key dependency order.
using RecordTypes =
    TypeList<Patient, Pregnancy, Condition, PregnancyCondition, Examination, Test,
             ExaminationTest, Delivery, ProgrammedCSection, DeliveryWithLabor, Induction, Newborn,
             Tracing, Measurement, NewbornMeasurement>;

using AnyRecord =
    std::variant<Patient, Pregnancy, Condition, PregnancyCondition, Examination, Test,
                 ExaminationTest, Delivery, ProgrammedCSection, DeliveryWithLabor, Induction,
                 Newborn, Tracing, Measurement, NewbornMeasurement>;

template <class F, class... Ts>
void for_each_record_type(TypeList<Ts...>, F&& f) {
  (f.template operator()<Ts>(), ...);
}

template <class F>
void for_each_record_type(F&& f) {
  for_each_record_type(RecordTypes{}, std::forward<F>(f));
}

std::string_view relation_of(const AnyRecord& r);

using Row = std::vector<Value>;

/// Column-ordered row as laid out in the catalog.
template <class R>
Row to_row(const R& r);
Row to_row(const AnyRecord& r);

template <> Row to_row(const Patient&);
template <> Row to_row(const Pregnancy&);
template <> Row to_row(const Condition&);
template <> Row to_row(const PregnancyCondition&);
template <> Row to_row(const Examination&);
template <> Row to_row(const Test&);
template <> Row to_row(const ExaminationTest&);
template <> Row to_row(const Delivery&);
template <> Row to_row(const ProgrammedCSection&);
template <> Row to_row(const DeliveryWithLabor&);
template <> Row to_row(const Induction&);
template <> Row to_row(const Newborn&);
template <> Row to_row(const Tracing&);
template <> Row to_row(const Measurement&);
template <> Row to_row(const NewbornMeasurement&);

/// Decodes a catalog-ordered row. Throws RecordDecodeError on arity or kind mismatch.
template <class R>
R from_row(const Row& row);
AnyRecord record_from_row(std::string_view relation, const Row& row);

template <> Patient from_row<Patient>(const Row&);
template <> Pregnancy from_row<Pregnancy>(const Row&);
template <> Condition from_row<Condition>(const Row&);
template <> PregnancyCondition from_row<PregnancyCondition>(const Row&);
template <> Examination from_row<Examination>(const Row&);
template <> Test from_row<Test>(const Row&);
template <> ExaminationTest from_row<ExaminationTest>(const Row&);
template <> Delivery from_row<Delivery>(const Row&);
template <> ProgrammedCSection from_row<ProgrammedCSection>(const Row&);
template <> DeliveryWithLabor from_row<DeliveryWithLabor>(const Row&);
template <> Induction from_row<Induction>(const Row&);
template <> Newborn from_row<Newborn>(const Row&);
template <> Tracing from_row<Tracing>(const Row&);
template <> Measurement from_row<Measurement>(const Row&);
template <> NewbornMeasurement from_row<NewbornMeasurement>(const Row&);

/// Human-readable key, e.g. "pregnancy(17)" or "measurement(3, 2024-01-01 10:00:00.250)".
template <class R>
std::string describe_key(const typename R::Key& k);
std::string describe_key(const AnyRecord& r);

/// PostgreSQL array literal for Test.type, e.g. {numeric} or {A,"B C"}.
std::string format_text_array(const std::vector<std::string>& items);
std::optional<std::vector<std::string>> parse_text_array(std::string_view text);

class RecordDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peripartum
