#include <gtest/gtest.h>

#include <regex>

#include "peripartum/catalog.hpp"
#include "peripartum/record_json.hpp"
#include "peripartum/sql_parser.hpp"
#include "peripartum/store.hpp"
#include "peripartum/synth.hpp"
#include "peripartum/validation.hpp"

namespace peripartum {
namespace {

std::vector<std::string> rules_of(const std::vector<FieldError>& errors) {
  std::vector<std::string> out;
  for (const auto& e : errors) out.push_back(e.field + ":" + e.rule);
  return out;
}

TEST(Catalog, FifteenRelationsInDependencyOrder) {
  Catalog c = build_catalog();
  EXPECT_EQ(c.relations.size(), 15u);
  EXPECT_NO_THROW(validate_catalog(c));
  std::set<std::string> seen;
  for (const auto& r : c.relations) {
    for (const auto& fk : r.foreign_keys) EXPECT_TRUE(seen.count(fk.ref_relation)) << r.name << " -> " << fk.ref_relation;
    EXPECT_TRUE(seen.insert(r.name).second) << r.name << " twice";
  }
}

TEST(Catalog, PregnancyHasSyntheticId) {
  Catalog c = build_catalog();
  const Relation& p = c.at("pregnancy");
  EXPECT_EQ(p.primary_key, (std::vector<std::string>{"id"}));
  EXPECT_EQ(p.find_column("id")->family, KeyFamily::synthetic_id);
  EXPECT_EQ(p.unique_constraints, (std::vector<std::vector<std::string>>{{"patient_tc", "first_exam_date"}}));
}

TEST(Catalog, OneExaminationRelationWithKindColumn) {
  Catalog c = build_catalog();
  size_t exams = 0;
  for (const auto& r : c.relations) exams += r.name.find("exam") != std::string::npos && r.name != "examination_test";
  EXPECT_EQ(exams, 1u);
  const Column* kind = c.at("examination").find_column("examination_kind");
  ASSERT_NE(kind, nullptr);
  EXPECT_EQ(kind->enum_values,
            (std::vector<std::string>{"first_trimester", "second_trimester", "biometric_ultrasound", "other"}));
}

TEST(Catalog, Deterministic) {
  EXPECT_EQ(build_catalog(), build_catalog());
  EXPECT_EQ(emit_ddl(build_catalog()), emit_ddl(build_catalog()));
}

TEST(Catalog, SymbolsUsedByTheClinicalQueriesExist) {
  Catalog c = build_catalog();
  const std::vector<std::pair<const char*, const char*>> symbols{
      {"patient", "tc"},
      {"patient", "name"},
      {"patient", "surname"},
      {"pregnancy", "id"},
      {"pregnancy", "patient_tc"},
      {"delivery", "pregnancy_id"},
      {"delivery", "delivery_date"},
      {"delivery", "delivery_type"},
      {"programmed_c_section", "motivation"},
      {"delivery_with_labor", "motivation"},
      {"delivery_with_labor", "laceration"},
      {"delivery_with_labor", "delivery_subtype"},
      {"delivery_with_labor", "expulsion_time"},
      {"induction", "pregnancy_id"},
      {"induction", "administration_time"},
      {"newborn", "ph"},
  };
  for (const auto& [rel, col] : symbols) EXPECT_NE(c.at(rel).find_column(col), nullptr) << rel << "." << col;
}

TEST(Catalog, CorruptCatalogRejected) {
  Catalog c = build_catalog();
  c.relations[1].foreign_keys.push_back({{"patient_tc"}, "nowhere", {"x"}});
  EXPECT_THROW(validate_catalog(c), CatalogError);

  Catalog cyc = build_catalog().restricted_to({"patient", "pregnancy"});
  cyc.relations[0].foreign_keys.push_back({{"tc"}, "pregnancy", {"patient_tc"}});
  EXPECT_THROW(dependency_order(cyc), CatalogError);
}

TEST(Ddl, PatientPrecedesPregnancy) {
  std::string ddl = emit_ddl(build_catalog());
  EXPECT_LT(ddl.find("CREATE TABLE patient"), ddl.find("CREATE TABLE pregnancy"));
  EXPECT_EQ(ddl.find('\r'), std::string::npos);
}

TEST(Ddl, DeliveryKeyedByPregnancy) {
  Catalog back = sql::parse_ddl(emit_ddl(build_catalog()));
  EXPECT_EQ(back.at("delivery").primary_key, (std::vector<std::string>{"pregnancy_id"}));
}

TEST(Ddl, PatientAlone) {
  std::string ddl = emit_ddl(build_catalog().restricted_to({"patient"}));
  EXPECT_EQ(std::count(ddl.begin(), ddl.end(), ';'), 1);
  EXPECT_TRUE(std::regex_search(ddl, std::regex(R"(tc\s+CHAR\(16\))", std::regex::icase))) << ddl;
}

TEST(Ddl, RoundTripsToTheSameCatalog) {
  Catalog c = build_catalog();
  Catalog back = sql::parse_ddl(emit_ddl(c));
  ASSERT_EQ(back.relations.size(), c.relations.size());
  for (size_t i = 0; i < c.relations.size(); ++i) EXPECT_EQ(back.relations[i], c.relations[i]) << c.relations[i].name;
  EXPECT_TRUE(back == c);
}

TEST(ValidateFields, TaxCode) {
  Patient ok{"RSSMRA80A41L483X", "Maria", "Rossi", make_date(1980, 1, 1)};
  EXPECT_TRUE(validate_fields(ok).empty());
  Patient bad = ok;
  bad.tc = "SHORT";
  auto errs = validate_fields(bad);
  ASSERT_FALSE(errs.empty());
  EXPECT_EQ(errs[0].field, "tc");
  EXPECT_EQ(errs[0].value, "SHORT");
  bad.tc = "rssmra80a41l483x";
  EXPECT_FALSE(validate_fields(bad).empty());
}

TEST(ValidateFields, NewbornRanges) {
  Newborn n;
  n.pregnancy_id = 1;
  n.birth_time = make_timestamp(make_date(2024, 5, 1), 10, 0);
  n.weight_g = 3200;
  n.apgar_1 = 9;
  n.apgar_5 = 10;
  n.ph = 7.05;
  EXPECT_TRUE(validate_fields(n).empty());
  n.ph = 9.0;
  EXPECT_EQ(rules_of(validate_fields(n)), (std::vector<std::string>{"ph:range"}));
  n.ph = 6.5;
  n.apgar_10 = 11;
  n.weight_g = 150;
  auto r = rules_of(validate_fields(n));
  EXPECT_NE(std::find(r.begin(), r.end(), "apgar_10:range"), r.end());
  EXPECT_NE(std::find(r.begin(), r.end(), "weight_g:range"), r.end());
}

TEST(ValidateFields, LaborOrderingAndInstrument) {
  DeliveryWithLabor w;
  w.pregnancy_id = 1;
  w.labor_start_time = make_timestamp(make_date(2024, 5, 1), 10, 0);
  w.expulsion_time = make_timestamp(make_date(2024, 5, 1), 9, 0);
  EXPECT_FALSE(validate_fields(w).empty());
  w.expulsion_time = make_timestamp(make_date(2024, 5, 1), 12, 0);
  EXPECT_TRUE(validate_fields(w).empty());
  w.delivery_subtype = LaborSubtype::operative;
  w.motivation = "prolonged second stage";
  EXPECT_FALSE(validate_fields(w).empty());  // operative needs its instrument
  w.operative_instrument = OperativeInstrument::forceps;
  EXPECT_TRUE(validate_fields(w).empty());
  w.episiotomy_motivation = "rigid perineum";  // without episiotomy
  EXPECT_FALSE(validate_fields(w).empty());
}

TEST(ValidateFields, TestTypeWellFormed) {
  EXPECT_TRUE(validate_fields(peripartum::Test{1, "nt", {"numeric"}}).empty());
  EXPECT_FALSE(validate_fields(peripartum::Test{1, "x", {}}).empty());
  EXPECT_FALSE(validate_fields(peripartum::Test{1, "x", {"A", "A"}}).empty());
}

TEST(ValidateFields, Pure) {
  CanonicalStore s = generate(SynthConfig{.seed = 3, .n_patients = 20});
  for (const auto& [k, n] : s.table<Newborn>()) EXPECT_EQ(validate_fields(n), validate_fields(n));
  for (const auto& [k, p] : s.table<Pregnancy>()) EXPECT_TRUE(validate_fields(p).empty());
}

TEST(Records, RowAndJsonRoundTrip) {
  CanonicalStore s = generate(SynthConfig{.seed = 9, .n_patients = 15});
  size_t checked = 0;
  for_each_record_type([&]<class R>() {
    for (const auto& [k, r] : s.table<R>()) {
      AnyRecord any(r);
      EXPECT_EQ(record_from_row(R::kRelation, to_row(any)), any);
      EXPECT_EQ(record_from_json(record_to_json(any)), any);
      ++checked;
    }
  });
  EXPECT_GT(checked, 100u);
}

TEST(Store, CopiesAreSnapshots) {
  CanonicalStore a;
  a.put(Patient{"RSSMRA80A41L483X", "Maria", "Rossi", make_date(1980, 1, 1)});
  CanonicalStore b = a;
  b.put(Patient{"BNCGLI88B52G273T", "Giulia", "Bianchi", make_date(1988, 2, 12)});
  EXPECT_EQ(a.count("patient"), 1u);
  EXPECT_EQ(b.count("patient"), 2u);
  EXPECT_FALSE(a == b);
}

TEST(Store, IdsNeverReused) {
  CanonicalStore s;
  Pregnancy p;
  p.id = s.next_id("pregnancy");
  s.put(p);
  EXPECT_EQ(s.next_id("pregnancy"), p.id + 1);
  s.erase<Pregnancy>(p.id);
  EXPECT_EQ(s.next_id("pregnancy"), p.id + 1);
}

TEST(Store, SerializationIsCanonical) {
  CanonicalStore a = generate(SynthConfig{.seed = 5, .n_patients = 10});
  // same records inserted in reverse order
  CanonicalStore b;
  std::vector<AnyRecord> all;
  for_each_record_type([&]<class R>() {
    for (const auto& [k, r] : a.table<R>()) all.emplace_back(r);
  });
  for (auto it = all.rbegin(); it != all.rend(); ++it) b.put(*it);
  EXPECT_EQ(serialize_store(a), serialize_store(b));
  EXPECT_TRUE(a == b);
}

}  // namespace
}  // namespace peripartum
