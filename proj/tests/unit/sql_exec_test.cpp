#include <gtest/gtest.h>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_exec.hpp"
#include "peripartum/sql_parser.hpp"
#include "peripartum/stored_queries.hpp"
#include "test_support.hpp"

namespace peripartum::sql {
namespace {

ResultTable run(const std::string& text, const CanonicalStore& store, ExecOptions opts = {}) {
  SqlAst ast = parse_sql(text);
  return execute(resolve_query(ast.statements.at(0), canonical_catalog()), store, opts);
}

Value I(int64_t v) { return Value(v); }

Timestamp at(int y, unsigned m, unsigned d, int hh, int mm = 0) { return make_timestamp(make_date(y, m, d), hh, mm); }

std::string tc(int i) {
  std::string s = "RSSMRA80A01H50" + std::to_string(10 + i);
  return s.substr(0, 16);
}

// Two patients, three pregnancies; deliveries of every kind.
CanonicalStore small_store() {
  CanonicalStore s;
  s.put(Patient{tc(1), "Anna", "Rossi", make_date(1990, 1, 2)});
  s.put(Patient{tc(2), "Bea", "Verdi", make_date(1988, 5, 6)});
  auto preg = [&](int64_t id, const std::string& who) {
    Pregnancy p;
    p.id = id;
    p.patient_tc = who;
    p.first_exam_date = make_date(2023, 1, static_cast<unsigned>(id));
    p.maternal_age_at_conception = 30;
    s.put(p);
  };
  preg(1, tc(1));
  preg(2, tc(1));
  preg(3, tc(2));
  auto deliv = [&](int64_t id, Date when, DeliveryType t) {
    Delivery d;
    d.pregnancy_id = id;
    d.delivery_date = when;
    d.gestational_age_days = 270;
    d.delivery_type = t;
    s.put(d);
  };
  deliv(1, make_date(2024, 3, 1), DeliveryType::programmed_c_section);
  deliv(2, make_date(2025, 6, 1), DeliveryType::emergency_c_section);
  deliv(3, make_date(2024, 9, 1), DeliveryType::natural);
  s.put(ProgrammedCSection{1, "breech; CTG not reassuring"});
  DeliveryWithLabor e;
  e.pregnancy_id = 2;
  e.delivery_subtype = LaborSubtype::emergency_c_section;
  e.motivation = "failed vacuum";
  e.laceration = Laceration::none;
  e.labor_start_time = at(2025, 6, 1, 6);
  e.expulsion_time = at(2025, 6, 1, 14);
  s.put(e);
  DeliveryWithLabor n;
  n.pregnancy_id = 3;
  n.delivery_subtype = LaborSubtype::natural;
  n.laceration = Laceration::first_degree;
  n.labor_start_time = at(2024, 9, 1, 1);
  n.expulsion_time = at(2024, 9, 1, 9);
  s.put(n);
  s.put(Induction{2, at(2025, 6, 1, 10), "oxytocin", std::nullopt, std::nullopt});  // 4 h before expulsion
  s.put(Induction{3, at(2024, 9, 1, 7), "prostaglandin", std::nullopt, std::nullopt});  // 2 h
  Newborn b;
  b.pregnancy_id = 2;
  b.birth_time = at(2025, 6, 1, 14);
  b.weight_g = 3100;
  b.apgar_1 = 8;
  b.apgar_5 = 9;
  b.ph = 7.05;
  s.put(b);
  b.pregnancy_id = 3;
  b.birth_time = at(2024, 9, 1, 9);
  b.ph = 7.3;
  s.put(b);
  return s;
}

TEST(Execute, EmptyStoreCSectionCountIsZero) {
  CanonicalStore empty;
  ResultTable t = run(peripartum::testing::read_fixture("corpus/c_sections_2024.sql"), empty);
  EXPECT_EQ(t.columns, std::vector<std::string>{"total_c_sections"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], I(0));
}

TEST(Execute, UnionDeduplicatesUnionAllPreserves) {
  CanonicalStore s;
  EXPECT_EQ(run("SELECT 1 UNION SELECT 1", s).rows.size(), 1u);
  EXPECT_EQ(run("SELECT 1 UNION ALL SELECT 1", s).rows.size(), 2u);
  EXPECT_EQ(run("SELECT 1 UNION ALL SELECT 1 UNION SELECT 2", s).rows.size(), 2u);
}

TEST(Execute, CSectionQueryCountsBothKinds) {
  CanonicalStore s = small_store();
  EXPECT_EQ(run(peripartum::testing::read_fixture("corpus/c_sections_2024.sql"), s).rows[0][0], I(1));
  EXPECT_EQ(run_stored_query("c_sections_in_year", {{"year", I(2025)}}, s).rows[0][0], I(1));
}

TEST(Execute, AverageInductionIntervalInHours) {
  CanonicalStore s = small_store();
  ResultTable t = run(peripartum::testing::read_fixture("corpus/avg_induction_interval.sql"), s);
  EXPECT_EQ(t.columns, std::vector<std::string>{"average_interval_hours"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Value(3.0));
}

TEST(Execute, CorpusPhJoinRunsAndFindsNothing) {
  CanonicalStore s = small_store();
  EXPECT_TRUE(run(peripartum::testing::read_fixture("corpus/ph_below_7_1.sql"), s).rows.empty());
  ResultTable fixed = run_stored_query("ph_below", {{"threshold", Value(7.1)}}, s);
  ASSERT_EQ(fixed.rows.size(), 1u);
  EXPECT_EQ(fixed.rows[0][0], Value("Anna"));
  EXPECT_EQ(fixed.rows[0][1], Value(make_date(2025, 6, 1)));
}

TEST(Execute, MotivationsIncorrectVersusCorrected) {
  CanonicalStore s = small_store();
  // the natural delivery has no motivation; UNION keeps that NULL once
  EXPECT_EQ(run(peripartum::testing::read_fixture("corpus/motivations_incorrect.sql"), s).rows.size(), 3u);
  EXPECT_EQ(run(peripartum::testing::read_fixture("corpus/motivations_corrected.sql"), s).rows.size(), 2u);
}

TEST(Execute, LacerationStatsRoundToDecimal) {
  CanonicalStore s = small_store();
  ResultTable t = run(peripartum::testing::read_fixture("corpus/laceration_stats.sql"), s);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][2], Value(Decimal{5000, 2}));
  EXPECT_EQ(t.rows[1][2], Value(Decimal{5000, 2}));
}

TEST(Execute, InductionsPerPatientOrderedByTaxCode) {
  CanonicalStore s = small_store();
  ResultTable t = run(peripartum::testing::read_fixture("corpus/inductions_per_patient_2025.sql"), s);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (Row{Value(tc(1)), Value("Anna"), Value("Rossi"), I(1)}));
  ResultTable y2024 = run_stored_query("inductions_per_patient", {{"year", I(2024)}}, s);
  ASSERT_EQ(y2024.rows.size(), 1u);
  EXPECT_EQ(y2024.rows[0][0], Value(tc(2)));
}

TEST(Execute, CtgQueryReturnsPatientAndPregnancyColumns) {
  CanonicalStore s = small_store();
  ResultTable t = run(peripartum::testing::read_fixture("corpus/ctg_motivation_patients.sql"), s);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Value(tc(1)));
  EXPECT_EQ(t.columns[4], "id");
  EXPECT_EQ(t.rows[0][4], I(1));
}

TEST(Execute, InducedDeliveriesCorpusFormIsAlwaysFull) {
  CanonicalStore s = small_store();
  ResultTable corpus_form = run(peripartum::testing::read_fixture("corpus/induced_deliveries.sql"), s);
  EXPECT_EQ(corpus_form.rows[0], (Row{I(2), Value(Decimal{10000, 2})}));
  ResultTable fixed = run_stored_query("induced_deliveries", {}, s);
  EXPECT_EQ(fixed.rows[0], (Row{I(2), Value(Decimal{6667, 2})}));
}

TEST(Execute, NullDiscipline) {
  CanonicalStore s = small_store();
  // completion_rate is NULL on every induction
  ResultTable t = run("SELECT COUNT(*), COUNT(completion_rate), AVG(completion_rate), SUM(completion_rate), "
                      "MIN(completion_rate) FROM induction",
                      s);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], I(2));
  EXPECT_EQ(t.rows[0][1], I(0));
  EXPECT_TRUE(t.rows[0][2].is_null());
  EXPECT_TRUE(t.rows[0][3].is_null());
  EXPECT_TRUE(t.rows[0][4].is_null());
}

TEST(Execute, ThreeValuedLogic) {
  CanonicalStore s;
  auto one = [&](const std::string& expr) { return run("SELECT " + expr, s).rows.at(0).at(0); };
  EXPECT_TRUE(one("NULL = NULL").is_null());
  EXPECT_EQ(one("NULL IS NULL"), Value(true));
  EXPECT_EQ(one("NULL AND 1 = 0"), Value(false));
  EXPECT_TRUE(one("NULL AND 1 = 1").is_null());
  EXPECT_EQ(one("NULL OR 1 = 1"), Value(true));
  EXPECT_TRUE(one("NOT (NULL = 1)").is_null());
  EXPECT_TRUE(one("1 IN (2, NULL)").is_null());
  EXPECT_EQ(one("1 IN (1, NULL)"), Value(true));
  EXPECT_EQ(one("1 NOT IN (2, 3)"), Value(true));
}

TEST(Execute, ArithmeticAndFunctions) {
  CanonicalStore s;
  auto one = [&](const std::string& expr) { return run("SELECT " + expr, s).rows.at(0).at(0); };
  EXPECT_EQ(one("7 / 2"), I(3));
  EXPECT_EQ(one("7 / 2.0"), Value(3.5));
  EXPECT_TRUE(one("1 / 0").is_null());
  EXPECT_TRUE(one("1.5 / 0").is_null());
  EXPECT_EQ(one("ROUND(2.345, 2)"), Value(Decimal{235, 2}));
  EXPECT_EQ(one("ROUND(-2.345, 2)"), Value(Decimal{-235, 2}));
  EXPECT_EQ(one("ROUND(2.5)"), Value(Decimal{3, 0}));
  EXPECT_EQ(one("ABS(-4)"), I(4));
  EXPECT_EQ(one("COALESCE(NULL, 'x')"), Value("x"));
  EXPECT_EQ(one("UPPER('ab') || LOWER('CD')"), Value("ABcd"));
  EXPECT_EQ(one("LENGTH('abc')"), I(3));
  EXPECT_EQ(one("3 BETWEEN 1 AND 5"), Value(true));
  EXPECT_EQ(one("3 NOT BETWEEN 1 AND 5"), Value(false));
}

TEST(Execute, ExtractFields) {
  CanonicalStore s = small_store();
  ResultTable t = run(
      "SELECT EXTRACT(YEAR FROM expulsion_time), EXTRACT(MONTH FROM expulsion_time), EXTRACT(HOUR FROM "
      "expulsion_time), EXTRACT(EPOCH FROM expulsion_time - labor_start_time) FROM delivery_with_labor "
      "WHERE pregnancy_id = 2",
      s);
  EXPECT_EQ(t.rows[0], (Row{I(2025), I(6), I(14), Value(8.0 * 3600)}));
}

TEST(Execute, LikeAndIlike) {
  EXPECT_TRUE(like_match("CTG not reassuring", "%CTG%", false));
  EXPECT_FALSE(like_match("ctg", "%CTG%", false));
  EXPECT_TRUE(like_match("ctg", "%CTG%", true));
  EXPECT_TRUE(like_match("abc", "a_c", false));
  EXPECT_FALSE(like_match("abbc", "a_c", false));
  EXPECT_TRUE(like_match("50%", "50\\%", false));
  EXPECT_FALSE(like_match("500", "50\\%", false));
  EXPECT_TRUE(like_match("", "%", false));
  EXPECT_TRUE(like_match("a%b%c", "%b%", false));
}

TEST(Execute, LeftJoinKeepsUnmatchedRows) {
  CanonicalStore s = small_store();
  ResultTable t = run(
      "SELECT d.pregnancy_id, pcs.motivation FROM delivery d LEFT JOIN programmed_c_section pcs "
      "ON d.pregnancy_id = pcs.pregnancy_id ORDER BY 1",
      s);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][1], Value("breech; CTG not reassuring"));
  EXPECT_TRUE(t.rows[1][1].is_null());
  EXPECT_TRUE(t.rows[2][1].is_null());
}

TEST(Execute, OrderByVariantsAndLimit) {
  CanonicalStore s = small_store();
  auto first_col = [](const ResultTable& t) {
    std::vector<Value> v;
    for (const auto& r : t.rows) v.push_back(r[0]);
    return v;
  };
  EXPECT_EQ(first_col(run("SELECT id FROM pregnancy ORDER BY id DESC", s)), (std::vector<Value>{I(3), I(2), I(1)}));
  EXPECT_EQ(first_col(run("SELECT id AS k FROM pregnancy ORDER BY k DESC LIMIT 2", s)), (std::vector<Value>{I(3), I(2)}));
  EXPECT_EQ(first_col(run("SELECT id FROM pregnancy ORDER BY first_exam_date DESC", s)),
            (std::vector<Value>{I(3), I(2), I(1)}));
  EXPECT_EQ(first_col(run("SELECT id FROM pregnancy UNION SELECT pregnancy_id FROM newborn ORDER BY 1", s)),
            (std::vector<Value>{I(1), I(2), I(3)}));
}

TEST(Execute, RowLimitTruncates) {
  CanonicalStore s = small_store();
  ResultTable t = run("SELECT id FROM pregnancy", s, ExecOptions{2});
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.truncated);
  EXPECT_FALSE(run("SELECT id FROM pregnancy", s, ExecOptions{3}).truncated);
}

TEST(Execute, ScalarSubqueryWithManyRowsFails) {
  CanonicalStore s = small_store();
  EXPECT_THROW(run("SELECT (SELECT id FROM pregnancy)", s), ExecError);
  EXPECT_TRUE(run("SELECT (SELECT id FROM pregnancy WHERE id = 99)", s).rows[0][0].is_null());
}

TEST(Execute, DistinctAndCountDistinct) {
  CanonicalStore s = small_store();
  EXPECT_EQ(run("SELECT DISTINCT patient_tc FROM pregnancy", s).rows.size(), 2u);
  EXPECT_EQ(run("SELECT COUNT(DISTINCT patient_tc), COUNT(patient_tc) FROM pregnancy", s).rows[0],
            (Row{I(2), I(3)}));
}

TEST(Execute, GroupByWithCorrelatedSubquery) {
  CanonicalStore s = small_store();
  ResultTable t = run(
      "SELECT p.tc, COUNT(*), (SELECT COUNT(*) FROM pregnancy x WHERE x.patient_tc = p.tc) FROM patient p "
      "JOIN pregnancy pr ON pr.patient_tc = p.tc GROUP BY p.tc ORDER BY p.tc",
      s);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (Row{Value(tc(1)), I(2), I(2)}));
  EXPECT_EQ(t.rows[1], (Row{Value(tc(2)), I(1), I(1)}));
}

TEST(Execute, DerivedTableAndInSubquery) {
  CanonicalStore s = small_store();
  EXPECT_EQ(run("SELECT COUNT(*) FROM (SELECT id FROM pregnancy WHERE id > 1) AS t", s).rows[0][0], I(2));
  EXPECT_EQ(run("SELECT COUNT(*) FROM delivery WHERE pregnancy_id IN (SELECT pregnancy_id FROM induction)", s)
                .rows[0][0],
            I(2));
  EXPECT_EQ(run("SELECT COUNT(*) FROM delivery WHERE pregnancy_id NOT IN (SELECT pregnancy_id FROM induction)", s)
                .rows[0][0],
            I(1));
}

TEST(Execute, PermissiveMixedComparison) {
  CanonicalStore s = small_store();
  EXPECT_EQ(run("SELECT COUNT(*) FROM pregnancy pr JOIN patient p ON pr.id = p.tc", s).rows[0][0], I(0));
  EXPECT_EQ(run("SELECT COUNT(*) FROM delivery WHERE delivery_date >= '2024-06-01'", s).rows[0][0], I(2));
}

TEST(ResultTable, JsonAndCsv) {
  ResultTable t{{"a", "b,c"}, {{I(1), Value("x\"y")}, {Value(), Value(Decimal{1250, 2})}}, false};
  EXPECT_EQ(t.to_csv(), "a,\"b,c\"\n1,\"x\"\"y\"\n,12.50\n");
  auto j = t.to_json();
  EXPECT_EQ(j["columns"][1], "b,c");
  EXPECT_EQ(j["rows"][0][0], 1);
  EXPECT_TRUE(j["rows"][1][0].is_null());
  EXPECT_EQ(j["truncated"], false);
}

TEST(StoredQueries, RegistryAndParameterChecks) {
  EXPECT_EQ(stored_queries().size(), 8u);
  CanonicalStore s;
  EXPECT_THROW(run_stored_query("nope", {}, s), StoredQueryError);
  try {
    run_stored_query("ph_below", {}, s);
    FAIL();
  } catch (const StoredQueryError& e) {
    EXPECT_EQ(e.kind(), StoredQueryError::Kind::arity);
  }
  try {
    run_stored_query("c_sections_in_year", {{"year", Value("2024")}}, s);
    FAIL();
  } catch (const StoredQueryError& e) {
    EXPECT_EQ(e.kind(), StoredQueryError::Kind::type);
  }
  EXPECT_THROW(run_stored_query("laceration_stats", {{"x", I(1)}}, s), StoredQueryError);
  // integer accepted where numeric declared
  EXPECT_NO_THROW(run_stored_query("ph_below", {{"threshold", I(7)}}, s));
  auto p = parse_params(stored_query("ph_below"), {{"threshold", "7.1"}});
  EXPECT_EQ(p.at("threshold"), Value(7.1));
  EXPECT_THROW(parse_params(stored_query("c_sections_in_year"), {{"year", "soon"}}), StoredQueryError);
}

TEST(StoredQueries, ParameterIsBoundNotSpliced) {
  CanonicalStore s = small_store();
  // a text value cannot reach a numeric slot, so no injected SQL is ever parsed
  EXPECT_THROW(run_stored_query("c_sections_in_year", {{"year", Value("2024) OR (1 = 1")}}, s), StoredQueryError);
}

TEST(StoredQueries, EmptyStoreOracleAgreement) {
  CanonicalStore s;
  for (const auto& q : stored_queries()) {
    SCOPED_TRACE(q.name);
    Params p;
    for (const auto& d : q.params) p[d.name] = d.type == ParamType::integer ? I(2024) : Value(7.1);
    std::string why;
    EXPECT_TRUE(results_match(run_stored_query(q.name, p, s), oracle_eval(q.name, p, s), q.order, 1e-9, &why)) << why;
  }
}

TEST(StoredQueries, SmallStoreOracleAgreement) {
  CanonicalStore s = small_store();
  for (const auto& q : stored_queries()) {
    SCOPED_TRACE(q.name);
    for (int64_t year : {2024, 2025}) {
      Params p;
      for (const auto& d : q.params) p[d.name] = d.type == ParamType::integer ? I(year) : Value(7.1);
      std::string why;
      EXPECT_TRUE(results_match(run_stored_query(q.name, p, s), oracle_eval(q.name, p, s), q.order, 1e-9, &why))
          << why;
    }
  }
  ResultTable avg = oracle_eval("avg_induction_interval", {}, s);
  EXPECT_EQ(avg.rows[0][0], Value(3.0));
}

TEST(StoredQueries, ResultsMatchChecksOrderAndTolerance) {
  ResultTable a{{"x", "n"}, {{Value("a"), I(2)}, {Value("b"), I(1)}}, false};
  ResultTable b{{"x", "n"}, {{Value("b"), I(1)}, {Value("a"), I(2)}}, false};
  EXPECT_TRUE(results_match(a, b, {}));
  EXPECT_TRUE(results_match(a, b, {{1, true}}));
  EXPECT_FALSE(results_match(b, a, {{1, true}}));
  ResultTable c{{"v"}, {{Value(1.0)}}, false};
  ResultTable d{{"v"}, {{Value(1.0 + 1e-12)}}, false};
  ResultTable e{{"v"}, {{Value(1.0 + 1e-6)}}, false};
  EXPECT_TRUE(results_match(c, d, {}));
  EXPECT_FALSE(results_match(c, e, {}));
  ResultTable f{{"v"}, {{Value(Decimal{100, 2})}}, false};
  ResultTable g{{"v"}, {{Value(1.0)}}, false};
  EXPECT_FALSE(results_match(f, g, {}));
}

}  // namespace
}  // namespace peripartum::sql
