#include <gtest/gtest.h>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_guard.hpp"
#include "peripartum/sql_parser.hpp"
#include "test_support.hpp"

namespace peripartum::sql {
namespace {

using peripartum::testing::read_fixture;

const std::vector<std::string> kCorpus = {
    "c_sections_2024",        "ph_below_7_1",     "motivations_incorrect",       "motivations_corrected",
    "laceration_stats",       "induced_deliveries", "avg_induction_interval",    "inductions_per_patient_2025",
    "ctg_motivation_patients",
};

std::string corpus(const std::string& name) { return read_fixture("corpus/" + name + ".sql"); }

SqlCheck check(const std::string& text, GuardLimits limits = {}) {
  return check_sql(text, canonical_catalog(), limits);
}

size_t count_rule(const SqlCheck& c, LintRule r) {
  return std::count_if(c.findings.begin(), c.findings.end(), [&](const LintFinding& f) { return f.rule == r; });
}

std::string nested_exists(int depth) {
  std::string sql = "SELECT 1 FROM patient p0 WHERE ";
  for (int i = 1; i <= depth; ++i) sql += "EXISTS (SELECT 1 FROM patient p" + std::to_string(i) + " WHERE ";
  sql += "1 = 1";
  for (int i = 1; i <= depth; ++i) sql += ")";
  return sql;
}

TEST(Guardrail, AcceptsEveryCorpusQuery) {
  for (const auto& name : kCorpus) {
    SCOPED_TRACE(name);
    SqlCheck c = check(corpus(name));
    EXPECT_TRUE(c.ok()) << c.error;
    EXPECT_TRUE(c.verdict.accepted);
    EXPECT_TRUE(c.verdict.row_limit_applied);
  }
}

TEST(Guardrail, RejectsMultipleStatements) {
  SqlCheck c = check("SELECT 1; SELECT 2");
  ASSERT_FALSE(c.ok());
  EXPECT_EQ(*c.failed_stage, Stage::guardrail);
  EXPECT_FALSE(c.verdict.accepted);
  EXPECT_EQ(c.verdict.statement_count, 2u);
}

TEST(Guardrail, RejectsModificationAndSchemaStatements) {
  for (const char* text : {"DROP TABLE patient", "DELETE FROM patient", "INSERT INTO patient VALUES (1)",
                           "UPDATE patient SET name = 'x'", "CREATE TABLE t (a INT)", "SELECT 1; DROP TABLE patient"}) {
    SCOPED_TRACE(text);
    SqlCheck c = check(text);
    ASSERT_FALSE(c.ok());
    EXPECT_EQ(*c.failed_stage, Stage::guardrail);
    EXPECT_FALSE(c.verdict.accepted);
    EXPECT_FALSE(c.verdict.reasons.empty());
  }
}

TEST(Guardrail, SubqueryDepthLimit) {
  std::string sql = nested_exists(5);
  SqlAst ast = parse_sql(sql);
  EXPECT_EQ(subquery_depth(ast.statements[0]), 5);
  GuardVerdict v = guardrail(ast, GuardLimits{1000, 3});
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.subquery_depth, 5);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_NE(v.reasons[0].find("depth 5"), std::string::npos);

  EXPECT_TRUE(guardrail(parse_sql(nested_exists(4))).accepted);
  EXPECT_FALSE(guardrail(parse_sql(nested_exists(5))).accepted);
}

TEST(Guardrail, OwnLimitSuppressesRowLimitWrapper) {
  EXPECT_FALSE(guardrail(parse_sql("SELECT tc FROM patient LIMIT 10")).row_limit_applied);
  EXPECT_TRUE(guardrail(parse_sql("SELECT tc FROM patient LIMIT 5000")).row_limit_applied);
  EXPECT_TRUE(guardrail(parse_sql("SELECT tc FROM patient")).row_limit_applied);
}

TEST(Guardrail, PipelineStages) {
  EXPECT_EQ(*check("SELEC 1").failed_stage, Stage::parse);
  EXPECT_EQ(*check("SELECT foo FROM patient").failed_stage, Stage::resolve);
  SqlCheck bad = check("SELECT foo FROM patient");
  EXPECT_EQ(bad.error_kind, "unknown_column");
  EXPECT_EQ(bad.to_json()["stage"], "resolve");
}

TEST(Lint, L1FiresOnIncorrectMotivationsOnly) {
  SqlCheck wrong = check(corpus("motivations_incorrect"));
  SqlCheck fixed = check(corpus("motivations_corrected"));
  EXPECT_EQ(count_rule(wrong, LintRule::L1_missing_subtype_filter), 1u);
  EXPECT_EQ(count_rule(fixed, LintRule::L1_missing_subtype_filter), 0u);
  for (const auto& f : wrong.findings) {
    if (f.rule == LintRule::L1_missing_subtype_filter) {
      EXPECT_EQ(f.severity, Severity::warning);
    }
  }
}

TEST(Lint, L1PrecisionOverCorpus) {
  size_t fired = 0;
  for (const auto& name : kCorpus) {
    if (check(corpus(name)).has_finding(LintRule::L1_missing_subtype_filter)) {
      ++fired;
      EXPECT_EQ(name, "motivations_incorrect");
    }
  }
  EXPECT_EQ(fired, 1u);
}

TEST(Lint, L1SubtypeFilterInJoinCounts) {
  SqlCheck c = check(
      "SELECT dwl.motivation FROM delivery d JOIN delivery_with_labor dwl "
      "ON d.pregnancy_id = dwl.pregnancy_id AND dwl.delivery_subtype = 'operative'");
  EXPECT_FALSE(c.has_finding(LintRule::L1_missing_subtype_filter));
}

TEST(Lint, L2FiresOnPhJoin) {
  std::string text = corpus("ph_below_7_1");
  SqlCheck c = check(text);
  ASSERT_TRUE(c.ok());
  ASSERT_EQ(count_rule(c, LintRule::L2_join_key_type_mismatch), 1u);
  const LintFinding& f = *std::find_if(c.findings.begin(), c.findings.end(),
                                       [](const LintFinding& x) { return x.rule == LintRule::L2_join_key_type_mismatch; });
  EXPECT_EQ(f.severity, Severity::error);
  EXPECT_NE(f.message.find("pregnancy_id vs tc"), std::string::npos);
  ASSERT_LE(f.span.offset + f.span.length, text.size());
  EXPECT_EQ(text.substr(f.span.offset, f.span.length), "d.pregnancy_id = p.tc");
  EXPECT_EQ(f.span.line, 4);
}

TEST(Lint, L2IgnoresLiteralsAndMatchingFamilies) {
  for (const auto& name : kCorpus) {
    if (name == "ph_below_7_1") continue;
    SCOPED_TRACE(name);
    EXPECT_FALSE(check(corpus(name)).has_finding(LintRule::L2_join_key_type_mismatch));
  }
}

TEST(Lint, L2PlainFamilyNeverClashes) {
  // synthetic id against a plain integer of the same type is not flagged
  SqlCheck c = check("SELECT 1 FROM pregnancy pr JOIN delivery d ON pr.id = d.robson_score");
  EXPECT_FALSE(c.has_finding(LintRule::L2_join_key_type_mismatch));
  SqlCheck t = check("SELECT 1 FROM delivery_with_labor d JOIN patient p ON d.labor_start_time = p.tc");
  EXPECT_TRUE(t.has_finding(LintRule::L2_join_key_type_mismatch));
}

TEST(Lint, L3FiresOnCSectionExists) {
  std::string text = corpus("c_sections_2024");
  SqlCheck c = check(text);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(count_rule(c, LintRule::L3_exists_replaceable_by_join), 2u);
  for (const auto& f : c.findings) {
    EXPECT_EQ(f.severity, Severity::info);
    ASSERT_LE(f.span.offset + f.span.length, text.size());
    EXPECT_EQ(text.substr(f.span.offset, 6), "EXISTS");
  }
}

TEST(Lint, L3NeedsASingleForeignKeyCorrelation) {
  EXPECT_FALSE(check("SELECT 1 FROM delivery d WHERE EXISTS (SELECT 1 FROM newborn n WHERE n.pregnancy_id = "
                     "d.pregnancy_id AND n.birth_time > d.delivery_date)")
                   .has_finding(LintRule::L3_exists_replaceable_by_join));
  EXPECT_FALSE(check("SELECT 1 FROM delivery d WHERE EXISTS (SELECT 1 FROM newborn n WHERE n.weight_g = "
                     "d.estimated_blood_loss_ml)")
                   .has_finding(LintRule::L3_exists_replaceable_by_join));
  EXPECT_TRUE(check("SELECT 1 FROM delivery d WHERE NOT EXISTS (SELECT 1 FROM newborn n WHERE d.pregnancy_id = "
                    "n.pregnancy_id)")
                  .has_finding(LintRule::L3_exists_replaceable_by_join));
}

TEST(Lint, FindingsSerialize) {
  SqlCheck c = check(corpus("ph_below_7_1"));
  auto j = c.to_json();
  EXPECT_EQ(j["ok"], true);
  EXPECT_EQ(j["findings"][0]["rule"], "L2_join_key_type_mismatch");
  EXPECT_EQ(j["findings"][0]["severity"], "error");
  EXPECT_EQ(j["columns"][0]["name"], "name");
}

}  // namespace
}  // namespace peripartum::sql
