#include <gtest/gtest.h>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_parser.hpp"
#include "peripartum/sql_resolver.hpp"
#include "test_support.hpp"

namespace peripartum::sql {
namespace {

using peripartum::testing::read_fixture;

const std::vector<std::string> kCorpus = {
    "c_sections_2024",         "ph_below_7_1",           "motivations_incorrect",
    "motivations_corrected",   "laceration_stats",       "induced_deliveries",
    "avg_induction_interval",  "inductions_per_patient_2025", "ctg_motivation_patients",
};

std::string corpus(const std::string& name) { return read_fixture("corpus/" + name + ".sql"); }

ResolvedQuery resolve_text(const std::string& text) {
  SqlAst ast = parse_sql(text);
  EXPECT_EQ(ast.statements.size(), 1u);
  return resolve_query(ast.statements.at(0), canonical_catalog());
}

ResolveErrorKind resolve_error(const std::string& text) {
  try {
    resolve_text(text);
  } catch (const ResolveError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a resolve error for: " << text;
  return ResolveErrorKind::invalid;
}

TEST(SqlCorpus, EveryTextParsesAndResolves) {
  for (const auto& name : kCorpus) {
    SCOPED_TRACE(name);
    SqlAst ast;
    ASSERT_NO_THROW(ast = parse_sql(corpus(name)));
    ASSERT_EQ(ast.statements.size(), 1u);
    EXPECT_NO_THROW(resolve_query(ast.statements[0], canonical_catalog()));
  }
}

TEST(SqlCorpus, PrettyPrintIsAFixpoint) {
  for (const auto& name : kCorpus) {
    SCOPED_TRACE(name);
    SqlAst once = parse_sql(corpus(name));
    std::string printed = print_sql(once);
    SqlAst twice = parse_sql(printed);
    EXPECT_EQ(once, twice) << printed;
    EXPECT_EQ(print_sql(twice), printed);
  }
}

TEST(SqlCorpus, CSectionQueryIsUnionAllOfExistsSelects) {
  SqlAst ast = parse_sql(corpus("c_sections_2024"));
  const Query& q = ast.statements[0];
  ASSERT_EQ(q.first.from.size(), 1u);
  const Query& inner = *q.first.from[0].table.subquery;
  ASSERT_EQ(inner.rest.size(), 1u);
  EXPECT_EQ(inner.rest[0].op, SetOp::union_all);
  ASSERT_TRUE(inner.first.where.has_value());
  EXPECT_EQ(inner.first.where->kind, ExprKind::exists);
  ASSERT_TRUE(inner.rest[0].select.where.has_value());
  EXPECT_EQ(inner.rest[0].select.where->kind, ExprKind::exists);
}

TEST(SqlParser, MinimalSelect) {
  SqlAst ast = parse_sql("SELECT 1");
  ASSERT_EQ(ast.statements.size(), 1u);
  const Select& s = ast.statements[0].first;
  ASSERT_EQ(s.items.size(), 1u);
  EXPECT_TRUE(s.from.empty());
  EXPECT_EQ(s.items[0].expr.kind, ExprKind::literal);
  EXPECT_EQ(s.items[0].expr.value, Value(int64_t{1}));
}

TEST(SqlParser, DropIsAnUnsupportedStatement) {
  try {
    parse_sql("DROP TABLE patient");
    FAIL() << "DROP parsed";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.tag(), "unsupported_statement");
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(SqlParser, SyntaxErrorCarriesPositionAndExpectedTokens) {
  try {
    parse_sql("SELECT name\nFROM patient WHERE");
    FAIL() << "parsed";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.tag(), "syntax");
    EXPECT_EQ(e.line(), 2);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(SqlParser, MultipleStatements) {
  SqlAst ast = parse_sql("SELECT 1; SELECT 2");
  EXPECT_EQ(ast.statements.size(), 2u);
}

TEST(SqlParser, KeywordsAreCaseInsensitive) {
  EXPECT_EQ(parse_sql("select id from pregnancy where maternal_age_at_conception between 20 and 30"),
            parse_sql("SELECT id FROM pregnancy WHERE maternal_age_at_conception BETWEEN 20 AND 30"));
}

TEST(SqlParser, StringEscapesAndComments) {
  SqlAst ast = parse_sql("SELECT 'it''s' -- trailing\n/* block */");
  EXPECT_EQ(ast.statements[0].first.items[0].expr.value, Value("it's"));
}

TEST(SqlParser, RejectsHaving) {
  EXPECT_THROW(parse_sql("SELECT laceration FROM delivery_with_labor GROUP BY laceration HAVING COUNT(*) > 1"),
               SyntaxError);
}

TEST(SqlResolver, LacerationBindsToDeliveryWithLabor) {
  ResolvedQuery r = resolve_text(corpus("laceration_stats"));
  const Expr& lac = r.query.first.items[0].expr;
  EXPECT_EQ(lac.info.relation, "delivery_with_labor");
  EXPECT_EQ(lac.info.column, "laceration");
  ASSERT_EQ(r.columns.size(), 3u);
  EXPECT_EQ(r.columns[0].name, "laceration");
  EXPECT_EQ(r.columns[1].name, "count");
  EXPECT_EQ(r.columns[2].name, "round");
  EXPECT_EQ(r.query.order_by[0].expr.info.output_index, 1);
}

TEST(SqlResolver, UnknownColumn) { EXPECT_EQ(resolve_error("SELECT foo FROM patient"), ResolveErrorKind::unknown_column); }

TEST(SqlResolver, UnknownTable) {
  EXPECT_EQ(resolve_error("SELECT 1 FROM patients"), ResolveErrorKind::unknown_table);
  EXPECT_EQ(resolve_error("SELECT x.tc FROM patient p"), ResolveErrorKind::unknown_table);
}

TEST(SqlResolver, UnambiguousNameAcrossTwoTables) {
  ResolvedQuery r = resolve_text("SELECT name FROM patient, pregnancy");
  EXPECT_EQ(r.query.first.items[0].expr.info.relation, "patient");
}

TEST(SqlResolver, AmbiguousColumn) {
  EXPECT_EQ(resolve_error("SELECT pregnancy_id FROM delivery, newborn"), ResolveErrorKind::ambiguous_column);
}

TEST(SqlResolver, DuplicateAlias) {
  EXPECT_EQ(resolve_error("SELECT 1 FROM patient p JOIN pregnancy p ON 1 = 1"), ResolveErrorKind::duplicate_alias);
}

TEST(SqlResolver, UngroupedColumnIsAggregateMisuse) {
  EXPECT_EQ(resolve_error("SELECT name, COUNT(*) FROM patient"), ResolveErrorKind::aggregate_misuse);
  EXPECT_EQ(resolve_error("SELECT tc FROM patient WHERE COUNT(*) > 1"), ResolveErrorKind::aggregate_misuse);
  EXPECT_EQ(resolve_error("SELECT COUNT(MAX(birth_date)) FROM patient"), ResolveErrorKind::aggregate_misuse);
}

TEST(SqlResolver, GroupingByPrimaryKeyCoversOtherColumns) {
  EXPECT_NO_THROW(resolve_text("SELECT tc, name, COUNT(*) FROM patient GROUP BY tc"));
}

TEST(SqlResolver, TypesAreInferred) {
  ResolvedQuery r = resolve_text(
      "SELECT p.name, d.delivery_date, EXTRACT(YEAR FROM d.delivery_date), n.ph < 7.1, dwl.expulsion_time "
      "FROM patient p, delivery d, newborn n, delivery_with_labor dwl");
  ASSERT_EQ(r.columns.size(), 5u);
  EXPECT_EQ(r.columns[0].type, LogicalType::text);
  EXPECT_EQ(r.columns[1].type, LogicalType::date);
  EXPECT_EQ(r.columns[2].type, LogicalType::numeric);
  EXPECT_EQ(r.columns[3].type, LogicalType::boolean);
  EXPECT_EQ(r.columns[4].type, LogicalType::timestamp);
}

TEST(SqlResolver, TimestampDifferenceIsAnInterval) {
  ResolvedQuery r = resolve_text(
      "SELECT d.expulsion_time - i.administration_time FROM induction i JOIN delivery_with_labor d "
      "ON i.pregnancy_id = d.pregnancy_id");
  EXPECT_EQ(r.columns[0].type, LogicalType::interval);
}

TEST(SqlResolver, IllTypedComparisonIsRejected) {
  EXPECT_EQ(resolve_error("SELECT 1 FROM patient WHERE birth_date = 3"), ResolveErrorKind::type_mismatch);
  EXPECT_EQ(resolve_error("SELECT 1 FROM patient WHERE name"), ResolveErrorKind::type_mismatch);
}

TEST(SqlResolver, TaxCodeAgainstSyntheticIdResolvesPermissively) {
  ResolvedQuery r = resolve_text(corpus("ph_below_7_1"));
  EXPECT_EQ(r.columns.size(), 2u);
}

TEST(SqlResolver, CorrelatedExistsRecordsOuterReferences) {
  ResolvedQuery r = resolve_text(corpus("c_sections_2024"));
  const Query& inner = *r.query.first.from[0].table.subquery;
  const Expr& exists = *inner.first.where;
  ASSERT_EQ(exists.info.outer_refs.size(), 1u);
  EXPECT_EQ(exists.info.outer_refs[0].level, 1);
  EXPECT_EQ(exists.info.level, 1);
}

TEST(SqlResolver, StarExpands) {
  ResolvedQuery r = resolve_text(corpus("ctg_motivation_patients"));
  const Catalog& cat = canonical_catalog();
  EXPECT_EQ(r.columns.size(), cat.at("patient").columns.size() + cat.at("pregnancy").columns.size());
}

TEST(SqlResolver, UnionArityMismatch) {
  EXPECT_EQ(resolve_error("SELECT tc FROM patient UNION SELECT tc, name FROM patient"), ResolveErrorKind::invalid);
}

TEST(SqlResolver, ScalarSubqueryTakesInnerColumnName) {
  ResolvedQuery r = resolve_text("SELECT (SELECT COUNT(*) FROM patient)");
  EXPECT_EQ(r.columns[0].name, "count");
}

TEST(SqlParams, BindReplacesPlaceholdersWithLiterals) {
  SqlAst ast = parse_sql("SELECT id FROM pregnancy WHERE maternal_age_at_conception > :age AND patient_tc = :name");
  const Query& q = ast.statements[0];
  EXPECT_EQ(parameter_names(q), (std::set<std::string>{"age", "name"}));
  EXPECT_EQ(resolve_error("SELECT id FROM pregnancy WHERE maternal_age_at_conception > :age"), ResolveErrorKind::unbound_parameter);
  Query bound = bind_params(q, {{"age", Value(int64_t{30})}, {"name", Value("O'Hara")}});
  EXPECT_TRUE(parameter_names(bound).empty());
  EXPECT_NO_THROW(resolve_query(bound, canonical_catalog()));
  // typed literal, never spliced text
  EXPECT_NE(print_sql(bound).find("'O''Hara'"), std::string::npos);
  EXPECT_THROW(bind_params(q, {{"age", Value(int64_t{30})}}), ResolveError);
}

}  // namespace
}  // namespace peripartum::sql
