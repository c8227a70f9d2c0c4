#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "peripartum/sql_exec.hpp"
#include "peripartum/sql_guard.hpp"
#include "peripartum/sql_parser.hpp"
#include "peripartum/sql_resolver.hpp"
#include "peripartum/stored_queries.hpp"
#include "peripartum/synth.hpp"

namespace {

using namespace peripartum;

std::string corpus(const char* name) {
  std::ifstream in(std::string(PERIPARTUM_FIXTURES) + "/corpus/" + name + ".sql");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const CanonicalStore& store200() {
  static const CanonicalStore s = generate(SynthConfig{.seed = 42, .n_patients = 200});
  return s;
}

void BM_Parse(benchmark::State& state) {
  std::string text = corpus("ctg_motivation_patients");
  for (auto _ : state) benchmark::DoNotOptimize(sql::parse_sql(text));
}
BENCHMARK(BM_Parse);

void BM_CheckSql(benchmark::State& state) {
  std::string text = corpus("c_sections_2024");
  for (auto _ : state) benchmark::DoNotOptimize(sql::check_sql(text, canonical_catalog()));
}
BENCHMARK(BM_CheckSql);

// Executor versus direct iteration on the same store, per stored query.
void BM_StoredQuery(benchmark::State& state, const char* name, sql::Params params) {
  const CanonicalStore& s = store200();
  for (auto _ : state) benchmark::DoNotOptimize(run_stored_query(name, params, s));
}
void BM_Oracle(benchmark::State& state, const char* name, sql::Params params) {
  const CanonicalStore& s = store200();
  for (auto _ : state) benchmark::DoNotOptimize(oracle_eval(name, params, s));
}
BENCHMARK_CAPTURE(BM_StoredQuery, c_sections_in_year, "c_sections_in_year", {{"year", Value(2024)}});
BENCHMARK_CAPTURE(BM_Oracle, c_sections_in_year, "c_sections_in_year", {{"year", Value(2024)}});
BENCHMARK_CAPTURE(BM_StoredQuery, ph_below, "ph_below", {{"threshold", Value(7.1)}});
BENCHMARK_CAPTURE(BM_StoredQuery, laceration_stats, "laceration_stats", {});
BENCHMARK_CAPTURE(BM_StoredQuery, ctg_motivation_patients, "ctg_motivation_patients", {});
BENCHMARK_CAPTURE(BM_Oracle, ctg_motivation_patients, "ctg_motivation_patients", {});

}  // namespace
