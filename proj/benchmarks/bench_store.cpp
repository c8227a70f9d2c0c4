#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "peripartum/constraints.hpp"
#include "peripartum/ingest.hpp"
#include "peripartum/journal.hpp"
#include "peripartum/synth.hpp"

namespace {

using namespace peripartum;
using namespace peripartum::ingest;

std::string fixture(const std::string& rel) {
  std::ifstream in(std::string(PERIPARTUM_FIXTURES) + "/ingest/" + rel);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void BM_Generate(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(SynthConfig{.seed = 1, .n_patients = static_cast<int>(state.range(0))}));
  }
}
BENCHMARK(BM_Generate)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_FullScan(benchmark::State& state) {
  CanonicalStore s = generate(SynthConfig{.seed = 1, .n_patients = 200});
  for (auto _ : state) benchmark::DoNotOptimize(full_scan(s));
}
BENCHMARK(BM_FullScan)->Unit(benchmark::kMillisecond);

// One insert into a populated store: the commit path copies and rechecks.
void BM_ApplyTransaction(benchmark::State& state) {
  CanonicalStore s = generate(SynthConfig{.seed = 1, .n_patients = 200});
  Transaction tx = conforming_counterpart(s, RuleId::CR2_trimester_uniqueness, 1);
  for (auto _ : state) benchmark::DoNotOptimize(apply_transaction(s, tx));
}
BENCHMARK(BM_ApplyTransaction)->Unit(benchmark::kMillisecond);

void BM_IngestCtg(benchmark::State& state) {
  SourceConfig sheet1 = SourceConfig::defaults(SourceKind::first_trimester_sheet);
  SourceConfig sheet2 = SourceConfig::defaults(SourceKind::delivery_sheet);
  CanonicalStore base = run_ingestion_text(fixture("table1_first_trimester.csv"), "t1", sheet1, {}).store;
  base = run_ingestion_text(fixture("table2_delivery.csv"), "t2", sheet2, base).store;
  SourceConfig ctg = source_config_from_json(nlohmann::json::parse(fixture("ctg_config.json")));
  std::string text = fixture("ctg_10min_4hz.csv");
  for (auto _ : state) benchmark::DoNotOptimize(run_ingestion_text(text, "ctg", ctg, base));
  state.SetItemsProcessed(state.iterations() * 2400);
}
BENCHMARK(BM_IngestCtg)->Unit(benchmark::kMillisecond);

void BM_ReplayJournal(benchmark::State& state) {
  CanonicalStore s = generate(SynthConfig{.seed = 1, .n_patients = 200});
  JournalEntry e{1, Timestamp{0}, EntryKind::transaction, to_json(diff_stores({}, s))};
  std::string text = e.to_json().dump() + "\n";
  for (auto _ : state) benchmark::DoNotOptimize(replay_journal(text));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ReplayJournal)->Unit(benchmark::kMillisecond);

}  // namespace
