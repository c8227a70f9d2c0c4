// Acceptance run: one PASS/FAIL line per primary criterion, exit status 1 if
// any line fails. Limits are pinned here and nowhere else.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "peripartum/catalog.hpp"
#include "peripartum/constraints.hpp"
#include "peripartum/ingest.hpp"
#include "peripartum/journal.hpp"
#include "peripartum/nl2sql.hpp"
#include "peripartum/sql_guard.hpp"
#include "peripartum/sql_parser.hpp"
#include "peripartum/sql_resolver.hpp"
#include "peripartum/stored_queries.hpp"
#include "peripartum/synth.hpp"

namespace {

using namespace peripartum;
using ingest::IngestOutcome;
using ingest::SourceConfig;
using ingest::SourceKind;

constexpr double kCorpusSeconds = 1.0;
constexpr double kStubOutcomeSeconds = 5.0;
constexpr double kOracleSeconds = 60.0;
constexpr uint64_t kOracleStores = 50;
constexpr int kPatients = 200;
constexpr double kRelTol = 1e-9;

struct Failed {
  std::string why;
};

void require(bool ok, const std::string& why) {
  if (!ok) throw Failed{why};
}

std::string fixture(const std::string& rel) { return std::string(PERIPARTUM_FIXTURES) + "/" + rel; }

std::string read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failed{"cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus(const std::string& name) { return read(fixture("corpus/" + name + ".sql")); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void within(double secs, double limit) {
  std::ostringstream ss;
  ss << "took " << secs << " s, limit " << limit << " s";
  require(secs < limit, ss.str());
}

const std::vector<std::string> kCorpus{
    "c_sections_2024",    "ph_below_7_1",          "motivations_incorrect",       "motivations_corrected",
    "laceration_stats",   "induced_deliveries",    "avg_induction_interval",      "inductions_per_patient_2025",
    "ctg_motivation_patients",
};

// (question, corpus file its stub reply reproduces)
const std::vector<std::pair<std::string, std::string>> kQuestions{
    {"Count the number of C-sections, both programmed and with labor, performed in 2024.", "c_sections_2024"},
    {"List the name of the patients and the date of delivery for all deliveries in which the newborn has a pH lower "
     "than 7.1",
     "ph_below_7_1"},
    {"Retrieve all motivations for C-sections, both programmed and with labor.", "motivations_incorrect"},
    {"Count the number of lacerations and their percentage relative to deliveries with labor.", "laceration_stats"},
    {"Count the number of deliveries that had inductions and their percentage with respect to all deliveries.",
     "induced_deliveries"},
    {"Calculate the average length of the interval between induction administration time and delivery expulsion "
     "time.",
     "avg_induction_interval"},
    {"Calculate the number of inductions undergone by each patient who delivered in 2025.",
     "inductions_per_patient_2025"},
    {"Show patient data and pregnancy data for all patients whose delivery motivation, whether C-section or "
     "operative, mentions CTG in any manner.",
     "ctg_motivation_patients"},
};

std::string corpus_suite() {
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& name : kCorpus) {
    std::string text = corpus(name);
    try {
      sql::SqlAst ast = sql::parse_sql(text);
      require(ast.statements.size() == 1, name + ": expected one statement");
      sql::resolve(ast, canonical_catalog());
    } catch (const Failed&) {
      throw;
    } catch (const std::exception& e) {
      throw Failed{name + ": " + e.what()};
    }
    sql::SqlCheck c = sql::check_sql(text, canonical_catalog());
    require(c.ok() && c.verdict.accepted, name + ": " + c.error);
  }
  within(seconds_since(t0), kCorpusSeconds);
  return std::to_string(kCorpus.size()) + " texts";
}

std::string stub_outcome() {
  auto t0 = std::chrono::steady_clock::now();
  CanonicalStore store = generate(SynthConfig{.seed = 42, .n_patients = kPatients});
  std::string before = serialize_store(store);
  Session session = make_session(canonical_catalog(), ModelEndpoint{});
  int flagged = 0, clean = 0;
  for (const auto& [question, file] : kQuestions) {
    ChatExchange ex = answer(question, session, store);
    require(!ex.failed_stage, file + " failed: " + ex.error);
    if (ex.flagged(sql::LintRule::L1_missing_subtype_filter)) {
      ++flagged;
      require(file == "motivations_incorrect", "L1 on " + file);
    }
    clean += ex.clean();
  }
  require(flagged == 1 && clean == 7,
          "flagged " + std::to_string(flagged) + ", clean " + std::to_string(clean));
  require(serialize_store(store) == before, "answering changed the store");
  within(seconds_since(t0), kStubOutcomeSeconds);
  return "1 flagged by L1, 7 clean";
}

size_t count(const sql::SqlCheck& c, sql::LintRule r) {
  size_t n = 0;
  for (const auto& f : c.findings) n += f.rule == r;
  return n;
}

std::string lint_fidelity() {
  using sql::LintRule;
  const Catalog& cat = canonical_catalog();
  require(count(sql::check_sql(corpus("motivations_incorrect"), cat), LintRule::L1_missing_subtype_filter) == 1,
          "L1 silent on the incorrect motivations query");
  require(count(sql::check_sql(corpus("motivations_corrected"), cat), LintRule::L1_missing_subtype_filter) == 0,
          "L1 fires on the corrected motivations query");

  std::string ph = corpus("ph_below_7_1");
  bool on_join = false;
  for (const auto& f : sql::check_sql(ph, cat).findings) {
    if (f.rule == LintRule::L2_join_key_type_mismatch && f.span.offset + f.span.length <= ph.size()) {
      on_join |= ph.substr(f.span.offset, f.span.length) == "d.pregnancy_id = p.tc";
    }
  }
  require(on_join, "L2 not reported on d.pregnancy_id = p.tc");

  require(count(sql::check_sql(corpus("c_sections_2024"), cat), LintRule::L3_exists_replaceable_by_join) > 0,
          "L3 silent on the C-section EXISTS query");
  return "L1, L2, L3";
}

std::string constraint_suite() {
  CanonicalStore store = generate(SynthConfig{.seed = 11, .n_patients = kPatients});
  const RuleId rules[] = {RuleId::CR1_pregnancy_followup, RuleId::CR2_trimester_uniqueness,
                          RuleId::CR3_result_type_coherence, RuleId::CR4_delivery_specialization,
                          RuleId::CR5_measurement_nonempty};
  int green = 0;
  for (RuleId rule : rules) {
    std::string name(to_string(rule));
    CommitResult bad = apply_transaction(store, inject_violation(store, rule, 3));
    std::set<RuleId> cited;
    for (const auto& v : bad.violations) {
      require(v.kind == ViolationKind::rule && v.rule, name + ": non-rule violation " + v.message);
      cited.insert(*v.rule);
    }
    require(bad.status == CommitResult::Status::rejected && cited == std::set<RuleId>{rule},
            name + ": injected violation not rejected citing exactly this rule");
    ++green;
    CommitResult good = apply_transaction(store, conforming_counterpart(store, rule, 3));
    require(good.ok(), name + ": conforming counterpart rejected: " + good.error);
    ++green;
  }
  return std::to_string(green) + "/10 cases";
}

std::vector<sql::Params> param_sets(const StoredQuery& q) {
  if (q.params.empty()) return {{}};
  const std::string& p = q.params.front().name;
  if (p == "year") return {{{"year", Value(2023)}}, {{"year", Value(2024)}}, {{"year", Value(2025)}}};
  if (p == "threshold") return {{{"threshold", Value(7.1)}}, {{"threshold", Value(7.25)}}, {{"threshold", Value(6.0)}}};
  throw Failed{"no parameter values for " + q.name};
}

std::string oracle_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  size_t comparisons = 0;
  for (uint64_t seed = 1; seed <= kOracleStores; ++seed) {
    CanonicalStore store = generate(SynthConfig{.seed = seed, .n_patients = kPatients});
    for (const auto& q : stored_queries()) {
      for (const auto& params : param_sets(q)) {
        std::string why;
        bool same = results_match(run_stored_query(q.name, params, store), oracle_eval(q.name, params, store),
                                  q.order, kRelTol, &why);
        require(same, q.name + " seed " + std::to_string(seed) + ": " + why);
        ++comparisons;
      }
    }
  }
  within(seconds_since(t0), kOracleSeconds);
  return std::to_string(comparisons) + " comparisons over " + std::to_string(kOracleStores) + " stores";
}

IngestOutcome ingest_file(const std::string& file, const SourceConfig& cfg, const CanonicalStore& store) {
  return ingest::run_ingestion(fixture("ingest/" + file), cfg, store);
}

SourceConfig ctg_config() { return ingest::source_config_from_json(nlohmann::json::parse(read(fixture("ingest/ctg_config.json")))); }

const Pregnancy& pregnancy_of(const CanonicalStore& s, const std::string& tc) {
  for (const auto& [id, p] : s.table<Pregnancy>()) {
    if (p.patient_tc == tc) return p;
  }
  throw Failed{"no pregnancy for " + tc};
}

std::string ingestion_fixtures() {
  IngestOutcome t1 = ingest_file("table1_first_trimester.csv", SourceConfig::defaults(SourceKind::first_trimester_sheet), {});
  require(t1.report.accepted == 6 && t1.report.rows == 6, "table 1: " + std::to_string(t1.report.accepted) + " accepted");

  IngestOutcome t2 = ingest_file("table2_delivery.csv", SourceConfig::defaults(SourceKind::delivery_sheet), t1.store);
  const Newborn* nb = t2.store.find<Newborn>(
      {pregnancy_of(t2.store, "CLMFNC95E55A944W").id, *parse_timestamp("2024-09-10 11:20")});
  require(nb && nb->apgar_1 == 6 && nb->apgar_5 == 8 && nb->apgar_10 == 9, "table 2: Apgar 6-8-9 not split");
  require(!t2.report.conflicts.empty(), "table 2: no flag/value conflict detected");
  for (const auto& c : t2.report.conflicts) {
    bool quarantined = false;
    for (const auto& q : t2.report.quarantined) quarantined |= q.row == c.row;
    require(quarantined, "table 2: conflicting row " + std::to_string(c.row) + " not quarantined");
  }

  IngestOutcome t3 = ingest_file("table3_ehr_conditions.csv", SourceConfig::defaults(SourceKind::ehr_export), t1.store);
  require(t3.report.quarantined.empty() && t3.report.accepted == 4, "table 3: rows not all accepted");
  require(t3.store.count(PregnancyCondition::kRelation) == 4, "table 3: presence integers not decoded to conditions");
  require(pregnancy_of(t3.store, "RMNSRA85D44H501Y").art_used == true, "table 3: ART presence not decoded");

  IngestOutcome t4 = ingest_file("table4_ehr_newborn.csv", SourceConfig::defaults(SourceKind::ehr_export), t2.store);
  require(t4.report.balanced(), "table 4: report does not account for every row");
  for (const auto& q : t4.report.quarantined) require(!q.reason.empty(), "table 4: quarantine without reason");
  require(full_scan(t4.store).empty(), "table 4: stored rows violate constraints");
  require(t4.report.accepted + t4.report.repaired + t4.report.quarantined.size() == t4.report.rows &&
              !t4.report.quarantined.empty(),
          "table 4: misaligned rows not quarantined");

  // re-ingesting each sheet into its own result changes nothing
  struct Step {
    std::string file;
    SourceConfig cfg;
    const IngestOutcome* first;
  };
  IngestOutcome ctg = ingest_file("ctg_with_gaps.csv", ctg_config(), t2.store);
  std::vector<Step> steps{
      {"table1_first_trimester.csv", SourceConfig::defaults(SourceKind::first_trimester_sheet), &t1},
      {"table2_delivery.csv", SourceConfig::defaults(SourceKind::delivery_sheet), &t2},
      {"table3_ehr_conditions.csv", SourceConfig::defaults(SourceKind::ehr_export), &t3},
      {"table4_ehr_newborn.csv", SourceConfig::defaults(SourceKind::ehr_export), &t4},
      {"ctg_with_gaps.csv", ctg_config(), &ctg},
  };
  for (const auto& s : steps) {
    IngestOutcome again = ingest_file(s.file, s.cfg, s.first->store);
    require(serialize_store(again.store) == serialize_store(s.first->store) && again.report.new_records() == 0,
            s.file + ": re-ingestion is not idempotent");
  }
  return "tables 1-4, idempotent";
}

std::string ctg_density() {
  IngestOutcome t2 = ingest_file(
      "table2_delivery.csv", SourceConfig::defaults(SourceKind::delivery_sheet),
      ingest_file("table1_first_trimester.csv", SourceConfig::defaults(SourceKind::first_trimester_sheet), {}).store);
  IngestOutcome full = ingest_file("ctg_10min_4hz.csv", ctg_config(), t2.store);
  size_t n = full.store.count(Measurement::kRelation);
  require(n == 2400, "10 minutes at 4 Hz gave " + std::to_string(n) + " measurements");

  std::string blank = "Time,MHR,TOCO,FHR\n";
  for (int i = 0; i < 40; ++i) blank += ",,,\n";
  IngestOutcome none = ingest::run_ingestion_text(blank, "blank.csv", ctg_config(), t2.store);
  require(none.store.count(Measurement::kRelation) == 0, "all-blank rows stored measurements");
  return "2400 and 0";
}

std::string round_trips() {
  require(sql::parse_ddl(emit_ddl(build_catalog())) == build_catalog(), "DDL does not re-parse to the catalog");

  auto path = std::filesystem::temp_directory_path() / ("peripartum_acceptance_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(path);
  std::vector<std::string> snapshots{serialize_store({})};
  std::vector<size_t> boundaries{0};
  {
    Journal j = Journal::open(path);
    auto commit = [&](const CanonicalStore& next) {
      require(j.commit(diff_stores(j.store(), next)).ok(), "journal commit rejected");
      snapshots.push_back(serialize_store(j.store()));
      boundaries.push_back(std::filesystem::file_size(path));
    };
    commit(generate(SynthConfig{.seed = 8, .n_patients = 30}));
    commit(ingest_file("table1_first_trimester.csv", SourceConfig::defaults(SourceKind::first_trimester_sheet), j.store()).store);
    commit(ingest_file("table2_delivery.csv", SourceConfig::defaults(SourceKind::delivery_sheet), j.store()).store);
    commit(ingest_file("ctg_with_gaps.csv", ctg_config(), j.store()).store);
  }
  std::string text = read(path.string());
  std::filesystem::remove(path);

  for (size_t k = 0; k < boundaries.size(); ++k) {
    require(serialize_store(replay_journal(std::string_view(text).substr(0, boundaries[k])).store) == snapshots[k],
            "replay of entry prefix " + std::to_string(k) + " differs");
    if (k + 1 == boundaries.size()) break;
    // a crash mid-append: the torn tail is refused, the flushed prefix replays exactly
    size_t torn = (boundaries[k] + boundaries[k + 1]) / 2;
    try {
      replay_journal(std::string_view(text).substr(0, torn));
      throw Failed{"torn entry accepted"};
    } catch (const JournalError& e) {
      require(e.last_valid_seq() == k && e.valid_bytes() == boundaries[k], "torn entry misreported");
      Replay r = replay_journal(std::string_view(text).substr(0, e.valid_bytes()));
      require(serialize_store(r.store) == snapshots[k], "truncated replay differs at " + std::to_string(k));
    }
  }
  return "catalog equal, " + std::to_string(boundaries.size() - 1) + " crash points";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"corpus parse/resolve", corpus_suite},
      {"stub reference outcome", stub_outcome},
      {"lint fidelity", lint_fidelity},
      {"constraint suite", constraint_suite},
      {"oracle equivalence", oracle_equivalence},
      {"ingestion fixtures", ingestion_fixtures},
      {"ctg density", ctg_density},
      {"ddl and journal round-trip", round_trips},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = run();
      ok = true;
    } catch (const Failed& f) {
      detail = f.why;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failed += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
