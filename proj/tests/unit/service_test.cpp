#include <gtest/gtest.h>

#include <httplib.h>

#include <fstream>
#include <thread>

#include "peripartum/journal.hpp"
#include "peripartum/service.hpp"
#include "peripartum/stored_queries.hpp"
#include "peripartum/synth.hpp"
#include "test_support.hpp"

namespace peripartum {
namespace {

using nlohmann::json;

// A running service over a journal seeded with a synthetic store.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("peripartum_service_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    std::filesystem::copy_file(seeded_journal(), journal_path());
  }
  void TearDown() override {
    stop();
    std::filesystem::remove_all(dir_);
  }

  static const CanonicalStore& seeded() {
    static const CanonicalStore s = generate(SynthConfig{.seed = 42, .n_patients = 200});
    return s;
  }

  // Written once: a single transaction inserting the seeded store.
  static std::filesystem::path seeded_journal() {
    static const std::filesystem::path p = [] {
      auto path = std::filesystem::temp_directory_path() /
                  ("peripartum_service_seed_" + std::to_string(::getpid()) + ".jsonl");
      std::filesystem::remove(path);
      Journal j = Journal::open(path);
      if (!j.commit(diff_stores({}, seeded())).ok()) throw std::runtime_error("seed does not commit");
      return path;
    }();
    return p;
  }

  std::filesystem::path journal_path() const { return dir_ / "store.jsonl"; }

  void start(ServiceConfig cfg = {}) {
    cfg.store_path = journal_path();
    service_ = std::make_unique<Service>(cfg);
    port_ = service_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listen(); });
    service_->wait_until_ready();
  }
  void stop() {
    if (!service_) return;
    service_->stop();
    thread_.join();
    service_.reset();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }
  httplib::Result post(const std::string& path, const json& body) const {
    return client().Post(path, body.dump(), "application/json");
  }
  static json body_of(const httplib::Result& r) { return json::parse(r->body); }

  std::filesystem::path dir_;
  std::unique_ptr<Service> service_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ServiceTest, HealthReportsSequence) {
  start();
  auto r = client().Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  json j = body_of(r);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["sequence"], 1);
  EXPECT_EQ(j["records"], seeded().size());
  EXPECT_EQ(j["model"]["mode"], "stub");
}

TEST_F(ServiceTest, EmptyStorePathServesEmptyStore) {
  std::filesystem::remove(journal_path());
  start();
  EXPECT_EQ(body_of(client().Get("/health"))["records"], 0);
  EXPECT_TRUE(service_->snapshot().empty());
}

TEST_F(ServiceTest, SchemaDdlIsTheEmittedDdl) {
  start();
  auto r = client().Get("/schema/ddl");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, emit_ddl(build_catalog()));
}

TEST_F(ServiceTest, PromptWithAndWithoutComments) {
  start();
  json plain = body_of(client().Get("/prompt"));
  EXPECT_EQ(plain["rendered"].get<std::string>().rfind("CREATE TABLE patient", 0), 0u);
  EXPECT_EQ(plain["include_comments"], false);
  json annotated = body_of(client().Get("/prompt?comments=1"));
  EXPECT_NE(annotated["rendered"].get<std::string>().find("linked to exactly one delivery"), std::string::npos);
}

TEST_F(ServiceTest, StoredQueryMatchesOracle) {
  start();
  json list = body_of(client().Get("/queries"));
  ASSERT_EQ(list.size(), stored_queries().size());
  bool listed = false;
  for (const auto& q : list) listed |= q["name"] == "ph_below";
  EXPECT_TRUE(listed);

  auto r = post("/queries/ph_below", {{"threshold", 7.1}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  sql::Params p{{"threshold", Value(7.1)}};
  EXPECT_EQ(body_of(r), oracle_eval("ph_below", p, seeded()).to_json());
  EXPECT_EQ(body_of(post("/queries/ph_below", {{"params", {{"threshold", 7.1}}}})), body_of(r));

  auto unknown = post("/queries/nope", json::object());
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(body_of(unknown)["error"]["stage"], "stored_query");
  auto bad = post("/queries/ph_below", {{"threshold", "low"}});
  EXPECT_EQ(bad->status, 400);
}

TEST_F(ServiceTest, ExecuteRefusesDropAtGuardrail) {
  start();
  auto r = post("/sql/execute", {{"sql", "DROP TABLE patient"}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body_of(r)["error"]["stage"], "guardrail");
  EXPECT_EQ(service_->snapshot(), seeded());
}

TEST_F(ServiceTest, ExecuteResolveErrorCarriesPosition) {
  start();
  auto r = post("/sql/execute", {{"sql", "SELECT p.nmae\nFROM patient p"}});
  EXPECT_EQ(r->status, 400);
  json e = body_of(r)["error"];
  EXPECT_EQ(e["stage"], "resolve");
  EXPECT_EQ(e["line"], 1);
  EXPECT_EQ(e["column"], 8);
}

TEST_F(ServiceTest, ExecuteRunsUnderRowLimit) {
  ServiceConfig cfg;
  cfg.row_limit = 7;
  start(cfg);
  auto r = post("/sql/execute", {{"sql", "SELECT tc FROM patient ORDER BY tc"}});
  ASSERT_EQ(r->status, 200) << r->body;
  json j = body_of(r);
  EXPECT_EQ(j["rows"].size(), 7u);
  EXPECT_EQ(j["truncated"], true);
  EXPECT_EQ(j["columns"], json::array({"tc"}));

  auto csv = post("/sql/execute", {{"sql", "SELECT COUNT(*) AS n FROM patient"}, {"format", "csv"}});
  EXPECT_EQ(csv->get_header_value("Content-Type").rfind("text/csv", 0), 0u);
  EXPECT_EQ(csv->body, "n\n200\n");
}

TEST_F(ServiceTest, ValidateReportsStagesAndLints) {
  start();
  json ok = body_of(post("/sql/validate", {{"sql", testing::read_fixture("corpus/motivations_corrected.sql")}}));
  EXPECT_EQ(ok["ok"], true);
  EXPECT_EQ(ok["verdicts"]["guardrail"]["accepted"], true);
  json wrong = body_of(post("/sql/validate", {{"sql", testing::read_fixture("corpus/motivations_incorrect.sql")}}));
  EXPECT_EQ(wrong["ok"], true);
  bool l1 = false;
  for (const auto& f : wrong["lints"]) l1 |= f["rule"] == "L1_missing_subtype_filter";
  EXPECT_TRUE(l1);
  json del = body_of(post("/sql/validate", {{"sql", "DELETE FROM patient"}}));
  EXPECT_EQ(del["stage"], "guardrail");
  EXPECT_EQ(del["verdicts"]["guardrail"]["accepted"], false);
  json syntax = body_of(post("/sql/validate", {{"sql", "SELECT FROM"}}));
  EXPECT_EQ(syntax["stage"], "parse");
  EXPECT_EQ(syntax["verdicts"]["parse"]["ok"], false);

  auto missing = post("/sql/validate", json::object());
  EXPECT_EQ(missing->status, 400);
  auto garbage = client().Post("/sql/validate", "{not json", "application/json");
  EXPECT_EQ(garbage->status, 400);
}

TEST_F(ServiceTest, ChatAnswersAndJournalsTheExchange) {
  start();
  auto r = post("/chat", {{"question", "Count the number of C-sections, both programmed and with labor, performed in 2024."}});
  ASSERT_EQ(r->status, 200) << r->body;
  json j = body_of(r);
  EXPECT_EQ(j["stage"], nullptr);
  sql::Params p{{"year", Value(int64_t{2024})}};
  EXPECT_EQ(j["result"]["rows"], oracle_eval("c_sections_in_year", p, seeded()).to_json()["rows"]);
  EXPECT_EQ(j["sequence"], 2);

  json miss = body_of(post("/chat", {{"question", "What is the meaning of life?"}}));
  EXPECT_EQ(miss["stage"], "translate");
  EXPECT_EQ(miss["error"]["kind"], "no_sql");
  EXPECT_EQ(miss["result"], nullptr);

  EXPECT_EQ(post("/chat", {{"question", "   "}})->status, 400);
  EXPECT_EQ(service_->snapshot(), seeded());
  Replay replay = replay_journal_file(journal_path());
  EXPECT_EQ(replay.exchanges, 2u);
  EXPECT_EQ(replay.transactions, 1u);
}

TEST_F(ServiceTest, ReadOnlyRoutesAppendNothing) {
  start();
  client().Get("/health");
  client().Get("/schema/ddl");
  client().Get("/queries");
  client().Get("/export/sql");
  post("/queries/laceration_stats", json::object());
  post("/sql/validate", {{"sql", "SELECT 1"}});
  post("/sql/execute", {{"sql", "SELECT 1"}});
  post("/sql/execute", {{"sql", "DELETE FROM patient"}});
  EXPECT_EQ(service_->sequence(), 1u);
  EXPECT_EQ(replay_journal_file(journal_path()).last_seq, 1u);
}

TEST_F(ServiceTest, IngestMultipartThenIdempotent) {
  start();
  httplib::MultipartFormDataItems items{
      {"file", testing::read_fixture("ingest/table1_first_trimester.csv"), "table1.csv", "text/csv"},
      {"source_kind", "first_trimester_sheet", "", ""},
  };
  auto r = client().Post("/ingest", items);
  ASSERT_EQ(r->status, 200) << r->body;
  json j = body_of(r);
  EXPECT_EQ(j["accepted"], 6);
  EXPECT_EQ(j["sequence"], 2);
  CanonicalStore after = service_->snapshot();
  EXPECT_GT(after.count("pregnancy"), seeded().count("pregnancy"));

  json again = body_of(client().Post("/ingest", items));
  EXPECT_EQ(again["sequence"], 2);
  EXPECT_EQ(service_->snapshot(), after);
}

TEST_F(ServiceTest, IngestJsonBodyWithConfigFile) {
  start();
  json t1 = {{"source_kind", "first_trimester_sheet"},
             {"content", testing::read_fixture("ingest/table1_first_trimester.csv")}};
  ASSERT_EQ(post("/ingest", t1)->status, 200);
  json t2 = {{"source_kind", "delivery_sheet"}, {"content", testing::read_fixture("ingest/table2_delivery.csv")}};
  ASSERT_EQ(post("/ingest", t2)->status, 200);
  json ctg = {{"config", testing::fixture_path("ingest/ctg_config.json")},
              {"content", testing::read_fixture("ingest/ctg_10min_4hz.csv")},
              {"source_name", "ctg.csv"}};
  auto r = post("/ingest", ctg);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(service_->snapshot().count("measurement"), seeded().count("measurement") + 2400);

  EXPECT_EQ(post("/ingest", {{"content", "a,b\n1,2\n"}})->status, 400);
  EXPECT_EQ(post("/ingest", {{"source_kind", "fax"}, {"content", "a\n"}})->status, 400);
  auto unreadable = post("/ingest", {{"source_kind", "first_trimester_sheet"}, {"content", "colour,size\nred,3\n"}});
  EXPECT_EQ(unreadable->status, 422);
  EXPECT_EQ(body_of(unreadable)["error"]["stage"], "ingest");
}

// Writers serialize: the same file posted from many threads commits once, and
// concurrent readers only ever see the store before or after it.
TEST_F(ServiceTest, ConcurrentIngestsSerialize) {
  start();
  const size_t before = seeded().size();
  json t1 = {{"source_kind", "first_trimester_sheet"},
             {"content", testing::read_fixture("ingest/table1_first_trimester.csv")}};
  std::atomic<bool> done{false};
  std::set<int64_t> seen;
  std::mutex seen_mu;
  std::thread reader([&] {
    while (!done) {
      auto r = client().Get("/health");
      if (r && r->status == 200) {
        std::lock_guard lock(seen_mu);
        seen.insert(body_of(r)["records"].get<int64_t>());
      }
    }
  });
  std::vector<std::thread> writers;
  for (int i = 0; i < 6; ++i) writers.emplace_back([&] { EXPECT_EQ(post("/ingest", t1)->status, 200); });
  for (auto& w : writers) w.join();
  done = true;
  reader.join();

  EXPECT_EQ(service_->sequence(), 2u);
  const size_t after = service_->snapshot().size();
  for (int64_t n : seen) EXPECT_TRUE(static_cast<size_t>(n) == before || static_cast<size_t>(n) == after) << n;
  EXPECT_EQ(serialize_store(replay_journal_file(journal_path()).store), serialize_store(service_->snapshot()));
}

TEST_F(ServiceTest, RestartReplaysJournal) {
  start();
  post("/ingest", {{"source_kind", "first_trimester_sheet"},
                   {"content", testing::read_fixture("ingest/table1_first_trimester.csv")}});
  post("/chat", {{"question", "Retrieve all motivations for C-sections, both programmed and with labor."}});
  CanonicalStore live = service_->snapshot();
  uint64_t seq = service_->sequence();
  stop();
  start();
  EXPECT_EQ(service_->sequence(), seq);
  EXPECT_EQ(serialize_store(service_->snapshot()), serialize_store(live));
}

TEST_F(ServiceTest, CorruptJournalRefusesToStart) {
  std::ofstream(journal_path(), std::ios::app) << "{\"seq\": 2, \"trunc";
  ServiceConfig cfg;
  cfg.store_path = journal_path();
  try {
    Service s(cfg);
    FAIL();
  } catch (const JournalError& e) {
    EXPECT_EQ(e.last_valid_seq(), 1u);
  }
}

TEST_F(ServiceTest, ExportSqlScript) {
  start();
  auto r = client().Get("/export/sql");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->body.rfind("BEGIN;\n", 0), 0u);
  EXPECT_NE(r->body.find(emit_ddl(build_catalog())), std::string::npos);
  size_t inserts = 0;
  for (size_t at = r->body.find("INSERT INTO "); at != std::string::npos; at = r->body.find("INSERT INTO ", at + 1)) {
    ++inserts;
  }
  EXPECT_EQ(inserts, seeded().size());
  EXPECT_LT(r->body.find("INSERT INTO patient"), r->body.find("INSERT INTO pregnancy"));
}

TEST_F(ServiceTest, CorsAndToken) {
  ServiceConfig cfg;
  cfg.api_token = "t0ken";
  cfg.cors_origin = "http://localhost:5173";
  start(cfg);
  auto health = client().Get("/health");
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  EXPECT_EQ(client().Get("/schema/ddl")->status, 401);
  auto pre = client().Options("/chat");
  EXPECT_EQ(pre->status, 204);
  httplib::Client c = client();
  c.set_bearer_token_auth("t0ken");
  EXPECT_EQ(c.Get("/schema/ddl")->status, 200);
}

}  // namespace
}  // namespace peripartum
