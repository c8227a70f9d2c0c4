#include <gtest/gtest.h>

#include <fstream>

#include "peripartum/ingest.hpp"
#include "peripartum/journal.hpp"
#include "peripartum/synth.hpp"
#include "test_support.hpp"

namespace peripartum {
namespace {

using ingest::SourceConfig;
using ingest::SourceKind;

class JournalFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("peripartum_journal_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path file(const std::string& name = "store.jsonl") const { return dir_ / name; }

  std::filesystem::path dir_;
};

void ingest_into(Journal& j, const std::string& fixture, const SourceConfig& cfg) {
  auto out = ingest::run_ingestion(testing::fixture_path("ingest/" + fixture), cfg, j.store());
  ASSERT_TRUE(j.commit(diff_stores(j.store(), out.store)).ok()) << fixture;
}

SourceConfig ctg_config() {
  return ingest::source_config_from_json(nlohmann::json::parse(testing::read_fixture("ingest/ctg_config.json")));
}

TEST(Journal, EntryRoundTrip) {
  JournalEntry e{7, Timestamp{1721458800123}, EntryKind::exchange, {{"question", "q"}}};
  nlohmann::json j = e.to_json();
  EXPECT_EQ(j["ts"], "2024-07-20T07:00:00.123Z");
  JournalEntry back = JournalEntry::from_json(j);
  EXPECT_EQ(back.seq, 7u);
  EXPECT_EQ(back.ts, e.ts);
  EXPECT_EQ(back.kind, EntryKind::exchange);
  EXPECT_EQ(back.payload, e.payload);
}

TEST(Journal, DiffReplaysToTarget) {
  CanonicalStore a = generate(SynthConfig{.seed = 11, .n_patients = 25});
  CanonicalStore b = generate(SynthConfig{.seed = 12, .n_patients = 25});
  EXPECT_TRUE(diff_stores(a, a).empty());
  // same records; a's id high-water marks survive, since ids are never reused
  EXPECT_EQ(serialize_store(force_apply(a, diff_stores(a, b))), serialize_store(b));
  EXPECT_TRUE(force_apply(CanonicalStore{}, diff_stores({}, a)) == a);
}

TEST_F(JournalFile, MissingFileIsEmptyStore) {
  Journal j = Journal::open(file());
  EXPECT_TRUE(j.store().empty());
  EXPECT_EQ(j.last_seq(), 0u);
  EXPECT_TRUE(std::filesystem::exists(file()));
}

TEST_F(JournalFile, RejectedTransactionsAreNotJournaled) {
  Journal j = Journal::open(file());
  CanonicalStore s = generate(SynthConfig{.seed = 4, .n_patients = 10});
  ASSERT_TRUE(j.commit(diff_stores({}, s)).ok());
  Transaction bad = inject_violation(j.store(), RuleId::CR4_delivery_specialization, 1);
  EXPECT_FALSE(j.commit(bad).ok());
  EXPECT_TRUE(j.commit(Transaction{}).ok());
  EXPECT_EQ(j.last_seq(), 1u);
  EXPECT_EQ(replay_journal_file(file()).last_seq, 1u);
}

// Every flushed prefix replays to exactly the store that existed when it was
// written; a torn last line is refused with the last good sequence.
TEST_F(JournalFile, CrashTruncationReplaysFlushedPrefix) {
  std::vector<std::string> snapshots{serialize_store({})};
  std::vector<size_t> boundaries{0};
  {
    Journal j = Journal::open(file());
    auto mark = [&] {
      snapshots.push_back(serialize_store(j.store()));
      boundaries.push_back(std::filesystem::file_size(file()));
    };
    ASSERT_TRUE(j.commit(diff_stores({}, generate(SynthConfig{.seed = 8, .n_patients = 30}))).ok());
    mark();
    ingest_into(j, "table1_first_trimester.csv", SourceConfig::defaults(SourceKind::first_trimester_sheet));
    mark();
    j.record_exchange({{"question", "anything"}});
    mark();
    ingest_into(j, "table2_delivery.csv", SourceConfig::defaults(SourceKind::delivery_sheet));
    mark();
    ingest_into(j, "ctg_with_gaps.csv", ctg_config());
    mark();
    Transaction del;
    del.erase(j.store().table<Measurement>().begin()->second);
    ASSERT_TRUE(j.commit(del).ok());
    mark();
    EXPECT_EQ(j.last_seq(), 6u);
  }
  std::string full = testing::read_file(file().string());
  ASSERT_EQ(full.size(), boundaries.back());

  for (size_t k = 0; k < boundaries.size(); ++k) {
    Replay r = replay_journal(std::string_view(full).substr(0, boundaries[k]));
    EXPECT_EQ(r.last_seq, k);
    EXPECT_EQ(serialize_store(r.store), snapshots[k]) << "prefix " << k;
    if (k + 1 < boundaries.size()) {
      size_t torn = (boundaries[k] + boundaries[k + 1]) / 2;
      try {
        replay_journal(std::string_view(full).substr(0, torn));
        ADD_FAILURE() << "torn entry accepted";
      } catch (const JournalError& e) {
        EXPECT_EQ(e.last_valid_seq(), k);
        EXPECT_EQ(e.valid_bytes(), boundaries[k]);
        EXPECT_NE(std::string(e.what()).find("last valid sequence " + std::to_string(k)), std::string::npos);
      }
    }
  }

  // reopening after a clean truncation continues the sequence
  std::filesystem::resize_file(file(), boundaries[3]);
  Journal again = Journal::open(file());
  EXPECT_EQ(again.last_seq(), 3u);
  EXPECT_EQ(serialize_store(again.store()), snapshots[3]);
  again.record_exchange({{"question", "after restart"}});
  EXPECT_EQ(replay_journal_file(file()).last_seq, 4u);
}

TEST_F(JournalFile, CorruptionIsRefused) {
  {
    Journal j = Journal::open(file());
    ASSERT_TRUE(j.commit(diff_stores({}, generate(SynthConfig{.seed = 2, .n_patients = 5}))).ok());
    j.record_exchange({{"question", "q"}});
  }
  std::string good = testing::read_file(file().string());
  auto expect_refused = [&](const std::string& tail, uint64_t last) {
    std::ofstream(file(), std::ios::binary | std::ios::trunc) << good << tail;
    try {
      Journal::open(file());
      ADD_FAILURE() << tail;
    } catch (const JournalError& e) {
      EXPECT_EQ(e.last_valid_seq(), last) << tail;
    }
  };
  expect_refused("garbage\n", 2);
  expect_refused(R"({"seq":4,"ts":"2024-01-01T00:00:00.000Z","kind":"exchange","payload":{}})" "\n", 2);
  expect_refused(R"({"seq":3,"ts":"2024-01-01T00:00:00.000Z","kind":"other","payload":{}})" "\n", 2);
  expect_refused(R"({"seq":3,"ts":"2024-01-01T00:00:00.000Z","kind":"transaction","payload":{"ops":[{"op":"insert","relation":"patient","values":{"tc":"x"}}]}})" "\n", 2);
}

}  // namespace
}  // namespace peripartum
