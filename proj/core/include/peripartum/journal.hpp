#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "peripartum/constraints.hpp"
#include "peripartum/store.hpp"
#include "peripartum/value.hpp"

namespace peripartum {

enum class EntryKind { transaction, exchange };
std::string_view to_string(EntryKind k);

/// One line of the journal: {"seq", "ts", "kind", "payload"}.
struct JournalEntry {
  uint64_t seq = 0;
  Timestamp ts;
  EntryKind kind = EntryKind::transaction;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static JournalEntry from_json(const nlohmann::json& j);  // throws std::runtime_error
};

class JournalError : public std::runtime_error {
 public:
  JournalError(const std::string& reason, size_t line, uint64_t last_valid_seq, size_t valid_bytes);
  size_t line() const { return line_; }
  /// 0 when not even the first entry is readable.
  uint64_t last_valid_seq() const { return last_valid_seq_; }
  /// Length of the prefix that replays cleanly.
  size_t valid_bytes() const { return valid_bytes_; }

 private:
  size_t line_;
  uint64_t last_valid_seq_;
  size_t valid_bytes_;
};

struct Replay {
  CanonicalStore store;
  uint64_t last_seq = 0;
  size_t transactions = 0;
  size_t exchanges = 0;
};

/// Folds apply_transaction over the transaction entries. Any unreadable line,
/// unterminated last line, sequence gap or transaction that does not commit
/// is corruption: nothing is guessed or skipped.
Replay replay_journal(std::string_view text);
/// A missing file replays to the empty store.
Replay replay_journal_file(const std::filesystem::path& path);

/// Operations turning `before` into `after`.
Transaction diff_stores(const CanonicalStore& before, const CanonicalStore& after);

/// Append-only journal with the store it rebuilds. Every append is flushed and
/// synced before returning. Not thread-safe: callers serialize writers.
class Journal {
 public:
  /// Replays an existing file (throws JournalError) or creates an empty one.
  static Journal open(const std::filesystem::path& path);

  const CanonicalStore& store() const { return store_; }
  uint64_t last_seq() const { return seq_; }
  const std::filesystem::path& path() const { return path_; }

  /// Checks and applies; only committed, non-empty transactions are journaled.
  CommitResult commit(const Transaction& tx);
  /// Journals a chat exchange; the store is untouched. Returns its sequence.
  uint64_t record_exchange(const nlohmann::json& exchange);

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };

  Journal() = default;
  uint64_t append(EntryKind kind, nlohmann::json payload);

  std::filesystem::path path_;
  std::unique_ptr<std::FILE, FileCloser> file_;
  CanonicalStore store_;
  uint64_t seq_ = 0;
};

}  // namespace peripartum
