#include "peripartum/journal.hpp"

#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

namespace peripartum {

namespace {

Timestamp now_utc() {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch());
  return Timestamp{ms.count()};
}

std::optional<EntryKind> parse_kind(std::string_view s) {
  if (s == "transaction") return EntryKind::transaction;
  if (s == "exchange") return EntryKind::exchange;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(EntryKind k) { return k == EntryKind::transaction ? "transaction" : "exchange"; }

nlohmann::json JournalEntry::to_json() const {
  return {{"seq", seq}, {"ts", format_rfc3339(ts)}, {"kind", to_string(kind)}, {"payload", payload}};
}

JournalEntry JournalEntry::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("entry is not an object");
  JournalEntry e;
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) throw std::runtime_error("missing or bad seq");
  e.seq = j["seq"].get<uint64_t>();
  if (!j.contains("ts") || !j["ts"].is_string()) throw std::runtime_error("missing ts");
  auto ts = parse_timestamp(j["ts"].get<std::string>());
  if (!ts) throw std::runtime_error("bad ts");
  e.ts = *ts;
  auto kind = j.contains("kind") && j["kind"].is_string() ? parse_kind(j["kind"].get<std::string>()) : std::nullopt;
  if (!kind) throw std::runtime_error("missing or unknown kind");
  e.kind = *kind;
  if (!j.contains("payload")) throw std::runtime_error("missing payload");
  e.payload = j["payload"];
  return e;
}

JournalError::JournalError(const std::string& reason, size_t line, uint64_t last_valid_seq, size_t valid_bytes)
    : std::runtime_error("corrupt journal at line " + std::to_string(line) + ": " + reason +
                         "; last valid sequence " + std::to_string(last_valid_seq)),
      line_(line),
      last_valid_seq_(last_valid_seq),
      valid_bytes_(valid_bytes) {}

Replay replay_journal(std::string_view text) {
  Replay r;
  size_t pos = 0, line = 0;
  while (pos < text.size()) {
    ++line;
    size_t nl = text.find('\n', pos);
    auto fail = [&](const std::string& why) { throw JournalError(why, line, r.last_seq, pos); };
    if (nl == std::string_view::npos) fail("unterminated entry");
    auto j = nlohmann::json::parse(text.substr(pos, nl - pos), nullptr, false);
    if (j.is_discarded()) fail("not JSON");
    JournalEntry e;
    try {
      e = JournalEntry::from_json(j);
    } catch (const std::exception& ex) {
      fail(ex.what());
    }
    if (e.seq != r.last_seq + 1) {
      fail("sequence " + std::to_string(e.seq) + " follows " + std::to_string(r.last_seq));
    }
    if (e.kind == EntryKind::transaction) {
      Transaction tx;
      try {
        tx = transaction_from_json(e.payload);
      } catch (const std::exception& ex) {
        fail(std::string("bad transaction: ") + ex.what());
      }
      CommitResult c = apply_transaction(r.store, tx);
      if (!c.ok()) {
        std::string why = c.error;
        if (why.empty() && !c.violations.empty()) {
          const Violation& v = c.violations.front();
          why = (v.rule ? std::string(to_string(*v.rule)) + ": " : std::string()) + v.message;
        }
        fail("transaction does not commit (" + std::string(to_string(c.status)) + "): " + why);
      }
      r.store = std::move(c.store);
      ++r.transactions;
    } else {
      ++r.exchanges;
    }
    r.last_seq = e.seq;
    pos = nl + 1;
  }
  return r;
}

Replay replay_journal_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read journal " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return replay_journal(ss.str());
}

Transaction diff_stores(const CanonicalStore& before, const CanonicalStore& after) {
  Transaction tx;
  for_each_record_type([&]<class R>() {
    const auto& a = before.table<R>();
    const auto& b = after.table<R>();
    if (&a == &b) return;  // shared, untouched table
    for (const auto& [k, r] : a) {
      if (!b.count(k)) tx.erase(r);
    }
    for (const auto& [k, r] : b) {
      auto it = a.find(k);
      if (it == a.end()) tx.insert(r);
      else if (!(it->second == r)) tx.update(r);
    }
  });
  return tx;
}

Journal Journal::open(const std::filesystem::path& path) {
  Replay r = replay_journal_file(path);
  Journal j;
  j.path_ = path;
  j.store_ = std::move(r.store);
  j.seq_ = r.last_seq;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  j.file_.reset(std::fopen(path.c_str(), "ab"));
  if (!j.file_) throw std::runtime_error("cannot open journal " + path.string() + ": " + std::strerror(errno));
  return j;
}

uint64_t Journal::append(EntryKind kind, nlohmann::json payload) {
  JournalEntry e{seq_ + 1, now_utc(), kind, std::move(payload)};
  std::string line = e.to_json().dump() + "\n";
  std::FILE* f = file_.get();
  if (std::fwrite(line.data(), 1, line.size(), f) != line.size() || std::fflush(f) != 0 || ::fsync(fileno(f)) != 0) {
    throw std::runtime_error("journal write failed: " + std::string(std::strerror(errno)));
  }
  return seq_ = e.seq;
}

CommitResult Journal::commit(const Transaction& tx) {
  CommitResult c = apply_transaction(store_, tx);
  if (!c.ok() || tx.empty()) return c;
  append(EntryKind::transaction, to_json(tx));
  store_ = c.store;
  return c;
}

uint64_t Journal::record_exchange(const nlohmann::json& exchange) { return append(EntryKind::exchange, exchange); }

}  // namespace peripartum
