#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "peripartum/nl2sql.hpp"
#include "peripartum/store.hpp"

namespace peripartum {

struct ServiceConfig {
  std::filesystem::path store_path = "peripartum.journal.jsonl";
  ModelEndpoint endpoint;  // stub by default
  PromptOptions prompt;
  size_t row_limit = 1000;
  int max_subquery_depth = 4;
  std::string cors_origin = "*";
  /// When set, every route except /health and CORS preflight needs
  /// "Authorization: Bearer <token>".
  std::optional<std::string> api_token;
};

/// The HTTP front of the system and its only writer. Reads work on store
/// snapshots; ingestion commits and journal appends are serialized.
///
///   GET  /health              {status, sequence, records, model}
///   GET  /schema/ddl          DDL text
///   GET  /prompt              the context prompt the gateway sends
///   GET  /queries             stored-query library
///   POST /queries/{name}      {params} or bare params -> result table
///   POST /chat                {question} -> exchange
///   POST /sql/validate        {sql} -> per-stage verdicts and lints
///   POST /sql/execute         {sql, format?} -> result table or CSV
///   POST /ingest              multipart (file, source_kind, config) or JSON -> report
///   GET  /export/sql          DDL plus INSERT script
class Service {
 public:
  /// Replays the journal at config.store_path; throws JournalError when corrupt.
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving. Port 0 picks a free port, which is returned.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();
  void wait_until_ready();

  uint64_t sequence() const;
  CanonicalStore snapshot() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peripartum
