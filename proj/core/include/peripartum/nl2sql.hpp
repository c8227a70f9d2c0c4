#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_exec.hpp"
#include "peripartum/sql_guard.hpp"
#include "peripartum/store.hpp"

namespace peripartum {

struct PromptOptions {
  bool include_comments = false;
};

struct ContextPrompt {
  std::string ddl_text;
  std::vector<std::string> directives;
  std::string rendered;  // sent as the system message
};

/// The DDL first (annotated per table when comments are on), then the directives.
ContextPrompt build_context_prompt(const Catalog& catalog, const PromptOptions& options = {});

struct ModelEndpoint {
  enum class Mode { remote, stub };

  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "XiYanSQL-QwenCoder-32B-2504";
  std::string token_env = "NL2SQL_API_KEY";  // read at request time, never stored
  std::chrono::milliseconds timeout{30000};
  double temperature = 0.0;
  Mode mode = Mode::stub;
};

std::string_view to_string(ModelEndpoint::Mode m);

class TranslateError : public std::runtime_error {
 public:
  enum class Kind { transport, timeout, http_status, bad_reply, no_sql };
  TranslateError(Kind kind, std::string message, std::string raw_reply = {})
      : std::runtime_error(std::move(message)), kind_(kind), raw_(std::move(raw_reply)) {}
  Kind kind() const { return kind_; }
  const std::string& raw_reply() const { return raw_; }

 private:
  Kind kind_;
  std::string raw_;
};

std::string_view to_string(TranslateError::Kind k);

/// Lowercase, whitespace runs collapsed to one space, trimmed, trailing
/// punctuation dropped.
std::string normalize_question(std::string_view question);

/// First fenced code block; otherwise the first SELECT keyword up to the
/// first semicolon at parenthesis depth zero, or the end of the text.
std::optional<std::string> extract_sql(std::string_view reply);

/// Canned replies keyed by normalized question.
class StubTable {
 public:
  /// The table compiled into the library.
  static const StubTable& builtin();
  static StubTable from_json(const nlohmann::json& j);

  const std::string* find(std::string_view question) const;
  size_t size() const { return replies_.size(); }

 private:
  std::map<std::string, std::string> replies_;
};

struct Translation {
  std::string raw_reply;
  std::string sql;
};

/// Throws TranslateError.
Translation translate(std::string_view question, const ContextPrompt& prompt, const ModelEndpoint& endpoint,
                     const StubTable& stub = StubTable::builtin());

/// Request body for the chat-completions call.
nlohmann::json chat_request_body(std::string_view question, const ContextPrompt& prompt,
                                 const ModelEndpoint& endpoint);

struct ChatExchange {
  std::string question;
  std::string raw_reply;
  std::optional<std::string> sql;
  /// Null when every stage passed; otherwise "translate", "parse", "resolve",
  /// "guardrail" or "execute".
  std::optional<std::string> failed_stage;
  std::string error_kind;
  std::string error;
  std::optional<sql::SqlCheck> check;
  std::optional<sql::ResultTable> result;
  double translate_ms = 0;
  double check_ms = 0;
  double execute_ms = 0;

  bool flagged(sql::LintRule r) const { return check && check->has_finding(r); }
  /// Executed without an L1 finding.
  bool clean() const;
  nlohmann::json to_json(bool with_timing = true) const;
};

struct Session {
  ContextPrompt prompt;
  ModelEndpoint endpoint;
  sql::GuardLimits limits;
  const StubTable* stub = &StubTable::builtin();
};

Session make_session(const Catalog& catalog, ModelEndpoint endpoint, PromptOptions options = {},
                     sql::GuardLimits limits = {});

/// Translate, check, and run when the guardrail passes. The store is a
/// snapshot and is never modified. Errors land in the exchange, never thrown.
ChatExchange answer(std::string_view question, const Session& session, const CanonicalStore& store);

/// Executes a checked statement under its verdict's row limit. Throws
/// sql::ExecError when the check did not pass.
sql::ResultTable execute_checked(const sql::SqlCheck& check, const CanonicalStore& store);

}  // namespace peripartum
