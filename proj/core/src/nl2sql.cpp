#include "peripartum/nl2sql.hpp"

#include <httplib.h>

#include <cctype>
#include <cstdlib>

namespace peripartum {

extern const char* const kStubRepliesJson;  // generated from data/stub_replies.json

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Facts the database enforces with triggers rather than with DDL, stated next
// to the tables they concern so a model can rely on them.
const std::vector<std::pair<std::string, std::vector<std::string>>>& table_comments() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> c{
      {"pregnancy",
       {"pregnancy.id is a surrogate key; reach the patient through pregnancy.patient_tc = patient.tc.",
        "Every pregnancy has at least one examination or a delivery."}},
      {"examination",
       {"At most one first_trimester and one second_trimester examination per pregnancy."}},
      {"examination_test",
       {"result must match test.type: {'string'} free text, {'numeric'} a number, otherwise one of the listed values."}},
      {"delivery",
       {"One delivery per pregnancy, keyed by pregnancy_id.",
        "Each delivery has exactly one of programmed_c_section or delivery_with_labor.",
        "delivery_type = 'programmed_c_section' exactly when the programmed_c_section row exists;",
        "C-sections performed during labor have delivery_type = 'emergency_c_section'."}},
      {"programmed_c_section",
       {"Each C-section is linked to exactly one delivery through pregnancy_id; a plain JOIN suffices."}},
      {"delivery_with_labor",
       {"Each row is linked to exactly one delivery through pregnancy_id.",
        "motivation is filled for operative deliveries too; filter delivery_subtype = 'emergency_c_section'",
        "when only C-sections are wanted."}},
      {"induction", {"Inductions exist only for deliveries with labor."}},
      {"measurement",
       {"Each sample has a maternal_heart_rate, a maternal_tocography or a newborn_measurement."}},
  };
  return c;
}

std::string annotate_ddl(const std::string& ddl) {
  std::string out = ddl;
  // insert back to front so earlier offsets stay valid
  std::vector<std::pair<size_t, std::string>> inserts;
  for (const auto& [table, lines] : table_comments()) {
    size_t at = out.find("CREATE TABLE " + table + " (");
    if (at == std::string::npos) continue;
    std::string block;
    for (const auto& l : lines) block += "-- " + l + "\n";
    inserts.emplace_back(at, block);
  }
  std::sort(inserts.begin(), inserts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [at, block] : inserts) out.insert(at, block);
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool word_at(std::string_view text, size_t i, std::string_view word) {
  if (i + word.size() > text.size()) return false;
  if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_')) return false;
  for (size_t k = 0; k < word.size(); ++k) {
    if (std::toupper(static_cast<unsigned char>(text[i + k])) != word[k]) return false;
  }
  size_t end = i + word.size();
  return end == text.size() || !(std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_');
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& base) {
  size_t scheme = base.find("://");
  size_t path = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  SplitUrl u;
  u.origin = path == std::string::npos ? base : base.substr(0, path);
  u.prefix = path == std::string::npos ? "" : base.substr(path);
  while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
  return u;
}

std::string remote_reply(std::string_view question, const ContextPrompt& prompt, const ModelEndpoint& ep) {
  SplitUrl url = split_url(ep.base_url);
  httplib::Client cli(url.origin);
  if (!cli.is_valid()) throw TranslateError(TranslateError::Kind::transport, "unusable endpoint URL: " + ep.base_url);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const char* token = std::getenv(ep.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  std::string body = chat_request_body(question, prompt, ep).dump();
  auto res = cli.Post(url.prefix + "/v1/chat/completions", headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout;
    throw TranslateError(timed_out ? TranslateError::Kind::timeout : TranslateError::Kind::transport,
                         "chat completion request failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw TranslateError(TranslateError::Kind::http_status,
                         "chat completion returned HTTP " + std::to_string(res->status), res->body);
  }
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw TranslateError(TranslateError::Kind::bad_reply, "reply is not JSON", res->body);
  const nlohmann::json* content = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c0 = j["choices"][0];
    if (c0.contains("message") && c0["message"].contains("content") && c0["message"]["content"].is_string()) {
      content = &c0["message"]["content"];
    }
  }
  if (!content) throw TranslateError(TranslateError::Kind::bad_reply, "reply has no choices[0].message.content", res->body);
  return content->get<std::string>();
}

}  // namespace

ContextPrompt build_context_prompt(const Catalog& catalog, const PromptOptions& options) {
  ContextPrompt p;
  p.ddl_text = emit_ddl(catalog);
  p.directives = {
      "You translate clinicians' questions into SQL over the database defined above.",
      "Target dialect: PostgreSQL.",
      "Write exactly one read-only SELECT statement. Never modify data or schema.",
      "Use only the tables and columns defined above.",
      "Answer with a single ```sql fenced block containing the statement.",
  };
  p.rendered = options.include_comments ? annotate_ddl(p.ddl_text) : p.ddl_text;
  p.rendered += "\n";
  for (size_t i = 0; i < p.directives.size(); ++i) p.rendered += std::to_string(i + 1) + ". " + p.directives[i] + "\n";
  return p;
}

std::string_view to_string(ModelEndpoint::Mode m) { return m == ModelEndpoint::Mode::remote ? "remote" : "stub"; }

std::string_view to_string(TranslateError::Kind k) {
  switch (k) {
    case TranslateError::Kind::transport: return "transport";
    case TranslateError::Kind::timeout: return "timeout";
    case TranslateError::Kind::http_status: return "http_status";
    case TranslateError::Kind::bad_reply: return "bad_reply";
    case TranslateError::Kind::no_sql: return "no_sql";
  }
  return "?";
}

std::string normalize_question(std::string_view question) {
  std::string out;
  bool space = false;
  for (char ch : question) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) || out.back() == ' ')) out.pop_back();
  return out;
}

std::optional<std::string> extract_sql(std::string_view reply) {
  size_t fence = reply.find("```");
  if (fence != std::string_view::npos) {
    size_t body = reply.find('\n', fence);
    size_t close = body == std::string_view::npos ? body : reply.find("```", body);
    if (close != std::string_view::npos) {
      std::string sql = trim(reply.substr(body + 1, close - body - 1));
      if (!sql.empty()) return sql;
    }
  }
  size_t start = std::string_view::npos;
  for (size_t i = 0; i < reply.size(); ++i) {
    if (word_at(reply, i, "SELECT")) {
      start = i;
      break;
    }
  }
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  char quote = 0;
  size_t end = reply.size();
  for (size_t i = start; i < reply.size(); ++i) {
    char c = reply[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(') ++depth;
    else if (c == ')') {
      if (--depth < 0) {
        end = i;
        break;
      }
    } else if (c == ';' && depth == 0) {
      end = i + 1;
      break;
    }
  }
  std::string sql = trim(reply.substr(start, end - start));
  if (sql.empty()) return std::nullopt;
  return sql;
}

const StubTable& StubTable::builtin() {
  static const StubTable t = from_json(nlohmann::json::parse(kStubRepliesJson));
  return t;
}

StubTable StubTable::from_json(const nlohmann::json& j) {
  StubTable t;
  for (const auto& r : j.at("replies")) {
    t.replies_[normalize_question(r.at("question").get<std::string>())] = r.at("reply").get<std::string>();
  }
  return t;
}

const std::string* StubTable::find(std::string_view question) const {
  auto it = replies_.find(normalize_question(question));
  return it == replies_.end() ? nullptr : &it->second;
}

nlohmann::json chat_request_body(std::string_view question, const ContextPrompt& prompt,
                                 const ModelEndpoint& endpoint) {
  return {{"model", endpoint.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.rendered}},
                                  {{"role", "user"}, {"content", std::string(question)}}})},
          {"temperature", endpoint.temperature}};
}

Translation translate(std::string_view question, const ContextPrompt& prompt, const ModelEndpoint& endpoint,
                      const StubTable& stub) {
  Translation t;
  if (endpoint.mode == ModelEndpoint::Mode::stub) {
    const std::string* r = stub.find(question);
    if (!r) throw TranslateError(TranslateError::Kind::no_sql, "the stub model has no reply for this question");
    t.raw_reply = *r;
  } else {
    t.raw_reply = remote_reply(question, prompt, endpoint);
  }
  auto sql = extract_sql(t.raw_reply);
  if (!sql) throw TranslateError(TranslateError::Kind::no_sql, "no SQL statement found in the reply", t.raw_reply);
  t.sql = *sql;
  return t;
}

bool ChatExchange::clean() const {
  return result.has_value() && !flagged(sql::LintRule::L1_missing_subtype_filter);
}

nlohmann::json ChatExchange::to_json(bool with_timing) const {
  nlohmann::json j;
  j["question"] = question;
  j["raw_reply"] = raw_reply;
  j["sql"] = sql ? nlohmann::json(*sql) : nlohmann::json(nullptr);
  j["stage"] = failed_stage ? nlohmann::json(*failed_stage) : nlohmann::json(nullptr);
  j["error"] = failed_stage ? nlohmann::json{{"stage", *failed_stage}, {"kind", error_kind}, {"message", error}}
                            : nlohmann::json(nullptr);
  if (check) {
    nlohmann::json c = check->to_json();
    j["verdicts"] = {{"parse", check->ast.has_value()},
                     {"resolve", check->plan.has_value()},
                     {"guardrail", c["verdict"]}};
    j["lints"] = c["findings"];
    if (c.contains("columns")) j["columns"] = c["columns"];
    if (check->error_span && check->failed_stage) {
      j["error"]["line"] = check->error_span->line;
      j["error"]["column"] = check->error_span->column;
    }
  } else {
    j["verdicts"] = nullptr;
    j["lints"] = nlohmann::json::array();
  }
  j["result"] = result ? result->to_json() : nlohmann::json(nullptr);
  if (with_timing) {
    j["timing_ms"] = {{"translate", translate_ms}, {"check", check_ms}, {"execute", execute_ms}};
  }
  return j;
}

Session make_session(const Catalog& catalog, ModelEndpoint endpoint, PromptOptions options, sql::GuardLimits limits) {
  Session s;
  s.prompt = build_context_prompt(catalog, options);
  s.endpoint = std::move(endpoint);
  s.limits = limits;
  return s;
}

sql::ResultTable execute_checked(const sql::SqlCheck& check, const CanonicalStore& store) {
  if (!check.plan || !check.verdict.accepted) throw sql::ExecError("statement did not pass validation");
  sql::ExecOptions opts;
  if (check.verdict.row_limit_applied) opts.row_limit = check.verdict.max_rows;
  return sql::execute(*check.plan, store, opts);
}

ChatExchange answer(std::string_view question, const Session& session, const CanonicalStore& store) {
  ChatExchange ex;
  ex.question = std::string(question);

  auto t0 = Clock::now();
  try {
    Translation t = translate(question, session.prompt, session.endpoint, *session.stub);
    ex.raw_reply = std::move(t.raw_reply);
    ex.sql = std::move(t.sql);
  } catch (const TranslateError& e) {
    ex.translate_ms = ms_since(t0);
    ex.raw_reply = e.raw_reply();
    ex.failed_stage = "translate";
    ex.error_kind = std::string(to_string(e.kind()));
    ex.error = e.what();
    return ex;
  }
  ex.translate_ms = ms_since(t0);

  t0 = Clock::now();
  ex.check = sql::check_sql(*ex.sql, canonical_catalog(), session.limits);
  ex.check_ms = ms_since(t0);
  if (!ex.check->ok()) {
    ex.failed_stage = std::string(to_string(*ex.check->failed_stage));
    ex.error_kind = ex.check->error_kind;
    ex.error = ex.check->error;
    return ex;
  }

  t0 = Clock::now();
  try {
    ex.result = execute_checked(*ex.check, store);
  } catch (const std::exception& e) {
    ex.failed_stage = "execute";
    ex.error_kind = "execution_error";
    ex.error = e.what();
  }
  ex.execute_ms = ms_since(t0);
  return ex;
}

}  // namespace peripartum
