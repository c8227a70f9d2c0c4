#include "peripartum/service.hpp"

#include <httplib.h>

#include <fstream>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <sstream>

#include "peripartum/export_sql.hpp"
#include "peripartum/ingest.hpp"
#include "peripartum/journal.hpp"
#include "peripartum/stored_queries.hpp"

namespace peripartum {

namespace {

using nlohmann::json;

struct HttpError {
  int status;
  json body;
};

HttpError error(int status, std::string_view stage, std::string_view kind, const std::string& message) {
  return {status, {{"error", {{"stage", stage}, {"kind", kind}, {"message", message}}}}};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw error(400, "request", "bad_json", "request body must be a JSON object");
  return j;
}

std::string require_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw error(400, "request", "missing_field", std::string("\"") + field + "\" must be a string");
  }
  return j[field].get<std::string>();
}

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json check_body(const sql::SqlCheck& c) {
  json j = c.to_json();
  j["verdicts"] = {{"parse", {{"ok", c.ast.has_value()}}},
                   {"resolve", {{"ok", c.plan.has_value()}}},
                   {"guardrail", j["verdict"]}};
  j["lints"] = j["findings"];
  return j;
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  Journal journal;
  Session session;
  httplib::Server server;
  mutable std::shared_mutex mu;  // shared: snapshots; exclusive: journal writes

  explicit Impl(ServiceConfig c)
      : config(std::move(c)),
        journal(Journal::open(config.store_path)),
        session(make_session(canonical_catalog(), config.endpoint, config.prompt, limits())) {
    routes();
  }

  sql::GuardLimits limits() const {
    return sql::GuardLimits{.max_rows = config.row_limit, .max_subquery_depth = config.max_subquery_depth};
  }

  CanonicalStore snapshot() const {
    std::shared_lock lock(mu);
    return journal.store();
  }

  uint64_t sequence() const {
    std::shared_lock lock(mu);
    return journal.last_seq();
  }

  // Wraps a handler: HttpError becomes its response, anything else a 500.
  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_json(res, e.body, e.status);
      } catch (const std::exception& e) {
        send_json(res, error(500, "internal", "internal_error", e.what()).body, 500);
      }
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!config.api_token || req.method == "OPTIONS" || req.path == "/health") {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (req.get_header_value("Authorization") == "Bearer " + *config.api_token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      send_json(res, error(401, "auth", "unauthorized", "missing or wrong bearer token").body, 401);
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(mu);
      send_json(res, {{"status", "ok"},
                      {"sequence", journal.last_seq()},
                      {"records", journal.store().size()},
                      {"model", {{"mode", to_string(config.endpoint.mode)}, {"name", config.endpoint.model}}}});
    }));

    server.Get("/schema/ddl", guarded([](const httplib::Request&, httplib::Response& res) {
      res.set_content(emit_ddl(canonical_catalog()), "text/plain; charset=utf-8");
    }));

    server.Get("/prompt", guarded([this](const httplib::Request& req, httplib::Response& res) {
      PromptOptions o = config.prompt;
      if (req.has_param("comments")) o.include_comments = req.get_param_value("comments") != "0";
      ContextPrompt p = build_context_prompt(canonical_catalog(), o);
      send_json(res, {{"rendered", p.rendered},
                      {"ddl", p.ddl_text},
                      {"directives", p.directives},
                      {"include_comments", o.include_comments}});
    }));

    server.Get("/queries", guarded([](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& q : stored_queries()) {
        json params = json::array();
        for (const auto& p : q.params) params.push_back({{"name", p.name}, {"type", to_string(p.type)}});
        list.push_back({{"name", q.name}, {"question", q.question}, {"params", params}, {"sql", q.sql}});
      }
      send_json(res, list);
    }));

    server.Post(R"(/queries/([A-Za-z0-9_]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::string name = req.matches[1];
      json body = parse_body(req);
      json params = body.contains("params") && body["params"].is_object() ? body["params"] : body;
      try {
        const StoredQuery& q = stored_query(name);
        sql::Params p = params_from_json(q, params);
        sql::ExecOptions opts;
        opts.row_limit = config.row_limit;
        send_json(res, run_stored_query(name, p, snapshot(), opts).to_json());
      } catch (const StoredQueryError& e) {
        bool unknown = e.kind() == StoredQueryError::Kind::unknown_name;
        throw error(unknown ? 404 : 400, "stored_query", unknown ? "unknown_query" : "bad_params", e.what());
      }
    }));

    server.Post("/chat", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::string question = require_string(parse_body(req), "question");
      if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw error(400, "request", "empty_question", "question is empty");
      }
      ChatExchange ex = answer(question, session, snapshot());
      json j = ex.to_json();
      {
        std::unique_lock lock(mu);
        j["sequence"] = journal.record_exchange(j);
      }
      send_json(res, j);
    }));

    server.Post("/sql/validate", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::string text = require_string(parse_body(req), "sql");
      send_json(res, check_body(sql::check_sql(text, canonical_catalog(), limits())));
    }));

    server.Post("/sql/execute", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json body = parse_body(req);
      std::string text = require_string(body, "sql");
      sql::SqlCheck c = sql::check_sql(text, canonical_catalog(), limits());
      if (!c.ok()) {
        json j = check_body(c);
        json err = j["error"];
        err["stage"] = j["stage"];
        throw HttpError{400, {{"error", err}, {"check", j}}};
      }
      sql::ResultTable t;
      try {
        t = execute_checked(c, snapshot());
      } catch (const sql::ExecError& e) {
        throw error(400, "execute", "execution_error", e.what());
      }
      if (body.value("format", "json") == "csv") {
        res.set_content(t.to_csv(), "text/csv; charset=utf-8");
        return;
      }
      json j = t.to_json();
      j["lints"] = check_body(c)["lints"];
      send_json(res, j);
    }));

    server.Post("/ingest", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::string kind_text, content, source = "upload";
      json config_ref;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) throw error(400, "request", "missing_field", "multipart part \"file\" is required");
        auto file = req.get_file_value("file");
        content = file.content;
        if (!file.filename.empty()) source = file.filename;
        if (req.has_file("source_kind")) kind_text = req.get_file_value("source_kind").content;
        if (req.has_file("config")) {
          config_ref = json::parse(req.get_file_value("config").content, nullptr, false);
          if (config_ref.is_discarded()) throw error(400, "ingest", "bad_config", "config part is not JSON");
        }
      } else {
        json body = parse_body(req);
        content = require_string(body, "content");
        source = body.value("source_name", source);
        kind_text = body.value("source_kind", "");
        if (body.contains("config")) config_ref = body["config"];
      }
      ingest::SourceConfig cfg = resolve_config(kind_text, config_ref);

      std::unique_lock lock(mu);
      ingest::IngestOutcome out;
      try {
        out = ingest::run_ingestion_text(content, source, cfg, journal.store());
      } catch (const ingest::IngestError& e) {
        throw error(422, "ingest", "unreadable_source", e.what());
      }
      CommitResult c = journal.commit(diff_stores(journal.store(), out.store));
      if (!c.ok()) throw error(409, "commit", std::string(to_string(c.status)), c.error);
      json j = out.report.to_json();
      j["sequence"] = journal.last_seq();
      send_json(res, j);
    }));

    server.Get("/export/sql", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(export_sql(snapshot()), "application/sql; charset=utf-8");
    }));
  }

  // "config" is inline JSON or a path to a JSON file; the source kind may come
  // from either place.
  static ingest::SourceConfig resolve_config(const std::string& kind_text, json config_ref) {
    if (config_ref.is_string()) {
      std::ifstream in(config_ref.get<std::string>());
      if (!in) throw error(400, "ingest", "bad_config", "cannot read config " + config_ref.get<std::string>());
      std::stringstream ss;
      ss << in.rdbuf();
      config_ref = json::parse(ss.str(), nullptr, false);
      if (config_ref.is_discarded()) throw error(400, "ingest", "bad_config", "config file is not JSON");
    }
    if (!config_ref.is_null() && !config_ref.is_object()) {
      throw error(400, "ingest", "bad_config", "config must be an object or a file path");
    }
    if (config_ref.is_null()) config_ref = json::object();
    if (!kind_text.empty()) {
      if (!ingest::parse_source_kind(kind_text)) throw error(400, "ingest", "bad_source_kind", "unknown source kind " + kind_text);
      config_ref["source_kind"] = kind_text;
    }
    if (!config_ref.contains("source_kind")) throw error(400, "ingest", "missing_field", "source_kind is required");
    try {
      return ingest::source_config_from_json(config_ref);
    } catch (const std::exception& e) {
      throw error(400, "ingest", "bad_config", e.what());
    }
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) return -1;
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_until_ready() { impl_->server.wait_until_ready(); }
uint64_t Service::sequence() const { return impl_->sequence(); }
CanonicalStore Service::snapshot() const { return impl_->snapshot(); }

}  // namespace peripartum
