#include "cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "peripartum/catalog.hpp"
#include "peripartum/constraints.hpp"
#include "peripartum/ingest.hpp"
#include "peripartum/journal.hpp"
#include "peripartum/nl2sql.hpp"
#include "peripartum/service.hpp"
#include "peripartum/stored_queries.hpp"
#include "peripartum/synth.hpp"

namespace peripartum::cli {

namespace {

using nlohmann::json;

// Carries an exit code out of a command.
struct Failure {
  int code;
  std::string stage;
  std::string kind;
  std::string message;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "io", "unreadable_file", "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int stage_exit(std::string_view stage) {
  if (stage == "parse") return kParse;
  if (stage == "resolve") return kResolve;
  if (stage == "guardrail") return kGuardrail;
  return kFailure;
}

std::string cell_text(const Value& v) { return v.is_null() ? "NULL" : v.to_string(); }

void print_table(std::ostream& out, const sql::ResultTable& t) {
  std::vector<size_t> width(t.columns.size());
  for (size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], cell_text(row[c]).size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      out << (c ? " | " : "") << cells[c];
      if (c + 1 < cells.size()) out << std::string(width[c] - cells[c].size(), ' ');
    }
    out << "\n";
  };
  line(t.columns);
  for (size_t c = 0; c < width.size(); ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
  out << "\n";
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    for (const auto& v : row) cells.push_back(cell_text(v));
    line(cells);
  }
  out << "(" << t.rows.size() << (t.rows.size() == 1 ? " row" : " rows") << (t.truncated ? ", truncated" : "")
      << ")\n";
}

void print_findings(std::ostream& out, const std::vector<sql::LintFinding>& findings) {
  for (const auto& f : findings) {
    out << to_string(f.severity) << " " << to_string(f.rule) << " at " << f.span.line << ":" << f.span.column
        << ": " << f.message << "\n";
  }
}

struct Globals {
  std::string format = "text";
  std::string store;
  bool json() const { return format == "json"; }

  std::string store_path() const {
    if (!store.empty()) return store;
    if (const char* env = std::getenv("PERIPARTUM_STORE"); env && *env) return env;
    throw Failure{kIo, "io", "no_store", "no store given: pass --store or set PERIPARTUM_STORE"};
  }

  CanonicalStore load_store() const {
    std::string path = store_path();
    if (!std::filesystem::exists(path)) throw Failure{kIo, "io", "missing_store", "store journal not found: " + path};
    try {
      return replay_journal_file(path).store;
    } catch (const JournalError& e) {
      throw Failure{kIo, "io", "corrupt_journal", e.what()};
    }
  }
};

sql::SqlCheck checked_or_fail(const std::string& text, size_t row_limit) {
  sql::SqlCheck c = sql::check_sql(text, canonical_catalog(), sql::GuardLimits{.max_rows = row_limit});
  if (!c.ok()) {
    std::string stage(to_string(*c.failed_stage));
    throw Failure{stage_exit(stage), stage, c.error_kind, c.error};
  }
  return c;
}

int cmd_ddl(const Globals& g, std::ostream& out) {
  std::string ddl = emit_ddl(canonical_catalog());
  if (g.json()) out << json{{"ddl", ddl}}.dump(2) << "\n";
  else out << ddl;
  return kOk;
}

struct IngestArgs {
  std::string file;
  std::string kind;
  std::string config;
  bool strict = false;
};

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out) {
  json cfg_json = json::object();
  if (!a.config.empty()) {
    cfg_json = json::parse(read_text(a.config), nullptr, false);
    if (cfg_json.is_discarded() || !cfg_json.is_object()) {
      throw Failure{kIo, "ingest", "bad_config", a.config + " is not a JSON object"};
    }
  }
  if (!a.kind.empty()) cfg_json["source_kind"] = a.kind;
  if (!cfg_json.contains("source_kind")) throw Failure{kFailure, "ingest", "missing_kind", "--kind or a config source_kind is required"};
  ingest::SourceConfig cfg;
  try {
    cfg = ingest::source_config_from_json(cfg_json);
  } catch (const std::exception& e) {
    throw Failure{kFailure, "ingest", "bad_config", e.what()};
  }

  std::optional<Journal> journal;
  bool persist = !g.store.empty() || std::getenv("PERIPARTUM_STORE");
  if (persist) {
    try {
      journal.emplace(Journal::open(g.store_path()));
    } catch (const JournalError& e) {
      throw Failure{kIo, "io", "corrupt_journal", e.what()};
    }
  }
  CanonicalStore base = journal ? journal->store() : CanonicalStore{};
  ingest::IngestOutcome outcome;
  try {
    outcome = ingest::run_ingestion(a.file, cfg, base);
  } catch (const ingest::IngestError& e) {
    throw Failure{kIo, "ingest", "unreadable_source", e.what()};
  }
  json report = outcome.report.to_json();
  if (journal) {
    CommitResult c = journal->commit(diff_stores(base, outcome.store));
    if (!c.ok()) throw Failure{kConstraint, "commit", std::string(to_string(c.status)), c.error};
    report["sequence"] = journal->last_seq();
  }
  if (g.json()) {
    out << report.dump(2) << "\n";
  } else {
    const auto& r = outcome.report;
    out << r.source << " (" << r.layout << "): " << r.rows << " rows, " << r.accepted << " accepted, " << r.repaired
        << " repaired, " << r.quarantined.size() << " quarantined, " << r.conflicts.size() << " conflicts\n";
    for (const auto& q : r.quarantined) out << "  row " << q.row << " quarantined: " << q.reason << "\n";
    for (const auto& c : r.conflicts) out << "  row " << c.row << " conflict on " << c.field << "\n";
    for (const auto& rep : r.repairs) {
      for (const auto& n : rep.notes) out << "  row " << rep.row << " repaired: " << n << "\n";
    }
  }
  return a.strict && !outcome.report.quarantined.empty() ? kConstraint : kOk;
}

int cmd_check(Globals g, const std::string& positional, std::ostream& out) {
  if (!positional.empty()) g.store = positional;
  std::vector<Violation> vs = full_scan(g.load_store());
  if (g.json()) {
    out << json{{"violations", to_json(vs)}, {"count", vs.size()}}.dump(2) << "\n";
  } else {
    for (const auto& v : vs) {
      out << (v.rule ? std::string(to_string(*v.rule)) : std::string(to_string(v.kind))) << " " << v.relation << " "
          << v.subject << ": " << v.message << "\n";
    }
    out << vs.size() << (vs.size() == 1 ? " violation" : " violations") << "\n";
  }
  return vs.empty() ? kOk : kConstraint;
}

int print_result(const Globals& g, const sql::ResultTable& t, const std::vector<sql::LintFinding>& findings,
                 std::ostream& out) {
  if (g.json()) {
    json j = t.to_json();
    j["lints"] = json::array();
    for (const auto& f : findings) j["lints"].push_back(f.to_json());
    out << j.dump(2) << "\n";
  } else {
    print_findings(out, findings);
    print_table(out, t);
  }
  return kOk;
}

int cmd_query(const Globals& g, const std::string& name, const std::vector<std::string>& raw, size_t row_limit,
              std::ostream& out) {
  std::map<std::string, std::string> text;
  for (const auto& kv : raw) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{kParse, "params", "bad_param", "expected name=value, got " + kv};
    text[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  sql::ResultTable t;
  try {
    const StoredQuery& q = stored_query(name);
    sql::Params p = parse_params(q, text);
    CanonicalStore store = g.load_store();
    t = run_stored_query(name, p, store, sql::ExecOptions{.row_limit = row_limit});
  } catch (const StoredQueryError& e) {
    bool unknown = e.kind() == StoredQueryError::Kind::unknown_name;
    throw Failure{unknown ? kResolve : kParse, "stored_query", unknown ? "unknown_query" : "bad_params", e.what()};
  }
  return print_result(g, t, {}, out);
}

int cmd_sql(const Globals& g, const std::string& file, size_t row_limit, std::ostream& out) {
  sql::SqlCheck c = checked_or_fail(read_text(file), row_limit);
  CanonicalStore store = g.load_store();
  sql::ResultTable t;
  try {
    t = execute_checked(c, store);
  } catch (const sql::ExecError& e) {
    throw Failure{kFailure, "execute", "execution_error", e.what()};
  }
  return print_result(g, t, c.findings, out);
}

struct ModelArgs {
  bool stub = false;
  std::string endpoint;
  std::string model;
  bool comments = false;
  int timeout_ms = 60000;
};

ModelEndpoint endpoint_from(const ModelArgs& m) {
  ModelEndpoint e;
  if (m.stub) {
    e.mode = ModelEndpoint::Mode::stub;
  } else if (!m.endpoint.empty()) {
    e.mode = ModelEndpoint::Mode::remote;
    e.base_url = m.endpoint;
  } else {
    throw Failure{kFailure, "usage", "no_model", "pass --stub or --model-endpoint"};
  }
  if (!m.model.empty()) e.model = m.model;
  e.timeout = std::chrono::milliseconds(m.timeout_ms);
  return e;
}

int cmd_ask(const Globals& g, const std::string& question, const ModelArgs& m, size_t row_limit, std::ostream& out) {
  Session s = make_session(canonical_catalog(), endpoint_from(m), PromptOptions{.include_comments = m.comments},
                           sql::GuardLimits{.max_rows = row_limit});
  CanonicalStore store = g.load_store();
  ChatExchange ex = answer(question, s, store);

  int code = kOk;
  if (ex.failed_stage == "translate") code = ex.error_kind == "no_sql" ? kParse : kIo;
  else if (ex.failed_stage) code = stage_exit(*ex.failed_stage);

  if (g.json()) {
    out << ex.to_json(false).dump(2) << "\n";
    return code;
  }
  if (ex.sql) out << *ex.sql << "\n\n";
  if (ex.check) print_findings(out, ex.check->findings);
  if (ex.failed_stage) {
    out << *ex.failed_stage << " failed (" << ex.error_kind << "): " << ex.error << "\n";
    return code;
  }
  print_table(out, *ex.result);
  return code;
}

struct SynthArgs {
  uint64_t seed = 42;
  int patients = 200;
  std::string out;
  std::string config;
  bool force = false;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg;
  if (!a.config.empty()) {
    json j = json::parse(read_text(a.config), nullptr, false);
    if (j.is_discarded()) throw Failure{kIo, "synth", "bad_config", a.config + " is not JSON"};
    cfg = synth_config_from_json(j);
  }
  cfg.seed = a.seed;
  cfg.n_patients = a.patients;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw Failure{kFailure, "synth", "bad_config", e.what()};
  }
  if (std::filesystem::exists(a.out)) {
    if (!a.force) throw Failure{kIo, "io", "exists", a.out + " exists; pass --force to replace it"};
    std::filesystem::remove(a.out);
  }
  CanonicalStore store = generate(cfg);
  Journal j = Journal::open(a.out);
  CommitResult c = j.commit(diff_stores({}, store));
  if (!c.ok()) throw Failure{kConstraint, "commit", std::string(to_string(c.status)), "generated store does not commit"};

  json counts = json::object();
  for (const auto& rel : canonical_catalog().relations) counts[rel.name] = store.count(rel.name);
  if (g.json()) {
    out << json{{"out", a.out}, {"seed", cfg.seed}, {"patients", cfg.n_patients}, {"sequence", j.last_seq()},
                {"records", counts}}
               .dump(2)
        << "\n";
  } else {
    out << "wrote " << store.size() << " records to " << a.out << " (seed " << cfg.seed << ")\n";
  }
  return kOk;
}

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  ModelArgs model;
  size_t row_limit = 1000;
  std::string cors = "*";
  std::string token_env;
};

int cmd_serve(const Globals& g, ServeArgs a, std::ostream& out) {
  if (!a.model.stub && a.model.endpoint.empty()) a.model.stub = true;  // serve offline unless told otherwise
  ServiceConfig cfg;
  cfg.store_path = g.store_path();
  cfg.endpoint = endpoint_from(a.model);
  cfg.prompt.include_comments = a.model.comments;
  cfg.row_limit = a.row_limit;
  cfg.cors_origin = a.cors;
  if (!a.token_env.empty()) {
    const char* t = std::getenv(a.token_env.c_str());
    if (!t || !*t) throw Failure{kFailure, "usage", "no_token", a.token_env + " is not set"};
    cfg.api_token = t;
  }
  auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw Failure{kFailure, "usage", "bad_bind", "--bind expects host:port"};
  std::string host = a.bind.substr(0, colon);
  int port = std::stoi(a.bind.substr(colon + 1));

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(cfg);
  } catch (const JournalError& e) {
    throw Failure{kIo, "io", "corrupt_journal", e.what()};
  }
  int bound = service->bind(host, port);
  if (bound < 0) throw Failure{kIo, "io", "bind_failed", "cannot bind " + a.bind};
  out << "serving " << cfg.store_path.string() << " (sequence " << service->sequence() << ") on http://" << host << ":"
      << bound << " with the " << to_string(cfg.endpoint.mode) << " model" << std::endl;
  std::thread listener([&] { service->listen(); });
  int sig = 0;
  sigwait(&stop_signals, &sig);
  service->stop();
  listener.join();
  out << "stopped at sequence " << service->sequence() << std::endl;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peripartum clinical data store: ingestion, constraint checks, SQL and natural-language queries"};
  app.name("peripartum");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app.add_option("--store", g.store, "Store journal (default: $PERIPARTUM_STORE)");
  size_t row_limit = 1000;

  auto* ddl = app.add_subcommand("ddl", "Print the schema DDL");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Ingest a spreadsheet or CTG export; commits when a store is given");
  ingest->add_option("file", ingest_args.file, "CSV file")->required();
  ingest->add_option("--kind", ingest_args.kind, "first_trimester_sheet, delivery_sheet, ehr_export or ctg_export");
  ingest->add_option("--config", ingest_args.config, "Source configuration JSON");
  ingest->add_flag("--strict", ingest_args.strict, "Exit 5 when any row is quarantined");

  std::string check_store;
  auto* check = app.add_subcommand("check", "Full constraint scan of a store");
  check->add_option("store", check_store, "Store journal");

  std::string query_name;
  std::vector<std::string> params;
  auto* query = app.add_subcommand("query", "Run a stored query");
  query->add_option("name", query_name, "Stored query name")->required();
  query->add_option("--param", params, "name=value")->allow_extra_args(false);

  std::string sql_file;
  auto* sqlc = app.add_subcommand("sql", "Validate and run the statement in a file");
  sqlc->add_option("file", sql_file, "SQL file")->required();

  std::string question;
  ModelArgs ask_model;
  auto* ask = app.add_subcommand("ask", "Answer a natural-language question through the model");
  ask->add_option("question", question, "Question")->required();
  ask->add_flag("--stub", ask_model.stub, "Use the built-in canned replies");
  ask->add_option("--model-endpoint", ask_model.endpoint, "OpenAI-compatible base URL");
  ask->add_option("--model", ask_model.model, "Model name");
  ask->add_option("--timeout-ms", ask_model.timeout_ms, "Request timeout")->capture_default_str();
  ask->add_flag("--comments", ask_model.comments, "Annotate the schema in the prompt");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a synthetic store journal");
  synth->add_option("--seed", synth_args.seed)->capture_default_str();
  synth->add_option("--patients", synth_args.patients)->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--out", synth_args.out, "Journal to write")->required();
  synth->add_option("--config", synth_args.config, "SynthConfig JSON");
  synth->add_flag("--force", synth_args.force, "Replace an existing file");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", serve_args.bind, "host:port")->capture_default_str();
  serve->add_flag("--stub", serve_args.model.stub, "Use the built-in canned replies (default)");
  serve->add_option("--model-endpoint", serve_args.model.endpoint, "OpenAI-compatible base URL");
  serve->add_option("--model", serve_args.model.model, "Model name");
  serve->add_option("--timeout-ms", serve_args.model.timeout_ms, "Model request timeout")->capture_default_str();
  serve->add_flag("--comments", serve_args.model.comments, "Annotate the schema in the prompt");
  serve->add_option("--row-limit", serve_args.row_limit)->capture_default_str();
  serve->add_option("--cors-origin", serve_args.cors)->capture_default_str();
  serve->add_option("--api-token-env", serve_args.token_env, "Environment variable holding a required bearer token");

  for (auto* sub : {query, sqlc, ask}) sub->add_option("--row-limit", row_limit)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "run with --help for usage\n";
    return kFailure;
  }

  try {
    if (*ddl) return cmd_ddl(g, out);
    if (*ingest) return cmd_ingest(g, ingest_args, out);
    if (*check) return cmd_check(g, check_store, out);
    if (*query) return cmd_query(g, query_name, params, row_limit, out);
    if (*sqlc) return cmd_sql(g, sql_file, row_limit, out);
    if (*ask) return cmd_ask(g, question, ask_model, row_limit, out);
    if (*synth) return cmd_synth(g, synth_args, out);
    if (*serve) {
      if (serve_args.model.stub && !serve_args.model.endpoint.empty()) {
        throw Failure{kFailure, "usage", "conflicting_model", "--stub and --model-endpoint are exclusive"};
      }
      return cmd_serve(g, serve_args, out);
    }
  } catch (const Failure& f) {
    if (g.json()) {
      out << json{{"error", {{"stage", f.stage}, {"kind", f.kind}, {"message", f.message}}}, {"exit", f.code}}.dump(2)
          << "\n";
    } else {
      err << f.stage << " error (" << f.kind << "): " << f.message << "\n";
    }
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace peripartum::cli
