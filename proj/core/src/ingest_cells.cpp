// Cell normalization, source configuration and report serialization for the
// legacy-source pipeline. The row and file level logic lives in ingest.cpp.

#include <algorithm>
#include <cctype>
#include <regex>

#include "peripartum/ingest.hpp"
#include "peripartum/record_json.hpp"

namespace peripartum::ingest {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

template <class E, size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 4> kKinds{"first_trimester_sheet", "delivery_sheet", "ehr_export",
                                                 "ctg_export"};
constexpr std::array<std::string_view, 4> kEncodings{"none", "zero_one", "yes_no", "presence_integer"};
constexpr std::array<std::string_view, 11> kValueKinds{"text",  "integer", "decimal",        "date",
                                                       "timestamp", "boolean", "flag_with_note", "apgar",
                                                       "gestational_age", "code", "marker"};
constexpr std::array<std::string_view, 3> kEpisodes{"consistent", "conflict", "flag_only"};

// label -> canonical field. "@companion" headers take their meaning from the
// flag column to their left (the delivery sheet pairs Episiotomy/Motivation and Analgesia/Type).
const std::map<std::string, std::string>& builtin_synonyms() {
  static const std::map<std::string, std::string> m{
      {"tax code", "tax_code"},
      {"tc", "tax_code"},
      {"codice fiscale", "tax_code"},
      {"cf", "tax_code"},
      {"name", "name"},
      {"nome", "name"},
      {"surname", "surname"},
      {"cognome", "surname"},
      {"birth date", "birth_date"},
      {"date of birth", "birth_date"},
      {"data di nascita", "birth_date"},
      {"first exam date", "first_exam_date"},
      {"data prima visita", "first_exam_date"},
      {"maternal age", "maternal_age"},
      {"eta materna", "maternal_age"},
      {"exam date", "exam_date"},
      {"data esame", "exam_date"},
      {"gestational age", "gestational_age"},
      {"ga", "gestational_age"},
      {"eg", "gestational_age"},
      {"epoca gestazionale", "gestational_age"},
      {"outcome of genetic tests", "genetic_tests_outcome"},
      {"esito test genetici", "genetic_tests_outcome"},
      {"premorph ultr indicated", "premorph_ultrasound"},
      {"ecografia premorfologica indicata", "premorph_ultrasound"},
      {"nipt", "nipt"},
      {"outcome", "outcome"},
      {"esito", "outcome"},
      {"delivery date", "delivery_date"},
      {"data parto", "delivery_date"},
      {"delivery mode", "delivery_mode"},
      {"modalita parto", "delivery_mode"},
      {"cs motivation", "delivery_motivation"},
      {"delivery motivation", "delivery_motivation"},
      {"indicazione", "delivery_motivation"},
      {"labor start", "labor_start"},
      {"inizio travaglio", "labor_start"},
      {"expulsion", "expulsion_time"},
      {"expulsion time", "expulsion_time"},
      {"espulsione", "expulsion_time"},
      {"birth time", "birth_time"},
      {"ora nascita", "birth_time"},
      {"robson", "robson"},
      {"robson class", "robson"},
      {"placenta", "placenta"},
      {"secondamento", "placenta"},
      {"blood loss", "blood_loss"},
      {"perdita ematica", "blood_loss"},
      {"laceration", "laceration"},
      {"lacerazione", "laceration"},
      {"episiotomy", "episiotomy"},
      {"episiotomia", "episiotomy"},
      {"analgesia", "analgesia"},
      {"motivation", "@companion"},
      {"motivazione", "@companion"},
      {"type", "@companion"},
      {"tipo", "@companion"},
      {"apgar score", "apgar"},
      {"apgar", "apgar"},
      {"weight", "weight"},
      {"weight gr", "weight"},
      {"peso", "weight"},
      {"peso gr", "weight"},
      {"ph", "ph"},
      {"visit date", "visit_date"},
      {"data visita", "visit_date"},
      {"pih", "pih"},
      {"art", "art"},
      {"pma", "art"},
      {"gdm", "gdm"},
      {"thyropathy", "thyropathy"},
      {"tireopatia", "thyropathy"},
      {"newborn section", "newborn_section"},
      {"sezione neonato", "newborn_section"},
      {"apgar 1", "apgar_1"},
      {"apgar 5", "apgar_5"},
      {"apgar 10", "apgar_10"},
      {"time", "time"},
      {"tempo", "time"},
      {"mhr", "mhr"},
      {"maternal hr", "mhr"},
      {"fcm", "mhr"},
      {"toco", "toco"},
      {"tocography", "toco"},
  };
  return m;
}

ColumnPolicy pol(ValueKind k, BoolEncoding b = BoolEncoding::none, std::set<std::string> markers = {}) {
  return ColumnPolicy{std::move(markers), b, k};
}

std::optional<Timestamp> ts_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  auto t = parse_timestamp(j.at(key).get<std::string>());
  if (!t) throw IngestError(std::string("config: bad timestamp for ") + key);
  return t;
}

SourceRef ref_from_json(const nlohmann::json& j) {
  SourceRef r;
  if (j.contains("pregnancy_id")) r.pregnancy_id = j.at("pregnancy_id").get<int64_t>();
  r.tax_code = j.value("tax_code", "");
  if (j.contains("first_exam_date")) {
    r.first_exam_date = parse_date(j.at("first_exam_date").get<std::string>());
    if (!r.first_exam_date) throw IngestError("config: bad first_exam_date");
  }
  r.birth_time = ts_from_json(j, "birth_time");
  if (!r.pregnancy_id && (r.tax_code.empty() || !r.first_exam_date)) {
    throw IngestError("config: a reference needs pregnancy_id or tax_code plus first_exam_date");
  }
  return r;
}

nlohmann::json ref_to_json(const SourceRef& r) {
  nlohmann::json j = nlohmann::json::object();
  if (r.pregnancy_id) j["pregnancy_id"] = *r.pregnancy_id;
  if (!r.tax_code.empty()) j["tax_code"] = r.tax_code;
  if (r.first_exam_date) j["first_exam_date"] = format_date(*r.first_exam_date);
  if (r.birth_time) j["birth_time"] = format_rfc3339(*r.birth_time);
  return j;
}

}  // namespace

std::string_view to_string(SourceKind k) { return kKinds.at(static_cast<size_t>(k)); }
std::optional<SourceKind> parse_source_kind(std::string_view text) { return lookup<SourceKind>(kKinds, text); }
std::string_view to_string(BoolEncoding e) { return kEncodings.at(static_cast<size_t>(e)); }
std::string_view to_string(ValueKind k) { return kValueKinds.at(static_cast<size_t>(k)); }
std::string_view to_string(Episode e) { return kEpisodes.at(static_cast<size_t>(e)); }

std::string normalize_header(std::string_view label) {
  std::string folded;
  for (size_t i = 0; i < label.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(label[i]);
    // U+00E0..U+00FA in UTF-8: C3 A0..C3 BA; fold the vowels Italian labels use
    if (c == 0xC3 && i + 1 < label.size()) {
      unsigned char d = static_cast<unsigned char>(label[i + 1]);
      char base = 0;
      if (d >= 0xA0 && d <= 0xA5) base = 'a';
      else if (d >= 0xA8 && d <= 0xAB) base = 'e';
      else if (d >= 0xAC && d <= 0xAF) base = 'i';
      else if (d >= 0xB2 && d <= 0xB6) base = 'o';
      else if (d >= 0xB9 && d <= 0xBC) base = 'u';
      if (base) {
        folded += base;
        ++i;
        continue;
      }
    }
    folded += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ';
  }
  std::string out;
  for (char c : folded) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out += c;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

SourceConfig SourceConfig::defaults(SourceKind kind) {
  SourceConfig c;
  c.kind = kind;
  auto& p = c.column_policies;
  p["tax_code"] = pol(ValueKind::text);
  p["name"] = pol(ValueKind::text);
  p["surname"] = pol(ValueKind::text);
  p["birth_date"] = pol(ValueKind::date);
  p["first_exam_date"] = pol(ValueKind::date);
  p["maternal_age"] = pol(ValueKind::integer);
  p["exam_date"] = pol(ValueKind::date);
  p["gestational_age"] = pol(ValueKind::gestational_age);
  switch (kind) {
    case SourceKind::first_trimester_sheet:
      // zeros stand in for missing values in the result columns, not in the flags
      p["genetic_tests_outcome"] = pol(ValueKind::text, BoolEncoding::none, {"0"});
      p["outcome"] = pol(ValueKind::text, BoolEncoding::none, {"0"});
      p["premorph_ultrasound"] = pol(ValueKind::flag_with_note, BoolEncoding::zero_one);
      p["nipt"] = pol(ValueKind::boolean, BoolEncoding::zero_one);
      c.tests["outcome"] = {"first trimester outcome", {"A", "B", "C", "D"}};
      c.tests["genetic_tests_outcome"] = {"genetic tests", {"string"}};
      break;
    case SourceKind::delivery_sheet:
      p["delivery_date"] = pol(ValueKind::date);
      p["delivery_mode"] = pol(ValueKind::text);
      p["delivery_motivation"] = pol(ValueKind::text);
      p["labor_start"] = pol(ValueKind::timestamp);
      p["expulsion_time"] = pol(ValueKind::timestamp);
      p["birth_time"] = pol(ValueKind::timestamp);
      p["robson"] = pol(ValueKind::integer);
      p["placenta"] = pol(ValueKind::text);
      p["blood_loss"] = pol(ValueKind::integer);
      p["laceration"] = pol(ValueKind::text);
      p["episiotomy"] = pol(ValueKind::boolean, BoolEncoding::zero_one);
      p["episiotomy_motivation"] = pol(ValueKind::text);
      p["analgesia"] = pol(ValueKind::boolean, BoolEncoding::yes_no);
      p["analgesia_type"] = pol(ValueKind::text);
      p["apgar"] = pol(ValueKind::apgar);
      p["weight"] = pol(ValueKind::integer);
      p["ph"] = pol(ValueKind::decimal);
      break;
    case SourceKind::ehr_export:
      p["visit_date"] = pol(ValueKind::date);
      p["outcome"] = pol(ValueKind::code);
      for (const char* f : {"pih", "art", "gdm", "thyropathy"}) {
        p[f] = pol(ValueKind::boolean, BoolEncoding::presence_integer);
      }
      p["birth_time"] = pol(ValueKind::timestamp);
      p["newborn_section"] = pol(ValueKind::marker);
      p["apgar_1"] = pol(ValueKind::integer);
      p["apgar_5"] = pol(ValueKind::integer);
      p["apgar_10"] = pol(ValueKind::integer);
      p["weight"] = pol(ValueKind::integer);
      break;
    case SourceKind::ctg_export:
      // a zero heart rate is signal loss; zero uterine activity is a reading
      p["time"] = pol(ValueKind::text);
      p["mhr"] = pol(ValueKind::integer, BoolEncoding::none, {"0"});
      p["toco"] = pol(ValueKind::decimal);
      p["fhr"] = pol(ValueKind::integer, BoolEncoding::none, {"0"});
      break;
  }
  return c;
}

const ColumnPolicy& SourceConfig::policy(const std::string& field) const {
  static const ColumnPolicy kText;
  auto it = column_policies.find(field);
  return it == column_policies.end() ? kText : it->second;
}

SourceConfig source_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IngestError("config: expected a JSON object");
  auto kind = parse_source_kind(j.value("source_kind", ""));
  if (!kind) throw IngestError("config: unknown source_kind '" + j.value("source_kind", "") + "'");
  SourceConfig c = SourceConfig::defaults(*kind);
  if (j.contains("columns")) {
    for (const auto& [field, spec] : j.at("columns").items()) {
      ColumnPolicy& p = c.column_policies[field];
      if (spec.contains("missing_markers")) p.missing_markers = spec.at("missing_markers").get<std::set<std::string>>();
      if (spec.contains("bool_encoding")) {
        auto e = lookup<BoolEncoding>(kEncodings, spec.at("bool_encoding").get<std::string>());
        if (!e) throw IngestError("config: unknown bool_encoding for " + field);
        p.bool_encoding = *e;
      }
      if (spec.contains("value_kind")) {
        auto k = lookup<ValueKind>(kValueKinds, spec.at("value_kind").get<std::string>());
        if (!k) throw IngestError("config: unknown value_kind for " + field);
        p.value_kind = *k;
      }
    }
  }
  if (j.contains("header_synonyms")) {
    for (const auto& [label, field] : j.at("header_synonyms").items()) {
      c.header_synonyms[normalize_header(label)] = field.get<std::string>();
    }
  }
  if (j.contains("id_crosswalk")) {
    for (const auto& [id, ref] : j.at("id_crosswalk").items()) c.id_crosswalk[id] = ref_from_json(ref);
  }
  if (j.contains("tracing")) c.tracing = ref_from_json(j.at("tracing"));
  if (j.contains("tracing_start")) c.tracing_start = ts_from_json(j, "tracing_start");
  if (j.contains("tests")) {
    for (const auto& [field, t] : j.at("tests").items()) {
      c.tests[field] = {t.at("name").get<std::string>(), t.at("type").get<std::vector<std::string>>()};
    }
  }
  c.section_marker = j.value("section_marker", c.section_marker);
  return c;
}

nlohmann::json to_json(const SourceConfig& c) {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [f, p] : c.column_policies) {
    cols[f] = {{"missing_markers", p.missing_markers},
               {"bool_encoding", to_string(p.bool_encoding)},
               {"value_kind", to_string(p.value_kind)}};
  }
  nlohmann::json xw = nlohmann::json::object();
  for (const auto& [id, r] : c.id_crosswalk) xw[id] = ref_to_json(r);
  nlohmann::json tests = nlohmann::json::object();
  for (const auto& [f, t] : c.tests) tests[f] = {{"name", t.name}, {"type", t.type}};
  nlohmann::json j{{"source_kind", to_string(c.kind)},
                   {"columns", cols},
                   {"header_synonyms", c.header_synonyms},
                   {"id_crosswalk", xw},
                   {"tests", tests},
                   {"section_marker", c.section_marker}};
  if (c.tracing) j["tracing"] = ref_to_json(*c.tracing);
  if (c.tracing_start) j["tracing_start"] = format_rfc3339(*c.tracing_start);
  return j;
}

// Exposed to ingest.cpp through a declaration there.
std::optional<std::string> builtin_field(const std::string& normalized) {
  const auto& m = builtin_synonyms();
  auto it = m.find(normalized);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

NormalizedCell normalize_cell(std::string_view token, const ColumnPolicy& policy, std::string_view section_marker) {
  NormalizedCell out;
  std::string t = trim(token);
  if (t.empty() || t == "//" || lower(t) == "missing" || policy.missing_markers.count(t)) return out;
  out.text = t;
  bool marker = !section_marker.empty() && lower(t) == lower(section_marker);
  if (marker && policy.value_kind != ValueKind::marker) {
    out.status = NormalizedCell::Status::conflict_marker;
  } else {
    out.status = NormalizedCell::Status::value;
  }
  return out;
}

BoolParse parse_bool(std::string_view token, BoolEncoding encoding) {
  BoolParse out;
  std::string t = trim(token);
  std::string l = lower(t);
  switch (encoding) {
    case BoolEncoding::zero_one:
      if (t == "1") out.value = true;
      else if (t == "0") out.value = false;
      break;
    case BoolEncoding::yes_no:
      if (l == "yes" || l == "si" || l == "s\xc3\xac") out.value = true;
      else if (l == "no") out.value = false;
      break;
    case BoolEncoding::presence_integer:
      if (t.empty()) {
        out.value = false;
      } else if (auto n = parse_int(t)) {
        out.value = true;
        out.note = *n;
      }
      break;
    case BoolEncoding::none:
      if (l == "true") out.value = true;
      else if (l == "false") out.value = false;
      break;
  }
  if (!out.value && !(t.empty() && encoding != BoolEncoding::presence_integer)) {
    out.error = "'" + t + "' is not a " + std::string(to_string(encoding)) + " boolean";
  }
  return out;
}

Apgar parse_apgar(std::string_view text) {
  std::string t = trim(text);
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t dash = t.find('-', start);
    parts.push_back(trim(std::string_view(t).substr(start, dash == std::string::npos ? std::string::npos : dash - start)));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  if (parts.size() != 2 && parts.size() != 3) {
    throw CellError("Apgar score '" + t + "' must have two or three parts");
  }
  std::vector<int> v;
  for (const auto& p : parts) {
    auto n = parse_int(p);
    if (!n || *n < 0 || *n > 10) throw CellError("Apgar score '" + t + "' has a part outside 0..10");
    v.push_back(static_cast<int>(*n));
  }
  Apgar a{v[0], v[1], std::nullopt};
  if (v.size() == 3) a.apgar_10 = v[2];
  return a;
}

int parse_gestational_age(std::string_view text) {
  std::string t = trim(text);
  static const std::regex kWeeks(R"((\d{1,2})\s*\+\s*(\d))");
  std::smatch m;
  if (std::regex_match(t, m, kWeeks)) {
    int days = std::stoi(m[2]);
    if (days > 6) throw CellError("gestational age '" + t + "' has more than 6 days");
    return std::stoi(m[1]) * 7 + days;
  }
  if (auto n = parse_int(t); n && *n >= 0 && *n <= 320) return static_cast<int>(*n);
  throw CellError("gestational age '" + t + "' is neither days nor weeks+days");
}

Reconciled reconcile_flag_value(std::optional<bool> flag, const std::optional<std::string>& value) {
  bool on = flag.value_or(false);
  if (value) return {value, on ? Episode::consistent : Episode::conflict};
  return {std::nullopt, on ? Episode::flag_only : Episode::consistent};
}

Realigned realign_ehr_row(const std::vector<std::string>& section, std::string_view marker,
                          const std::vector<CellDomain>& domains) {
  Realigned out;
  std::optional<size_t> at;
  for (size_t i = 0; i < section.size(); ++i) {
    if (lower(trim(section[i])) == lower(marker)) {
      at = i;
      break;
    }
  }
  if (at && *at > 0) {
    out.offset = static_cast<int>(*at);
    out.spilled.assign(section.begin(), section.begin() + static_cast<long>(*at));
    out.cells.assign(section.begin() + static_cast<long>(*at), section.end());
    out.cells.resize(section.size());
    out.status = Realigned::Status::realigned;
  } else {
    out.cells = section;
  }
  if (!at && !out.cells.empty() && !trim(out.cells[0]).empty()) {
    out.status = Realigned::Status::quarantined;
    out.reason = "no '" + std::string(marker) + "' marker and '" + trim(out.cells[0]) + "' in its column";
    return out;
  }

  std::vector<std::string> problems;
  for (size_t i = 1; i < out.cells.size() && i - 1 < domains.size(); ++i) {
    if (auto e = domains[i - 1](out.cells[i])) problems.push_back(*e);
  }
  if (!problems.empty()) {
    std::string why;
    for (const auto& p : problems) why += (why.empty() ? "" : "; ") + p;
    if (out.status == Realigned::Status::realigned) {
      why = "after shifting left by " + std::to_string(out.offset) + ": " + why;
    } else if (!at) {
      why = "no '" + std::string(marker) + "' marker and " + why;
    }
    out.status = Realigned::Status::quarantined;
    out.reason = why;
  }
  return out;
}

nlohmann::json IngestionReport::to_json() const {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& r : quarantined) q.push_back({{"row", r.row}, {"cells", r.cells}, {"reason", r.reason}});
  nlohmann::json c = nlohmann::json::array();
  for (const auto& r : conflicts) c.push_back({{"row", r.row}, {"field", r.field}, {"values", r.values}});
  nlohmann::json rp = nlohmann::json::array();
  for (const auto& r : repairs) rp.push_back({{"row", r.row}, {"notes", r.notes}});
  nlohmann::json pv = nlohmann::json::array();
  for (const auto& r : provenance) pv.push_back({{"row", r.row}, {"field", r.field}, {"note", r.note}});
  nlohmann::json qc = nlohmann::json::array();
  for (const auto& r : quarantined_columns) qc.push_back({{"column", r.column}, {"reason", r.reason}});
  return {{"source_kind", to_string(kind)},
          {"layout", layout},
          {"source", source},
          {"rows", rows},
          {"accepted", accepted},
          {"repaired", repaired},
          {"quarantined", q},
          {"conflicts", c},
          {"repairs", rp},
          {"provenance", pv},
          {"quarantined_columns", qc},
          {"ignored_columns", ignored_columns},
          {"empty_rows", empty_rows},
          {"unchanged_rows", unchanged_rows},
          {"records", {{"inserted", inserted}, {"updated", updated}}}};
}

std::string IngestionReport::quarantine_csv() const {
  std::vector<std::string> head = header;
  head.push_back("reason");
  std::string out = csv_line(head) + "\n";
  for (const auto& r : quarantined) {
    std::vector<std::string> cells = r.cells;
    cells.resize(header.size());
    cells.push_back(r.reason);
    out += csv_line(cells) + "\n";
  }
  return out;
}

}  // namespace peripartum::ingest
