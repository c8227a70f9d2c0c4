#include "peripartum/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "peripartum/validation.hpp"

namespace peripartum::ingest {

std::optional<std::string> builtin_field(const std::string& normalized);  // ingest_cells.cpp

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(sep) : "") + parts[i];
  return out;
}

bool blank(const std::vector<std::string>& cells) {
  return std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
    return std::all_of(c.begin(), c.end(), [](unsigned char ch) { return std::isspace(ch); });
  });
}

// ---- header mapping ---------------------------------------------------------

struct HeaderMap {
  std::vector<std::optional<std::string>> field_of;  // per column
  std::map<std::string, size_t> column_of;           // field -> first column
  std::vector<std::string> ignored;

  bool has(const std::string& f) const { return column_of.count(f) > 0; }
};

HeaderMap map_header(const std::vector<std::string>& header, const SourceConfig& cfg) {
  HeaderMap m;
  std::optional<std::string> previous;
  for (const auto& label : header) {
    std::string norm = normalize_header(label);
    std::optional<std::string> field;
    if (auto it = cfg.header_synonyms.find(norm); it != cfg.header_synonyms.end()) {
      field = it->second;
    } else {
      field = builtin_field(norm);
    }
    if (field == "@companion") {
      if (previous == "episiotomy") field = "episiotomy_motivation";
      else if (previous == "analgesia") field = "analgesia_type";
      else if (norm == "motivation" || norm == "motivazione") field = "delivery_motivation";
      else field.reset();
    }
    if (field && m.column_of.count(*field)) field.reset();  // first column wins
    if (field) {
      m.column_of[*field] = m.field_of.size();
    } else {
      m.ignored.push_back(label);
    }
    m.field_of.push_back(field);
    previous = field;
  }
  return m;
}

// ---- per-row context ----------------------------------------------------------

class IdAlloc {
 public:
  explicit IdAlloc(const CanonicalStore& s) : s_(s) {}
  int64_t next(std::string_view relation) {
    auto [it, fresh] = next_.try_emplace(std::string(relation), 0);
    if (fresh) it->second = s_.next_id(relation);
    return it->second++;
  }

 private:
  const CanonicalStore& s_;
  std::map<std::string, int64_t> next_;
};

struct RowCtx {
  const SourceConfig& cfg;
  const HeaderMap& hm;
  size_t index;
  std::vector<std::string> cells;
  std::vector<std::string> errors;
  std::vector<std::string> repairs;
  std::vector<Conflict> conflicts;
  std::vector<ProvenanceNote> provenance;

  bool has(const std::string& f) const { return hm.has(f); }
  std::string raw(const std::string& f) const {
    auto it = hm.column_of.find(f);
    if (it == hm.column_of.end() || it->second >= cells.size()) return "";
    return cells[it->second];
  }

  NormalizedCell cell(const std::string& f) {
    NormalizedCell c = normalize_cell(raw(f), cfg.policy(f), cfg.section_marker);
    if (c.status == NormalizedCell::Status::conflict_marker) {
      errors.push_back(f + ": section marker '" + c.text + "' out of place");
      c.status = NormalizedCell::Status::missing;
    }
    return c;
  }

  void missing(const std::string& f) { errors.push_back(f + " is missing"); }

  std::optional<std::string> text(const std::string& f, bool required = false) {
    NormalizedCell c = cell(f);
    if (!c.present()) {
      if (required) missing(f);
      return std::nullopt;
    }
    return c.text;
  }

  template <class T, class P>
  std::optional<T> typed(const std::string& f, bool required, P parse, const char* what) {
    auto t = text(f, required);
    if (!t) return std::nullopt;
    std::optional<T> v = parse(*t);
    if (!v) errors.push_back(f + ": '" + *t + "' is not " + what);
    return v;
  }

  std::optional<int64_t> integer(const std::string& f, bool required = false) {
    return typed<int64_t>(f, required, [](const std::string& t) { return parse_int(t); }, "an integer");
  }
  std::optional<double> decimal(const std::string& f, bool required = false) {
    return typed<double>(f, required, [](const std::string& t) { return parse_double(t); }, "a number");
  }
  std::optional<Date> date(const std::string& f, bool required = false) {
    return typed<Date>(f, required, [](const std::string& t) { return parse_date(t); }, "a date");
  }
  std::optional<Timestamp> timestamp(const std::string& f, bool required = false) {
    return typed<Timestamp>(f, required, [](const std::string& t) { return parse_timestamp(t); }, "a timestamp");
  }
  std::optional<int> gestational_age(const std::string& f, bool required = false) {
    auto t = text(f, required);
    if (!t) return std::nullopt;
    try {
      return parse_gestational_age(*t);
    } catch (const CellError& e) {
      errors.push_back(f + ": " + e.what());
      return std::nullopt;
    }
  }

  /// Boolean under the column's encoding; presence integers become provenance notes.
  std::optional<bool> boolean(const std::string& f) {
    const ColumnPolicy& p = cfg.policy(f);
    NormalizedCell c = cell(f);
    BoolParse b = parse_bool(c.present() ? c.text : "", p.bool_encoding);
    if (!b.ok()) {
      errors.push_back(f + ": " + b.error);
      return std::nullopt;
    }
    if (b.note) provenance.push_back({index, f, std::to_string(*b.note)});
    return b.value;
  }

  void conflict(const std::string& f, std::vector<std::string> values, std::string message) {
    conflicts.push_back({index, f, std::move(values)});
    errors.push_back(std::move(message));
  }
};

// ---- record upserts ---------------------------------------------------------

struct Pending {
  Transaction tx;
  size_t inserts = 0;
  size_t updates = 0;
};

template <class R>
void upsert(const CanonicalStore& s, const R& r, Pending& p) {
  const R* have = s.find<R>(r.key());
  if (!have) {
    p.tx.insert(r);
    ++p.inserts;
  } else if (!(*have == r)) {
    p.tx.update(r);
    ++p.updates;
  }
}

// Finds or stages the patient and pregnancy a row is about.
std::optional<Pregnancy> resolve_pregnancy(RowCtx& ctx, const CanonicalStore& s, IdAlloc& ids, Pending& p,
                                           bool allow_create, std::optional<Date> first_exam) {
  auto raw_tc = ctx.text("tax_code", true);
  if (!first_exam) first_exam = ctx.date("first_exam_date", true);
  if (!raw_tc || !first_exam) return std::nullopt;
  std::string tc = upper(*raw_tc);
  if (!is_tax_code(tc)) {
    ctx.errors.push_back("tax_code: '" + *raw_tc + "' is not 16 letters and digits");
    return std::nullopt;
  }
  if (tc != *raw_tc) ctx.repairs.push_back("tax_code: '" + *raw_tc + "' uppercased to '" + tc + "'");

  auto name = ctx.text("name");
  auto surname = ctx.text("surname");
  auto birth = ctx.date("birth_date");
  if (const Patient* pt = s.find<Patient>(tc)) {
    if (name && *name != pt->name) ctx.conflict("name", {pt->name, *name}, "name '" + *name + "' differs from stored '" + pt->name + "'");
    if (surname && *surname != pt->surname) {
      ctx.conflict("surname", {pt->surname, *surname}, "surname '" + *surname + "' differs from stored '" + pt->surname + "'");
    }
    if (birth && *birth != pt->birth_date) {
      ctx.conflict("birth_date", {format_date(pt->birth_date), format_date(*birth)},
                   "birth_date " + format_date(*birth) + " differs from stored " + format_date(pt->birth_date));
    }
  } else if (!allow_create) {
    ctx.errors.push_back("unknown patient " + tc);
    return std::nullopt;
  } else if (!name || !surname || !birth) {
    ctx.errors.push_back("patient " + tc + " is not stored and the row lacks name, surname or birth date");
    return std::nullopt;
  } else {
    Patient pt{tc, *name, *surname, *birth};
    upsert(s, pt, p);
  }

  for (const auto& [id, pr] : s.table<Pregnancy>()) {
    if (pr.patient_tc == tc && pr.first_exam_date == *first_exam) return pr;
  }
  if (!allow_create) {
    ctx.errors.push_back("unknown pregnancy of " + tc + " with first exam " + format_date(*first_exam));
    return std::nullopt;
  }
  auto age = ctx.integer("maternal_age");
  if (!age) {
    ctx.errors.push_back("pregnancy of " + tc + " with first exam " + format_date(*first_exam) +
                         " is not stored and the row has no maternal age");
    return std::nullopt;
  }
  Pregnancy pr;
  pr.id = ids.next(Pregnancy::kRelation);
  pr.patient_tc = tc;
  pr.first_exam_date = *first_exam;
  pr.maternal_age_at_conception = static_cast<int>(*age);
  upsert(s, pr, p);
  return pr;
}

std::optional<int64_t> find_pregnancy(const CanonicalStore& s, const SourceRef& r) {
  if (r.pregnancy_id) {
    if (s.find<Pregnancy>(*r.pregnancy_id)) return r.pregnancy_id;
    return std::nullopt;
  }
  for (const auto& [id, pr] : s.table<Pregnancy>()) {
    if (pr.patient_tc == r.tax_code && r.first_exam_date && pr.first_exam_date == *r.first_exam_date) return id;
  }
  return std::nullopt;
}

int64_t find_or_add_test(const CanonicalStore& s, const TestDef& def, IdAlloc& ids, Pending& p,
                         std::map<std::string, int64_t>& staged) {
  for (const auto& [id, t] : s.table<Test>()) {
    if (t.name == def.name) return id;
  }
  if (auto it = staged.find(def.name); it != staged.end()) return it->second;
  Test t{ids.next(Test::kRelation), def.name, def.type};
  upsert(s, t, p);
  staged[def.name] = t.id;
  return t.id;
}

int64_t find_or_add_condition(const CanonicalStore& s, const std::string& name, IdAlloc& ids, Pending& p,
                              std::map<std::string, int64_t>& staged) {
  for (const auto& [id, c] : s.table<Condition>()) {
    if (lower(c.name) == lower(name)) return id;
  }
  if (auto it = staged.find(lower(name)); it != staged.end()) return it->second;
  Condition c{ids.next(Condition::kRelation), name};
  upsert(s, c, p);
  staged[lower(name)] = c.id;
  return c.id;
}

// ---- value vocabularies -----------------------------------------------------

struct Mode {
  DeliveryType type;
  std::optional<OperativeInstrument> instrument;
};

std::optional<Mode> parse_mode(const std::string& text) {
  std::string t = normalize_header(text);
  if (t == "natural" || t == "spontaneous" || t == "spontaneo" || t == "eutocic" || t == "vaginal") {
    return Mode{DeliveryType::natural, std::nullopt};
  }
  if (t == "vacuum" || t == "ventosa") return Mode{DeliveryType::operative, OperativeInstrument::vacuum};
  if (t == "forceps" || t == "forcipe") return Mode{DeliveryType::operative, OperativeInstrument::forceps};
  if (t == "emergency cs" || t == "emergency c section" || t == "emergency c_section" || t == "tc urgente" ||
      t == "emergency caesarean") {
    return Mode{DeliveryType::emergency_c_section, std::nullopt};
  }
  if (t == "elective cs" || t == "programmed cs" || t == "programmed c section" || t == "tc elettivo" ||
      t == "elective caesarean") {
    return Mode{DeliveryType::programmed_c_section, std::nullopt};
  }
  if (auto e = parse_enum<DeliveryType>(lower(text))) return Mode{*e, std::nullopt};
  return std::nullopt;
}

std::optional<PlacentalExpulsion> parse_placenta(const std::string& text) {
  std::string t = normalize_header(text);
  if (t == "spontaneous" || t == "spontaneo" || t == "spontanea") return PlacentalExpulsion::spontaneous;
  if (t == "manual" || t == "manuale") return PlacentalExpulsion::manual;
  if (t == "curettage" || t == "revisione" || t == "revisione cavita") return PlacentalExpulsion::curettage;
  return std::nullopt;
}

std::optional<Laceration> parse_laceration(const std::string& text) {
  std::string t = normalize_header(text);
  for (const char* suffix : {" degree", " grado"}) {
    if (t.size() > std::strlen(suffix) && t.ends_with(suffix)) t.resize(t.size() - std::strlen(suffix));
  }
  if (t == "none" || t == "no" || t == "0" || t == "absent" || t == "assente" || t == "intact") return Laceration::none;
  if (t == "1" || t == "i" || t == "first" || t == "1st") return Laceration::first_degree;
  if (t == "2" || t == "ii" || t == "second" || t == "2nd") return Laceration::second_degree;
  if (t == "3" || t == "iii" || t == "third" || t == "3rd") return Laceration::third_degree;
  if (t == "4" || t == "iv" || t == "fourth" || t == "4th") return Laceration::fourth_degree;
  return parse_enum<Laceration>(lower(text));
}

// ---- source kinds -------------------------------------------------------------

class SheetRun {
 public:
  SheetRun(const CsvTable& table, const SourceConfig& cfg, CanonicalStore store, IngestionReport& report)
      : table_(table), cfg_(cfg), store_(std::move(store)), report_(report), hm_(map_header(table.header, cfg)) {
    report_.ignored_columns = hm_.ignored;
    report_.layout = layout();
  }

  CanonicalStore run() {
    for (size_t i = 0; i < table_.rows.size(); ++i) row(i + 1, table_.rows[i]);
    return std::move(store_);
  }

 private:
  enum class Layout { first_trimester, delivery, ehr_conditions, ehr_newborn };

  std::string layout() {
    auto need = [&](std::initializer_list<const char*> fields) {
      std::vector<std::string> absent;
      for (const char* f : fields) {
        if (!hm_.has(f)) absent.push_back(f);
      }
      if (!absent.empty()) {
        throw IngestError("unknown header layout for " + std::string(to_string(cfg_.kind)) + ": no column for " +
                          join(absent, ", "));
      }
    };
    switch (cfg_.kind) {
      case SourceKind::first_trimester_sheet:
        need({"tax_code", "gestational_age"});
        if (!hm_.has("exam_date") && !hm_.has("first_exam_date")) need({"exam_date"});
        layout_ = Layout::first_trimester;
        return "first_trimester";
      case SourceKind::delivery_sheet:
        need({"tax_code", "first_exam_date", "delivery_date", "delivery_mode"});
        layout_ = Layout::delivery;
        return "delivery";
      case SourceKind::ehr_export:
        if (hm_.has("newborn_section")) {
          need({"tax_code", "first_exam_date", "birth_time", "apgar_1", "apgar_5", "weight"});
          layout_ = Layout::ehr_newborn;
          return "ehr_newborn";
        }
        if (hm_.has("pih") || hm_.has("art") || hm_.has("gdm") || hm_.has("thyropathy") || hm_.has("outcome")) {
          need({"tax_code", "first_exam_date"});
          layout_ = Layout::ehr_conditions;
          return "ehr_conditions";
        }
        throw IngestError("unknown header layout for ehr_export: neither a newborn section nor condition columns");
      case SourceKind::ctg_export:
        break;
    }
    throw IngestError("CTG exports are not sheets");
  }

  void row(size_t index, std::vector<std::string> cells) {
    ++report_.rows;
    if (cells.size() > table_.header.size()) {
      report_.quarantined.push_back({index, cells, std::to_string(cells.size()) + " cells but the header has " +
                                                       std::to_string(table_.header.size())});
      return;
    }
    cells.resize(table_.header.size());
    if (blank(cells)) {
      ++report_.accepted;
      ++report_.empty_rows;
      return;
    }

    RowCtx ctx{cfg_, hm_, index, cells, {}, {}, {}, {}};
    IdAlloc ids(store_);
    Pending p;
    switch (layout_) {
      case Layout::first_trimester: first_trimester(ctx, ids, p); break;
      case Layout::delivery: delivery(ctx, ids, p); break;
      case Layout::ehr_conditions: ehr_conditions(ctx, ids, p); break;
      case Layout::ehr_newborn: ehr_newborn(ctx, ids, p); break;
    }
    finish(ctx, p, cells);
  }

  void finish(RowCtx& ctx, Pending& p, const std::vector<std::string>& cells) {
    for (auto& c : ctx.conflicts) report_.conflicts.push_back(std::move(c));
    if (!ctx.errors.empty()) {
      report_.quarantined.push_back({ctx.index, cells, join(ctx.errors, "; ")});
      return;
    }
    if (!p.tx.empty()) {
      CommitResult r = apply_transaction(store_, p.tx);
      if (!r.ok()) {
        std::vector<std::string> why;
        if (!r.error.empty()) why.push_back(r.error);
        for (const auto& v : r.violations) {
          why.push_back((v.rule ? std::string(to_string(*v.rule)) : std::string(to_string(v.kind))) + ": " + v.message);
        }
        report_.quarantined.push_back({ctx.index, cells, join(why, "; ")});
        return;
      }
      store_ = std::move(r.store);
      report_.inserted += p.inserts;
      report_.updated += p.updates;
    } else {
      ++report_.unchanged_rows;
    }
    for (auto& n : ctx.provenance) report_.provenance.push_back(std::move(n));
    if (ctx.repairs.empty()) {
      ++report_.accepted;
    } else {
      ++report_.repaired;
      report_.repairs.push_back({ctx.index, ctx.repairs});
    }
  }

  void result(RowCtx& ctx, const std::string& field, int64_t exam_id, IdAlloc& ids, Pending& p,
              std::map<std::string, int64_t>& staged) {
    auto it = cfg_.tests.find(field);
    if (it == cfg_.tests.end() || !ctx.has(field)) return;
    auto value = ctx.text(field);
    if (!value) return;
    int64_t test = find_or_add_test(store_, it->second, ids, p, staged);
    upsert(store_, ExaminationTest{exam_id, test, *value}, p);
  }

  void first_trimester(RowCtx& ctx, IdAlloc& ids, Pending& p) {
    auto exam_date = ctx.date("exam_date");
    auto first = ctx.has("first_exam_date") ? ctx.date("first_exam_date", true) : exam_date;
    if (!exam_date) exam_date = first;
    auto ga = ctx.gestational_age("gestational_age", true);
    auto pr = resolve_pregnancy(ctx, store_, ids, p, true, first);
    if (!pr || !exam_date || !ga) return;

    Examination ex;
    ex.id = -1;
    for (const auto& [id, e] : store_.table<Examination>()) {
      if (e.pregnancy_id == pr->id && e.kind == ExaminationKind::first_trimester) ex = e;
    }
    if (ex.id < 0) ex.id = ids.next(Examination::kRelation);
    ex.pregnancy_id = pr->id;
    ex.kind = ExaminationKind::first_trimester;
    ex.exam_date = *exam_date;
    ex.gestational_age_days = *ga;

    if (ctx.has("premorph_ultrasound")) {
      if (auto t = ctx.text("premorph_ultrasound")) {
        static const std::regex kFlag(R"(([01])(?:\s+(.+))?)");
        std::smatch m;
        if (std::regex_match(*t, m, kFlag)) {
          ex.details["premorphological_ultrasound_indicated"] = m[1] == "1" ? "true" : "false";
          if (m[2].matched) ex.details["premorphological_ultrasound_reason"] = m[2];
        } else {
          ctx.errors.push_back("premorph_ultrasound: '" + *t + "' is neither 0 nor 1 with an optional reason");
        }
      }
    }
    if (ctx.has("nipt")) {
      if (auto b = ctx.boolean("nipt")) ex.details["nipt"] = *b ? "true" : "false";
    }
    upsert(store_, ex, p);

    std::map<std::string, int64_t> staged;
    result(ctx, "outcome", ex.id, ids, p, staged);
    result(ctx, "genetic_tests_outcome", ex.id, ids, p, staged);
  }

  void delivery(RowCtx& ctx, IdAlloc& ids, Pending& p) {
    auto pr = resolve_pregnancy(ctx, store_, ids, p, true, std::nullopt);
    auto mode_text = ctx.text("delivery_mode", true);
    std::optional<Mode> mode;
    if (mode_text) {
      mode = parse_mode(*mode_text);
      if (!mode) ctx.errors.push_back("delivery_mode: unknown mode '" + *mode_text + "'");
    }
    auto date = ctx.date("delivery_date", true);
    auto ga = ctx.gestational_age("gestational_age", true);
    auto robson = ctx.integer("robson", true);
    auto blood = ctx.integer("blood_loss", true);
    std::optional<PlacentalExpulsion> placenta;
    if (auto t = ctx.text("placenta", true)) {
      placenta = parse_placenta(*t);
      if (!placenta) ctx.errors.push_back("placenta: unknown value '" + *t + "'");
    }

    // analgesia: YES/NO marker plus a type column
    auto an_flag = ctx.boolean("analgesia");
    auto an_type = ctx.text("analgesia_type");
    Reconciled an = reconcile_flag_value(an_flag, an_type);
    std::optional<std::string> analgesia = an.value;
    if (an.episode == Episode::conflict) {
      ctx.conflict("analgesia", {ctx.raw("analgesia"), *an_type},
                   "analgesia: flag '" + ctx.raw("analgesia") + "' contradicts type '" + *an_type + "'");
    } else if (an.episode == Episode::flag_only) {
      analgesia = "unspecified";
      ctx.repairs.push_back("analgesia: flag set without a type, stored as 'unspecified'");
    }

    if (!pr || !mode || !date || !ga || !robson || !blood || !placenta) return;
    Delivery d;
    d.pregnancy_id = pr->id;
    d.delivery_date = *date;
    d.gestational_age_days = *ga;
    d.robson_score = static_cast<int>(*robson);
    d.placental_expulsion = *placenta;
    d.analgesia = analgesia;
    d.estimated_blood_loss_ml = static_cast<int>(*blood);
    d.delivery_type = mode->type;

    std::optional<Timestamp> default_birth;
    if (mode->type == DeliveryType::programmed_c_section) {
      auto why = ctx.text("delivery_motivation", true);
      if (!why) return;
      upsert(store_, d, p);
      upsert(store_, ProgrammedCSection{pr->id, *why}, p);
    } else {
      auto start = ctx.timestamp("labor_start", true);
      auto expulsion = ctx.timestamp("expulsion_time", true);
      std::optional<Laceration> lac;
      if (auto t = ctx.text("laceration", true)) {
        lac = parse_laceration(*t);
        if (!lac) ctx.errors.push_back("laceration: unknown value '" + *t + "'");
      }
      auto ep_flag = ctx.boolean("episiotomy");
      auto ep_why = ctx.text("episiotomy_motivation");
      Reconciled ep = reconcile_flag_value(ep_flag, ep_why);
      if (ep.episode == Episode::conflict) {
        ctx.conflict("episiotomy", {ctx.raw("episiotomy"), *ep_why},
                     "episiotomy: flag '" + ctx.raw("episiotomy") + "' contradicts motivation '" + *ep_why + "'");
      }
      if (!start || !expulsion || !lac) return;
      if (!ep_flag && ep.episode == Episode::consistent) {
        ctx.repairs.push_back("episiotomy: no flag and no motivation, stored as false");
      }

      DeliveryWithLabor w;
      w.pregnancy_id = pr->id;
      w.delivery_subtype = mode->type == DeliveryType::operative             ? LaborSubtype::operative
                           : mode->type == DeliveryType::emergency_c_section ? LaborSubtype::emergency_c_section
                                                                             : LaborSubtype::natural;
      w.motivation = ctx.text("delivery_motivation");
      w.laceration = *lac;
      w.episiotomy = ep_flag.value_or(false);
      w.episiotomy_motivation = ep.value;
      w.labor_start_time = *start;
      w.expulsion_time = *expulsion;
      w.operative_instrument = mode->instrument;
      upsert(store_, d, p);
      upsert(store_, w, p);
      default_birth = *expulsion;
    }

    // newborn block, only when the row has newborn data
    bool any = false;
    for (const char* f : {"apgar", "weight", "ph"}) any |= ctx.cell(f).present();
    if (!any) return;
    auto birth = ctx.timestamp("birth_time");
    if (!birth) birth = default_birth;
    if (!birth) ctx.missing("birth_time");
    auto apgar_text = ctx.text("apgar", true);
    auto weight = ctx.integer("weight", true);
    auto ph = ctx.decimal("ph");
    std::optional<Apgar> apgar;
    if (apgar_text) {
      try {
        apgar = parse_apgar(*apgar_text);
      } catch (const CellError& e) {
        ctx.errors.push_back(std::string("apgar: ") + e.what());
      }
    }
    if (!birth || !apgar || !weight) return;
    Newborn n;
    n.pregnancy_id = pr->id;
    n.birth_time = *birth;
    n.weight_g = static_cast<int>(*weight);
    n.apgar_1 = apgar->apgar_1;
    n.apgar_5 = apgar->apgar_5;
    n.apgar_10 = apgar->apgar_10;
    n.ph = ph;
    if (const Newborn* have = store_.find<Newborn>(n.key())) n.length_cm = have->length_cm;
    upsert(store_, n, p);
  }

  void ehr_conditions(RowCtx& ctx, IdAlloc& ids, Pending& p) {
    auto pr = resolve_pregnancy(ctx, store_, ids, p, false, std::nullopt);

    std::map<std::string, std::optional<bool>> flags;
    std::set<std::string> refs;
    for (const char* f : {"pih", "art", "gdm", "thyropathy"}) {
      if (!ctx.has(f)) continue;
      size_t before = ctx.provenance.size();
      flags[f] = ctx.boolean(f);
      if (ctx.provenance.size() > before) refs.insert(ctx.provenance.back().note);
    }
    if (refs.size() > 1) {
      std::vector<std::string> v(refs.begin(), refs.end());
      ctx.conflict("pregnancy_ref", v, "presence integers name different pregnancies: " + join(v, ", "));
    }

    std::optional<std::string> outcome;
    if (ctx.has("outcome")) {
      if (auto t = ctx.text("outcome")) {
        if (parse_int(*t)) outcome = "code:" + *t;
        else ctx.errors.push_back("outcome: '" + *t + "' is not an integer code");
      }
    }
    std::optional<Date> visit;
    std::optional<int> ga;
    if (outcome) {
      visit = ctx.date("visit_date", true);
      ga = ctx.gestational_age("gestational_age", true);
    }
    if (!pr || !ctx.errors.empty()) return;

    if (auto it = flags.find("art"); it != flags.end() && it->second) {
      Pregnancy updated = *pr;
      updated.art_used = *it->second;
      upsert(store_, updated, p);
    }
    static const std::vector<std::pair<const char*, const char*>> kConditions{
        {"pih", "pregnancy-induced hypertension"}, {"gdm", "gestational diabetes"}, {"thyropathy", "thyropathy"}};
    std::map<std::string, int64_t> staged;
    for (const auto& [field, name] : kConditions) {
      auto it = flags.find(field);
      if (it == flags.end() || !it->second.value_or(false)) continue;
      int64_t cid = find_or_add_condition(store_, name, ids, p, staged);
      if (!store_.find<PregnancyCondition>({pr->id, cid})) upsert(store_, PregnancyCondition{pr->id, cid, std::nullopt}, p);
    }

    if (outcome && visit && ga) {
      Examination ex;
      ex.id = -1;
      for (const auto& [id, e] : store_.table<Examination>()) {
        auto src = e.details.find("source");
        if (e.pregnancy_id == pr->id && e.kind == ExaminationKind::other && e.exam_date == *visit &&
            src != e.details.end() && src->second == "ehr") {
          ex = e;
        }
      }
      if (ex.id < 0) ex.id = ids.next(Examination::kRelation);
      ex.pregnancy_id = pr->id;
      ex.kind = ExaminationKind::other;
      ex.exam_date = *visit;
      ex.gestational_age_days = *ga;
      ex.details["source"] = "ehr";
      ex.details["outcome"] = *outcome;
      if (refs.size() == 1) ex.details["ehr_pregnancy_ref"] = *refs.begin();
      upsert(store_, ex, p);
    }
  }

  void ehr_newborn(RowCtx& ctx, IdAlloc& ids, Pending& p) {
    auto pr = resolve_pregnancy(ctx, store_, ids, p, false, std::nullopt);
    auto birth = ctx.timestamp("birth_time", true);

    size_t mcol = hm_.column_of.at("newborn_section");
    std::vector<std::string> section(ctx.cells.begin() + static_cast<long>(mcol), ctx.cells.end());
    std::vector<CellDomain> domains;
    for (size_t c = mcol + 1; c < hm_.field_of.size(); ++c) {
      std::optional<std::string> field = hm_.field_of[c];
      domains.push_back([this, field](std::string_view token) -> std::optional<std::string> {
        if (!field) return std::nullopt;
        NormalizedCell cell = normalize_cell(token, cfg_.policy(*field), cfg_.section_marker);
        if (cell.status == NormalizedCell::Status::conflict_marker) return *field + ": repeated section marker";
        if (!cell.present()) return std::nullopt;
        auto n = parse_int(cell.text);
        double lo = *field == "weight" ? 200 : 0, hi = *field == "weight" ? 7000 : 10;
        if (*field != "weight" && field->rfind("apgar", 0) != 0) return std::nullopt;
        if (!n || *n < lo || *n > hi) return *field + ": '" + cell.text + "' outside " + std::to_string(int(lo)) + ".." + std::to_string(int(hi));
        return std::nullopt;
      });
    }
    Realigned r = realign_ehr_row(section, cfg_.section_marker, domains);
    if (r.status == Realigned::Status::quarantined) {
      ctx.errors.push_back("newborn section: " + r.reason);
      return;
    }
    std::string prefix;
    if (r.status == Realigned::Status::realigned) {
      prefix = "after shifting left by " + std::to_string(r.offset) + " (dropped: " + join(r.spilled, ", ") + "): ";
      std::copy(r.cells.begin(), r.cells.end(), ctx.cells.begin() + static_cast<long>(mcol));
    }
    size_t before = ctx.errors.size();
    auto a1 = ctx.integer("apgar_1", true);
    auto a5 = ctx.integer("apgar_5", true);
    auto a10 = ctx.integer("apgar_10");
    auto weight = ctx.integer("weight", true);
    if (ctx.errors.size() > before) {
      for (size_t i = before; i < ctx.errors.size(); ++i) ctx.errors[i] = prefix + ctx.errors[i];
      return;
    }
    if (r.status == Realigned::Status::realigned) {
      ctx.repairs.push_back("newborn section shifted left by " + std::to_string(r.offset) +
                            "; dropped cells before the marker: " + join(r.spilled, ", "));
    }
    if (!pr || !birth) return;
    Newborn n;
    if (const Newborn* have = store_.find<Newborn>({pr->id, *birth})) n = *have;
    n.pregnancy_id = pr->id;
    n.birth_time = *birth;
    n.apgar_1 = static_cast<int>(*a1);
    n.apgar_5 = static_cast<int>(*a5);
    n.apgar_10 = a10 ? std::optional<int>(static_cast<int>(*a10)) : std::nullopt;
    n.weight_g = static_cast<int>(*weight);
    upsert(store_, n, p);
  }

  const CsvTable& table_;
  const SourceConfig& cfg_;
  CanonicalStore store_;
  IngestionReport& report_;
  HeaderMap hm_;
  Layout layout_ = Layout::first_trimester;
};

struct FetalColumn {
  size_t column;
  std::string label;
  int64_t pregnancy_id;
  Timestamp birth_time;
};

}  // namespace

CtgBatch ingest_ctg(const CsvTable& table, const SourceConfig& cfg, const CanonicalStore& store) {
  CtgBatch out;
  IngestionReport& rep = out.report;
  rep.kind = SourceKind::ctg_export;
  rep.layout = "ctg";
  rep.header = table.header;

  HeaderMap hm = map_header(table.header, cfg);
  std::vector<FetalColumn> fetal;
  std::vector<std::string> ignored;
  for (size_t c = 0; c < table.header.size(); ++c) {
    const std::string& label = table.header[c];
    if (hm.field_of[c]) continue;
    auto xw = cfg.id_crosswalk.find(label);
    if (xw == cfg.id_crosswalk.end()) {
      for (auto it = cfg.id_crosswalk.begin(); it != cfg.id_crosswalk.end(); ++it) {
        if (normalize_header(it->first) == normalize_header(label)) xw = it;
      }
    }
    if (xw == cfg.id_crosswalk.end()) {
      if (normalize_header(label).rfind("fhr", 0) == 0) {
        rep.quarantined_columns.push_back({label, "no crosswalk entry for fetal channel '" + label + "'"});
      } else {
        ignored.push_back(label);
      }
      continue;
    }
    auto preg = find_pregnancy(store, xw->second);
    const Newborn* nb = preg && xw->second.birth_time ? store.find<Newborn>({*preg, *xw->second.birth_time}) : nullptr;
    if (!nb) {
      rep.quarantined_columns.push_back({label, "crosswalk entry for '" + label + "' names no stored newborn"});
      continue;
    }
    fetal.push_back({c, label, *preg, nb->birth_time});
  }
  rep.ignored_columns = ignored;

  std::string fatal;
  std::optional<int64_t> preg = cfg.tracing ? find_pregnancy(store, *cfg.tracing) : std::nullopt;
  if (!cfg.tracing) fatal = "config names no tracing";
  else if (!preg || !store.find<Delivery>(*preg)) fatal = "tracing pregnancy has no stored delivery";
  else if (!cfg.tracing_start) fatal = "config has no tracing_start";

  if (fatal.empty()) {
    // a fetal channel must belong to the tracing's own delivery
    std::vector<FetalColumn> kept;
    for (const auto& f : fetal) {
      if (f.pregnancy_id == *preg) kept.push_back(f);
      else rep.quarantined_columns.push_back({f.label, "newborn of '" + f.label + "' belongs to another delivery"});
    }
    fetal = std::move(kept);
  }

  Timestamp start = cfg.tracing_start.value_or(Timestamp{});
  if (fatal.empty()) {
    out.tracing_id = -1;
    for (const auto& [id, t] : store.table<Tracing>()) {
      if (t.pregnancy_id == *preg && t.start_time == start) out.tracing_id = id;
    }
    if (out.tracing_id < 0) {
      out.tracing_id = store.next_id(Tracing::kRelation);
      out.tx.insert(Tracing{out.tracing_id, *preg, start});
      ++rep.inserted;
    }
  }

  for (size_t i = 0; i < table.rows.size(); ++i) {
    size_t index = i + 1;
    std::vector<std::string> cells = table.rows[i];
    ++rep.rows;
    if (!fatal.empty()) {
      rep.quarantined.push_back({index, cells, fatal});
      continue;
    }
    if (cells.size() > table.header.size()) {
      rep.quarantined.push_back({index, cells, "more cells than the header"});
      continue;
    }
    cells.resize(table.header.size());
    RowCtx ctx{cfg, hm, index, cells, {}, {}, {}, {}};
    auto mhr = ctx.integer("mhr");
    auto toco = ctx.decimal("toco");
    if (mhr && (*mhr < 20 || *mhr > 250)) ctx.errors.push_back("mhr: " + std::to_string(*mhr) + " outside 20..250");
    if (toco && *toco < 0) ctx.errors.push_back("toco: negative value");
    std::vector<std::pair<const FetalColumn*, int>> fhr;
    const ColumnPolicy& fp = cfg.policy("fhr");
    for (const auto& f : fetal) {
      NormalizedCell c = normalize_cell(cells[f.column], fp, cfg.section_marker);
      if (!c.present()) continue;
      auto n = parse_int(c.text);
      if (!n || *n < 30 || *n > 300) {
        ctx.errors.push_back(f.label + ": '" + c.text + "' outside 30..300");
        continue;
      }
      fhr.push_back({&f, static_cast<int>(*n)});
    }
    if (!ctx.errors.empty()) {
      rep.quarantined.push_back({index, cells, join(ctx.errors, "; ")});
      continue;
    }
    ++rep.accepted;
    if (!mhr && !toco && fhr.empty()) {
      ++rep.empty_rows;  // nothing observed, nothing stored
      continue;
    }
    Measurement m;
    m.tracing_id = out.tracing_id;
    m.ts = Timestamp{start.ms + static_cast<int64_t>(i) * 250};
    if (mhr) m.maternal_heart_rate = static_cast<int>(*mhr);
    m.maternal_tocography = toco;
    Pending p;
    upsert(store, m, p);
    for (const auto& [f, v] : fhr) {
      upsert(store, NewbornMeasurement{out.tracing_id, m.ts, f->pregnancy_id, f->birth_time, v}, p);
    }
    if (p.tx.empty()) ++rep.unchanged_rows;
    for (auto& op : p.tx.ops) out.tx.ops.push_back(std::move(op));
    rep.inserted += p.inserts;
    rep.updated += p.updates;
  }
  return out;
}

IngestOutcome run_ingestion_text(std::string_view text, std::string_view source_name, const SourceConfig& config,
                                 const CanonicalStore& store) {
  CsvTable table;
  try {
    table = parse_csv(text);
  } catch (const std::exception& e) {
    throw IngestError(std::string(source_name) + ": " + e.what());
  }
  if (table.header.empty()) throw IngestError(std::string(source_name) + ": no header row");

  IngestOutcome out;
  if (config.kind == SourceKind::ctg_export) {
    CtgBatch batch = ingest_ctg(table, config, store);
    out.report = std::move(batch.report);
    out.store = store;
    if (!batch.tx.empty()) {
      CommitResult r = apply_transaction(store, batch.tx);
      if (r.ok()) {
        out.store = std::move(r.store);
      } else {
        // the export commits as a unit: a rejection quarantines every stored row
        std::vector<std::string> why;
        if (!r.error.empty()) why.push_back(r.error);
        for (size_t i = 0; i < r.violations.size() && i < 3; ++i) why.push_back(r.violations[i].message);
        std::string reason = "tracing rejected: " + join(why, "; ");
        std::set<size_t> held;
        for (const auto& q : out.report.quarantined) held.insert(q.row);
        for (size_t i = 0; i < table.rows.size(); ++i) {
          if (!held.count(i + 1)) out.report.quarantined.push_back({i + 1, table.rows[i], reason});
        }
        std::sort(out.report.quarantined.begin(), out.report.quarantined.end(),
                  [](const auto& a, const auto& b) { return a.row < b.row; });
        out.report.accepted = 0;
        out.report.empty_rows = 0;
        out.report.unchanged_rows = 0;
        out.report.inserted = 0;
        out.report.updated = 0;
      }
    }
  } else {
    IngestionReport report;
    report.kind = config.kind;
    report.header = table.header;
    SheetRun run(table, config, store, report);
    out.store = run.run();
    out.report = std::move(report);
  }
  out.report.source = std::string(source_name);
  return out;
}

IngestOutcome run_ingestion(const std::filesystem::path& file, const SourceConfig& config,
                            const CanonicalStore& store) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IngestError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_ingestion_text(buf.str(), file.filename().string(), config, store);
}

}  // namespace peripartum::ingest
