#include "peripartum/constraints.hpp"

#include <algorithm>
#include <map>

#include "peripartum/catalog.hpp"
#include "peripartum/record_json.hpp"
#include "peripartum/validation.hpp"

namespace peripartum {

using nlohmann::json;

std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::CR1_pregnancy_followup: return "CR1_pregnancy_followup";
    case RuleId::CR2_trimester_uniqueness: return "CR2_trimester_uniqueness";
    case RuleId::CR3_result_type_coherence: return "CR3_result_type_coherence";
    case RuleId::CR4_delivery_specialization: return "CR4_delivery_specialization";
    case RuleId::CR5_measurement_nonempty: return "CR5_measurement_nonempty";
  }
  return "";
}

std::optional<RuleId> parse_rule_id(std::string_view text) {
  for (RuleId r : kAllRules) {
    auto name = to_string(r);
    // "CR3" alone is accepted as well
    if (text == name || (text.size() == 3 && name.substr(0, 3) == text)) return r;
  }
  return std::nullopt;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::rule: return "rule";
    case ViolationKind::field: return "field";
    case ViolationKind::primary_key: return "primary_key";
    case ViolationKind::foreign_key: return "foreign_key";
    case ViolationKind::unique: return "unique";
    case ViolationKind::temporal: return "temporal";
  }
  return "";
}

std::string_view to_string(CommitResult::Status s) {
  switch (s) {
    case CommitResult::Status::committed: return "committed";
    case CommitResult::Status::rejected: return "rejected";
    case CommitResult::Status::malformed: return "malformed";
  }
  return "";
}

json to_json(const Violation& v) {
  json j{{"kind", to_string(v.kind)},
         {"relation", v.relation},
         {"subject", v.subject},
         {"message", v.message}};
  j["rule"] = v.rule ? json(to_string(*v.rule)) : json(nullptr);
  return j;
}

json to_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(to_json(v));
  return out;
}

json to_json(const Transaction& tx) {
  json ops = json::array();
  for (const auto& op : tx.ops) {
    json rec = record_to_json(op.record);
    const char* kind = op.kind == OpKind::insert ? "insert" : op.kind == OpKind::update ? "update" : "delete";
    ops.push_back({{"op", kind}, {"relation", rec["relation"]}, {"values", rec["values"]}});
  }
  return json{{"ops", ops}};
}

Transaction transaction_from_json(const json& j) {
  if (!j.is_object() || !j.contains("ops") || !j["ops"].is_array()) {
    throw TransactionFormatError("transaction needs an 'ops' array");
  }
  Transaction tx;
  size_t i = 0;
  for (const auto& op : j["ops"]) {
    std::string where = "ops[" + std::to_string(i++) + "]";
    if (!op.is_object() || !op.contains("op") || !op["op"].is_string() || !op.contains("relation") ||
        !op["relation"].is_string()) {
      throw TransactionFormatError(where + ": needs string 'op' and 'relation'");
    }
    std::string kind = op["op"].get<std::string>();
    std::string relation = op["relation"].get<std::string>();
    json values = op.value("values", json::object());
    try {
      if (kind == "insert" || kind == "update") {
        tx.ops.push_back({kind == "insert" ? OpKind::insert : OpKind::update,
                          record_from_json(json{{"relation", relation}, {"values", values}})});
      } else if (kind == "delete") {
        tx.ops.push_back({OpKind::erase, key_record_from_json(relation, values)});
      } else {
        throw TransactionFormatError(where + ": unknown op '" + kind + "'");
      }
    } catch (const RecordDecodeError& e) {
      throw TransactionFormatError(where + ": " + e.what());
    }
  }
  return tx;
}

std::optional<Violation> check_result_type(const std::vector<std::string>& test_type,
                                           std::string_view result) {
  if (test_type.empty()) throw std::invalid_argument("test type list is empty");
  auto fail = [&](std::string msg) {
    return Violation{ViolationKind::rule, RuleId::CR3_result_type_coherence,
                     std::string(ExaminationTest::kRelation), "", std::move(msg)};
  };
  if (test_type.size() == 1 && test_type[0] == "string") return std::nullopt;
  if (test_type.size() == 1 && test_type[0] == "numeric") {
    if (parse_double(result)) return std::nullopt;
    return fail("result '" + std::string(result) + "' is not a decimal number");
  }
  if (std::find(test_type.begin(), test_type.end(), result) != test_type.end()) return std::nullopt;
  return fail("result '" + std::string(result) + "' is not one of " + format_text_array(test_type));
}

namespace {

// ---- generic key plumbing -------------------------------------------------

template <class T>
bool part_ok(const Value& v) {
  if constexpr (std::is_same_v<T, int64_t>) return v.kind() == ValueKind::integer;
  else if constexpr (std::is_same_v<T, std::string>) return v.kind() == ValueKind::text;
  else return v.kind() == ValueKind::timestamp;
}

template <class T>
T part(const Value& v) {
  if constexpr (std::is_same_v<T, int64_t>) return v.as_int();
  else if constexpr (std::is_same_v<T, std::string>) return v.as_text();
  else return v.as_timestamp();
}

template <class K>
struct KeyCodec {
  static constexpr size_t arity = 1;
  static bool ok(const std::vector<Value>& v) { return v.size() == 1 && part_ok<K>(v[0]); }
  static K make(const std::vector<Value>& v) { return part<K>(v[0]); }
};

template <class... Ts>
struct KeyCodec<std::tuple<Ts...>> {
  static constexpr size_t arity = sizeof...(Ts);
  static bool ok(const std::vector<Value>& v) {
    return v.size() == arity && ok_impl(v, std::index_sequence_for<Ts...>{});
  }
  static std::tuple<Ts...> make(const std::vector<Value>& v) {
    return make_impl(v, std::index_sequence_for<Ts...>{});
  }

 private:
  template <size_t... I>
  static bool ok_impl(const std::vector<Value>& v, std::index_sequence<I...>) {
    return (part_ok<Ts>(v[I]) && ...);
  }
  template <size_t... I>
  static std::tuple<Ts...> make_impl(const std::vector<Value>& v, std::index_sequence<I...>) {
    return {part<Ts>(v[I])...};
  }
};

std::vector<Value> pick(const Row& row, const Relation& rel, const std::vector<std::string>& cols) {
  std::vector<Value> out;
  for (const auto& c : cols) out.push_back(row.at(rel.column_index(c)));
  return out;
}

std::string tuple_text(const std::vector<std::string>& cols, const std::vector<Value>& vals) {
  std::string a, b;
  for (size_t i = 0; i < cols.size(); ++i) {
    a += (i ? ", " : "") + cols[i];
    b += (i ? ", " : "") + vals[i].to_string();
  }
  return "(" + a + ")=(" + b + ")";
}

/// Whether a row of `target` matches `vals` on `ref_cols`. Looks up by primary
/// key when the referenced columns cover it.
template <class T>
bool target_exists(const CanonicalStore& store, const Relation& trel,
                   const std::vector<std::string>& ref_cols, const std::vector<Value>& vals) {
  std::vector<Value> pk_vals;
  for (const auto& pk : trel.primary_key) {
    auto it = std::find(ref_cols.begin(), ref_cols.end(), pk);
    if (it == ref_cols.end()) {
      pk_vals.clear();
      break;
    }
    pk_vals.push_back(vals[it - ref_cols.begin()]);
  }
  auto matches = [&](const T& rec) {
    Row row = to_row(rec);
    return pick(row, trel, ref_cols) == vals;
  };
  if (pk_vals.size() == trel.primary_key.size()) {
    if (!KeyCodec<typename T::Key>::ok(pk_vals)) return false;
    const T* hit = store.find<T>(KeyCodec<typename T::Key>::make(pk_vals));
    return hit && matches(*hit);
  }
  for (const auto& [k, rec] : store.table<T>()) {
    if (matches(rec)) return true;
  }
  return false;
}

template <class F>
void with_type(std::string_view relation, F&& f) {
  for_each_record_type([&]<class R>() {
    if (R::kRelation == relation) f.template operator()<R>();
  });
}

// ---- violation collection --------------------------------------------------

class Sink {
 public:
  void add(Violation v) {
    if (std::find(out_.begin(), out_.end(), v) == out_.end()) out_.push_back(std::move(v));
  }
  void add(ViolationKind kind, std::string_view rel, std::string subject, std::string msg,
           std::optional<RuleId> rule = std::nullopt) {
    add(Violation{kind, rule, std::string(rel), std::move(subject), std::move(msg)});
  }
  std::vector<Violation> take() { return std::move(out_); }
  bool empty() const { return out_.empty(); }

 private:
  std::vector<Violation> out_;
};

template <class R>
void check_fields(const R& rec, Sink& sink) {
  for (const auto& e : validate_fields(AnyRecord(rec))) {
    sink.add(ViolationKind::field, R::kRelation, describe_key<R>(rec.key()),
             describe_key<R>(rec.key()) + ": " + e.message);
  }
}

template <class R>
void check_outgoing(const CanonicalStore& store, const R& rec, Sink& sink) {
  const Catalog& cat = canonical_catalog();
  const Relation& rel = cat.at(R::kRelation);
  Row row = to_row(rec);
  for (const auto& fk : rel.foreign_keys) {
    auto vals = pick(row, rel, fk.columns);
    if (std::any_of(vals.begin(), vals.end(), [](const Value& v) { return v.is_null(); })) continue;
    const Relation& trel = cat.at(fk.ref_relation);
    bool found = false;
    with_type(fk.ref_relation, [&]<class T>() { found = target_exists<T>(store, trel, fk.ref_columns, vals); });
    if (!found) {
      sink.add(ViolationKind::foreign_key, R::kRelation, describe_key<R>(rec.key()),
               describe_key<R>(rec.key()) + ": " + tuple_text(fk.columns, vals) + " has no matching " +
                   fk.ref_relation + " row");
    }
  }
}

/// `gone` was deleted; any surviving row still pointing at it is a violation.
template <class T>
void check_incoming(const CanonicalStore& store, const T& gone, Sink& sink) {
  const Catalog& cat = canonical_catalog();
  const Relation& trel = cat.at(T::kRelation);
  Row trow = to_row(gone);
  for (const auto& srel : cat.relations) {
    for (const auto& fk : srel.foreign_keys) {
      if (fk.ref_relation != trel.name) continue;
      auto vals = pick(trow, trel, fk.ref_columns);
      with_type(srel.name, [&]<class S>() {
        for (const auto& [k, rec] : store.table<S>()) {
          if (pick(to_row(rec), srel, fk.columns) == vals) {
            sink.add(ViolationKind::foreign_key, T::kRelation, describe_key<T>(gone.key()),
                     describe_key<T>(gone.key()) + " is still referenced by " + describe_key<S>(k));
            break;
          }
        }
      });
    }
  }
}

std::string fold_case(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<Value> unique_values(const Relation& rel, const Row& row, const std::vector<std::string>& cols) {
  auto vals = pick(row, rel, cols);
  // condition names are unique regardless of case
  if (rel.name == Condition::kRelation) {
    for (auto& v : vals) {
      if (v.kind() == ValueKind::text) v = Value(fold_case(v.as_text()));
    }
  }
  return vals;
}

bool covers_primary_key(const Relation& rel, const std::vector<std::string>& cols) {
  return std::all_of(rel.primary_key.begin(), rel.primary_key.end(), [&](const std::string& pk) {
    return std::find(cols.begin(), cols.end(), pk) != cols.end();
  });
}

template <class R>
void check_unique(const CanonicalStore& store, const R& rec, Sink& sink) {
  const Relation& rel = canonical_catalog().at(R::kRelation);
  Row row = to_row(rec);
  for (const auto& cols : rel.unique_constraints) {
    if (covers_primary_key(rel, cols)) continue;
    auto mine = unique_values(rel, row, cols);
    for (const auto& [k, other] : store.table<R>()) {
      if (k == rec.key()) continue;
      if (unique_values(rel, to_row(other), cols) == mine) {
        sink.add(ViolationKind::unique, R::kRelation, describe_key<R>(rec.key()),
                 describe_key<R>(rec.key()) + ": " + tuple_text(cols, pick(row, rel, cols)) +
                     " already used by " + describe_key<R>(k));
        break;
      }
    }
  }
}

template <class R>
void check_unique_all(const CanonicalStore& store, Sink& sink) {
  const Relation& rel = canonical_catalog().at(R::kRelation);
  for (const auto& cols : rel.unique_constraints) {
    if (covers_primary_key(rel, cols)) continue;
    std::map<std::vector<std::string>, typename R::Key> seen;
    for (const auto& [k, rec] : store.table<R>()) {
      Row row = to_row(rec);
      std::vector<std::string> sig;
      for (const auto& v : unique_values(rel, row, cols)) sig.push_back(v.to_string());
      auto [it, fresh] = seen.emplace(sig, k);
      if (!fresh) {
        sink.add(ViolationKind::unique, R::kRelation, describe_key<R>(k),
                 describe_key<R>(k) + ": " + tuple_text(cols, pick(row, rel, cols)) +
                     " already used by " + describe_key<R>(it->second));
      }
    }
  }
}

// ---- ordering invariants across records -----------------------------------

void temporal_patient_pregnancy(const Patient& pt, const Pregnancy& pr, Sink& sink) {
  if (!(pt.birth_date < pr.first_exam_date)) {
    sink.add(ViolationKind::temporal, Pregnancy::kRelation, describe_key<Pregnancy>(pr.id),
             describe_key<Pregnancy>(pr.id) + ": first_exam_date " + format_date(pr.first_exam_date) +
                 " not after patient birth_date " + format_date(pt.birth_date));
  }
}

void temporal_pregnancy_exam(const Pregnancy& pr, const Examination& ex, Sink& sink) {
  if (ex.exam_date < pr.first_exam_date) {
    sink.add(ViolationKind::temporal, Examination::kRelation, describe_key<Examination>(ex.id),
             describe_key<Examination>(ex.id) + ": exam_date " + format_date(ex.exam_date) +
                 " precedes first_exam_date " + format_date(pr.first_exam_date));
  }
}

void temporal_labor_induction(const DeliveryWithLabor& dwl, const Induction& in, Sink& sink) {
  if (in.administration_time > dwl.expulsion_time) {
    sink.add(ViolationKind::temporal, Induction::kRelation, describe_key<Induction>(in.key()),
             describe_key<Induction>(in.key()) + ": administration_time " +
                 format_timestamp(in.administration_time) + " after expulsion_time " +
                 format_timestamp(dwl.expulsion_time));
  }
}

void check_temporal(const CanonicalStore& s, const Patient& pt, Sink& sink) {
  for (const auto& [id, pr] : s.table<Pregnancy>()) {
    if (pr.patient_tc == pt.tc) temporal_patient_pregnancy(pt, pr, sink);
  }
}

void check_temporal(const CanonicalStore& s, const Pregnancy& pr, Sink& sink) {
  if (const Patient* pt = s.find<Patient>(pr.patient_tc)) temporal_patient_pregnancy(*pt, pr, sink);
  for (const auto& [id, ex] : s.table<Examination>()) {
    if (ex.pregnancy_id == pr.id) temporal_pregnancy_exam(pr, ex, sink);
  }
}

void check_temporal(const CanonicalStore& s, const Examination& ex, Sink& sink) {
  if (const Pregnancy* pr = s.find<Pregnancy>(ex.pregnancy_id)) temporal_pregnancy_exam(*pr, ex, sink);
}

void check_temporal(const CanonicalStore& s, const DeliveryWithLabor& dwl, Sink& sink) {
  const auto& t = s.table<Induction>();
  for (auto it = t.lower_bound({dwl.pregnancy_id, Timestamp{INT64_MIN}});
       it != t.end() && std::get<0>(it->first) == dwl.pregnancy_id; ++it) {
    temporal_labor_induction(dwl, it->second, sink);
  }
}

void check_temporal(const CanonicalStore& s, const Induction& in, Sink& sink) {
  if (const auto* dwl = s.find<DeliveryWithLabor>(in.pregnancy_id)) temporal_labor_induction(*dwl, in, sink);
}

template <class R>
void check_temporal(const CanonicalStore&, const R&, Sink&) {}

// ---- rule scope derived from a touched record -----------------------------

void widen(const CanonicalStore& s, const Pregnancy& r, CheckScope& sc) { sc.pregnancies.insert(r.id); (void)s; }
void widen(const CanonicalStore&, const Examination& r, CheckScope& sc) { sc.pregnancies.insert(r.pregnancy_id); }
void widen(const CanonicalStore&, const Delivery& r, CheckScope& sc) { sc.pregnancies.insert(r.pregnancy_id); }
void widen(const CanonicalStore&, const ProgrammedCSection& r, CheckScope& sc) {
  sc.pregnancies.insert(r.pregnancy_id);
}
void widen(const CanonicalStore&, const DeliveryWithLabor& r, CheckScope& sc) {
  sc.pregnancies.insert(r.pregnancy_id);
}
void widen(const CanonicalStore&, const ExaminationTest& r, CheckScope& sc) { sc.exam_tests.insert(r.key()); }
void widen(const CanonicalStore& s, const Test& r, CheckScope& sc) {
  for (const auto& [k, et] : s.table<ExaminationTest>()) {
    if (et.test_id == r.id) sc.exam_tests.insert(k);
  }
}
void widen(const CanonicalStore&, const Measurement& r, CheckScope& sc) { sc.measurements.insert(r.key()); }
void widen(const CanonicalStore&, const NewbornMeasurement& r, CheckScope& sc) {
  sc.measurements.insert({r.tracing_id, r.ts});
}
template <class R>
void widen(const CanonicalStore&, const R&, CheckScope&) {}

// ---- the five rules --------------------------------------------------------

template <class Set, class F>
void over(bool all, const Set& scoped, const F& f, const auto& table) {
  if (all) {
    for (const auto& [k, v] : table) f(k);
  } else {
    for (const auto& k : scoped) f(k);
  }
}

void cr1(const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  std::set<int64_t> examined;
  for (const auto& [id, ex] : s.table<Examination>()) examined.insert(ex.pregnancy_id);
  over(sc.all, sc.pregnancies, [&](int64_t p) {
    if (!s.find<Pregnancy>(p)) return;
    if (examined.count(p) || s.find<Delivery>(p)) return;
    sink.add(ViolationKind::rule, Pregnancy::kRelation, describe_key<Pregnancy>(p),
             describe_key<Pregnancy>(p) + " has no examination and no delivery",
             RuleId::CR1_pregnancy_followup);
  }, s.table<Pregnancy>());
}

void cr2(const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  std::map<int64_t, std::pair<int, int>> counts;
  for (const auto& [id, ex] : s.table<Examination>()) {
    if (!sc.all && !sc.pregnancies.count(ex.pregnancy_id)) continue;
    if (ex.kind == ExaminationKind::first_trimester) ++counts[ex.pregnancy_id].first;
    if (ex.kind == ExaminationKind::second_trimester) ++counts[ex.pregnancy_id].second;
  }
  over(sc.all, sc.pregnancies, [&](int64_t p) {
    if (!s.find<Pregnancy>(p)) return;
    auto [first, second] = counts[p];
    auto report = [&](int n, const char* kind) {
      sink.add(ViolationKind::rule, Pregnancy::kRelation, describe_key<Pregnancy>(p),
               describe_key<Pregnancy>(p) + " has " + std::to_string(n) + " " + kind +
                   " examinations; at most one allowed",
               RuleId::CR2_trimester_uniqueness);
    };
    if (first > 1) report(first, "first_trimester");
    if (second > 1) report(second, "second_trimester");
  }, s.table<Pregnancy>());
}

void cr3(const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  over(sc.all, sc.exam_tests, [&](const ExaminationTest::Key& k) {
    const ExaminationTest* et = s.find<ExaminationTest>(k);
    if (!et) return;
    const Test* t = s.find<Test>(et->test_id);
    if (!t || t->type.empty()) return;  // reference and field checks report these
    if (auto v = check_result_type(t->type, et->result)) {
      sink.add(ViolationKind::rule, ExaminationTest::kRelation, describe_key<ExaminationTest>(k),
               describe_key<ExaminationTest>(k) + " for test '" + t->name + "': " + v->message,
               RuleId::CR3_result_type_coherence);
    }
  }, s.table<ExaminationTest>());
}

void cr4(const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  over(sc.all, sc.pregnancies, [&](int64_t p) {
    const Delivery* d = s.find<Delivery>(p);
    if (!d) return;
    const auto* pcs = s.find<ProgrammedCSection>(p);
    const auto* dwl = s.find<DeliveryWithLabor>(p);
    auto report = [&](std::string msg) {
      sink.add(ViolationKind::rule, Delivery::kRelation, describe_key<Delivery>(p),
               describe_key<Delivery>(p) + " " + msg, RuleId::CR4_delivery_specialization);
    };
    if (pcs && dwl) {
      report("has both a programmed_c_section and a delivery_with_labor row");
    } else if (!pcs && !dwl) {
      report("has neither a programmed_c_section nor a delivery_with_labor row");
    } else if (pcs && d->delivery_type != DeliveryType::programmed_c_section) {
      report("has a programmed_c_section row but delivery_type '" +
             std::string(enum_name(d->delivery_type)) + "'");
    } else if (dwl && d->delivery_type != delivery_type_for(dwl->delivery_subtype)) {
      report("has delivery_type '" + std::string(enum_name(d->delivery_type)) +
             "' but delivery_with_labor subtype '" + std::string(enum_name(dwl->delivery_subtype)) + "'");
    }
  }, s.table<Delivery>());
}

void cr5(const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  const auto& nm = s.table<NewbornMeasurement>();
  over(sc.all, sc.measurements, [&](const Measurement::Key& k) {
    const Measurement* m = s.find<Measurement>(k);
    if (!m) return;
    if (m->maternal_heart_rate || m->maternal_tocography) return;
    auto it = nm.lower_bound({m->tracing_id, m->ts, INT64_MIN, Timestamp{INT64_MIN}});
    if (it != nm.end() && std::get<0>(it->first) == m->tracing_id && std::get<1>(it->first) == m->ts) return;
    sink.add(ViolationKind::rule, Measurement::kRelation, describe_key<Measurement>(k),
             describe_key<Measurement>(k) + " has no maternal value and no newborn measurement",
             RuleId::CR5_measurement_nonempty);
  }, s.table<Measurement>());
}

void run_rule(RuleId rule, const CanonicalStore& s, const CheckScope& sc, Sink& sink) {
  switch (rule) {
    case RuleId::CR1_pregnancy_followup: return cr1(s, sc, sink);
    case RuleId::CR2_trimester_uniqueness: return cr2(s, sc, sink);
    case RuleId::CR3_result_type_coherence: return cr3(s, sc, sink);
    case RuleId::CR4_delivery_specialization: return cr4(s, sc, sink);
    case RuleId::CR5_measurement_nonempty: return cr5(s, sc, sink);
  }
  throw std::invalid_argument("unknown rule id");
}

}  // namespace

std::vector<Violation> check_rule(RuleId rule, const CanonicalStore& store, const CheckScope& scope) {
  Sink sink;
  run_rule(rule, store, scope, sink);
  return sink.take();
}

CanonicalStore force_apply(const CanonicalStore& store, const Transaction& tx) {
  CanonicalStore out = store;
  for (const auto& op : tx.ops) {
    if (op.kind == OpKind::erase) {
      out.erase(op.record);
    } else {
      out.put(op.record);
    }
  }
  return out;
}

CommitResult apply_transaction(const CanonicalStore& store, const Transaction& tx) {
  CommitResult result;
  result.store = store;
  if (tx.empty()) return result;

  CanonicalStore post = store;
  Sink sink;
  for (size_t i = 0; i < tx.ops.size(); ++i) {
    const auto& op = tx.ops[i];
    bool present = post.find_any(op.record).has_value();
    switch (op.kind) {
      case OpKind::insert:
        if (present) {
          std::string subject = describe_key(op.record);
          sink.add(ViolationKind::primary_key, relation_of(op.record), subject, subject + " already exists");
        } else {
          post.put(op.record);
        }
        break;
      case OpKind::update:
      case OpKind::erase:
        if (!present) {
          result.status = CommitResult::Status::malformed;
          result.error = "op " + std::to_string(i) + ": " +
                         (op.kind == OpKind::update ? "update" : "delete") + " of nonexistent " +
                         describe_key(op.record);
          return result;
        }
        if (op.kind == OpKind::update) {
          post.put(op.record);
        } else {
          post.erase(op.record);
        }
        break;
    }
  }

  CheckScope scope;
  for (const auto& op : tx.ops) {
    std::visit(
        [&](const auto& probe) {
          using R = std::decay_t<decltype(probe)>;
          if (const R* before = store.find<R>(probe.key())) widen(store, *before, scope);
          if (const R* after = post.find<R>(probe.key())) {
            check_fields(*after, sink);
            check_outgoing(post, *after, sink);
            check_unique(post, *after, sink);
            check_temporal(post, *after, sink);
            widen(post, *after, scope);
          } else if (const R* before = store.find<R>(probe.key())) {
            check_incoming(post, *before, sink);
          }
        },
        op.record);
  }
  for (RuleId r : kAllRules) run_rule(r, post, scope, sink);

  result.violations = sink.take();
  if (result.violations.empty()) {
    result.store = std::move(post);
  } else {
    result.status = CommitResult::Status::rejected;
  }
  return result;
}

std::vector<Violation> full_scan(const CanonicalStore& store) {
  Sink sink;
  for_each_record_type([&]<class R>() {
    for (const auto& [k, rec] : store.table<R>()) {
      check_fields(rec, sink);
      check_outgoing(store, rec, sink);
    }
    check_unique_all<R>(store, sink);
  });
  for (const auto& [id, pr] : store.table<Pregnancy>()) {
    if (const Patient* pt = store.find<Patient>(pr.patient_tc)) temporal_patient_pregnancy(*pt, pr, sink);
  }
  for (const auto& [id, ex] : store.table<Examination>()) check_temporal(store, ex, sink);
  for (const auto& [k, in] : store.table<Induction>()) check_temporal(store, in, sink);
  CheckScope all = CheckScope::everything();
  for (RuleId r : kAllRules) run_rule(r, store, all, sink);
  return sink.take();
}

}  // namespace peripartum
