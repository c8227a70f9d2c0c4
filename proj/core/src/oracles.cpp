// Reference answers for the stored queries, computed by walking the typed
// record tables directly. Nothing here goes through the SQL parser or
// evaluator, so a disagreement points at one of the two.

#include <algorithm>
#include <chrono>
#include <set>

#include "peripartum/stored_queries.hpp"

namespace peripartum {

namespace {

using sql::ResultTable;

int year_of_date(Date d) {
  using namespace std::chrono;
  return static_cast<int>(year_month_day{sys_days{days{d.days}}}.year());
}

// ROUND(c * 100.0 / t, 2) with half-up ties, in exact integer arithmetic.
Value percent(int64_t c, int64_t t) {
  if (t == 0) return Value();
  int64_t hundredths = (2 * c * 10000 + t) / (2 * t);
  return Value(Decimal{hundredths, 2});
}

bool mentions_ctg(const std::optional<std::string>& s) {
  if (!s) return false;
  std::string low;
  for (char c : *s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return low.find("ctg") != std::string::npos;
}

int64_t param_int(const sql::Params& p, const std::string& name) { return p.at(name).as_int(); }

ResultTable c_sections_in_year(const CanonicalStore& s, const sql::Params& p) {
  int64_t year = param_int(p, "year");
  int64_t n = 0;
  for (const auto& [k, pcs] : s.table<ProgrammedCSection>()) {
    const Delivery* d = s.find<Delivery>(pcs.pregnancy_id);
    if (d && year_of_date(d->delivery_date) == year) ++n;
  }
  for (const auto& [k, dwl] : s.table<DeliveryWithLabor>()) {
    const Delivery* d = s.find<Delivery>(dwl.pregnancy_id);
    if (d && year_of_date(d->delivery_date) == year && d->delivery_type == DeliveryType::emergency_c_section) ++n;
  }
  return {{"total_c_sections"}, {{Value(n)}}, false};
}

ResultTable ph_below(const CanonicalStore& s, const sql::Params& p) {
  double threshold = p.at("threshold").to_double();
  ResultTable t{{"name", "delivery_date"}, {}, false};
  for (const auto& [k, n] : s.table<Newborn>()) {
    if (!n.ph || !(*n.ph < threshold)) continue;
    const Delivery* d = s.find<Delivery>(n.pregnancy_id);
    if (!d) continue;
    const Pregnancy* pr = s.find<Pregnancy>(d->pregnancy_id);
    if (!pr) continue;
    const Patient* pt = s.find<Patient>(pr->patient_tc);
    if (!pt) continue;
    t.rows.push_back({Value(pt->name), Value(d->delivery_date)});
  }
  return t;
}

ResultTable c_section_motivations(const CanonicalStore& s, const sql::Params&) {
  std::set<std::optional<std::string>> seen;
  for (const auto& [k, pcs] : s.table<ProgrammedCSection>()) seen.insert(pcs.motivation);
  for (const auto& [k, dwl] : s.table<DeliveryWithLabor>()) {
    if (dwl.delivery_subtype == LaborSubtype::emergency_c_section) seen.insert(dwl.motivation);
  }
  ResultTable t{{"motivation"}, {}, false};
  for (const auto& m : seen) t.rows.push_back({m ? Value(*m) : Value()});
  return t;
}

ResultTable laceration_stats(const CanonicalStore& s, const sql::Params&) {
  std::map<Laceration, int64_t> tally;
  int64_t total = 0;
  for (const auto& [k, dwl] : s.table<DeliveryWithLabor>()) {
    ++tally[dwl.laceration];
    ++total;
  }
  std::vector<std::pair<Laceration, int64_t>> rows(tally.begin(), tally.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ResultTable t{{"laceration", "count", "round"}, {}, false};
  for (const auto& [lac, n] : rows) {
    t.rows.push_back({Value(std::string(enum_name(lac))), Value(n), percent(n, total)});
  }
  return t;
}

ResultTable induced_deliveries(const CanonicalStore& s, const sql::Params&) {
  int64_t total = 0, induced = 0;
  for (const auto& [k, d] : s.table<Delivery>()) {
    ++total;
    for (const auto& [ik, i] : s.table<Induction>()) {
      if (i.pregnancy_id == d.pregnancy_id) {
        ++induced;
        break;
      }
    }
  }
  return {{"induced_deliveries_count", "induced_deliveries_percentage"}, {{Value(induced), percent(induced, total)}}, false};
}

ResultTable avg_induction_interval(const CanonicalStore& s, const sql::Params&) {
  double seconds = 0;
  int64_t n = 0;
  for (const auto& [ik, i] : s.table<Induction>()) {
    for (const auto& [k, dwl] : s.table<DeliveryWithLabor>()) {
      if (dwl.pregnancy_id != i.pregnancy_id) continue;
      seconds += static_cast<double>(dwl.expulsion_time.ms - i.administration_time.ms) / 1000.0;
      ++n;
    }
  }
  Value hours = n == 0 ? Value() : Value(seconds / static_cast<double>(n) / 3600);
  return {{"average_interval_hours"}, {{hours}}, false};
}

ResultTable inductions_per_patient(const CanonicalStore& s, const sql::Params& p) {
  int64_t year = param_int(p, "year");
  ResultTable t{{"patient_tc", "patient_name", "patient_surname", "number_of_inductions"}, {}, false};
  for (const auto& [tc, pt] : s.table<Patient>()) {  // key order is tc order
    int64_t n = 0;
    for (const auto& [dk, d] : s.table<Delivery>()) {
      const Pregnancy* pr = s.find<Pregnancy>(d.pregnancy_id);
      if (!pr || pr->patient_tc != tc || year_of_date(d.delivery_date) != year) continue;
      for (const auto& [ik, i] : s.table<Induction>()) {
        if (i.pregnancy_id == d.pregnancy_id) ++n;
      }
    }
    if (n > 0) t.rows.push_back({Value(pt.tc), Value(pt.name), Value(pt.surname), Value(n)});
  }
  return t;
}

ResultTable ctg_motivation_patients(const CanonicalStore& s, const sql::Params&) {
  ResultTable t;
  for (const auto& c : canonical_catalog().at("patient").columns) t.columns.push_back(c.name);
  for (const auto& c : canonical_catalog().at("pregnancy").columns) t.columns.push_back(c.name);
  for (const auto& [tc, pt] : s.table<Patient>()) {
    for (const auto& [id, pr] : s.table<Pregnancy>()) {
      if (pr.patient_tc != tc) continue;
      const Delivery* d = s.find<Delivery>(pr.id);
      if (!d) continue;
      const ProgrammedCSection* pcs = s.find<ProgrammedCSection>(d->pregnancy_id);
      const DeliveryWithLabor* dwl = s.find<DeliveryWithLabor>(d->pregnancy_id);
      bool hit = (pcs && mentions_ctg(pcs->motivation)) || (dwl && mentions_ctg(dwl->motivation));
      if (!hit) continue;
      Row row = to_row(pt);
      Row more = to_row(pr);
      row.insert(row.end(), more.begin(), more.end());
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

}  // namespace

ResultTable oracle_eval(std::string_view name, const sql::Params& params, const CanonicalStore& store) {
  const StoredQuery& q = stored_query(name);
  sql::Params p = check_params(q, params);
  if (name == "c_sections_in_year") return c_sections_in_year(store, p);
  if (name == "ph_below") return ph_below(store, p);
  if (name == "c_section_motivations") return c_section_motivations(store, p);
  if (name == "laceration_stats") return laceration_stats(store, p);
  if (name == "induced_deliveries") return induced_deliveries(store, p);
  if (name == "avg_induction_interval") return avg_induction_interval(store, p);
  if (name == "inductions_per_patient") return inductions_per_patient(store, p);
  if (name == "ctg_motivation_patients") return ctg_motivation_patients(store, p);
  throw StoredQueryError(StoredQueryError::Kind::unknown_name, "no oracle for '" + std::string(name) + "'");
}

}  // namespace peripartum
