#include "peripartum/stored_queries.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "peripartum/sql_parser.hpp"

namespace peripartum {

std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::integer: return "integer";
    case ParamType::numeric: return "numeric";
    case ParamType::text: return "text";
  }
  return "";
}

namespace {

std::vector<StoredQuery> build_library() {
  std::vector<StoredQuery> lib;
  lib.push_back({"c_sections_in_year",
                 "Count the number of C-sections, both programmed and with labor, performed in a given year.",
                 {{"year", ParamType::integer}},
                 "SELECT COUNT(*) AS total_c_sections\n"
                 "FROM (SELECT 1\n"
                 "      FROM programmed_c_section AS pcs\n"
                 "      WHERE EXISTS (SELECT 1\n"
                 "                    FROM delivery AS d\n"
                 "                    WHERE pcs.pregnancy_id = d.pregnancy_id\n"
                 "                        AND EXTRACT(YEAR FROM d.delivery_date) = :year)\n"
                 "    UNION ALL\n"
                 "      SELECT 1\n"
                 "      FROM delivery_with_labor AS dwl\n"
                 "      WHERE EXISTS (SELECT 1\n"
                 "                    FROM delivery AS d\n"
                 "                    WHERE dwl.pregnancy_id = d.pregnancy_id\n"
                 "                        AND EXTRACT(YEAR FROM d.delivery_date) = :year\n"
                 "                        AND d.delivery_type = 'emergency_c_section')\n"
                 "    ) AS c_sections",
                 {}});
  // joined through pregnancy: delivery carries a pregnancy id, not a tax code
  lib.push_back({"ph_below",
                 "List patient names and delivery dates for deliveries whose newborn pH is below a threshold.",
                 {{"threshold", ParamType::numeric}},
                 "SELECT p.name, d.delivery_date\n"
                 "FROM delivery d\n"
                 "    JOIN newborn n ON d.pregnancy_id = n.pregnancy_id\n"
                 "    JOIN pregnancy pr ON d.pregnancy_id = pr.id\n"
                 "    JOIN patient p ON pr.patient_tc = p.tc\n"
                 "WHERE n.ph < :threshold",
                 {}});
  lib.push_back({"c_section_motivations",
                 "Retrieve all motivations for C-sections, both programmed and with labor.",
                 {},
                 "    SELECT motivation\n"
                 "    FROM programmed_c_section\n"
                 "UNION\n"
                 "    SELECT motivation\n"
                 "    FROM delivery_with_labor\n"
                 "    WHERE delivery_subtype = 'emergency_c_section'",
                 {}});
  lib.push_back({"laceration_stats",
                 "Count lacerations by degree and their percentage over deliveries with labor.",
                 {},
                 "SELECT laceration,\n"
                 "       COUNT(*),\n"
                 "       ROUND((COUNT(*) * 100.0 / (SELECT COUNT(*)\n"
                 "                                  FROM delivery_with_labor)), 2)\n"
                 "FROM delivery_with_labor\n"
                 "GROUP BY laceration\n"
                 "ORDER BY count DESC",
                 {{1, true}}});
  // driven from delivery so the denominator counts every delivery
  lib.push_back({"induced_deliveries",
                 "Count deliveries that had inductions and their percentage over all deliveries.",
                 {},
                 "SELECT COUNT(DISTINCT i.pregnancy_id) AS induced_deliveries_count,\n"
                 "       ROUND((COUNT(DISTINCT i.pregnancy_id) * 100.0\n"
                 "              / COUNT(DISTINCT d.pregnancy_id)), 2)\n"
                 "              AS induced_deliveries_percentage\n"
                 "FROM delivery d\n"
                 "        LEFT JOIN induction i ON i.pregnancy_id = d.pregnancy_id",
                 {}});
  lib.push_back({"avg_induction_interval",
                 "Average interval in hours between induction administration and expulsion.",
                 {},
                 "SELECT AVG(EXTRACT(\n"
                 "           EPOCH FROM (d.expulsion_time - i.administration_time)))\n"
                 "           / 3600 AS average_interval_hours\n"
                 "FROM induction i\n"
                 "        JOIN delivery_with_labor d ON i.pregnancy_id = d.pregnancy_id",
                 {}});
  lib.push_back({"inductions_per_patient",
                 "Number of inductions undergone by each patient who delivered in a given year.",
                 {{"year", ParamType::integer}},
                 "SELECT p.tc AS patient_tc,\n"
                 "       p.name AS patient_name,\n"
                 "       p.surname AS patient_surname,\n"
                 "       COUNT(i.pregnancy_id) AS number_of_inductions\n"
                 "FROM patient p\n"
                 "        JOIN delivery d ON p.tc = (SELECT patient_tc\n"
                 "                                   FROM pregnancy\n"
                 "                                   WHERE id = d.pregnancy_id)\n"
                 "        JOIN induction i ON d.pregnancy_id = i.pregnancy_id\n"
                 "WHERE EXTRACT(YEAR FROM d.delivery_date) = :year\n"
                 "GROUP BY p.tc, p.name, p.surname\n"
                 "ORDER BY p.tc",
                 {{0, false}}});
  lib.push_back({"ctg_motivation_patients",
                 "Patient and pregnancy data for patients whose C-section or operative delivery motivation mentions CTG.",
                 {},
                 "SELECT p.*,\n"
                 "       pr.*\n"
                 "FROM patient p\n"
                 "    JOIN pregnancy pr ON p.tc = pr.patient_tc\n"
                 "    JOIN delivery d ON pr.id = d.pregnancy_id\n"
                 "    LEFT JOIN programmed_c_section pcs\n"
                 "                ON d.pregnancy_id = pcs.pregnancy_id\n"
                 "    LEFT JOIN delivery_with_labor dwl\n"
                 "                ON d.pregnancy_id = dwl.pregnancy_id\n"
                 "WHERE pcs.motivation ILIKE '%CTG%' OR dwl.motivation ILIKE '%CTG%'",
                 {}});
  return lib;
}

Value sample_value(ParamType t) {
  switch (t) {
    case ParamType::integer: return Value(int64_t{2024});
    case ParamType::numeric: return Value(7.1);
    case ParamType::text: return Value("x");
  }
  return Value();
}

void check_registration(const std::vector<StoredQuery>& lib) {
  for (const auto& q : lib) {
    sql::SqlAst ast = sql::parse_sql(q.sql);
    if (ast.statements.size() != 1) throw std::logic_error("stored query " + q.name + " is not one statement");
    sql::Params sample;
    for (const auto& p : q.params) sample[p.name] = sample_value(p.type);
    auto declared = sql::parameter_names(ast.statements[0]);
    if (declared.size() != q.params.size()) throw std::logic_error("stored query " + q.name + " parameter mismatch");
    sql::resolve_query(sql::bind_params(ast.statements[0], sample), canonical_catalog());
  }
}

}  // namespace

const std::vector<StoredQuery>& stored_queries() {
  static const std::vector<StoredQuery> lib = [] {
    auto l = build_library();
    check_registration(l);
    return l;
  }();
  return lib;
}

const StoredQuery& stored_query(std::string_view name) {
  for (const auto& q : stored_queries()) {
    if (q.name == name) return q;
  }
  throw StoredQueryError(StoredQueryError::Kind::unknown_name, "unknown stored query '" + std::string(name) + "'");
}

sql::Params check_params(const StoredQuery& q, const sql::Params& params) {
  using K = StoredQueryError::Kind;
  for (const auto& [name, v] : params) {
    bool known = std::any_of(q.params.begin(), q.params.end(), [&](const StoredParam& p) { return p.name == name; });
    if (!known) throw StoredQueryError(K::arity, q.name + " has no parameter '" + name + "'");
  }
  sql::Params out;
  for (const auto& p : q.params) {
    auto it = params.find(p.name);
    if (it == params.end()) throw StoredQueryError(K::arity, q.name + " requires parameter '" + p.name + "'");
    const Value& v = it->second;
    bool ok = false;
    switch (p.type) {
      case ParamType::integer: ok = v.kind() == ValueKind::integer; break;
      case ParamType::numeric: ok = v.is_numeric(); break;
      case ParamType::text: ok = v.kind() == ValueKind::text; break;
    }
    if (!ok) {
      throw StoredQueryError(K::type, "parameter '" + p.name + "' of " + q.name + " must be " +
                                          std::string(to_string(p.type)) + ", got " +
                                          std::string(to_string(v.kind())));
    }
    out[p.name] = v;
  }
  return out;
}

sql::Params parse_params(const StoredQuery& q, const std::map<std::string, std::string>& text) {
  sql::Params out;
  for (const auto& [name, raw] : text) {
    auto decl = std::find_if(q.params.begin(), q.params.end(), [&](const StoredParam& p) { return p.name == name; });
    if (decl == q.params.end()) {
      throw StoredQueryError(StoredQueryError::Kind::arity, q.name + " has no parameter '" + name + "'");
    }
    Value v;
    switch (decl->type) {
      case ParamType::integer:
        if (auto i = parse_int(raw)) v = Value(*i);
        break;
      case ParamType::numeric:
        if (auto i = parse_int(raw)) v = Value(*i);
        else if (auto d = parse_double(raw)) v = Value(*d);
        break;
      case ParamType::text: v = Value(raw); break;
    }
    if (v.is_null()) {
      throw StoredQueryError(StoredQueryError::Kind::type, "parameter '" + name + "' of " + q.name + " must be " +
                                                               std::string(to_string(decl->type)) + ", got '" + raw +
                                                               "'");
    }
    out[name] = v;
  }
  return check_params(q, out);
}

sql::Params params_from_json(const StoredQuery& q, const nlohmann::json& j) {
  sql::Params out;
  if (j.is_null()) return check_params(q, out);
  if (!j.is_object()) throw StoredQueryError(StoredQueryError::Kind::type, "parameters must be a JSON object");
  for (const auto& [name, v] : j.items()) {
    if (v.is_number_integer()) out[name] = Value(v.get<int64_t>());
    else if (v.is_number()) out[name] = Value(v.get<double>());
    else if (v.is_string()) out[name] = Value(v.get<std::string>());
    else throw StoredQueryError(StoredQueryError::Kind::type, "parameter '" + name + "' has an unsupported JSON type");
  }
  return check_params(q, out);
}

sql::ResultTable run_stored_query(std::string_view name, const sql::Params& params, const CanonicalStore& store,
                                  const sql::ExecOptions& opts) {
  const StoredQuery& q = stored_query(name);
  sql::Params bound = check_params(q, params);
  sql::SqlAst ast = sql::parse_sql(q.sql);
  auto resolved = sql::resolve_query(sql::bind_params(ast.statements[0], bound), canonical_catalog());
  return sql::execute(resolved, store, opts);
}

namespace {

bool cells_match(const Value& a, const Value& b, double tol) {
  if (a.kind() == ValueKind::real && b.kind() == ValueKind::real) {
    double x = a.as_real(), y = b.as_real();
    if (x == y) return true;
    return std::fabs(x - y) <= tol * std::max(std::fabs(x), std::fabs(y));
  }
  return a == b;
}

bool rows_match(const Row& a, const Row& b, double tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!cells_match(a[i], b[i], tol)) return false;
  }
  return true;
}

std::string show(const Row& r) {
  std::string s = "(";
  for (size_t i = 0; i < r.size(); ++i) s += (i ? ", " : "") + (r[i].is_null() ? "NULL" : r[i].to_string());
  return s + ")";
}

}  // namespace

bool results_match(const sql::ResultTable& got, const sql::ResultTable& want, const std::vector<SortKey>& order,
                   double rel_tol, std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (got.columns != want.columns) return fail("column names differ");
  if (got.rows.size() != want.rows.size()) {
    return fail("row count " + std::to_string(got.rows.size()) + " vs " + std::to_string(want.rows.size()));
  }
  auto less = [](const Row& a, const Row& b) {
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      int c = compare_for_sort(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return a.size() < b.size();
  };
  std::vector<Row> g = got.rows, w = want.rows;
  std::sort(g.begin(), g.end(), less);
  std::sort(w.begin(), w.end(), less);
  for (size_t i = 0; i < g.size(); ++i) {
    if (!rows_match(g[i], w[i], rel_tol)) return fail("row " + show(g[i]) + " vs " + show(w[i]));
  }
  for (size_t i = 1; i < got.rows.size(); ++i) {
    for (const auto& k : order) {
      int c = compare_for_sort(got.rows[i - 1].at(k.column), got.rows[i].at(k.column));
      if (k.descending) c = -c;
      if (c < 0) break;
      if (c > 0) return fail("rows " + std::to_string(i - 1) + " and " + std::to_string(i) + " are out of order");
    }
  }
  return true;
}

}  // namespace peripartum
