#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/constraints.hpp"
#include "peripartum/csv.hpp"
#include "peripartum/store.hpp"

namespace peripartum::ingest {

enum class SourceKind { first_trimester_sheet, delivery_sheet, ehr_export, ctg_export };
std::string_view to_string(SourceKind k);
std::optional<SourceKind> parse_source_kind(std::string_view text);

enum class BoolEncoding { none, zero_one, yes_no, presence_integer };
std::string_view to_string(BoolEncoding e);

/// How a column's non-missing text is read.
enum class ValueKind {
  text,
  integer,
  decimal,
  date,
  timestamp,
  boolean,          // per the column's BoolEncoding
  flag_with_note,   // "0" / "1" optionally followed by free text, e.g. "1 because of ..."
  apgar,            // "9-10" or "6-8-9"
  gestational_age,  // days, or weeks+days as "39+2"
  code,             // opaque integer category, stored as "code:<n>"
  marker            // section marker column
};
std::string_view to_string(ValueKind k);

struct ColumnPolicy {
  /// Tokens that mean "no value" besides the universal "", "//" and "missing".
  std::set<std::string> missing_markers;
  BoolEncoding bool_encoding = BoolEncoding::none;
  ValueKind value_kind = ValueKind::text;
};

/// Points at a pregnancy (by id, or by tax code and first exam date) and,
/// for newborns, a birth time.
struct SourceRef {
  std::optional<int64_t> pregnancy_id;
  std::string tax_code;
  std::optional<Date> first_exam_date;
  std::optional<Timestamp> birth_time;
};

struct TestDef {
  std::string name;
  std::vector<std::string> type;
};

struct SourceConfig {
  SourceKind kind = SourceKind::first_trimester_sheet;
  /// Keyed by canonical field name (see header_synonyms).
  std::map<std::string, ColumnPolicy> column_policies;
  /// Normalized header label -> canonical field name. Extends the built-in table.
  std::map<std::string, std::string> header_synonyms;
  /// Source-local identifiers (CTG fetal channels, EHR ids) -> records.
  std::map<std::string, SourceRef> id_crosswalk;
  /// CTG only: the delivery the tracing belongs to and its start.
  std::optional<SourceRef> tracing;
  std::optional<Timestamp> tracing_start;
  /// Field -> test whose result the column holds.
  std::map<std::string, TestDef> tests;
  std::string section_marker = "Newborn Section";

  /// Built-in policies, synonyms and tests for a source kind.
  static SourceConfig defaults(SourceKind kind);
  const ColumnPolicy& policy(const std::string& field) const;
};

/// Starts from SourceConfig::defaults(source_kind) and overlays the JSON.
SourceConfig source_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SourceConfig& c);

// ---- cell-level operations -----------------------------------------------------

struct NormalizedCell {
  enum class Status { value, missing, conflict_marker };
  Status status = Status::missing;
  std::string text;  // trimmed token when status is value or conflict_marker

  bool present() const { return status == Status::value; }
};

/// "", "//" and "missing" are always missing; other markers come from the
/// policy. A section marker outside its own column is a conflict marker.
NormalizedCell normalize_cell(std::string_view token, const ColumnPolicy& policy,
                              std::string_view section_marker = "Newborn Section");

struct BoolParse {
  std::optional<bool> value;
  std::optional<int64_t> note;  // presence_integer: the integer that encoded "true"
  std::string error;            // set when the token is outside the encoding

  bool ok() const { return error.empty(); }
};

/// zero_one: "1"/"0". yes_no: YES/NO in any case (also SI/SÌ). presence_integer:
/// any integer is true and kept as a note, blank is false.
BoolParse parse_bool(std::string_view token, BoolEncoding encoding);

struct Apgar {
  int apgar_1 = 0;
  int apgar_5 = 0;
  std::optional<int> apgar_10;
  bool operator==(const Apgar&) const = default;
};

class CellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two or three dash-separated scores in 0..10. Throws CellError quoting the text.
Apgar parse_apgar(std::string_view text);

/// "39+2" -> 275, "275" -> 275. Throws CellError.
int parse_gestational_age(std::string_view text);

enum class Episode { consistent, conflict, flag_only };
std::string_view to_string(Episode e);

struct Reconciled {
  std::optional<std::string> value;
  Episode episode = Episode::consistent;
};

/// A boolean marker column paired with a value column.
Reconciled reconcile_flag_value(std::optional<bool> flag, const std::optional<std::string>& value);

/// Checks one raw section cell after alignment; returns an error message or nullopt.
using CellDomain = std::function<std::optional<std::string>(std::string_view)>;

struct Realigned {
  enum class Status { unchanged, realigned, quarantined };
  Status status = Status::unchanged;
  std::vector<std::string> cells;    // the section, marker first, padded with ""
  int offset = 0;                    // marker position minus its header position
  std::vector<std::string> spilled;  // cells that sat before the marker
  std::string reason;
};

/// `section` holds the row's cells from the marker column onward; `domains`
/// checks section cells 1..n. When the marker appears at offset k the row is
/// shifted left by k and re-checked; domain failures quarantine.
Realigned realign_ehr_row(const std::vector<std::string>& section, std::string_view marker,
                          const std::vector<CellDomain>& domains);

// ---- reports ----------------------------------------------------------------

struct QuarantinedRow {
  size_t row = 0;  // 1-based data row
  std::vector<std::string> cells;
  std::string reason;
};

struct Conflict {
  size_t row = 0;
  std::string field;
  std::vector<std::string> values;
};

struct Repair {
  size_t row = 0;
  std::vector<std::string> notes;  // one per transformation applied
};

struct ProvenanceNote {
  size_t row = 0;
  std::string field;
  std::string note;
};

struct QuarantinedColumn {
  std::string column;
  std::string reason;
};

struct IngestionReport {
  SourceKind kind = SourceKind::first_trimester_sheet;
  std::string layout;
  std::string source;
  std::vector<std::string> header;
  size_t rows = 0;
  size_t accepted = 0;
  size_t repaired = 0;
  std::vector<QuarantinedRow> quarantined;
  std::vector<Conflict> conflicts;
  std::vector<Repair> repairs;
  std::vector<ProvenanceNote> provenance;
  std::vector<QuarantinedColumn> quarantined_columns;
  std::vector<std::string> ignored_columns;
  size_t empty_rows = 0;      // accepted rows with nothing to store
  size_t unchanged_rows = 0;  // accepted rows whose records were already stored
  size_t inserted = 0;        // records
  size_t updated = 0;

  bool balanced() const { return accepted + repaired + quarantined.size() == rows; }
  size_t new_records() const { return inserted + updated; }
  nlohmann::json to_json() const;
  /// The input header plus "reason", one line per quarantined row.
  std::string quarantine_csv() const;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestOutcome {
  CanonicalStore store;
  IngestionReport report;
};

/// The CTG transaction for one export: a tracing plus its non-empty samples,
/// 250 ms apart from the start. Rows with bad values are quarantined in `report`.
struct CtgBatch {
  Transaction tx;
  IngestionReport report;
  int64_t tracing_id = 0;
};
CtgBatch ingest_ctg(const CsvTable& table, const SourceConfig& config, const CanonicalStore& store);

/// Parses, normalizes and commits. Sheet rows commit one transaction each; a
/// CTG export commits as one. Re-running on the same input leaves the store
/// unchanged. Throws IngestError for unreadable input or an unknown header layout.
IngestOutcome run_ingestion(const std::filesystem::path& file, const SourceConfig& config,
                            const CanonicalStore& store);
IngestOutcome run_ingestion_text(std::string_view text, std::string_view source_name,
                                 const SourceConfig& config, const CanonicalStore& store);

/// Lowercased, accents folded for the common Italian vowels, punctuation
/// turned into spaces, whitespace collapsed: "Premorph. ultr. indicated?" ->
/// "premorph ultr indicated".
std::string normalize_header(std::string_view label);

}  // namespace peripartum::ingest
