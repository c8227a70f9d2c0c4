#pragma once

#include <array>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/store.hpp"

namespace peripartum {

enum class RuleId {
  CR1_pregnancy_followup,
  CR2_trimester_uniqueness,
  CR3_result_type_coherence,
  CR4_delivery_specialization,
  CR5_measurement_nonempty
};

inline constexpr std::array<RuleId, 5> kAllRules{
    RuleId::CR1_pregnancy_followup, RuleId::CR2_trimester_uniqueness,
    RuleId::CR3_result_type_coherence, RuleId::CR4_delivery_specialization,
    RuleId::CR5_measurement_nonempty};

std::string_view to_string(RuleId r);
std::optional<RuleId> parse_rule_id(std::string_view text);

enum class ViolationKind { rule, field, primary_key, foreign_key, unique, temporal };
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind = ViolationKind::rule;
  std::optional<RuleId> rule;
  std::string relation;
  std::string subject;  // describe_key of the offending record
  std::string message;

  bool operator==(const Violation&) const = default;
};

nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const std::vector<Violation>& vs);

enum class OpKind { insert, update, erase };

struct Operation {
  OpKind kind = OpKind::insert;
  AnyRecord record;  // for erase only the key matters
};

struct Transaction {
  std::vector<Operation> ops;

  template <class R>
  Transaction& insert(R r) {
    ops.push_back({OpKind::insert, AnyRecord(std::move(r))});
    return *this;
  }
  template <class R>
  Transaction& update(R r) {
    ops.push_back({OpKind::update, AnyRecord(std::move(r))});
    return *this;
  }
  template <class R>
  Transaction& erase(R r) {
    ops.push_back({OpKind::erase, AnyRecord(std::move(r))});
    return *this;
  }
  bool empty() const { return ops.empty(); }
};

class TransactionFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"ops": [{"op": "insert"|"update"|"delete", "relation": ..., "values": {...}}]}
nlohmann::json to_json(const Transaction& tx);
Transaction transaction_from_json(const nlohmann::json& j);

/// Keys whose rule status may have changed. `all` means the whole store.
struct CheckScope {
  bool all = false;
  std::set<int64_t> pregnancies;                // CR1, CR2, CR4
  std::set<ExaminationTest::Key> exam_tests;    // CR3
  std::set<Measurement::Key> measurements;      // CR5

  static CheckScope everything() {
    CheckScope s;
    s.all = true;
    return s;
  }
};

/// Violations of one rule among the keys in scope. Pure.
std::vector<Violation> check_rule(RuleId rule, const CanonicalStore& store, const CheckScope& scope);

/// Result coherence with a test type list. Throws std::invalid_argument on an
/// empty type list.
std::optional<Violation> check_result_type(const std::vector<std::string>& test_type,
                                           std::string_view result);

struct CommitResult {
  enum class Status { committed, rejected, malformed };

  Status status = Status::committed;
  CanonicalStore store;  // post-image when committed, otherwise the input store
  std::vector<Violation> violations;
  std::string error;  // set when malformed

  bool ok() const { return status == Status::committed; }
};

std::string_view to_string(CommitResult::Status s);

/// Applies all operations, then checks fields, keys, references, ordering
/// invariants and the five rules over the post-image. All or nothing.
CommitResult apply_transaction(const CanonicalStore& store, const Transaction& tx);

/// Applies without any checking. Test and repair tooling only.
CanonicalStore force_apply(const CanonicalStore& store, const Transaction& tx);

/// Every check over every record.
std::vector<Violation> full_scan(const CanonicalStore& store);

}  // namespace peripartum
