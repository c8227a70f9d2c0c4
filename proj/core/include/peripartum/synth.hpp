#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peripartum/constraints.hpp"
#include "peripartum/store.hpp"

namespace peripartum {

struct SynthConfig {
  uint64_t seed = 42;
  int n_patients = 200;
  /// weights[i] is the relative weight of a patient having i + 1 pregnancies.
  std::vector<double> pregnancies_per_patient{0.6, 0.3, 0.1};
  /// Indexed by DeliveryType: programmed_c_section, natural, operative, emergency_c_section.
  std::array<double, 4> delivery_mix{0.2, 0.55, 0.1, 0.15};
  /// Share of pregnancies that reach a delivery; the rest are still ongoing.
  double delivered_probability = 0.92;
  double induction_probability = 0.25;
  double twin_probability = 0.02;
  double ctg_probability = 0.2;
  int ctg_minutes_min = 1;
  int ctg_minutes_max = 4;
  /// First and last calendar year a delivery can fall in.
  int first_year = 2022;
  int last_year = 2025;
  /// "relation.column" -> chance the optional value is left empty.
  std::map<std::string, double> missing_rates{
      {"pregnancy.art_used", 0.3},
      {"pregnancy.prior_pregnancy_conditions", 0.7},
      {"pregnancy.last_menstruation_date", 0.05},
      {"pregnancy.expected_delivery_date", 0.05},
      {"delivery.analgesia", 0.4},
      {"induction.drug_dosage", 0.3},
      {"induction.completion_rate", 0.3},
      {"newborn.length_cm", 0.1},
      {"newborn.apgar_10", 0.5},
      {"newborn.ph", 0.2},
      {"measurement.maternal_heart_rate", 0.1},
      {"measurement.maternal_tocography", 0.1},
      {"newborn_measurement.fetal_heart_rate", 0.05},
  };

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  double missing(const std::string& field) const;
};

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Deterministic for a given config: equal configs give equal stores, and the
/// result passes full_scan with no violations.
CanonicalStore generate(const SynthConfig& config);

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A transaction that breaks `rule` and nothing else. Throws SynthError when
/// the store has nothing to attach the violation to.
Transaction inject_violation(const CanonicalStore& store, RuleId rule, uint64_t seed);

/// The same edit made legally: touches the same records the injector would,
/// but commits cleanly.
Transaction conforming_counterpart(const CanonicalStore& store, RuleId rule, uint64_t seed);

}  // namespace peripartum
