#include <gtest/gtest.h>

#include <set>

#include "peripartum/constraints.hpp"
#include "peripartum/synth.hpp"

namespace peripartum {
namespace {

SynthConfig config(uint64_t seed, int patients) {
  SynthConfig c;
  c.seed = seed;
  c.n_patients = patients;
  return c;
}

std::set<RuleId> rules_of(const std::vector<Violation>& vs) {
  std::set<RuleId> out;
  for (const auto& v : vs) {
    if (v.rule) out.insert(*v.rule);
  }
  return out;
}

std::string dump(const std::vector<Violation>& vs) { return to_json(vs).dump(1); }

TEST(Synth, Seed42IsCleanOnFullScan) {
  CanonicalStore s = generate(config(42, 200));
  EXPECT_GE(s.count("pregnancy"), 200u);
  auto vs = full_scan(s);
  EXPECT_TRUE(vs.empty()) << dump(vs);
}

TEST(Synth, ZeroPatientsGivesEmptyStore) { EXPECT_TRUE(generate(config(7, 0)).empty()); }

TEST(Synth, SameConfigSameBytes) {
  EXPECT_EQ(serialize_store(generate(config(9, 60))), serialize_store(generate(config(9, 60))));
  EXPECT_NE(serialize_store(generate(config(9, 60))), serialize_store(generate(config(10, 60))));
}

TEST(Synth, EveryRelationIsPopulated) {
  CanonicalStore s = generate(config(42, 200));
  for (const char* rel : {"patient", "pregnancy", "condition", "pregnancy_condition", "examination", "test",
                          "examination_test", "delivery", "programmed_c_section", "delivery_with_labor",
                          "induction", "newborn", "tracing", "measurement", "newborn_measurement"}) {
    EXPECT_GT(s.count(rel), 0u) << rel;
  }
}

TEST(Synth, DeliveriesSpanAtLeastThreeYears) {
  CanonicalStore s = generate(config(3, 200));
  std::set<int> years;
  for (const auto& [k, d] : s.table<Delivery>()) years.insert(year_of(d.delivery_date));
  EXPECT_GE(years.size(), 3u);
}

TEST(Synth, ManySeedsStayClean) {
  for (uint64_t seed = 100; seed < 110; ++seed) {
    SynthConfig c = config(seed, 80);
    c.twin_probability = 0.3;
    c.ctg_probability = 0.3;
    auto vs = full_scan(generate(c));
    EXPECT_TRUE(vs.empty()) << "seed " << seed << "\n" << dump(vs);
  }
}

TEST(Synth, DeliveryMixWithinFivePoints) {
  SynthConfig c = config(2024, 700);
  c.ctg_probability = 0;
  c.delivery_mix = {0.1, 0.4, 0.2, 0.3};
  CanonicalStore s = generate(c);
  std::array<int, 4> seen{};
  for (const auto& [k, d] : s.table<Delivery>()) ++seen[static_cast<size_t>(d.delivery_type)];
  double n = static_cast<double>(s.count("delivery"));
  ASSERT_GE(n, 500);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(seen[i] / n, c.delivery_mix[i], 0.05) << enum_name(static_cast<DeliveryType>(i));
  }
}

TEST(Synth, DegenerateButValidMixes) {
  SynthConfig c = config(5, 40);
  c.delivery_mix = {0, 1, 0, 0};
  c.twin_probability = 1;
  CanonicalStore s = generate(c);
  EXPECT_TRUE(full_scan(s).empty());
  EXPECT_TRUE(s.table<ProgrammedCSection>().empty());
  EXPECT_EQ(s.count("newborn"), 2 * s.count("delivery"));
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c;
  c.delivery_mix = {0.5, 0.5, 0.5, 0};
  EXPECT_THROW(generate(c), std::invalid_argument);
  c = SynthConfig{};
  c.twin_probability = 1.5;
  EXPECT_THROW(generate(c), std::invalid_argument);
  c = SynthConfig{};
  c.n_patients = -1;
  EXPECT_THROW(generate(c), std::invalid_argument);
}

TEST(Synth, ConfigJsonRoundTrip) {
  SynthConfig c = config(77, 12);
  c.delivery_mix = {0.25, 0.25, 0.25, 0.25};
  SynthConfig back = synth_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

class Injection : public ::testing::TestWithParam<RuleId> {};

TEST_P(Injection, RejectedCitingOnlyTheTargetRule) {
  CanonicalStore s = generate(config(42, 60));
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Transaction bad = inject_violation(s, GetParam(), seed);
    CommitResult r = apply_transaction(s, bad);
    ASSERT_EQ(r.status, CommitResult::Status::rejected) << to_string(GetParam());
    EXPECT_EQ(rules_of(r.violations), std::set<RuleId>{GetParam()}) << dump(r.violations);
    for (const auto& v : r.violations) EXPECT_EQ(v.kind, ViolationKind::rule) << dump(r.violations);
    EXPECT_EQ(r.store, s);

    auto scan = full_scan(force_apply(s, bad));
    EXPECT_EQ(rules_of(scan), std::set<RuleId>{GetParam()}) << dump(scan);
    for (const auto& v : scan) EXPECT_EQ(v.kind, ViolationKind::rule) << dump(scan);

    CommitResult ok = apply_transaction(s, conforming_counterpart(s, GetParam(), seed));
    EXPECT_TRUE(ok.ok()) << dump(ok.violations) << ok.error;
    EXPECT_TRUE(full_scan(ok.store).empty());
  }
}

TEST_P(Injection, EmptyStoreIsTooSmall) {
  EXPECT_THROW(inject_violation(CanonicalStore{}, GetParam(), 1), SynthError);
}

INSTANTIATE_TEST_SUITE_P(AllRules, Injection, ::testing::ValuesIn(kAllRules),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Injection, Cr4FallsBackWhenEveryPregnancyIsDelivered) {
  SynthConfig c = config(8, 30);
  c.delivered_probability = 1;
  c.last_year = 2040;  // keep every delivery inside the window
  CanonicalStore s = generate(c);
  Transaction bad = inject_violation(s, RuleId::CR4_delivery_specialization, 3);
  CommitResult r = apply_transaction(s, bad);
  EXPECT_EQ(rules_of(r.violations), std::set<RuleId>{RuleId::CR4_delivery_specialization});
  EXPECT_TRUE(apply_transaction(s, conforming_counterpart(s, RuleId::CR4_delivery_specialization, 3)).ok());
}

TEST(Injection, Cr5WithoutTracingsAddsOne) {
  SynthConfig c = config(8, 20);
  c.ctg_probability = 0;
  CanonicalStore s = generate(c);
  ASSERT_TRUE(s.table<Tracing>().empty());
  CommitResult r = apply_transaction(s, inject_violation(s, RuleId::CR5_measurement_nonempty, 1));
  EXPECT_EQ(rules_of(r.violations), std::set<RuleId>{RuleId::CR5_measurement_nonempty});
  EXPECT_TRUE(apply_transaction(s, conforming_counterpart(s, RuleId::CR5_measurement_nonempty, 1)).ok());
}

}  // namespace
}  // namespace peripartum
