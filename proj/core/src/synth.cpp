#include "peripartum/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

namespace peripartum {

namespace {

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the helpers below map raw draws themselves.
class Rng {
 public:
  explicit Rng(uint64_t seed) : g_(seed) {}

  double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  int64_t range(int64_t lo, int64_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int64_t>(g_() % static_cast<uint64_t>(hi - lo + 1));
  }
  int irange(int lo, int hi) { return static_cast<int>(range(lo, hi)); }
  bool chance(double p) { return unit() < p; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(range(0, static_cast<int64_t>(v.size()) - 1))];
  }

  template <class C>
  size_t weighted(const C& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double x = unit() * total;
    size_t i = 0;
    for (double w : weights) {
      if (x < w) return i;
      x -= w;
      ++i;
    }
    // rounding left x at the top edge; take the last positive weight
    for (size_t j = weights.size(); j-- > 0;) {
      if (weights[j] > 0) return j;
    }
    return 0;
  }

 private:
  std::mt19937_64 g_;
};

constexpr int64_t kMinute = 60'000;
constexpr int64_t kHour = 60 * kMinute;

const std::vector<std::string> kNames{"Maria",  "Giulia", "Francesca", "Sara",      "Laura",   "Chiara",
                                      "Anna",   "Elena",  "Valentina", "Martina",   "Alessia", "Federica",
                                      "Silvia", "Paola",  "Roberta",   "Elisa",     "Ilaria",  "Beatrice"};
const std::vector<std::string> kSurnames{"Rossi",   "Bianchi", "Romano", "Colombo",  "Ricci",    "Marino",
                                         "Greco",   "Bruno",   "Gallo",  "Conti",    "De Luca",  "Costa",
                                         "Giordano", "Mancini", "Rizzo", "Lombardi", "Moretti",  "Barbieri",
                                         "Fontana", "Santoro"};

const std::vector<std::string> kPcsMotivations{"breech presentation", "previous c-section", "placenta previa",
                                               "CTG not reassuring at term check", "maternal request",
                                               "macrosomia"};
const std::vector<std::string> kOperativeMotivations{"prolonged second stage", "fetal distress",
                                                     "CTG not reassuring", "maternal exhaustion"};
const std::vector<std::string> kEmergencyMotivations{"failed induction", "pathological CTG", "cord prolapse",
                                                     "arrest of dilation", "failed vacuum",
                                                     "placental abruption"};
const std::vector<std::string> kEpisiotomyMotivations{"rigid perineum", "fetal distress",
                                                      "operative delivery"};
const std::vector<std::string> kInductionMethods{"oxytocin", "prostaglandin", "balloon catheter",
                                                 "amniotomy"};
const std::vector<std::string> kDosages{"2 mU/min", "10 mg vaginal insert", "25 mcg", "5 mU/min"};
const std::vector<std::string> kAnalgesia{"epidural", "spinal", "remifentanil"};
const std::vector<std::string> kPriorConditions{"previous preeclampsia", "previous gestational diabetes",
                                                "previous c-section", "none relevant"};
const std::vector<std::string> kTherapies{"insulin", "labetalol", "levothyroxine", "diet", "iron"};

struct FixedTest {
  int64_t id;
  const char* name;
  std::vector<std::string> type;
};

enum TestId : int64_t { kNt = 1, kNipt, kKaryotype, kCombined, kCrl };

std::vector<FixedTest> fixed_tests() {
  return {{kNt, "nuchal translucency", {"numeric"}},
          {kNipt, "NIPT", {"low risk", "high risk"}},
          {kKaryotype, "karyotype", {"string"}},
          {kCombined, "combined test outcome", {"A", "B", "C"}},
          {kCrl, "crown-rump length", {"numeric"}}};
}

const std::vector<std::string> kConditions{"gestational diabetes", "pregnancy-induced hypertension",
                                           "thyropathy", "preeclampsia", "anemia"};

std::string code_letters(const std::string& word) {
  std::string out;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (out.size() == 3) break;
  }
  while (out.size() < 3) out += 'X';
  return out;
}

std::string two_digits(int v) {
  std::string s = std::to_string(v % 100);
  return s.size() == 1 ? "0" + s : s;
}

// Shaped like an Italian tax code, without the checksum.
std::string make_tc(const std::string& name, const std::string& surname, Date birth, int index, int salt) {
  static constexpr const char* kMonths = "ABCDEHLMPRST";
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{birth.days}}};
  std::string tc = code_letters(surname) + code_letters(name);
  tc += two_digits(static_cast<int>(ymd.year()));
  tc += kMonths[static_cast<unsigned>(ymd.month()) - 1];
  tc += two_digits(static_cast<int>(static_cast<unsigned>(ymd.day())) + 40);
  tc += static_cast<char>('Z' - salt % 26);
  std::string n = std::to_string(index % 1000);
  tc += std::string(3 - n.size(), '0') + n;
  tc += static_cast<char>('A' + (index / 1000) % 26);
  return tc;
}

double one_decimal(double v) { return std::round(v * 10) / 10; }

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : c_(c), rng_(c.seed) {}

  CanonicalStore run() {
    if (c_.n_patients == 0) return store_;
    for (const auto& t : fixed_tests()) store_.put(Test{t.id, t.name, t.type});
    for (size_t i = 0; i < kConditions.size(); ++i) {
      store_.put(Condition{static_cast<int64_t>(i + 1), kConditions[i]});
    }
    window_start_ = make_date(c_.first_year, 1, 1).days;
    window_end_ = make_date(c_.last_year, 12, 31).days;
    for (int i = 0; i < c_.n_patients; ++i) patient(i);
    return std::move(store_);
  }

 private:
  template <class T>
  std::optional<T> maybe(const char* field, T value) {
    if (rng_.chance(c_.missing(field))) return std::nullopt;
    return value;
  }

  void patient(int index) {
    Patient pt;
    pt.name = rng_.pick(kNames);
    pt.surname = rng_.pick(kSurnames);
    pt.birth_date = Date{static_cast<int32_t>(rng_.range(make_date(1975, 1, 1).days, make_date(2003, 12, 31).days))};
    int salt = 0;
    do {
      pt.tc = make_tc(pt.name, pt.surname, pt.birth_date, index, salt++);
    } while (store_.find<Patient>(pt.tc));
    store_.put(pt);

    int k = static_cast<int>(rng_.weighted(c_.pregnancies_per_patient)) + 1;
    int prior_births = rng_.chance(0.3) ? 1 : 0;
    int32_t next_delivery = static_cast<int32_t>(
        rng_.range(window_start_, std::max<int64_t>(window_start_, window_end_ - (k - 1) * 420)));
    for (int j = 0; j < k; ++j) {
      bool in_window = next_delivery <= window_end_;
      bool delivered = in_window && (j + 1 < k || rng_.chance(c_.delivered_probability));
      pregnancy(pt, next_delivery, delivered, prior_births);
      if (!delivered) break;
      ++prior_births;
      next_delivery += static_cast<int32_t>(rng_.range(420, 700));
    }
  }

  void pregnancy(const Patient& pt, int32_t delivery_day, bool delivered, int prior_births) {
    bool preterm = rng_.chance(0.08);
    int ga = preterm ? rng_.irange(224, 258) : rng_.irange(259, 294);
    int32_t lmp = delivery_day - ga;

    Pregnancy pr;
    pr.id = store_.next_id(Pregnancy::kRelation);
    pr.patient_tc = pt.tc;
    pr.first_exam_date = Date{lmp + rng_.irange(56, 84)};
    pr.parity_full_term = prior_births;
    pr.parity_premature = rng_.chance(0.05) ? 1 : 0;
    pr.parity_abortions = rng_.chance(0.15) ? rng_.irange(1, 2) : 0;
    pr.parity_live_births = pr.parity_full_term + pr.parity_premature;
    pr.maternal_age_at_conception = static_cast<int>((lmp - pt.birth_date.days) / 365.25);
    pr.art_used = maybe("pregnancy.art_used", rng_.chance(0.1));
    pr.prior_pregnancy_conditions = maybe("pregnancy.prior_pregnancy_conditions", rng_.pick(kPriorConditions));
    pr.last_menstruation_date = maybe("pregnancy.last_menstruation_date", Date{lmp});
    pr.expected_delivery_date = maybe("pregnancy.expected_delivery_date", Date{lmp + 280});
    store_.put(pr);

    examinations(pr, lmp, ga);
    if (rng_.chance(0.15)) {
      PregnancyCondition pc;
      pc.pregnancy_id = pr.id;
      pc.condition_id = rng_.range(1, static_cast<int64_t>(kConditions.size()));
      if (rng_.chance(0.6)) pc.therapy = rng_.pick(kTherapies);
      store_.put(pc);
    }
    if (delivered) delivery(pr.id, Date{delivery_day}, ga, preterm);
  }

  int64_t exam(int64_t preg, ExaminationKind kind, int32_t lmp, int32_t day,
               std::map<std::string, std::string> details) {
    Examination ex;
    ex.id = store_.next_id(Examination::kRelation);
    ex.pregnancy_id = preg;
    ex.kind = kind;
    ex.exam_date = Date{day};
    ex.gestational_age_days = day - lmp;
    ex.details = std::move(details);
    store_.put(ex);
    return ex.id;
  }

  void result(int64_t exam_id, int64_t test_id, std::string value) {
    store_.put(ExaminationTest{exam_id, test_id, std::move(value)});
  }

  void examinations(const Pregnancy& pr, int32_t lmp, int ga) {
    int64_t first = exam(pr.id, ExaminationKind::first_trimester, lmp, pr.first_exam_date.days,
                         {{"ultrasound", rng_.chance(0.95) ? "normal" : "follow-up advised"}});
    result(first, kNt, format_double(rng_.irange(9, 35) / 10.0));
    result(first, kCrl, format_double(rng_.irange(450, 840) / 10.0));
    if (rng_.chance(0.5)) result(first, kNipt, rng_.chance(0.97) ? "low risk" : "high risk");
    if (rng_.chance(0.6)) result(first, kCombined, rng_.pick(std::vector<std::string>{"A", "B", "C"}));

    if (rng_.chance(0.8)) {
      int64_t second = exam(pr.id, ExaminationKind::second_trimester, lmp, lmp + rng_.irange(133, 154),
                            {{"anatomy", "normal"}, {"placenta", rng_.chance(0.9) ? "fundal" : "low-lying"}});
      if (rng_.chance(0.1)) result(second, kKaryotype, rng_.chance(0.5) ? "46,XX" : "46,XY");
    }
    if (rng_.chance(0.3)) {
      exam(pr.id, ExaminationKind::biometric_ultrasound, lmp, lmp + rng_.irange(196, std::max(197, std::min(ga - 1, 245))),
           {{"efw_g", std::to_string(rng_.irange(1500, 3200))}});
    }
  }

  void delivery(int64_t preg, Date day, int ga, bool preterm) {
    auto type = static_cast<DeliveryType>(rng_.weighted(c_.delivery_mix));
    int newborns = rng_.chance(c_.twin_probability) ? 2 : 1;

    Delivery d;
    d.pregnancy_id = preg;
    d.delivery_date = day;
    d.gestational_age_days = ga;
    d.robson_score = rng_.irange(1, 10);
    double pe = rng_.unit();
    d.placental_expulsion = pe < 0.85 ? PlacentalExpulsion::spontaneous
                            : pe < 0.95 ? PlacentalExpulsion::manual
                                        : PlacentalExpulsion::curettage;
    d.analgesia = maybe("delivery.analgesia", rng_.pick(kAnalgesia));
    d.delivery_type = type;

    std::vector<Timestamp> births;
    if (type == DeliveryType::programmed_c_section) {
      d.estimated_blood_loss_ml = rng_.irange(300, 1200);
      store_.put(d);
      store_.put(ProgrammedCSection{preg, rng_.pick(kPcsMotivations)});
      Timestamp t = make_timestamp(day, rng_.irange(8, 13), rng_.irange(0, 59));
      births.push_back(t);
      if (newborns == 2) births.push_back(Timestamp{t.ms + rng_.range(1, 3) * kMinute});
      for (Timestamp b : births) newborn(preg, b, newborns == 2, preterm);
      return;
    }

    d.estimated_blood_loss_ml = rng_.irange(100, 900);
    store_.put(d);

    DeliveryWithLabor w;
    w.pregnancy_id = preg;
    w.expulsion_time = make_timestamp(day, rng_.irange(0, 23), rng_.irange(0, 59), rng_.irange(0, 59));
    w.labor_start_time = Timestamp{w.expulsion_time.ms - rng_.range(60, 960) * kMinute};
    switch (type) {
      case DeliveryType::operative:
        w.delivery_subtype = LaborSubtype::operative;
        w.motivation = rng_.pick(kOperativeMotivations);
        w.operative_instrument = rng_.chance(0.8) ? OperativeInstrument::vacuum : OperativeInstrument::forceps;
        break;
      case DeliveryType::emergency_c_section:
        w.delivery_subtype = LaborSubtype::emergency_c_section;
        w.motivation = rng_.pick(kEmergencyMotivations);
        break;
      default:
        w.delivery_subtype = LaborSubtype::natural;
        break;
    }
    if (w.delivery_subtype != LaborSubtype::emergency_c_section) {
      static const std::array<double, 5> kLaceration{0.45, 0.3, 0.2, 0.04, 0.01};
      w.laceration = static_cast<Laceration>(rng_.weighted(kLaceration));
      w.episiotomy = rng_.chance(w.delivery_subtype == LaborSubtype::operative ? 0.5 : 0.15);
      if (w.episiotomy && rng_.chance(0.7)) w.episiotomy_motivation = rng_.pick(kEpisiotomyMotivations);
    }
    store_.put(w);

    if (rng_.chance(c_.induction_probability)) {
      int n = rng_.chance(0.7) ? 1 : 2;
      std::set<int64_t> used;
      for (int i = 0; i < n; ++i) {
        Induction in;
        in.pregnancy_id = preg;
        int64_t at;
        do {
          at = w.labor_start_time.ms - rng_.range(60, 30 * 60) * kMinute;
        } while (!used.insert(at).second);
        in.administration_time = Timestamp{at};
        in.method = rng_.pick(kInductionMethods);
        in.drug_dosage = maybe("induction.drug_dosage", rng_.pick(kDosages));
        in.completion_rate = maybe("induction.completion_rate", rng_.irange(0, 100) / 100.0);
        store_.put(in);
      }
    }

    births.push_back(w.expulsion_time);
    if (newborns == 2) births.push_back(Timestamp{w.expulsion_time.ms + rng_.range(2, 25) * kMinute});
    for (Timestamp b : births) newborn(preg, b, newborns == 2, preterm);

    if (rng_.chance(c_.ctg_probability)) tracing(preg, w, births);
  }

  void newborn(int64_t preg, Timestamp birth, bool twin, bool preterm) {
    Newborn n;
    n.pregnancy_id = preg;
    n.birth_time = birth;
    n.weight_g = preterm ? rng_.irange(1500, 3000) : twin ? rng_.irange(1800, 3200) : rng_.irange(2500, 4300);
    n.length_cm = maybe("newborn.length_cm", rng_.irange(88, 108) / 2.0);
    n.apgar_1 = rng_.chance(0.85) ? rng_.irange(7, 10) : rng_.irange(2, 6);
    n.apgar_5 = std::min(10, n.apgar_1 + rng_.irange(0, 2));
    n.apgar_10 = maybe("newborn.apgar_10", std::min(10, n.apgar_5 + rng_.irange(0, 1)));
    n.ph = maybe("newborn.ph", rng_.chance(0.1) ? rng_.irange(695, 709) / 100.0 : rng_.irange(710, 745) / 100.0);
    store_.put(n);
  }

  // Bounded random walks at 4 Hz ending at expulsion.
  void tracing(int64_t preg, const DeliveryWithLabor& w, const std::vector<Timestamp>& births) {
    int minutes = rng_.irange(c_.ctg_minutes_min, c_.ctg_minutes_max);
    Tracing t;
    t.tracing_id = store_.next_id(Tracing::kRelation);
    t.pregnancy_id = preg;
    t.start_time = Timestamp{std::max(w.labor_start_time.ms, w.expulsion_time.ms - minutes * kMinute)};
    store_.put(t);

    double mhr = rng_.irange(70, 95);
    double toco = rng_.irange(5, 20);
    std::vector<double> fhr;
    for (size_t i = 0; i < births.size(); ++i) fhr.push_back(rng_.irange(120, 155));
    auto step = [&](double v, double amp, double lo, double hi) {
      return std::clamp(v + (rng_.unit() * 2 - 1) * amp, lo, hi);
    };

    int samples = minutes * 240;
    for (int i = 0; i < samples; ++i) {
      mhr = step(mhr, 1.0, 50, 140);
      toco = step(toco, 0.5, 0, 100);
      for (auto& f : fhr) f = step(f, 2.0, 90, 190);

      Measurement m;
      m.tracing_id = t.tracing_id;
      m.ts = Timestamp{t.start_time.ms + i * 250};
      m.maternal_heart_rate = maybe("measurement.maternal_heart_rate", static_cast<int>(std::lround(mhr)));
      m.maternal_tocography = maybe("measurement.maternal_tocography", one_decimal(toco));
      std::vector<NewbornMeasurement> fetal;
      for (size_t b = 0; b < births.size(); ++b) {
        if (rng_.chance(c_.missing("newborn_measurement.fetal_heart_rate"))) continue;
        fetal.push_back({t.tracing_id, m.ts, preg, births[b], static_cast<int>(std::lround(fhr[b]))});
      }
      if (!m.maternal_heart_rate && !m.maternal_tocography && fetal.empty()) continue;
      store_.put(m);
      for (auto& nm : fetal) store_.put(nm);
    }
  }

  const SynthConfig& c_;
  Rng rng_;
  CanonicalStore store_;
  int32_t window_start_ = 0;
  int32_t window_end_ = 0;
};

// ---- violation injection -----------------------------------------------------

template <class R, class Pred>
std::vector<const R*> candidates(const CanonicalStore& s, Pred pred) {
  std::vector<const R*> out;
  for (const auto& [k, r] : s.table<R>()) {
    if (pred(r)) out.push_back(&r);
  }
  return out;
}

template <class T>
const T* choose(const std::vector<const T*>& v, Rng& rng, const char* what) {
  if (v.empty()) throw SynthError(std::string("store too small: no ") + what);
  return v[static_cast<size_t>(rng.range(0, static_cast<int64_t>(v.size()) - 1))];
}

// A pregnancy for `pt` with a first_exam_date no other pregnancy of hers uses.
Pregnancy fresh_pregnancy(const CanonicalStore& s, const Patient& pt) {
  std::set<int32_t> taken;
  for (const auto& [id, pr] : s.table<Pregnancy>()) {
    if (pr.patient_tc == pt.tc) taken.insert(pr.first_exam_date.days);
  }
  Pregnancy pr;
  pr.id = s.next_id(Pregnancy::kRelation);
  pr.patient_tc = pt.tc;
  pr.first_exam_date = Date{pt.birth_date.days + 25 * 365};
  while (taken.count(pr.first_exam_date.days)) ++pr.first_exam_date.days;
  pr.maternal_age_at_conception = 25;
  return pr;
}

Examination first_trimester_for(const CanonicalStore& s, const Pregnancy& pr) {
  Examination ex;
  ex.id = s.next_id(Examination::kRelation);
  ex.pregnancy_id = pr.id;
  ex.kind = ExaminationKind::first_trimester;
  ex.exam_date = pr.first_exam_date;
  ex.gestational_age_days = 84;
  return ex;
}

Transaction edit(const CanonicalStore& s, RuleId rule, uint64_t seed, bool legal) {
  Rng rng(seed);
  Transaction tx;
  switch (rule) {
    case RuleId::CR1_pregnancy_followup: {
      const Patient* pt = choose(candidates<Patient>(s, [](const auto&) { return true; }), rng, "patient");
      Pregnancy pr = fresh_pregnancy(s, *pt);
      tx.insert(pr);
      if (legal) tx.insert(first_trimester_for(s, pr));
      return tx;
    }
    case RuleId::CR2_trimester_uniqueness: {
      const Examination* ex = choose(
          candidates<Examination>(s, [](const Examination& e) { return e.kind == ExaminationKind::first_trimester; }),
          rng, "first_trimester examination");
      Examination dup = *ex;
      dup.id = s.next_id(Examination::kRelation);
      dup.exam_date = Date{ex->exam_date.days + 1};
      dup.gestational_age_days = ex->gestational_age_days + 1;
      dup.details = {{"note", "repeat scan"}};
      if (legal) dup.kind = ExaminationKind::other;
      tx.insert(dup);
      return tx;
    }
    case RuleId::CR3_result_type_coherence: {
      auto numeric = [&](int64_t test_id) {
        const Test* t = s.find<Test>(test_id);
        return t && t->type == std::vector<std::string>{"numeric"};
      };
      std::string value = legal ? "2.5" : "abc";
      auto existing = candidates<ExaminationTest>(s, [&](const ExaminationTest& et) { return numeric(et.test_id); });
      if (!existing.empty()) {
        ExaminationTest et = *choose(existing, rng, "numeric result");
        et.result = value;
        tx.update(et);
        return tx;
      }
      const Test* t = choose(candidates<Test>(s, [&](const Test& t) { return numeric(t.id); }), rng, "numeric test");
      const Examination* ex =
          choose(candidates<Examination>(s, [&](const Examination& e) { return !s.find<ExaminationTest>({e.id, t->id}); }),
                 rng, "examination");
      tx.insert(ExaminationTest{ex->id, t->id, value});
      return tx;
    }
    case RuleId::CR4_delivery_specialization: {
      auto open = candidates<Pregnancy>(s, [&](const Pregnancy& p) { return !s.find<Delivery>(p.id); });
      if (!open.empty()) {
        // a delivery with no specialization row; the legal form adds one
        const Pregnancy* pr = choose(open, rng, "pregnancy");
        Delivery d;
        d.pregnancy_id = pr->id;
        d.delivery_date = Date{pr->first_exam_date.days + 200};
        d.gestational_age_days = 270;
        d.delivery_type = DeliveryType::programmed_c_section;
        tx.insert(d);
        if (legal) tx.insert(ProgrammedCSection{pr->id, "breech presentation"});
        return tx;
      }
      // every pregnancy is delivered: give a labor delivery a second specialization
      const DeliveryWithLabor* w =
          choose(candidates<DeliveryWithLabor>(s, [](const auto&) { return true; }), rng, "delivery_with_labor");
      if (legal) {
        DeliveryWithLabor same = *w;
        same.episiotomy_motivation.reset();
        same.episiotomy = false;
        tx.update(same);
      } else {
        tx.insert(ProgrammedCSection{w->pregnancy_id, "breech presentation"});
      }
      return tx;
    }
    case RuleId::CR5_measurement_nonempty: {
      Measurement m;
      auto tracings = candidates<Tracing>(s, [](const auto&) { return true; });
      if (!tracings.empty()) {
        const Tracing* t = choose(tracings, rng, "tracing");
        m.tracing_id = t->tracing_id;
        const auto& ms = s.table<Measurement>();
        auto it = ms.lower_bound({t->tracing_id + 1, Timestamp{INT64_MIN}});
        bool any = it != ms.begin() && std::get<0>(std::prev(it)->first) == t->tracing_id;
        m.ts = any ? Timestamp{std::get<1>(std::prev(it)->first).ms + 250} : t->start_time;
      } else {
        const Delivery* d =
            choose(candidates<Delivery>(s, [](const auto&) { return true; }), rng, "delivery to attach a tracing to");
        Tracing t{s.next_id(Tracing::kRelation), d->pregnancy_id, start_of(d->delivery_date)};
        tx.insert(t);
        m.tracing_id = t.tracing_id;
        m.ts = t.start_time;
      }
      if (legal) m.maternal_heart_rate = 80;
      tx.insert(m);
      return tx;
    }
  }
  throw std::invalid_argument("unknown rule id");
}

bool probability(double p) { return p >= 0 && p <= 1; }

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("synth config: " + what); };
  if (n_patients < 0) bad("n_patients must be >= 0");
  if (pregnancies_per_patient.empty()) bad("pregnancies_per_patient is empty");
  double wsum = 0;
  for (double w : pregnancies_per_patient) {
    if (!(w >= 0)) bad("pregnancies_per_patient weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0)) bad("pregnancies_per_patient weights sum to 0");
  double msum = 0;
  for (double p : delivery_mix) {
    if (!probability(p)) bad("delivery_mix entries must lie in [0, 1]");
    msum += p;
  }
  if (std::abs(msum - 1) > 1e-9) bad("delivery_mix must sum to 1");
  for (auto [name, p] : {std::pair{"delivered_probability", delivered_probability},
                         std::pair{"induction_probability", induction_probability},
                         std::pair{"twin_probability", twin_probability},
                         std::pair{"ctg_probability", ctg_probability}}) {
    if (!probability(p)) bad(std::string(name) + " must lie in [0, 1]");
  }
  if (ctg_minutes_min < 1 || ctg_minutes_max < ctg_minutes_min) bad("ctg minutes range is empty");
  if (first_year > last_year) bad("first_year after last_year");
  for (const auto& [field, p] : missing_rates) {
    if (!probability(p)) bad("missing rate for " + field + " must lie in [0, 1]");
  }
}

double SynthConfig::missing(const std::string& field) const {
  auto it = missing_rates.find(field);
  return it == missing_rates.end() ? 0.0 : it->second;
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"seed", c.seed},
          {"n_patients", c.n_patients},
          {"pregnancies_per_patient", c.pregnancies_per_patient},
          {"delivery_mix",
           {{"programmed_c_section", c.delivery_mix[0]},
            {"natural", c.delivery_mix[1]},
            {"operative", c.delivery_mix[2]},
            {"emergency_c_section", c.delivery_mix[3]}}},
          {"delivered_probability", c.delivered_probability},
          {"induction_probability", c.induction_probability},
          {"twin_probability", c.twin_probability},
          {"ctg_probability", c.ctg_probability},
          {"ctg_minutes", {c.ctg_minutes_min, c.ctg_minutes_max}},
          {"years", {c.first_year, c.last_year}},
          {"missing_rates", c.missing_rates}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.seed = j.value("seed", c.seed);
  c.n_patients = j.value("n_patients", c.n_patients);
  c.pregnancies_per_patient = j.value("pregnancies_per_patient", c.pregnancies_per_patient);
  if (j.contains("delivery_mix")) {
    const auto& m = j.at("delivery_mix");
    for (size_t i = 0; i < 4; ++i) {
      c.delivery_mix[i] = m.value(std::string(enum_name(static_cast<DeliveryType>(i))), 0.0);
    }
  }
  c.delivered_probability = j.value("delivered_probability", c.delivered_probability);
  c.induction_probability = j.value("induction_probability", c.induction_probability);
  c.twin_probability = j.value("twin_probability", c.twin_probability);
  c.ctg_probability = j.value("ctg_probability", c.ctg_probability);
  if (j.contains("ctg_minutes")) {
    c.ctg_minutes_min = j.at("ctg_minutes").at(0).get<int>();
    c.ctg_minutes_max = j.at("ctg_minutes").at(1).get<int>();
  }
  if (j.contains("years")) {
    c.first_year = j.at("years").at(0).get<int>();
    c.last_year = j.at("years").at(1).get<int>();
  }
  if (j.contains("missing_rates")) {
    for (const auto& [k, v] : j.at("missing_rates").items()) c.missing_rates[k] = v.get<double>();
  }
  c.validate();
  return c;
}

CanonicalStore generate(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

Transaction inject_violation(const CanonicalStore& store, RuleId rule, uint64_t seed) {
  return edit(store, rule, seed, false);
}

Transaction conforming_counterpart(const CanonicalStore& store, RuleId rule, uint64_t seed) {
  return edit(store, rule, seed, true);
}

}  // namespace peripartum
