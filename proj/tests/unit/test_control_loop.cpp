#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sparsecal/control_loop.hpp"
#include "sparsecal/error.hpp"

using namespace sparsecal;

namespace {

// Short primitives keep the suite fast.
CampaignConfig quick(std::uint64_t seed) {
  CampaignConfig c;
  c.seed = seed;
  c.pi.shots = 200;
  c.pi2.shots = 200;
  c.ramsey.shots = 200;
  return c;
}

bool same(const CycleRecord& a, const CycleRecord& b) {
  return a.eps_a == b.eps_a && a.eps_b == b.eps_b && a.gamma1_hat == b.gamma1_hat &&
         a.delta_f_hat == b.delta_f_hat && a.t_start_ms == b.t_start_ms &&
         a.duration_ms == b.duration_ms && a.a_pi == b.a_pi && a.failed == b.failed;
}

}  // namespace

TEST(Campaign, NoDriftNoNoiseKeepsBothArmsEqual) {
  CampaignConfig c = quick(3);
  c.lab.noiseless = true;
  Campaign camp(c);
  for (int i = 0; i < 5; ++i) {
    const auto r = camp.run_cycle();
    ASSERT_TRUE(r.eps_a && r.eps_b);
    EXPECT_NEAR(*r.eps_a, *r.eps_b, 1e-9);
    EXPECT_NEAR(r.true_eps_a, r.true_eps_b, 1e-12);
  }
}

TEST(Campaign, FrequencyDriftFavoursLiveArm) {
  CampaignConfig c = quick(4);
  c.drift.emplace_back(DriftField::f01, GaussMarkovProcess(0.0, 0.1, 20.0));
  std::vector<CycleRecord> recs;
  const auto s = run_campaign(c, 500, [&](const CycleRecord& r) { recs.push_back(r); });
  EXPECT_EQ(s.cycles, 500);
  EXPECT_LT(s.mean_eps_b, s.mean_eps_a);
  double ta = 0.0, tb = 0.0;
  for (const auto& r : recs) {
    ta += r.true_eps_a;
    tb += r.true_eps_b;
  }
  EXPECT_LT(tb, ta);
}

TEST(Campaign, SingleCycleStartsAtZero) {
  std::vector<CycleRecord> recs;
  run_campaign(quick(5), 1, [&](const CycleRecord& r) { recs.push_back(r); });
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].index, 0);
  EXPECT_EQ(recs[0].t_start_ms, 0.0);
}

TEST(Campaign, SameSeedSameRecords) {
  CampaignConfig c = quick(6);
  c.drift = default_drift(c.device);
  std::vector<CycleRecord> a, b;
  run_campaign(c, 20, [&](const CycleRecord& r) { a.push_back(r); });
  run_campaign(c, 20, [&](const CycleRecord& r) { b.push_back(r); });
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(same(a[i], b[i])) << i;
}

TEST(Campaign, CadencePadsShortCycles) {
  CampaignConfig c = quick(7);
  c.drift = default_drift(c.device);
  std::vector<CycleRecord> recs;
  const auto s = run_campaign(c, 30, [&](const CycleRecord& r) { recs.push_back(r); });
  const double cadence_ms = to_ms(c.cadence);
  double total = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_NEAR(recs[i].t_start_ms, total, 1e-6);
    EXPECT_EQ(recs[i].overrun, recs[i].duration_ms > cadence_ms);
    total += std::max(cadence_ms, recs[i].duration_ms);
  }
  EXPECT_NEAR(s.sim_time_s, total / 1000.0, 1e-9);
}

TEST(Campaign, OverrunWhenCadenceTooShort) {
  CampaignConfig c = quick(8);
  c.cadence = kNanosPerMilli;
  const auto s = run_campaign(c, 3);
  EXPECT_EQ(s.overruns, 3);
}

TEST(Campaign, StaticStateNeverChanges) {
  CampaignConfig c = quick(9);
  c.drift = default_drift(c.device);
  Campaign camp(c);
  const CalibrationState before = camp.static_state();
  for (int i = 0; i < 10; ++i) camp.run_cycle();
  EXPECT_EQ(camp.static_state().a_pi, before.a_pi);
  EXPECT_EQ(camp.static_state().a_pi2, before.a_pi2);
  EXPECT_EQ(camp.static_state().f_drive, before.f_drive);
  EXPECT_EQ(camp.static_state().a_pi, camp.initial_state().a_pi);
}

TEST(Campaign, FailedStepCarriesValueForward) {
  // A T1 guess far below the truth pushes the wait grid into the flat tail
  // of the noise floor, so some T1 steps fail; the previous value survives.
  CampaignConfig c = quick(10);
  c.t1.shots = 4;
  Campaign camp(c);
  std::optional<double> last = 1.0 / c.t1_guess_us;
  int failures = 0;
  for (int i = 0; i < 40; ++i) {
    const auto r = camp.run_cycle();
    const bool failed = r.failed[static_cast<int>(Step::t1)];
    if (failed) {
      ++failures;
      EXPECT_EQ(r.gamma1_hat, last);
    }
    last = r.gamma1_hat;
    for (int s = 0; s < kSteps; ++s) EXPECT_GE(r.budgets[s].total(), 0);
  }
  EXPECT_GT(failures, 0);
}

TEST(Campaign, ZeroCyclesIsEmpty) {
  int calls = 0;
  const auto s = run_campaign(quick(11), 0, [&](const CycleRecord&) { ++calls; });
  EXPECT_EQ(calls, 0);
  EXPECT_EQ(s.cycles, 0);
  EXPECT_EQ(s.mean_eps_a, 0.0);
  EXPECT_THROW(run_campaign(quick(11), -1), Error);
}

TEST(Campaign, StepNames) {
  EXPECT_STREQ(to_string(Step::crb_a), "crb_a");
  EXPECT_STREQ(to_string(Step::crb_b), "crb_b");
}

TEST(Summary, PairsOnlyCyclesWithBothValues) {
  std::vector<CycleRecord> r(3);
  r[0].eps_a = 0.002;
  r[0].eps_b = 0.001;
  r[1].eps_a = 0.004;
  r[2].eps_a = 0.002;
  r[2].eps_b = 0.001;
  r[2].failed[1] = true;
  r[2].overrun = true;
  const auto s = summarize(r);
  EXPECT_DOUBLE_EQ(s.mean_eps_a, 0.002);
  EXPECT_DOUBLE_EQ(s.reduction_pct, 50.0);
  EXPECT_EQ(s.failures, 1);
  EXPECT_EQ(s.overruns, 1);
}
