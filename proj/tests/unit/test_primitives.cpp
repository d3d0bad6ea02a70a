#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sparsecal/error.hpp"
#include "sparsecal/primitives.hpp"

using namespace sparsecal;

namespace {

constexpr double kPi = std::numbers::pi;

LabConfig noiseless() {
  LabConfig c;
  c.noiseless = true;
  return c;
}

// Ideal SPAM, no envelope, exact pulses.
DeviceTruth clean_truth() {
  DeviceTruth t;
  t.p_read_eg = 0.0;
  t.p_read_ge = 0.0;
  t.t2_over_t1 = 0.0;
  return t;
}

CalibrationState exact_state(const DeviceTruth& t) {
  CalibrationState s;
  s.a_pi = kPi / t.rabi_per_amp;
  s.a_pi2 = 0.5 * kPi / t.rabi_per_amp;
  s.f_drive = t.f01;
  return s;
}

bool additive(const PrimitiveResult& r) {
  const auto& b = r.budget;
  return b.seq + b.meas + b.reset + b.analysis + b.ping == b.total() &&
         r.estimate.t_decision_ms == to_ms(b.total());
}

IqSample at(double i, double q) { return {i, q, 0, 0}; }

}  // namespace

TEST(T1, NoiselessExact) {
  DeviceTruth t;
  t.gamma1 = 1.0 / 20.0;
  Lab lab(t, noiseless(), 1);
  const auto r = estimate_t1(lab, 20.0);
  EXPECT_NEAR(r.estimate.value * 20.0, 1.0, 1e-9);
  EXPECT_EQ(r.raw.size(), 3u);
  EXPECT_NEAR(r.raw[0].coord, 0.016, 1e-15);
  EXPECT_NEAR(r.raw[1].coord, 20.016, 1e-12);
  EXPECT_NEAR(r.raw[2].coord, 60.016, 1e-12);
  EXPECT_EQ(r.estimate.shots_used, 150);
  EXPECT_TRUE(additive(r));
}

TEST(T1, RetryHalvesTheStep) {
  DeviceTruth t;
  t.gamma1 = 1.0 / 18.3;
  T1Options o;
  o.shots = 4;
  bool seen = false;
  for (std::uint64_t seed = 1; seed < 500 && !seen; ++seed) {
    Lab lab(t, LabConfig{}, seed);
    try {
      const auto r = estimate_t1(lab, 18.3, o);
      if (r.retries == 1) {
        seen = true;
        ASSERT_EQ(r.raw.size(), 6u);
        EXPECT_NEAR(r.raw[4].coord - r.raw[3].coord, 0.5 * (r.raw[1].coord - r.raw[0].coord), 1e-12);
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::capture_failure);
    }
  }
  EXPECT_TRUE(seen);
}

TEST(T1, CaptureFailureAfterRetry) {
  // Four shots per point on nearly flat data fail often; every failure must
  // surface as capture_failure.
  DeviceTruth t;
  t.gamma1 = 1e-4;
  T1Options o;
  o.shots = 4;
  int failures = 0;
  for (std::uint64_t seed = 1; seed < 200; ++seed) {
    Lab lab(t, LabConfig{}, seed);
    try {
      estimate_t1(lab, 1.0, o);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::capture_failure);
      ++failures;
    }
  }
  EXPECT_GT(failures, 0);
}

TEST(T1, MonteCarloRelativeSigma) {
  DeviceTruth t;
  t.gamma1 = 1.0 / 18.3;
  std::vector<double> rel;
  for (int seed = 0; seed < 500; ++seed) {
    Lab lab(t, LabConfig{}, 5000 + seed);
    try {
      const auto r = estimate_t1(lab, 18.3);
      rel.push_back(r.estimate.sigma / r.estimate.value);
    } catch (const Error&) {
    }
  }
  ASSERT_GT(rel.size(), 450u);
  std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
  const double median = rel[rel.size() / 2];
  EXPECT_GE(median, 0.15);
  EXPECT_LE(median, 0.40);
}

TEST(T1, BootstrapMode) {
  DeviceTruth t;
  LabConfig c;
  c.bootstrap_replicates = 300;
  Lab lab(t, c, 3);
  const auto r = estimate_t1(lab, 20.0, T1Options{200});
  EXPECT_EQ(r.estimate.method, Method::bootstrap);
  EXPECT_GT(r.estimate.sigma, 0.0);
}

TEST(Snr, IdenticalCloudsAreZero) {
  const std::vector<IqSample> a{at(0, 0), at(1, 0), at(0, 1), at(1, 1)};
  EXPECT_EQ(snr_objective(a, a), 0.0);
}

TEST(Snr, SeparationOneVarianceEighth) {
  // Points at distance sqrt(0.125) from their centroid.
  const double r = std::sqrt(0.125);
  const std::vector<IqSample> c0{at(r, 0), at(-r, 0)};
  const std::vector<IqSample> c1{at(1 + r, 0), at(1 - r, 0)};
  EXPECT_NEAR(snr_objective(c0, c1), 2.0, 1e-12);
}

TEST(Snr, ScaleInvariant) {
  Rng rng(4);
  DeviceTruth t;
  auto c0 = sample_iq(t, 0.0, 0.6, 0, 200, rng);
  auto c1 = sample_iq(t, 0.0, 0.6, 1, 200, rng);
  const double base = snr_objective(c0, c1);
  for (auto* c : {&c0, &c1}) {
    for (auto& s : *c) {
      s.i *= 3.7;
      s.q *= 3.7;
    }
  }
  EXPECT_NEAR(snr_objective(c0, c1), base, 1e-12 * base);
}

TEST(Classify, CentroidAndWorkedValue) {
  IqStats st;
  st.cls[0] = {0.0, 0.0, 1.0};
  st.cls[1] = {2.0, 0.0, 4.0};
  EXPECT_EQ(iq_classify(st, at(0, 0)), 0);
  EXPECT_EQ(iq_classify(st, at(1.4, 0)), 1);
}

TEST(Classify, TieGoesToZero) {
  IqStats st;
  st.cls[0] = {0.5, 0.5, 1.0};
  st.cls[1] = {0.5, 0.5, 4.0};
  EXPECT_EQ(iq_classify(st, at(0.5, 0.5)), 0);
}

TEST(Classify, Untrained) {
  try {
    iq_classify(std::nullopt, at(0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::untrained);
  }
}

TEST(Readout, UpdatesSettingsAndTrainsClassifier) {
  DeviceTruth t;
  Lab lab(t, LabConfig{}, 9);
  CalibrationState s;
  s.ro_amp = 0.3;
  s.ro_detuning = 0.4;
  const auto r = optimize_readout(lab, s, ReadoutOptions{500});
  ASSERT_TRUE(r.updated_state->iq.has_value());
  EXPECT_GT(r.estimate.value, 0.0);
  EXPECT_TRUE(r.simplex_trace.has_value());
  EXPECT_LE(r.simplex_trace->iterations, 20);
  EXPECT_EQ(r.budget.ping, 0);
  EXPECT_TRUE(additive(r));
  // Passive reset throughout.
  EXPECT_EQ(r.budget.reset, r.estimate.shots_used * lab.config().timing.passive_reset);
  EXPECT_EQ(r.decisions, r.simplex_trace->evaluations);
}

TEST(Readout, ZeroAmplitudeHasNoSignal) {
  DeviceTruth t;
  Lab lab(t, LabConfig{}, 9);
  const auto c0 = lab.measure_iq(0.0, 0.0, 0, 500);
  const auto c1 = lab.measure_iq(0.0, 0.0, 1, 500);
  EXPECT_LT(snr_objective(c0, c1), 0.2);
}

TEST(Readout, RejectsTooFewShots) {
  Lab lab(DeviceTruth{}, LabConfig{}, 1);
  EXPECT_THROW(optimize_readout(lab, CalibrationState{}, ReadoutOptions{5}), Error);
}

TEST(Resonance, NoiselessLorentzianOffPeakBracket) {
  DeviceTruth t;
  t.f01 = 0.2;
  t.spec_linewidth = 0.5;
  Lab lab(t, noiseless(), 1);
  CalibrationState s;
  s.f_drive = t.f01 + 5 * t.spec_linewidth;
  ResonanceOptions o;
  o.bracket_width = 30 * t.spec_linewidth;
  o.shots_per_point = 1'000'000;
  const auto r = find_resonance(lab, s, o);
  EXPECT_LT(std::abs(r.estimate.value - t.f01), t.spec_linewidth / 10);
  EXPECT_EQ(r.updated_state->f_drive, r.estimate.value);
  EXPECT_EQ(r.bracket_trace->evaluations, 13);
  EXPECT_EQ(r.raw.size(), 13u);
  EXPECT_TRUE(additive(r));
}

TEST(Resonance, CentredBracketBoundedByFinalWidth) {
  DeviceTruth t;
  for (std::int64_t shots : {10, 100, 1000}) {
    Lab lab(t, noiseless(), 1);
    CalibrationState s;
    s.f_drive = t.f01;
    ResonanceOptions o;
    o.shots_per_point = shots;
    const auto r = find_resonance(lab, s, o);
    const double width = r.bracket_trace->b - r.bracket_trace->a;
    EXPECT_LE(std::abs(r.estimate.value - t.f01), width);
  }
}

TEST(PiTrain, ScalesAndAngleError) {
  const auto sc = train_scales(21);
  EXPECT_DOUBLE_EQ(sc[0], 1.0 - 1.0 / 42.0);
  EXPECT_DOUBLE_EQ(sc[2], 1.0 + 1.0 / 42.0);
  // Worked example: wrapped phase -0.58 pi against target pi.
  EXPECT_NEAR(train_angle_error(-0.58 * kPi, 21), 0.02 * kPi, 1e-12);
}

TEST(PiTrain, ExactPulsesUnchanged) {
  const DeviceTruth t = clean_truth();
  Lab lab(t, noiseless(), 1);
  const auto s = exact_state(t);
  const auto r = calibrate_pi(lab, s);
  EXPECT_NEAR(r.estimate.value, 0.0, 1e-12);
  EXPECT_NEAR(r.updated_state->a_pi, s.a_pi, 1e-12);
  EXPECT_TRUE(additive(r));
}

TEST(PiTrain, TwoPercentOverRotation) {
  // The outer points of the train sample the cosine at n(1 +- 1/2n) alpha,
  // which is a quarter period only when alpha = pi; at alpha = 1.02 pi the
  // estimated phase is -0.5826 pi rather than -0.58 pi.
  const DeviceTruth t = clean_truth();
  Lab lab(t, noiseless(), 1);
  auto s = exact_state(t);
  s.a_pi *= 1.02;
  const auto r = calibrate_pi(lab, s);
  EXPECT_NEAR(r.estimate.value / kPi, 0.02, 2e-4);
  EXPECT_NEAR(r.updated_state->a_pi / (kPi / t.rabi_per_amp), 1.0, 2e-4);
}

TEST(PiHalf, ExactPulsesUnchanged) {
  const DeviceTruth t = clean_truth();
  Lab lab(t, noiseless(), 1);
  const auto s = exact_state(t);
  const auto r = calibrate_pi_half(lab, s);
  EXPECT_NEAR(r.estimate.value, 0.0, 1e-12);
  EXPECT_NEAR(r.updated_state->a_pi2, s.a_pi2, 1e-12);
}

TEST(PiHalf, PerPulseErrorIsHalved) {
  const DeviceTruth t = clean_truth();
  Lab lab(t, noiseless(), 1);
  auto s = exact_state(t);
  s.a_pi2 *= 1.02;
  const auto r = calibrate_pi_half(lab, s);
  EXPECT_NEAR(r.estimate.value / kPi, 0.01, 1e-4);
}

TEST(PiHalf, RatioConsistencyAfterBoth) {
  DeviceTruth t;
  Lab lab(t, LabConfig{}, 12);
  CalibrationState s;
  s.a_pi = 0.49;
  s.a_pi2 = 0.255;
  for (int k = 0; k < 3; ++k) {
    s = *calibrate_pi(lab, s).updated_state;
    s = *calibrate_pi_half(lab, s).updated_state;
  }
  const double ratio = s.a_pi2 / s.a_pi;
  EXPECT_GE(ratio, 0.49);
  EXPECT_LE(ratio, 0.51);
}

TEST(Ramsey, OnResonanceNoUpdate) {
  const DeviceTruth t = clean_truth();
  Lab lab(t, noiseless(), 1);
  const auto r = calibrate_frequency_ramsey(lab, exact_state(t), RamseyOptions{1.0});
  EXPECT_NEAR(r.estimate.value, 0.0, 1e-12);
}

TEST(Ramsey, FiftyKilohertz) {
  DeviceTruth t = clean_truth();
  t.f01 = 0.05;
  Lab lab(t, noiseless(), 1);
  CalibrationState s;
  const auto r = calibrate_frequency_ramsey(lab, s, RamseyOptions{1.0});
  EXPECT_NEAR(r.estimate.value, 0.05, 1e-9);
  EXPECT_NEAR(r.updated_state->f_drive, 0.05, 1e-9);
  ASSERT_EQ(r.raw.size(), 3u);
  EXPECT_NEAR(r.raw[0].coord, 0.25, 1e-15);
  EXPECT_NEAR(r.raw[2].coord, -0.25, 1e-15);
}

TEST(Ramsey, GuessShiftsTheSamplingCentre) {
  DeviceTruth t = clean_truth();
  t.f01 = 0.31;
  Lab lab(t, noiseless(), 1);
  RamseyOptions o{1.0};
  o.detuning_guess = 0.3;
  const auto r = calibrate_frequency_ramsey(lab, CalibrationState{}, o);
  EXPECT_NEAR(r.estimate.value, 0.31, 1e-9);
}

TEST(Crb, NoiselessFidelity) {
  DeviceTruth t = clean_truth();
  t.gamma1 = 0.001 / (t.c_coh * 0.075);
  Lab lab(t, noiseless(), 1);
  CrbOptions o;
  o.shots = 1'000'000;
  const auto r = run_crb_ade(lab, exact_state(t), o);
  EXPECT_NEAR(r.estimate.value, 0.999, 1e-6);
  EXPECT_EQ(r.raw[1].coord, 334);
  EXPECT_TRUE(additive(r));
}

TEST(Crb, IdealGatesCannotBeBenchmarked) {
  DeviceTruth t = clean_truth();
  t.gamma1 = 1e-300;
  t.c_coh = 0.0;
  Lab lab(t, noiseless(), 1);
  try {
    run_crb_ade(lab, exact_state(t));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::capture_failure);
  }
}

TEST(Crb, ReadoutCostScalesWithSequenceLength) {
  DeviceTruth t;
  Lab lab(t, LabConfig{}, 1);
  CrbOptions o;
  o.shots = 10;
  o.sequences_per_length = 2;
  const TimingBudget before = lab.clock().ledger();
  measure_crb_length(lab, CalibrationState{}, 99, o);
  const TimingBudget d = lab.clock().ledger() - before;
  EXPECT_EQ(d.seq, 20 * 100 * lab.config().timing.clifford);
  EXPECT_EQ(d.meas, 20 * lab.config().timing.readout);
}

TEST(DenseFit, NoiselessRecoversAllParameters) {
  std::vector<double> m, y;
  for (double len : {1.0, 50.0, 150.0, 334.0, 600.0, 1000.0, 1500.0}) {
    m.push_back(len);
    y.push_back(0.48 + 0.47 * std::pow(0.998, len));
  }
  const auto f = fit_exponential_decay(m, y);
  EXPECT_NEAR(f.p, 0.998, 1e-6);
  EXPECT_NEAR(f.amplitude, 0.47, 1e-6);
  EXPECT_NEAR(f.offset, 0.48, 1e-6);
}

TEST(DenseFit, RelabelingSymmetry) {
  std::vector<double> m, y, flipped;
  for (double len : {1.0, 80.0, 300.0, 700.0, 1200.0}) {
    m.push_back(len);
    y.push_back(0.5 + 0.45 * std::pow(0.997, len));
    flipped.push_back(1.0 - y.back());
  }
  const auto a = fit_exponential_decay(m, y);
  const auto b = fit_exponential_decay(m, flipped);
  EXPECT_NEAR(a.p, b.p, 1e-9);
  EXPECT_NEAR(a.amplitude, -b.amplitude, 1e-6);
  EXPECT_NEAR(a.offset, 1.0 - b.offset, 1e-6);
}

TEST(DenseFit, NeedsFourLengths) {
  EXPECT_THROW(fit_exponential_decay({1, 2, 3}, {0.9, 0.8, 0.7}), Error);
  EXPECT_THROW(fit_exponential_decay({1, 1, 2, 3}, {0.9, 0.9, 0.8, 0.7}), Error);
}

// ADE uses three of the dense lengths; both see the same shots.
TEST(Crb, AdeAgreesWithDenseFitOnMatchedData) {
  DeviceTruth t;
  const std::vector<std::int64_t> lengths{1, 100, 200, 334, 500, 700, 1000};
  CrbOptions o;
  int agree = 0, runs = 0;
  for (int seed = 0; seed < 200; ++seed) {
    Lab lab(t, LabConfig{}, 300 + seed);
    std::vector<RawPoint> pts;
    for (auto len : lengths) pts.push_back(measure_crb_length(lab, CalibrationState{}, len, o));
    ThreePointSample s;
    std::vector<double> m, y, var;
    int k = 0;
    for (const auto& p : pts) {
      m.push_back(p.coord);
      y.push_back(p.p);
      var.push_back(point_variance(p.p, p.shots));
      if (p.coord == 1 || p.coord == 334 || p.coord == 1000) {
        s.p[k] = p.p;
        s.n[k] = p.shots;
        s.coords[k] = p.coord;
        ++k;
      }
    }
    try {
      const auto ade = clifford_fidelity(s);
      const auto fit = fit_exponential_decay(m, y, var);
      const double dense = 0.5 * (1 + fit.p);
      const double sigma = std::hypot(ade.sigma, 0.5 * fit.sigma_p);
      ++runs;
      agree += std::abs(ade.value - dense) < 2 * sigma ? 1 : 0;
    } catch (const Error&) {
    }
  }
  ASSERT_GE(runs, 190);
  EXPECT_GE(agree, static_cast<int>(std::ceil(0.95 * runs)));
}

TEST(Contraction, NoiselessOneStepReducesErrorTenfold) {
  const DeviceTruth t = clean_truth();
  const auto exact = exact_state(t);
  // pi amplitude
  for (double e : {-0.03, -0.01, 0.005, 0.02, 0.04}) {
    Lab lab(t, noiseless(), 1);
    auto s = exact;
    s.a_pi *= 1 + e;
    const double after = calibrate_pi(lab, s).updated_state->a_pi / exact.a_pi - 1;
    EXPECT_LT(std::abs(after), std::abs(e) / 10) << e;
  }
  // pi/2 amplitude
  for (double e : {-0.02, 0.01, 0.03}) {
    Lab lab(t, noiseless(), 1);
    auto s = exact;
    s.a_pi2 *= 1 + e;
    const double after = calibrate_pi_half(lab, s).updated_state->a_pi2 / exact.a_pi2 - 1;
    EXPECT_LT(std::abs(after), std::abs(e) / 10) << e;
  }
  // drive frequency
  for (double d : {-0.2, -0.05, 0.1, 0.2}) {
    DeviceTruth tt = t;
    tt.f01 = d;
    Lab lab(tt, noiseless(), 1);
    const double after = calibrate_frequency_ramsey(lab, CalibrationState{}, RamseyOptions{1.0})
                             .updated_state->f_drive - d;
    EXPECT_LT(std::abs(after), std::abs(d) / 10) << d;
  }
}

TEST(Timing, BudgetsAddUpForEveryPrimitive) {
  DeviceTruth t;
  Lab lab(t, LabConfig{}, 3);
  CalibrationState s;
  EXPECT_TRUE(additive(estimate_t1(lab, 20.0)));
  EXPECT_TRUE(additive(optimize_readout(lab, s)));
  EXPECT_TRUE(additive(find_resonance(lab, s)));
  EXPECT_TRUE(additive(calibrate_pi(lab, s)));
  EXPECT_TRUE(additive(calibrate_pi_half(lab, s)));
  EXPECT_TRUE(additive(calibrate_frequency_ramsey(lab, s)));
  EXPECT_TRUE(additive(run_crb_ade(lab, s)));
  EXPECT_TRUE(additive(run_crb_dense(lab, s, {1, 100, 300, 1000})));
}
