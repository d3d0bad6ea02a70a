#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sparsecal/error.hpp"
#include "sparsecal/estimators.hpp"

using namespace sparsecal;

namespace {

constexpr double kPi = std::numbers::pi;

ThreePointSample sample(std::array<double, 3> p, std::array<double, 3> coords,
                        std::array<std::int64_t, 3> n = {1, 1, 1}) {
  ThreePointSample s;
  s.p = p;
  s.coords = coords;
  s.n = n;
  return s;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::precondition;
}

double stddev(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(AdeRatio, HalvingDecay) {
  EXPECT_NEAR(ade_ratio(sample({1.0, 0.5, 0.125}, {0, 1, 3})), 1.75, 1e-15);
}

TEST(AdeRatio, SpamOffsetExample) {
  EXPECT_NEAR(ade_ratio(sample({0.627492, 0.420478, 0.316305}, {0.1, 0.6, 1.6})), 1.503217, 5e-7);
}

TEST(AdeRatio, FlatSignalIsDegenerate) {
  EXPECT_EQ(code_of([] { ade_ratio(sample({0.4, 0.4, 0.2}, {0, 1, 3})); }),
            Errc::degenerate_denominator);
}

TEST(AdeRate, HalvingDecayGivesUnitRate) {
  const double d = std::log(2.0);
  EXPECT_NEAR(decay_rate_from_ratio(1.75, d), 1.0, 1e-14);
  EXPECT_NEAR(ade_rate(sample({1.0, 0.5, 0.125}, ade_schedule(0.0, d))).value, 1.0, 1e-14);
}

TEST(AdeRate, SpamIndependentExample) {
  EXPECT_NEAR(decay_rate_from_ratio(1.503217, 0.5), 2.0, 1e-4);
  const auto e = ade_rate(sample({0.627492, 0.420478, 0.316305}, ade_schedule(0.1, 0.5)));
  EXPECT_NEAR(e.value, 2.0, 1e-4);
}

TEST(AdeRate, OutOfCaptureRange) {
  EXPECT_EQ(code_of([] { decay_rate_from_ratio(3.2, 1.0); }), Errc::out_of_capture_range);
  EXPECT_EQ(code_of([] { decay_rate_from_ratio(1.0, 1.0); }), Errc::out_of_capture_range);
  EXPECT_EQ(code_of([] { decay_rate_from_ratio(0.5, 1.0); }), Errc::out_of_capture_range);
}

TEST(AdeRate, RejectsScheduleWithoutOneToThreeSpacing) {
  EXPECT_EQ(code_of([] { ade_rate(sample({1.0, 0.5, 0.125}, {0, 1, 2})); }), Errc::precondition);
}

TEST(AdeDecayBase, CrbWorkedExample) {
  const auto s = sample({0.999, 0.756195, 0.567532}, {1, 334, 1000});
  EXPECT_NEAR(ade_decay_base(s).value, 0.998, 1e-6);
  EXPECT_NEAR(clifford_fidelity(s).value, 0.999, 1e-6);
}

TEST(AdeDecayBase, OneThreeThirtyFourThousandSchedule) {
  const auto c = ade_schedule(1, 333);
  EXPECT_EQ(c[0], 1);
  EXPECT_EQ(c[1], 334);
  EXPECT_EQ(c[2], 1000);
}

TEST(AdeDecayBase, AffineInvariance) {
  const auto s = sample({0.999, 0.756195, 0.567532}, {1, 334, 1000});
  auto t = s;
  for (double& p : t.p) p = 0.03 + 0.8 * p;
  EXPECT_NEAR(ade_decay_base(t).value, ade_decay_base(s).value, 1e-13);
  for (double& p : t.p) p = 1.0 - p;
  EXPECT_NEAR(ade_decay_base(t).value, ade_decay_base(s).value, 1e-13);
}

TEST(Spe, OnTarget) {
  EXPECT_EQ(spe_phase(sample({0.5, 0.9, 0.5}, {})).value, 0.0);
}

TEST(Spe, WorkedExample) {
  EXPECT_NEAR(spe_phase(sample({0.632984, 0.929901, 0.367016}, {})).value, 0.3, 1e-6);
}

TEST(Spe, Quadrature) {
  EXPECT_NEAR(spe_phase(sample({0.8, 0.5, 0.2}, {})).value, kPi / 2, 1e-15);
}

TEST(Spe, SeamMapsToPositivePi) {
  EXPECT_EQ(spe_phase(sample({0.5, 0.1, 0.5}, {})).value, kPi);
}

TEST(Spe, NoContrast) {
  EXPECT_EQ(code_of([] { spe_phase(sample({0.5, 0.5, 0.5}, {})); }), Errc::no_contrast);
}

TEST(Propagation, VanishesWithShots) {
  const auto few = sample({0.9, 0.5, 0.2}, ade_schedule(0, 1), {50, 50, 50});
  const auto many = sample({0.9, 0.5, 0.2}, ade_schedule(0, 1), {50'000'000, 50'000'000, 50'000'000});
  EXPECT_NEAR(propagate_sigma(EstimatorId::ade_rate, many) / propagate_sigma(EstimatorId::ade_rate, few),
              1e-3, 1e-9);
}

TEST(Propagation, FloorAtBoundaryProbabilities) {
  EXPECT_DOUBLE_EQ(point_variance(0.0, 50), 1.0 / (52.0 * 52.0));
  EXPECT_DOUBLE_EQ(point_variance(1.0, 8), 0.01);
  const auto s = sample({1.0, 0.5, 0.0}, ade_schedule(0, 1), {50, 50, 50});
  EXPECT_GT(propagate_sigma(EstimatorId::ade_rate, s), 0.0);
}

// Direct resampling of the three binomials; the analytic sigma must track it.
TEST(Propagation, MatchesMonteCarloOracle) {
  const auto s = sample({0.9, 0.5, 0.2}, ade_schedule(0, 1), {50, 50, 50});
  Rng rng(2024, Stream::bootstrap);
  std::vector<double> rates;
  for (int k = 0; k < 100'000; ++k) {
    ThreePointSample d = s;
    for (int i = 0; i < 3; ++i) d.p[i] = static_cast<double>(rng.binomial(50, s.p[i])) / 50.0;
    try {
      rates.push_back(decay_rate_from_ratio(ade_ratio(d), 1.0));
    } catch (const Error&) {
    }
  }
  ASSERT_GT(rates.size(), 90'000u);
  const double analytic = propagate_sigma(EstimatorId::ade_rate, s);
  EXPECT_NEAR(analytic / stddev(rates), 1.0, 0.15);
}

TEST(Propagation, SpeMatchesMonteCarloOracle) {
  const auto s = sample({0.632984, 0.929901, 0.367016}, {}, {400, 400, 400});
  Rng rng(17, Stream::bootstrap);
  std::vector<double> thetas;
  for (int k = 0; k < 50'000; ++k) {
    ThreePointSample d = s;
    for (int i = 0; i < 3; ++i) d.p[i] = static_cast<double>(rng.binomial(400, s.p[i])) / 400.0;
    thetas.push_back(spe_phase(d).value);
  }
  EXPECT_NEAR(propagate_sigma(EstimatorId::spe_phase, s) / stddev(thetas), 1.0, 0.1);
}

TEST(Bootstrap, ZeroVarianceShots) {
  // Every shot of a point agrees, so each replicate reproduces the data.
  Rng rng(1, Stream::bootstrap);
  const std::array<ShotRecord, 3> rec{{{100, 100}, {100, 100}, {0, 100}}};
  const auto r = bootstrap(EstimatorId::spe_phase, rec, {}, 300, rng);
  EXPECT_EQ(r.estimate.sigma, 0.0);
  EXPECT_NEAR(r.estimate.value, kPi / 4, 1e-15);
  EXPECT_EQ(r.estimate.method, Method::bootstrap);
  EXPECT_EQ(r.invalid, 0);
}

TEST(Bootstrap, NeedsTwoReplicates) {
  Rng rng(1, Stream::bootstrap);
  const std::array<ShotRecord, 3> rec{{{90, 100}, {50, 100}, {20, 100}}};
  EXPECT_EQ(code_of([&] { bootstrap(EstimatorId::ade_rate, rec, ade_schedule(0, 1), 1, rng); }),
            Errc::precondition);
}

TEST(Bootstrap, AgreesWithPropagationInGaussianRegime) {
  const double rate = 0.7;
  const auto coords = ade_schedule(0.0, 1.0);
  Rng shots(5, Stream::shots);
  Rng rng(5, Stream::bootstrap);
  std::array<ShotRecord, 3> rec;
  ThreePointSample s;
  s.coords = coords;
  for (int i = 0; i < 3; ++i) {
    const double p = 0.05 + 0.9 * std::exp(-rate * coords[i]);
    rec[i] = {shots.binomial(200, p), 200};
    s.p[i] = static_cast<double>(rec[i].successes) / 200.0;
    s.n[i] = 200;
  }
  const auto boot = bootstrap(EstimatorId::ade_rate, rec, coords, 300, rng);
  EXPECT_NEAR(boot.estimate.sigma / propagate_sigma(EstimatorId::ade_rate, s), 1.0, 0.2);
}

TEST(Bootstrap, TooManyInvalidReplicates) {
  // Nearly flat data: most replicates leave the capture range.
  Rng rng(3, Stream::bootstrap);
  const std::array<ShotRecord, 3> rec{{{10, 20}, {10, 20}, {10, 20}}};
  EXPECT_EQ(code_of([&] { bootstrap(EstimatorId::ade_rate, rec, ade_schedule(0, 1), 300, rng); }),
            Errc::too_many_invalid_replicates);
}

TEST(Bootstrap, SameSeedSameResult) {
  const std::array<ShotRecord, 3> rec{{{45, 50}, {25, 50}, {10, 50}}};
  Rng a(8, Stream::bootstrap), b(8, Stream::bootstrap);
  const auto ra = bootstrap(EstimatorId::ade_rate, rec, ade_schedule(0, 1), 300, a);
  const auto rb = bootstrap(EstimatorId::ade_rate, rec, ade_schedule(0, 1), 300, b);
  EXPECT_EQ(ra.estimate.value, rb.estimate.value);
  EXPECT_EQ(ra.estimate.sigma, rb.estimate.sigma);
  EXPECT_EQ(ra.invalid, rb.invalid);
}

TEST(WrapAngle, HalfOpenRange) {
  EXPECT_EQ(wrap_angle(kPi), kPi);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(21.42 * kPi), -0.58 * kPi, 1e-12);
}
