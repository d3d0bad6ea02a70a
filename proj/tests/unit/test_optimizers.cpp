#include <gtest/gtest.h>

#include <cmath>

#include "landscape.hpp"
#include "sparsecal/error.hpp"
#include "sparsecal/optimizers.hpp"
#include "sparsecal/primitives.hpp"

using namespace sparsecal;

namespace {

double neg_sq_dist(const std::vector<double>& x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  return -s;
}

double lorentzian(double x, double x0, double gamma) {
  return 1.0 / (1.0 + (x - x0) * (x - x0) / (gamma * gamma));
}

}  // namespace

TEST(NelderMead, ConcaveQuadraticConverges) {
  const std::vector<double> target{0.3, -0.2, 0.7};
  NelderMeadOptions o;
  o.scale = {0.5, 0.5, 0.5};
  o.max_iter = 200;
  o.goal = Goal::maximize;
  const auto r = nelder_mead([&](const auto& x) { return neg_sq_dist(x, target); }, {0, 0, 0}, o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 200);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.x[k], target[k], 1e-3 * 0.5);
}

TEST(NelderMead, Rosenbrock) {
  NelderMeadOptions o;
  o.scale = {0.5, 0.5};
  o.max_iter = 2000;
  o.x_tol = 1e-8;
  o.f_tol_rel = 1e-12;
  const auto r = nelder_mead(
      [](const auto& x) {
        return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
      },
      {-1.2, 1.0}, o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, VertexCountAndMonotoneBest) {
  NelderMeadOptions o;
  o.scale = {1.0, 1.0};
  o.max_iter = 60;
  const auto r = nelder_mead(
      [](const auto& x) { return std::abs(x[0] - 1) + 2 * std::abs(x[1] + 0.5) + std::sin(x[0]); },
      {3, 3}, o);
  ASSERT_EQ(r.simplexes.size(), static_cast<std::size_t>(r.iterations));
  for (const auto& s : r.simplexes) {
    EXPECT_EQ(s.size(), 3u);
    for (std::size_t v = 1; v < s.size(); ++v) EXPECT_LE(s[v - 1].value, s[v].value);
  }
  for (std::size_t i = 1; i < r.best_history.size(); ++i) {
    EXPECT_LE(r.best_history[i], r.best_history[i - 1]);
  }
}

TEST(NelderMead, TraceRecordsEveryEvaluation) {
  NelderMeadOptions o;
  o.scale = {0.1};
  o.max_iter = 15;
  int calls = 0;
  const auto r = nelder_mead([&](const auto& x) { ++calls; return x[0] * x[0]; }, {1.0}, o);
  EXPECT_EQ(r.evaluations, calls);
  EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(calls));
  EXPECT_EQ(r.trace[0].action, SimplexAction::init);
  EXPECT_EQ(r.trace[1].action, SimplexAction::init);
  EXPECT_EQ(to_string(SimplexAction::contract_inside), "contract_inside");
}

TEST(NelderMead, InitialSimplexIsAxisAligned) {
  NelderMeadOptions o;
  o.scale = {0.2, 0.3};
  o.max_iter = 1;
  const auto r = nelder_mead([](const auto& x) { return x[0] + x[1]; }, {1.0, 2.0}, o);
  EXPECT_EQ(r.trace[1].x, (std::vector<double>{1.2, 2.0}));
  EXPECT_EQ(r.trace[2].x, (std::vector<double>{1.0, 2.3}));
}

TEST(NelderMead, Deterministic) {
  NelderMeadOptions o;
  o.scale = {0.4, 0.4};
  auto f = [](const auto& x) { return std::cos(3 * x[0]) + x[1] * x[1] + 0.1 * x[0] * x[1]; };
  const auto a = nelder_mead(f, {0.2, 0.9}, o);
  const auto b = nelder_mead(f, {0.2, 0.9}, o);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(NelderMead, RejectsBadOptions) {
  NelderMeadOptions o;
  o.scale = {0.0};
  EXPECT_THROW(nelder_mead([](const auto& x) { return x[0]; }, {1.0}, o), Error);
  o.scale = {1.0, 1.0};
  EXPECT_THROW(nelder_mead([](const auto& x) { return x[0]; }, {1.0}, o), Error);
  o.scale = {1.0};
  o.max_iter = 0;
  EXPECT_THROW(nelder_mead([](const auto& x) { return x[0]; }, {1.0}, o), Error);
}

TEST(NelderMead, ObjectiveErrorsPropagate) {
  NelderMeadOptions o;
  o.scale = {1.0};
  EXPECT_THROW(nelder_mead([](const auto&) -> double { fail(Errc::fit_failure, "x"); }, {0.0}, o),
               Error);
}

// Noisy readout landscapes against a dense-grid oracle of the expected SNR.
TEST(NelderMead, ReadoutLandscapesReachGridOptimum) {
  int ok = 0;
  for (int s = 0; s < 100; ++s) {
    const auto l = testgen::readout_landscape(1000 + s);
    Lab lab(l.truth, LabConfig{}, 77 + s);
    ReadoutOptions o;
    o.shots_per_eval = 4000;
    o.max_iter = 20;
    const auto r = optimize_readout(lab, l.start, o);
    ASSERT_LE(r.simplex_trace->iterations, 20);
    const double got =
        testgen::expected_snr(l.truth, r.updated_state->ro_detuning, r.updated_state->ro_amp);
    ok += got >= 0.98 * testgen::grid_optimum(l.truth) ? 1 : 0;
  }
  EXPECT_GE(ok, 90);
}

TEST(Golden, WidthShrinksByGoldenRatio) {
  const auto r = golden_section([](double x) { return -(x - 0.3) * (x - 0.3); }, -1.0, 2.0,
                                GoldenOptions{30, 0.0, Goal::maximize});
  ASSERT_EQ(r.trace.size(), 30u);
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const double w = r.trace[k].b - r.trace[k].a;
    EXPECT_NEAR(w / (3.0 * std::pow(kGoldenRatioConj, static_cast<double>(k))), 1.0, 1e-9);
  }
  EXPECT_NEAR((r.b - r.a) / (3.0 * std::pow(kGoldenRatioConj, 30.0)), 1.0, 1e-9);
  EXPECT_NEAR(kGoldenRatioConj, 0.618034, 5e-7);
}

TEST(Golden, ProbeGeometry) {
  const auto r = golden_section([](double x) { return std::sin(x); }, 0.0, 3.0, GoldenOptions{});
  for (const auto& st : r.trace) {
    EXPECT_LT(st.a, st.x1);
    EXPECT_LT(st.x1, st.x2);
    EXPECT_LT(st.x2, st.b);
    EXPECT_NEAR((st.x2 - st.a) / (st.b - st.a), kGoldenRatioConj, 1e-9);
    EXPECT_NEAR((st.b - st.x1) / (st.b - st.a), kGoldenRatioConj, 1e-9);
  }
}

TEST(Golden, OneEvaluationPerIterationAfterTheFirst) {
  int calls = 0;
  const auto r = golden_section([&](double x) { ++calls; return -x * x; }, -1.0, 1.5,
                                GoldenOptions{12, 0.0, Goal::maximize});
  EXPECT_EQ(r.iterations, 12);
  EXPECT_EQ(calls, 13);
  EXPECT_EQ(r.evaluations, calls);
}

TEST(Golden, LorentzianPeakFromThirtyWidths) {
  const double gamma = 0.5, f01 = 0.37;
  const double centre = f01 + 5.0 * gamma;
  const auto r = golden_section([&](double x) { return lorentzian(x, f01, gamma); },
                                centre - 15 * gamma, centre + 15 * gamma, GoldenOptions{});
  EXPECT_LT(std::abs(r.x_best - f01), gamma / 10.0);
  EXPECT_NEAR((r.b - r.a) / gamma, 30.0 * std::pow(kGoldenRatioConj, 12.0), 1e-12);
}

TEST(Golden, MinimizeAndWidthTolerance) {
  GoldenOptions o;
  o.n_iter = 0;
  o.width_tol = 1e-6;
  o.goal = Goal::minimize;
  const auto r = golden_section([](double x) { return (x - 2.5) * (x - 2.5); }, 0.0, 4.0, o);
  EXPECT_LE(r.b - r.a, 1e-6);
  EXPECT_NEAR(r.x_best, 2.5, 1e-6);
}

TEST(Golden, RejectsEmptyBracket) {
  EXPECT_THROW(golden_section([](double x) { return x; }, 1.0, 1.0, GoldenOptions{}), Error);
}
