#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace sparsecal {

enum class Goal { minimize, maximize };

enum class SimplexAction { init, reflect, expand, contract_outside, contract_inside, shrink };

std::string_view to_string(SimplexAction a);

struct SimplexVertex {
  std::vector<double> x;
  double value = 0.0;
};

/// One objective evaluation, in evaluation order.
struct TracePoint {
  std::vector<double> x;
  double value = 0.0;
  SimplexAction action = SimplexAction::init;
  int iteration = 0;
};

struct NelderMeadOptions {
  std::vector<double> scale;  ///< initial simplex edge per coordinate
  double x_tol = 1e-3;        ///< simplex diameter, in units of scale
  double f_tol_rel = 1e-3;    ///< objective spread, relative to the initial spread
  int max_iter = 100;
  Goal goal = Goal::minimize;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
  std::vector<double> best_history;                 ///< best value after each iteration
  std::vector<std::vector<SimplexVertex>> simplexes;  ///< simplex after each iteration
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Nelder-Mead with reflection 1, expansion 2, contraction 0.5, shrink 0.5.
/// Stops when the simplex diameter and the spread of vertex values both fall
/// below tolerance, or after max_iter iterations.
NelderMeadResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                             const NelderMeadOptions& opts);

/// 1/phi, the per-iteration bracket shrink factor.
inline constexpr double kGoldenRatioConj = 0.6180339887498949;

struct BracketStep {
  double a = 0.0;
  double b = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
};

struct GoldenOptions {
  int n_iter = 12;
  double width_tol = 0.0;  ///< also stop once the bracket is narrower than this
  Goal goal = Goal::maximize;
};

struct GoldenResult {
  double x_best = 0.0;
  double a = 0.0;
  double b = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::vector<BracketStep> trace;  ///< bracket before each iteration
};

using ScalarObjective = std::function<double(double)>;

/// Golden-section search on [a, b]. The first iteration evaluates both
/// interior probes; every later iteration reuses one and evaluates one.
/// Returns the midpoint of the final bracket.
GoldenResult golden_section(const ScalarObjective& objective, double a, double b,
                            const GoldenOptions& opts);

}  // namespace sparsecal
