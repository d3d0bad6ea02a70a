#include "sparsecal/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsecal/error.hpp"

namespace sparsecal {

std::string_view to_string(SimplexAction a) {
  switch (a) {
    case SimplexAction::init: return "init";
    case SimplexAction::reflect: return "reflect";
    case SimplexAction::expand: return "expand";
    case SimplexAction::contract_outside: return "contract_outside";
    case SimplexAction::contract_inside: return "contract_inside";
    case SimplexAction::shrink: return "shrink";
  }
  return "?";
}

namespace {

std::vector<double> affine(const std::vector<double>& c, const std::vector<double>& w, double t) {
  // c + t (w - c)
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] + t * (w[i] - c[i]);
  return out;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                             const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  require(n >= 1, "Nelder-Mead needs at least one dimension");
  require(opts.scale.size() == n, "scale must match the dimension of x0");
  require(opts.max_iter >= 1, "max_iter must be >= 1");
  for (double s : opts.scale) require(s > 0.0, "scale components must be > 0");

  // Internally always minimize.
  const double sign = opts.goal == Goal::maximize ? -1.0 : 1.0;
  NelderMeadResult res;
  int iteration = 0;
  auto eval = [&](const std::vector<double>& x, SimplexAction action) {
    const double v = objective(x);
    ++res.evaluations;
    res.trace.push_back({x, v, action, iteration});
    return sign * v;
  };

  std::vector<SimplexVertex> simplex;
  simplex.push_back({x0, eval(x0, SimplexAction::init)});
  for (std::size_t k = 0; k < n; ++k) {
    auto x = x0;
    x[k] += opts.scale[k];
    simplex.push_back({x, eval(x, SimplexAction::init)});
  }
  auto by_value = [](const SimplexVertex& a, const SimplexVertex& b) { return a.value < b.value; };
  std::stable_sort(simplex.begin(), simplex.end(), by_value);

  const double initial_spread = simplex.back().value - simplex.front().value;
  const double f_tol = opts.f_tol_rel * initial_spread;

  auto converged = [&] {
    double diameter = 0.0;
    for (std::size_t v = 1; v <= n; ++v) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = (simplex[v].x[k] - simplex[0].x[k]) / opts.scale[k];
        d2 += d * d;
      }
      diameter = std::max(diameter, std::sqrt(d2));
    }
    const double spread = simplex.back().value - simplex.front().value;
    return diameter < opts.x_tol && spread <= f_tol;
  };

  auto snapshot = [&] {
    auto s = simplex;
    for (auto& v : s) v.value *= sign;
    res.simplexes.push_back(std::move(s));
    res.best_history.push_back(sign * simplex.front().value);
  };

  while (iteration < opts.max_iter) {
    if (converged()) {
      res.converged = true;
      break;
    }
    ++iteration;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v].x[k] / static_cast<double>(n);
    }
    SimplexVertex& worst = simplex[n];
    const double f_best = simplex.front().value;
    const double f_second = simplex[n - 1].value;

    auto xr = affine(centroid, worst.x, -1.0);
    const double fr = eval(xr, SimplexAction::reflect);
    if (fr < f_best) {
      auto xe = affine(centroid, worst.x, -2.0);
      const double fe = eval(xe, SimplexAction::expand);
      worst = fe < fr ? SimplexVertex{xe, fe} : SimplexVertex{xr, fr};
    } else if (fr < f_second) {
      worst = {xr, fr};
    } else {
      bool accepted = false;
      if (fr < worst.value) {
        auto xc = affine(centroid, xr, 0.5);
        const double fc = eval(xc, SimplexAction::contract_outside);
        if (fc <= fr) {
          worst = {xc, fc};
          accepted = true;
        }
      } else {
        auto xc = affine(centroid, worst.x, 0.5);
        const double fc = eval(xc, SimplexAction::contract_inside);
        if (fc < worst.value) {
          worst = {xc, fc};
          accepted = true;
        }
      }
      if (!accepted) {
        for (std::size_t v = 1; v <= n; ++v) {
          simplex[v].x = affine(simplex[0].x, simplex[v].x, 0.5);
          simplex[v].value = eval(simplex[v].x, SimplexAction::shrink);
        }
      }
    }
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    snapshot();
  }
  if (!res.converged && converged()) res.converged = true;

  res.iterations = iteration;
  res.x = simplex.front().x;
  res.value = sign * simplex.front().value;
  return res;
}

GoldenResult golden_section(const ScalarObjective& objective, double a, double b,
                            const GoldenOptions& opts) {
  require(a < b, "golden-section bracket needs a < b");
  require(opts.n_iter >= 1 || opts.width_tol > 0.0, "golden-section needs a stopping rule");
  const double r = kGoldenRatioConj;
  // Compare in "larger is better" form.
  const double sign = opts.goal == Goal::maximize ? 1.0 : -1.0;

  GoldenResult res;
  auto eval = [&](double x) {
    ++res.evaluations;
    return sign * objective(x);
  };

  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  const int max_iter = opts.n_iter >= 1 ? opts.n_iter : 1000;

  for (int it = 0; it < max_iter; ++it) {
    if (opts.width_tol > 0.0 && b - a <= opts.width_tol) break;
    res.trace.push_back({a, b, x1, x2, sign * f1, sign * f2});
    const bool more = it + 1 < max_iter;
    // Ties keep the left sub-interval.
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      if (more) f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      if (more) f2 = eval(x2);
    }
    ++res.iterations;
  }
  res.a = a;
  res.b = b;
  res.x_best = 0.5 * (a + b);
  return res;
}

}  // namespace sparsecal
