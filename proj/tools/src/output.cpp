#include "sparsecal/app/output.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace sparsecal::app {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* method_name(Method m) { return m == Method::bootstrap ? "bootstrap" : "analytic"; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f"};

}  // namespace

json provenance(const RunConfig& rc) {
  return {{"seed", rc.seed}, {"config_hash", rc.hash}, {"schema_version", kSchemaVersion}};
}

json to_json(const Estimate& e) {
  return {{"value", e.value},
          {"sigma", e.sigma},
          {"shots_used", e.shots_used},
          {"t_decision_ms", e.t_decision_ms},
          {"method", method_name(e.method)}};
}

json to_json(const TimingBudget& b) {
  return {{"seq", b.seq},
          {"meas", b.meas},
          {"reset", b.reset},
          {"analysis", b.analysis},
          {"ping", b.ping},
          {"total", b.total()}};
}

json to_json(const CalibrationState& s) {
  json j = {{"f_drive", s.f_drive},
            {"a_pi", s.a_pi},
            {"a_pi2", s.a_pi2},
            {"ro_detuning", s.ro_detuning},
            {"ro_amp", s.ro_amp}};
  if (s.iq) {
    json cls = json::array();
    for (const auto& c : s.iq->cls) cls.push_back({{"i", c.i}, {"q", c.q}, {"var", c.var}});
    j["iq"] = cls;
  } else {
    j["iq"] = nullptr;
  }
  return j;
}

json primitive_record(const RunConfig& rc, const std::string& name, const PrimitiveResult* r,
                      const Error* err) {
  json j = provenance(rc);
  j["kind"] = "primitive";
  j["primitive"] = name;
  j["ok"] = err == nullptr;
  if (err) {
    j["error"] = {{"code", to_string(err->code())}, {"message", err->what()}};
    return j;
  }
  j["estimate"] = to_json(r->estimate);
  j["budget_ns"] = to_json(r->budget);
  j["decisions"] = r->decisions;
  j["retries"] = r->retries;
  j["invalid_replicates"] = r->invalid_replicates;
  json raw = json::array();
  for (const auto& p : r->raw) {
    raw.push_back({{"coord", p.coord}, {"p", p.p}, {"shots", p.shots}, {"successes", p.successes}});
  }
  j["raw"] = raw;
  j["state"] = r->updated_state ? to_json(*r->updated_state) : json(nullptr);
  if (r->simplex_trace) {
    const auto& nm = *r->simplex_trace;
    j["simplex"] = {{"x", nm.x},
                    {"value", nm.value},
                    {"iterations", nm.iterations},
                    {"evaluations", nm.evaluations},
                    {"converged", nm.converged},
                    {"best_history", nm.best_history}};
  }
  if (r->bracket_trace) {
    const auto& g = *r->bracket_trace;
    j["bracket"] = {{"x_best", g.x_best},
                    {"a", g.a},
                    {"b", g.b},
                    {"iterations", g.iterations},
                    {"evaluations", g.evaluations}};
  }
  return j;
}

json cycle_record(const RunConfig& rc, const CycleRecord& r) {
  json j = provenance(rc);
  j["kind"] = "cycle";
  j["index"] = r.index;
  j["t_start_ms"] = r.t_start_ms;
  j["duration_ms"] = r.duration_ms;
  j["overrun"] = r.overrun;
  j["eps_a"] = optional_number(r.eps_a);
  j["eps_b"] = optional_number(r.eps_b);
  j["gamma1_hat"] = optional_number(r.gamma1_hat);
  j["delta_f_hat"] = optional_number(r.delta_f_hat);
  j["a_pi"] = r.a_pi;
  j["a_pi2"] = r.a_pi2;
  json failed, budgets;
  for (int s = 0; s < kSteps; ++s) {
    const char* name = to_string(static_cast<Step>(s));
    failed[name] = r.failed[s];
    budgets[name] = to_json(r.budgets[s]);
  }
  j["failed"] = failed;
  j["budgets_ns"] = budgets;
  j["true_gamma1"] = r.true_gamma1;
  j["true_f01"] = r.true_f01;
  j["true_rabi"] = r.true_rabi;
  j["true_eps_a"] = r.true_eps_a;
  j["true_eps_b"] = r.true_eps_b;
  return j;
}

json summary_json(const CampaignSummary& s) {
  return {{"cycles", s.cycles},
          {"mean_eps_a", s.mean_eps_a},
          {"mean_eps_b", s.mean_eps_b},
          {"reduction_pct", s.reduction_pct},
          {"overruns", s.overruns},
          {"failures", s.failures},
          {"sim_time_s", s.sim_time_s}};
}

std::string table_preamble(const RunConfig& rc) {
  return fmt::format("# seed={} config_hash={} schema_version={}\n", rc.seed, rc.hash,
                     kSchemaVersion);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::precondition, "cannot write " + tmp);
    out << text;
    if (!out) fail(Errc::precondition, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string render_svg(const Figure& fig, const RunConfig& rc) {
  constexpr double W = 660, H = 420, L = 90, R = 150, T = 40, B = 55;
  auto tx = [&](double v) { return fig.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return fig.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!fig.log_x || x > 0) && (!fig.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : fig.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H);
  out += fmt::format("<!-- seed={} config_hash={} schema_version={} -->\n", rc.seed, rc.hash,
                     kSchemaVersion);
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000\"/>\n",
                     L, T, W - L - R, H - T - B);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\">{}</text>\n", (W - R + L) / 2,
                     escape(fig.title));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (W - R + L) / 2,
                     H - 12, escape(fig.x_label));
  out += fmt::format(
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      (H - B + T) / 2, (H - B + T) / 2, escape(fig.y_label));
  auto tick = [](double v, bool log) { return fmt::format("{:.3g}", log ? std::pow(10.0, v) : v); };
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double sx = L + (W - L - R) * k / 4.0, sy = H - B - (H - T - B) * k / 4.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", sx,
                       H - B + 16, tick(fx, fig.log_x));
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", L - 6, sy + 4,
                       tick(fy, fig.log_y));
  }
  for (std::size_t k = 0; k < fig.series.size(); ++k) {
    const auto& s = fig.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      if (s.markers) {
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[i]),
                           py(s.y[i]), color);
      } else {
        pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
      }
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
                         color, pts);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", W - R + 10, T + 14 + 16 * k,
                       color, escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sparsecal::app
