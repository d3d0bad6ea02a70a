// sparsecal: run calibration primitives, closed-loop campaigns and the
// offline analyses on the simulated device.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>

#include "sparsecal/app/config.hpp"
#include "sparsecal/app/output.hpp"

namespace fs = std::filesystem;
using namespace sparsecal;
using namespace sparsecal::app;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2 };

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Random seed (overrides the config)");
    cmd->add_option("--out", out, "Output directory (overrides the config)");
    cmd->add_option("--set", sets, "Override one key, e.g. --set primitives.t1.shots=100")
        ->take_all();
  }
  RunConfig load() const { return load_config(config, sets, seed, out); }
};

const std::vector<std::string> kPrimitives = {"t1", "readout", "resonance", "pi",
                                              "pi2", "ramsey", "crb-ade", "crb-dense"};

// --- run ---------------------------------------------------------------

PrimitiveResult run_primitive(const std::string& name, Lab& lab, const RunConfig& rc) {
  if (name == "t1") return estimate_t1(lab, rc.t1_guess_us, rc.t1);
  if (name == "readout") return optimize_readout(lab, rc.state, rc.readout);
  if (name == "resonance") return find_resonance(lab, rc.state, rc.resonance);
  if (name == "pi") return calibrate_pi(lab, rc.state, rc.pi);
  if (name == "pi2") return calibrate_pi_half(lab, rc.state, rc.pi2);
  if (name == "ramsey") return calibrate_frequency_ramsey(lab, rc.state, rc.ramsey);
  if (name == "crb-ade") return run_crb_ade(lab, rc.state, rc.crb);
  return run_crb_dense(lab, rc.state, rc.dense_lengths, rc.crb);
}

std::vector<double> span(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

// Sparse measured points over the noiseless response they sample.
Figure overlay(const std::string& name, const PrimitiveResult& r, const RunConfig& rc) {
  Figure f;
  f.title = name + ": sparse points on the model response";
  f.y_label = "P(1)";
  Series pts{"measured", {}, {}, true};
  for (const auto& p : r.raw) {
    pts.x.push_back(p.coord);
    pts.y.push_back(p.p);
  }
  Series model{"model", {}, {}, false};
  const DeviceTruth& t = rc.device;
  const Nanos pulse = rc.lab.timing.pulse;
  auto fill = [&](const std::vector<double>& xs, auto&& fn) {
    for (double x : xs) {
      model.x.push_back(x);
      model.y.push_back(fn(x));
    }
  };
  const double hi = pts.x.empty() ? 1.0 : *std::max_element(pts.x.begin(), pts.x.end());
  const double lo = pts.x.empty() ? 0.0 : *std::min_element(pts.x.begin(), pts.x.end());
  if (name == "t1") {
    f.x_label = "delay (us)";
    fill(span(0.0, 1.3 * hi, 200), [&](double x) { return p1_after_delay(t, x); });
  } else if (name == "pi" || name == "pi2") {
    f.x_label = "amplitude scale";
    const int n = name == "pi" ? rc.pi.n : rc.pi2.n;
    const double w = 2.0 * (hi - lo);
    fill(span(1.0 - w, 1.0 + w, 300), [&](double x) {
      return name == "pi" ? p1_pi_train(t, rc.state, n, x, pulse)
                          : p1_pi_half_pairs(t, rc.state, n, x, pulse);
    });
  } else if (name == "ramsey") {
    f.x_label = "drive detuning (MHz)";
    const double w = hi - lo;
    fill(span(lo - w, hi + w, 300), [&](double x) { return p1_ramsey(t, rc.state, x, rc.ramsey.tau_us); });
  } else if (name == "resonance") {
    f.x_label = "drive offset (MHz)";
    fill(span(lo, hi, 300), [&](double x) { return p1_spectroscopy(t, x); });
  } else if (name == "crb-ade" || name == "crb-dense") {
    f.x_label = "Clifford count";
    f.y_label = "survival";
    fill(span(0.0, 1.1 * hi, 200), [&](double x) {
      return crb_survival(t, rc.state, static_cast<std::int64_t>(std::llround(x)),
                          rc.lab.timing.clifford);
    });
  } else {
    f.title = name + ": best objective per iteration";
    f.x_label = "iteration";
    f.y_label = "objective";
    Series best{"best", {}, {}, false};
    if (r.simplex_trace) {
      for (std::size_t i = 0; i < r.simplex_trace->best_history.size(); ++i) {
        best.x.push_back(static_cast<double>(i));
        best.y.push_back(r.simplex_trace->best_history[i]);
      }
    }
    f.series.push_back(best);
    return f;
  }
  f.series.push_back(model);
  f.series.push_back(pts);
  return f;
}

int cmd_run(const std::string& name, const CommonFlags& flags, bool plot) {
  const RunConfig rc = flags.load();
  Lab lab(rc.device, rc.lab, rc.seed);
  const fs::path dir(rc.output);
  std::optional<PrimitiveResult> result;
  std::optional<Error> failure;
  try {
    result = run_primitive(name, lab, rc);
  } catch (const Error& e) {
    if (e.code() == Errc::precondition) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    }
    failure = e;
  }
  const json rec = primitive_record(rc, name, result ? &*result : nullptr, failure ? &*failure : nullptr);
  write_text(dir / (name + ".ndjson"), rec.dump() + "\n");
  if (failure) {
    std::cerr << name << " failed: " << to_string(failure->code()) << ": " << failure->what() << "\n";
    return kRuntime;
  }
  if (plot) write_text(dir / (name + ".svg"), render_svg(overlay(name, *result, rc), rc));
  const auto& e = result->estimate;
  std::cout << fmt::format("{}\tvalue={:.9g}\tsigma={:.3g}\tt_decision_ms={:.6g}\n", name, e.value,
                           e.sigma, e.t_decision_ms);
  return kOk;
}

// --- campaign ----------------------------------------------------------

std::vector<std::string> complete_lines(const fs::path& path, std::uintmax_t& bytes) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> lines;
  bytes = 0;
  std::size_t start = 0;
  for (std::size_t nl; (nl = text.find('\n', start)) != std::string::npos; start = nl + 1) {
    lines.push_back(text.substr(start, nl - start));
    bytes = nl + 1;
  }
  return lines;
}

void print_summary(const CampaignSummary& s) {
  std::cout << fmt::format(
      "cycles\tmean_eps_a\tmean_eps_b\treduction_pct\toverruns\tfailures\tsim_time_s\n"
      "{}\t{:.6g}\t{:.6g}\t{:.3f}\t{}\t{}\t{:.6g}\n",
      s.cycles, s.mean_eps_a, s.mean_eps_b, s.reduction_pct, s.overruns, s.failures, s.sim_time_s);
}

int cmd_campaign(const CommonFlags& flags, std::optional<std::int64_t> cycles, bool resume) {
  CommonFlags f = flags;
  if (cycles) f.sets.push_back("loop.n_cycles=" + std::to_string(*cycles));
  const RunConfig rc = f.load();
  const fs::path dir(rc.output);
  const fs::path data = dir / "campaign.ndjson";
  const fs::path meta = dir / "campaign.meta.json";
  fs::create_directories(dir);

  std::vector<std::string> existing;
  if (resume && fs::exists(data)) {
    std::ifstream in(meta);
    const json m = json::parse(in, nullptr, false);
    if (m.is_discarded() || !m.contains("schema_version")) {
      fail(Errc::schema, "resume: missing or unreadable " + meta.string());
    }
    if (m["schema_version"] != kSchemaVersion) {
      fail(Errc::schema, fmt::format("resume: dataset schema version {} is not supported (expected {})",
                                     m["schema_version"].dump(), kSchemaVersion));
    }
    if (m["seed"] != rc.seed || m["config_hash"] != rc.hash) {
      fail(Errc::config, "resume: existing dataset was produced by a different seed or configuration");
    }
    std::uintmax_t bytes = 0;
    existing = complete_lines(data, bytes);
    if (existing.size() > static_cast<std::size_t>(rc.n_cycles)) {
      existing.resize(static_cast<std::size_t>(rc.n_cycles));
      bytes = 0;
      for (const auto& l : existing) bytes += l.size() + 1;
    }
    fs::resize_file(data, bytes);  // drops a torn final line
  } else {
    json m = provenance(rc);
    m["n_cycles"] = rc.n_cycles;
    m["config"] = rc.tree;
    m["config"].erase("output");  // where the files went is not part of the data
    write_text(meta, m.dump(2) + "\n");
    write_text(data, "");
  }

  std::vector<CycleRecord> records;
  CampaignSummary summary;
  if (rc.n_cycles > 0) {
    Campaign camp(campaign_config(rc));
    std::ofstream out(data, std::ios::binary | std::ios::app);
    for (std::int64_t i = 0; i < rc.n_cycles; ++i) {
      records.push_back(camp.run_cycle());
      const std::string line = cycle_record(rc, records.back()).dump();
      if (static_cast<std::size_t>(i) < existing.size()) {
        // Replay: the stored prefix must match the regenerated records.
        if (line != existing[static_cast<std::size_t>(i)]) {
          fail(Errc::precondition, fmt::format("resume: replay diverged at cycle {}", i));
        }
        continue;
      }
      out << line << '\n';
      out.flush();
      if (!out) fail(Errc::precondition, "write failed for " + data.string());
    }
    summary = summarize(records);
    summary.sim_time_s = to_s(camp.lab().clock().now() - camp.origin());
  }
  json sj = provenance(rc);
  sj["summary"] = summary_json(summary);
  write_text(dir / "campaign_summary.tsv",
             table_preamble(rc) +
                 fmt::format("cycles\tmean_eps_a\tmean_eps_b\treduction_pct\toverruns\tfailures\tsim_time_s\n"
                             "{}\t{:.9g}\t{:.9g}\t{:.6f}\t{}\t{}\t{:.9g}\n",
                             summary.cycles, summary.mean_eps_a, summary.mean_eps_b,
                             summary.reduction_pct, summary.overruns, summary.failures,
                             summary.sim_time_s));
  print_summary(summary);
  return kOk;
}

// --- analyze -----------------------------------------------------------

struct Dataset {
  std::uint64_t seed = 0;
  std::string hash;
  std::vector<json> records;
};

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config, "analyze: cannot open dataset " + path.string());
  Dataset d;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(Errc::schema, fmt::format("analyze: line {} is not JSON", n));
    if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion) {
      fail(Errc::schema,
           fmt::format("analyze: line {} has schema version {}, this build reads version {}", n,
                       j.contains("schema_version") ? j["schema_version"].dump() : "none",
                       kSchemaVersion));
    }
    if (j.value("kind", "") != "cycle") fail(Errc::schema, fmt::format("analyze: line {} is not a cycle record", n));
    d.seed = j["seed"].get<std::uint64_t>();
    d.hash = j["config_hash"].get<std::string>();
    d.records.push_back(std::move(j));
  }
  return d;
}

const std::vector<std::string> kChannels = {"eps_a",       "eps_b", "gamma1_hat", "delta_f_hat",
                                            "abs_delta_f", "a_pi",  "a_pi2",      "true_gamma1",
                                            "true_f01"};

// Aligned channel series, starting at the first cycle where every channel
// has a value; later gaps repeat the previous value.
std::map<std::string, TimeSeries> channel_series(const Dataset& d) {
  auto get = [](const json& r, const std::string& ch) -> std::optional<double> {
    const std::string key = ch == "abs_delta_f" ? "delta_f_hat" : ch;
    if (!r.contains(key) || r[key].is_null()) return std::nullopt;
    const double v = r[key].get<double>();
    return ch == "abs_delta_f" ? std::abs(v) : v;
  };
  std::size_t first = 0;
  for (; first < d.records.size(); ++first) {
    bool all = true;
    for (const auto& ch : kChannels) all = all && get(d.records[first], ch).has_value();
    if (all) break;
  }
  std::vector<double> starts;
  for (std::size_t i = first; i < d.records.size(); ++i) {
    starts.push_back(d.records[i]["t_start_ms"].get<double>() * 1e-3);
  }
  std::vector<double> gaps;
  for (std::size_t i = 1; i < starts.size(); ++i) gaps.push_back(starts[i] - starts[i - 1]);
  double dt = 1.0;
  if (!gaps.empty()) {
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    dt = gaps[gaps.size() / 2];
  }
  std::map<std::string, TimeSeries> out;
  for (const auto& ch : kChannels) {
    std::vector<double> v;
    for (std::size_t i = first; i < d.records.size(); ++i) {
      const auto x = get(d.records[i], ch);
      v.push_back(x ? *x : v.back());
    }
    out[ch] = TimeSeries::uniform(std::move(v), dt);
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.9g}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : "nan"; }

void analyze_allan(const std::map<std::string, TimeSeries>& ser, const RunConfig& rc, const fs::path& dir) {
  std::string table = table_preamble(rc) + "channel\ttau_s\tadev\tadev_minus_white\n";
  std::string fits = table_preamble(rc) + "channel\twhite\tflicker\tlorentz_q\ttau_c_s\tresidual\tdegenerate\n";
  for (const auto& ch : {"eps_a", "eps_b", "gamma1_hat", "delta_f_hat", "a_pi", "a_pi2"}) {
    const TimeSeries& s = ser.at(ch);
    const auto taus = log_taus(s, rc.allan_per_decade);
    if (taus.empty()) continue;
    const auto curve = allan_deviation(s, taus);
    AllanFit fit;
    try {
      fit = fit_allan_models(curve);
    } catch (const Error& e) {
      if (e.code() != Errc::insufficient_data) throw;
      fit.degenerate = true;
    }
    const auto excess = subtract_white(curve, fit);
    Figure fig{std::string("Allan deviation: ") + ch, "tau (s)", "Allan deviation", true, true, {}};
    Series a{"adev", {}, {}, true}, m{"model", {}, {}, false}, w{"adev - white", {}, {}, false};
    for (std::size_t i = 0; i < curve.size(); ++i) {
      table += fmt::format("{}\t{}\t{}\t{}\n", ch, num(curve[i].tau), num(curve[i].adev), num(excess[i].adev));
      a.x.push_back(curve[i].tau);
      a.y.push_back(curve[i].adev);
      w.x.push_back(curve[i].tau);
      w.y.push_back(excess[i].adev);
      if (!fit.degenerate) {
        m.x.push_back(curve[i].tau);
        m.y.push_back(fit.adev(curve[i].tau));
      }
    }
    fits += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", ch, num(fit.white), num(fit.flicker),
                        num(fit.lorentz_q), num(fit.tau_c), num(fit.residual), fit.degenerate ? 1 : 0);
    fig.series = {a, m, w};
    write_text(dir / fmt::format("allan_{}.svg", ch), render_svg(fig, rc));
  }
  write_text(dir / "allan.tsv", table);
  write_text(dir / "allan_fit.tsv", fits);
}

const std::vector<std::string> kCorrelated = {"gamma1_hat", "abs_delta_f", "delta_f_hat", "a_pi",
                                              "true_gamma1"};

void analyze_correlations(const std::map<std::string, TimeSeries>& ser, const RunConfig& rc,
                          const fs::path& dir, bool table, bool delta) {
  std::string corr = table_preamble(rc) + "channel\ttau_s\twindow\tc_a\tc_b\n";
  std::string dc = table_preamble(rc) + "channel\ttau_s\twindow\tdelta_c\n";
  Figure fig{"Correlation change from recalibration", "smoothing window (s)", "C(eps_B) - C(eps_A)",
             true, false, {}};
  for (const auto& ch : kCorrelated) {
    const auto pts = delta_correlation(ser.at("eps_a"), ser.at("eps_b"), ser.at(ch), rc.taus_s);
    Series s{ch, {}, {}, false};
    for (const auto& p : pts) {
      corr += fmt::format("{}\t{}\t{}\t{}\t{}\n", ch, num(p.tau), p.window, num(p.c_a), num(p.c_b));
      dc += fmt::format("{}\t{}\t{}\t{}\n", ch, num(p.tau), p.window, num(p.delta));
      if (p.delta) {
        s.x.push_back(p.tau);
        s.y.push_back(*p.delta);
      }
    }
    fig.series.push_back(s);
  }
  if (table) write_text(dir / "correlations.tsv", corr);
  if (delta) {
    write_text(dir / "delta_correlation.tsv", dc);
    write_text(dir / "delta_correlation.svg", render_svg(fig, rc));
  }
}

void analyze_scaling(const RunConfig& rc, const fs::path& dir) {
  std::string rows = table_preamble(rc) +
                     "primitive\tvalue\tt_decision_ms\tsigma\tsigma_sqrt_t\truns\tfailures\tbreakdown\tin_fit\n";
  std::string fits = table_preamble(rc) + "primitive\texponent\tstd_error\tintercept\tpoints\n";
  const std::pair<ScalingPrimitive, const ScalingSweep*> sweeps[] = {
      {ScalingPrimitive::pi_train, &rc.pi_scaling}, {ScalingPrimitive::t1_wait, &rc.t1_scaling}};
  for (const auto& [prim, sweep] : sweeps) {
    if (sweep->values.empty()) continue;
    const auto st = uncertainty_scaling_study(prim, sweep->values, rc.device, rc.lab, sweep->options);
    const std::string name(to_string(prim));
    Figure fig{"Time-normalized uncertainty: " + name,
               prim == ScalingPrimitive::pi_train ? "pulses n" : "wait scale alpha", "sigma * sqrt(T/ms)",
               true, true, {}};
    Series pts{"median", {}, {}, true}, line{"fit", {}, {}, false};
    for (const auto& r : st.rows) {
      rows += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", name, num(r.value), num(r.t_decision_ms),
                          num(r.sigma), num(r.sigma_sqrt_t), r.runs, r.failures, r.breakdown ? 1 : 0,
                          r.in_fit ? 1 : 0);
      pts.x.push_back(r.value);
      pts.y.push_back(r.sigma_sqrt_t);
      if (r.in_fit && st.fit.points > 0) {
        line.x.push_back(r.value);
        line.y.push_back(std::exp(st.fit.intercept) * std::pow(r.value, st.fit.exponent));
      }
    }
    fits += fmt::format("{}\t{}\t{}\t{}\t{}\n", name, num(st.fit.exponent), num(st.fit.std_error),
                        num(st.fit.intercept), st.fit.points);
    fig.series = {pts, line};
    write_text(dir / fmt::format("scaling_{}.svg", name), render_svg(fig, rc));
  }
  write_text(dir / "scaling.tsv", rows);
  write_text(dir / "scaling_fit.tsv", fits);
}

int cmd_analyze(const CommonFlags& flags, const std::vector<std::string>& analyses,
                std::optional<std::string> dataset_path) {
  if (analyses.empty()) return kOk;
  RunConfig rc = flags.load();
  const fs::path dir(rc.output);
  auto wants = [&](const char* a) { return std::find(analyses.begin(), analyses.end(), a) != analyses.end(); };
  const bool need_data = wants("allan") || wants("correlations") || wants("delta-correlation");
  if (need_data) {
    const fs::path path = dataset_path ? fs::path(*dataset_path) : dir / "campaign.ndjson";
    const Dataset d = load_dataset(path);
    if (d.records.size() < 3) fail(Errc::insufficient_data, "analyze: dataset has fewer than three cycles");
    // Tables derived from the dataset carry the dataset's identity.
    RunConfig tagged = rc;
    tagged.seed = d.seed;
    tagged.hash = d.hash;
    const auto ser = channel_series(d);
    if (wants("allan")) analyze_allan(ser, tagged, dir);
    if (wants("correlations") || wants("delta-correlation")) {
      analyze_correlations(ser, tagged, dir, wants("correlations"), wants("delta-correlation"));
    }
  }
  if (wants("scaling")) analyze_scaling(rc, dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-sampling calibration on a simulated qubit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sparsecal 0.1.0");

  CommonFlags run_flags, camp_flags, an_flags, cfg_flags;
  std::string primitive;
  bool no_plot = false;
  auto* run = app.add_subcommand("run", "Run one calibration primitive");
  run->add_option("primitive", primitive, "Primitive name")->required()->check(CLI::IsMember(kPrimitives));
  run->add_flag("--no-plot", no_plot, "Skip the SVG overlay");
  run_flags.attach(run);

  std::optional<std::int64_t> cycles;
  bool resume = false;
  auto* camp = app.add_subcommand("campaign", "Run the paired static/live campaign");
  camp->add_option("--cycles", cycles, "Number of cycles (overrides loop.n_cycles)")->check(CLI::NonNegativeNumber);
  camp->add_flag("--resume", resume, "Continue an interrupted campaign in --out");
  camp_flags.attach(camp);

  std::vector<std::string> analyses;
  std::optional<std::string> dataset;
  auto* an = app.add_subcommand("analyze", "Tables and figures from a campaign dataset");
  an->add_option("analyses", analyses, "allan, correlations, delta-correlation, scaling")
      ->check(CLI::IsMember({"allan", "correlations", "delta-correlation", "scaling"}));
  an->add_option("--dataset", dataset, "Campaign records (default: <out>/campaign.ndjson)");
  an_flags.attach(an);

  auto* cfg = app.add_subcommand("config", "Print the resolved configuration");
  cfg_flags.attach(cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(primitive, run_flags, !no_plot);
    if (*camp) return cmd_campaign(camp_flags, cycles, resume);
    if (*an) return cmd_analyze(an_flags, analyses, dataset);
    const RunConfig rc = cfg_flags.load();
    json t = rc.tree;
    t["config_hash"] = rc.hash;
    std::cout << t.dump(2) << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::config || e.code() == Errc::schema ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
