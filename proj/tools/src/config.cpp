#include "sparsecal/app/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "sparsecal/error.hpp"

namespace sparsecal::app {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(Errc::config, "config: '" + path + "' " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

json process_to_json(DriftField field, const Process& p) {
  json j;
  j["field"] = std::string(to_string(field));
  std::visit(
      [&](const auto& proc) {
        using T = std::decay_t<decltype(proc)>;
        if constexpr (std::is_same_v<T, TelegraphProcess>) {
          j["process"] = "telegraph";
          j["low"] = proc.low();
          j["high"] = proc.high();
          j["rate_lh"] = proc.rate_lh();
          j["rate_hl"] = proc.rate_hl();
          j["start_high"] = proc.is_high();
        } else if constexpr (std::is_same_v<T, GaussMarkovProcess>) {
          j["process"] = "gauss_markov";
          j["mean"] = proc.mean();
          j["stddev"] = proc.stddev();
          j["tau_c"] = proc.tau_c();
        } else if constexpr (std::is_same_v<T, FlickerProcess>) {
          j["process"] = "flicker";
          j["per_octave_stddev"] = proc.octaves().front().stddev();
          j["tau_min"] = proc.octaves().front().tau_c();
          j["octaves"] = static_cast<int>(proc.octaves().size());
        } else {
          j["process"] = "white";
          j["stddev"] = proc.stddev();
        }
      },
      p);
  return j;
}

// Expected keys and their defaults for each process kind.
json process_template(const std::string& kind) {
  if (kind == "telegraph") {
    return {{"field", ""}, {"process", ""}, {"low", 0.0}, {"high", 0.0},
            {"rate_lh", 1.0}, {"rate_hl", 1.0}, {"start_high", false}};
  }
  if (kind == "gauss_markov") {
    return {{"field", ""}, {"process", ""}, {"mean", 0.0}, {"stddev", 0.0}, {"tau_c", 1.0}};
  }
  if (kind == "flicker") {
    return {{"field", ""}, {"process", ""}, {"per_octave_stddev", 0.0}, {"tau_min", 1.0},
            {"octaves", 5}};
  }
  if (kind == "white") return {{"field", ""}, {"process", ""}, {"stddev", 0.0}};
  return nullptr;
}

bool same_kind(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return true;
}

const char* kind_name(const json& def) {
  if (def.is_number_integer()) return "an integer";
  if (def.is_number()) return "a number";
  if (def.is_boolean()) return "a boolean";
  if (def.is_string()) return "a string";
  if (def.is_array()) return "an array";
  return "an object";
}

// Overlays `patch` on `base`, rejecting keys that `base` does not have.
void merge(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) config_error(path.empty() ? "<root>" : path, "expects an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string p = join(path, it.key());
    if (!base.contains(it.key())) config_error(p, "is not a known key");
    json& slot = base[it.key()];
    if (!same_kind(slot, it.value())) config_error(p, std::string("expects ") + kind_name(slot));
    if (slot.is_object()) {
      merge(slot, it.value(), p);
    } else {
      slot = it.value();
    }
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

json parse_override(const std::string& set) {
  const auto eq = set.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(Errc::config, "config: override '" + set + "' must look like path=value");
  }
  const std::string path = set.substr(0, eq);
  const std::string text = set.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  const auto keys = split(path, '.');
  for (auto k = keys.rbegin(); k != keys.rend(); ++k) {
    if (k->empty()) fail(Errc::config, "config: override path '" + path + "' has an empty key");
    patch = json{{*k, patch}};
  }
  return patch;
}

double num(const json& j, const char* key) { return j.at(key).get<double>(); }
std::int64_t integer(const json& j, const char* key) { return j.at(key).get<std::int64_t>(); }

template <class Fn>
auto checked(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    config_error(path, e.what());
  }
}

Process process_from_json(const json& j, const std::string& path) {
  const std::string kind = j.at("process").get<std::string>();
  return checked(path, [&]() -> Process {
    if (kind == "telegraph") {
      return TelegraphProcess(num(j, "low"), num(j, "high"), num(j, "rate_lh"), num(j, "rate_hl"),
                              j.at("start_high").get<bool>());
    }
    if (kind == "gauss_markov") return GaussMarkovProcess(num(j, "mean"), num(j, "stddev"), num(j, "tau_c"));
    if (kind == "flicker") {
      return FlickerProcess(num(j, "per_octave_stddev"), num(j, "tau_min"),
                            static_cast<int>(integer(j, "octaves")));
    }
    return WhiteProcess(num(j, "stddev"));
  });
}

std::vector<double> numbers(const json& arr, const std::string& path) {
  std::vector<double> v;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) config_error(path + "[" + std::to_string(i) + "]", "expects a number");
    v.push_back(arr[i].get<double>());
  }
  return v;
}

json scaling_tree(const std::vector<double>& values, const ScalingOptions& o) {
  return {{"values", values},
          {"reps", o.reps},
          {"shots", o.shots},
          {"bootstrap_replicates", o.bootstrap_replicates},
          {"guess_us", o.t1_guess_us},
          {"fit_lo", o.fit_lo},
          {"fit_hi", o.fit_hi}};
}

ScalingSweep scaling_from(const json& j, const std::string& path, std::uint64_t seed) {
  ScalingSweep s;
  s.values = numbers(j.at("values"), path + ".values");
  s.options.reps = static_cast<int>(integer(j, "reps"));
  s.options.shots = integer(j, "shots");
  s.options.bootstrap_replicates = static_cast<int>(integer(j, "bootstrap_replicates"));
  s.options.t1_guess_us = num(j, "guess_us");
  s.options.fit_lo = num(j, "fit_lo");
  s.options.fit_hi = num(j, "fit_hi");
  s.options.seed = seed;
  if (s.options.reps < 30) config_error(path + ".reps", "must be at least 30");
  if (s.options.shots < 1) config_error(path + ".shots", "must be at least 1");
  return s;
}

void positive(const json& j, const std::string& path, const char* key) {
  if (!(j.at(key).get<double>() > 0.0)) config_error(join(path, key), "must be > 0");
}

}  // namespace

json default_tree() {
  const DeviceTruth d{};
  const SimTiming tm{};
  const CalibrationState st{};
  const CampaignConfig cc{};
  json t;
  t["seed"] = std::uint64_t{1};
  t["output"] = "out";
  t["device"] = {{"gamma1", d.gamma1},
                 {"f01", d.f01},
                 {"rabi_per_amp", d.rabi_per_amp},
                 {"spec_linewidth", d.spec_linewidth},
                 {"spec_background", d.spec_background},
                 {"spec_height", d.spec_height},
                 {"chi", d.chi},
                 {"kappa", d.kappa},
                 {"a_crit", d.a_crit},
                 {"iq_noise", d.iq_noise},
                 {"p_prep1", d.p_prep1},
                 {"p_read_eg", d.p_read_eg},
                 {"p_read_ge", d.p_read_ge},
                 {"thermal_floor", d.thermal_floor},
                 {"t2_over_t1", d.t2_over_t1},
                 {"c_coh", d.c_coh},
                 {"c_det", d.c_det},
                 {"c_amp", d.c_amp}};
  t["state"] = {{"f_drive", st.f_drive},
                {"a_pi", st.a_pi},
                {"a_pi2", st.a_pi2},
                {"ro_detuning", st.ro_detuning},
                {"ro_amp", st.ro_amp}};
  t["lab"] = {{"noiseless", false},
              {"active_reset", true},
              {"bootstrap_replicates", 0},
              {"timing_ns",
               {{"pulse", tm.pulse},
                {"readout", tm.readout},
                {"feedback", tm.feedback},
                {"passive_reset", tm.passive_reset},
                {"clifford", tm.clifford},
                {"spec_drive", tm.spec_drive}}},
              {"latency", {{"mode", "on_controller"}, {"rtt_ms", 0.0}, {"analysis_us", 1.0}}}};
  json bindings = json::array();
  for (const auto& [field, proc] : default_drift(d)) bindings.push_back(process_to_json(field, proc));
  t["drift"] = {{"dt_s", cc.drift_dt_s}, {"bindings", bindings}};

  const T1Options t1{};
  const ReadoutOptions ro{};
  const ResonanceOptions rs{};
  const TrainOptions tr{};
  const RamseyOptions ra{};
  const CrbOptions crb{};
  t["primitives"] = {
      {"t1", {{"shots", t1.shots}, {"t0_us", t1.t0_us}, {"wait_scale", t1.wait_scale}, {"guess_us", cc.t1_guess_us}}},
      {"readout",
       {{"shots_per_eval", ro.shots_per_eval},
        {"scale_detuning", ro.scale_detuning},
        {"scale_amp", ro.scale_amp},
        {"x_tol", ro.x_tol},
        {"f_tol_rel", ro.f_tol_rel},
        {"max_iter", ro.max_iter}}},
      {"resonance",
       {{"bracket_width", rs.bracket_width}, {"shots_per_point", rs.shots_per_point}, {"n_iter", rs.n_iter}}},
      {"pi", {{"n", tr.n}, {"shots", tr.shots}}},
      {"pi2", {{"n", tr.n}, {"shots", tr.shots}}},
      {"ramsey", {{"tau_us", ra.tau_us}, {"shots", ra.shots}, {"detuning_guess", ra.detuning_guess}}},
      {"crb",
       {{"m0", crb.m0},
        {"dm", crb.dm},
        {"shots", crb.shots},
        {"sequences_per_length", crb.sequences_per_length},
        {"depth_noise", crb.depth_noise},
        {"dense_lengths", {1, 50, 100, 200, 334, 500, 700, 1000}}}}};
  t["loop"] = {{"cadence_ms", to_ms(cc.cadence)},
               {"n_cycles", 2000},
               {"initial_passes", cc.initial_passes}};

  ScalingOptions pi_opts;
  pi_opts.reps = 50;
  pi_opts.shots = 100;
  ScalingOptions t1_opts;
  t1_opts.reps = 100;
  t1_opts.shots = 100;
  t1_opts.fit_lo = 0.25;
  t1_opts.fit_hi = 2.0;
  std::vector<double> alphas;
  for (int k = 0; k < 10; ++k) alphas.push_back(0.25 * std::pow(8.0, k / 9.0));
  alphas.insert(alphas.end(), {2.5, 3.0, 4.0});
  t["analysis"] = {{"taus_s", {0.29, 0.87, 2.9, 8.7, 29.0}},
                   {"allan_per_decade", 8},
                   {"scaling",
                    {{"pi", scaling_tree({3, 5, 7, 11, 15, 21, 31, 41}, pi_opts)},
                     {"t1", scaling_tree(alphas, t1_opts)}}}};
  return t;
}

RunConfig from_tree(const json& t) {
  RunConfig rc;
  rc.tree = t;
  rc.seed = t.at("seed").get<std::uint64_t>();
  rc.output = t.at("output").get<std::string>();

  const json& d = t.at("device");
  auto& dv = rc.device;
  dv.gamma1 = num(d, "gamma1");
  dv.f01 = num(d, "f01");
  dv.rabi_per_amp = num(d, "rabi_per_amp");
  dv.spec_linewidth = num(d, "spec_linewidth");
  dv.spec_background = num(d, "spec_background");
  dv.spec_height = num(d, "spec_height");
  dv.chi = num(d, "chi");
  dv.kappa = num(d, "kappa");
  dv.a_crit = num(d, "a_crit");
  dv.iq_noise = num(d, "iq_noise");
  dv.p_prep1 = num(d, "p_prep1");
  dv.p_read_eg = num(d, "p_read_eg");
  dv.p_read_ge = num(d, "p_read_ge");
  dv.thermal_floor = num(d, "thermal_floor");
  dv.t2_over_t1 = num(d, "t2_over_t1");
  dv.c_coh = num(d, "c_coh");
  dv.c_det = num(d, "c_det");
  dv.c_amp = num(d, "c_amp");
  checked("device", [&] { dv.validate(); return 0; });

  const json& s = t.at("state");
  rc.state.f_drive = num(s, "f_drive");
  rc.state.a_pi = num(s, "a_pi");
  rc.state.a_pi2 = num(s, "a_pi2");
  rc.state.ro_detuning = num(s, "ro_detuning");
  rc.state.ro_amp = num(s, "ro_amp");
  checked("state", [&] { rc.state.validate(); return 0; });

  const json& l = t.at("lab");
  rc.lab.noiseless = l.at("noiseless").get<bool>();
  rc.lab.active_reset = l.at("active_reset").get<bool>();
  rc.lab.bootstrap_replicates = static_cast<int>(integer(l, "bootstrap_replicates"));
  if (rc.lab.bootstrap_replicates == 1 || rc.lab.bootstrap_replicates < 0) {
    config_error("lab.bootstrap_replicates", "must be 0 (analytic) or at least 2");
  }
  const json& tn = l.at("timing_ns");
  for (auto it = tn.begin(); it != tn.end(); ++it) {
    if (it.value().get<std::int64_t>() < 0) config_error("lab.timing_ns." + it.key(), "must be >= 0");
  }
  rc.lab.timing.pulse = integer(tn, "pulse");
  rc.lab.timing.readout = integer(tn, "readout");
  rc.lab.timing.feedback = integer(tn, "feedback");
  rc.lab.timing.passive_reset = integer(tn, "passive_reset");
  rc.lab.timing.clifford = integer(tn, "clifford");
  rc.lab.timing.spec_drive = integer(tn, "spec_drive");
  const json& lat = l.at("latency");
  const std::string mode = lat.at("mode").get<std::string>();
  if (num(lat, "rtt_ms") < 0.0) config_error("lab.latency.rtt_ms", "must be >= 0");
  if (num(lat, "analysis_us") < 0.0) config_error("lab.latency.analysis_us", "must be >= 0");
  const Nanos analysis = from_us(num(lat, "analysis_us"));
  if (mode == "on_controller") {
    rc.lab.latency = LatencyModel::on_controller(analysis);
  } else if (mode == "offloading") {
    rc.lab.latency = LatencyModel::offloading(from_ms(num(lat, "rtt_ms")), analysis);
  } else {
    config_error("lab.latency.mode", "must be 'on_controller' or 'offloading'");
  }

  const json& dr = t.at("drift");
  positive(dr, "drift", "dt_s");
  rc.drift_dt_s = num(dr, "dt_s");
  const json& bs = dr.at("bindings");
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const std::string path = "drift.bindings[" + std::to_string(i) + "]";
    const json& b = bs[i];
    if (!b.is_object()) config_error(path, "expects an object");
    if (!b.contains("process") || !b["process"].is_string()) config_error(path + ".process", "is required");
    json full = process_template(b["process"].get<std::string>());
    if (full.is_null()) {
      config_error(path + ".process", "must be telegraph, gauss_markov, flicker or white");
    }
    merge(full, b, path);
    const auto field = checked(path + ".field", [&] {
      return drift_field_from_string(full["field"].get<std::string>());
    });
    rc.drift.emplace_back(field, process_from_json(full, path));
  }

  const json& p = t.at("primitives");
  const json& jt1 = p.at("t1");
  rc.t1.shots = integer(jt1, "shots");
  rc.t1.t0_us = num(jt1, "t0_us");
  rc.t1.wait_scale = num(jt1, "wait_scale");
  positive(jt1, "primitives.t1", "guess_us");
  positive(jt1, "primitives.t1", "wait_scale");
  rc.t1_guess_us = num(jt1, "guess_us");
  const json& jro = p.at("readout");
  rc.readout.shots_per_eval = integer(jro, "shots_per_eval");
  rc.readout.scale_detuning = num(jro, "scale_detuning");
  rc.readout.scale_amp = num(jro, "scale_amp");
  rc.readout.x_tol = num(jro, "x_tol");
  rc.readout.f_tol_rel = num(jro, "f_tol_rel");
  rc.readout.max_iter = static_cast<int>(integer(jro, "max_iter"));
  const json& jrs = p.at("resonance");
  rc.resonance.bracket_width = num(jrs, "bracket_width");
  rc.resonance.shots_per_point = integer(jrs, "shots_per_point");
  rc.resonance.n_iter = static_cast<int>(integer(jrs, "n_iter"));
  rc.pi = {static_cast<int>(integer(p.at("pi"), "n")), integer(p.at("pi"), "shots")};
  rc.pi2 = {static_cast<int>(integer(p.at("pi2"), "n")), integer(p.at("pi2"), "shots")};
  for (const char* k : {"pi", "pi2"}) {
    if (integer(p.at(k), "n") < 1) config_error(std::string("primitives.") + k + ".n", "must be >= 1");
  }
  const json& jra = p.at("ramsey");
  rc.ramsey.tau_us = num(jra, "tau_us");
  rc.ramsey.shots = integer(jra, "shots");
  rc.ramsey.detuning_guess = num(jra, "detuning_guess");
  positive(jra, "primitives.ramsey", "tau_us");
  const json& jc = p.at("crb");
  rc.crb.m0 = integer(jc, "m0");
  rc.crb.dm = integer(jc, "dm");
  rc.crb.shots = integer(jc, "shots");
  rc.crb.sequences_per_length = static_cast<int>(integer(jc, "sequences_per_length"));
  rc.crb.depth_noise = num(jc, "depth_noise");
  for (double m : numbers(jc.at("dense_lengths"), "primitives.crb.dense_lengths")) {
    if (m < 0.0 || m != std::floor(m)) config_error("primitives.crb.dense_lengths", "must hold whole lengths");
    rc.dense_lengths.push_back(static_cast<std::int64_t>(m));
  }
  for (const char* prim : {"t1", "pi", "pi2", "ramsey", "crb"}) {
    if (integer(p.at(prim), "shots") < 1) config_error(std::string("primitives.") + prim + ".shots", "must be >= 1");
  }

  const json& lp = t.at("loop");
  positive(lp, "loop", "cadence_ms");
  rc.cadence = from_ms(num(lp, "cadence_ms"));
  rc.n_cycles = integer(lp, "n_cycles");
  if (rc.n_cycles < 0) config_error("loop.n_cycles", "must be >= 0");
  rc.initial_passes = static_cast<int>(integer(lp, "initial_passes"));
  if (rc.initial_passes < 0) config_error("loop.initial_passes", "must be >= 0");

  const json& an = t.at("analysis");
  rc.taus_s = numbers(an.at("taus_s"), "analysis.taus_s");
  for (double tau : rc.taus_s) {
    if (!(tau > 0.0)) config_error("analysis.taus_s", "must hold positive times");
  }
  rc.allan_per_decade = static_cast<int>(integer(an, "allan_per_decade"));
  if (rc.allan_per_decade < 1) config_error("analysis.allan_per_decade", "must be >= 1");
  rc.pi_scaling = scaling_from(an.at("scaling").at("pi"), "analysis.scaling.pi", rc.seed);
  rc.t1_scaling = scaling_from(an.at("scaling").at("t1"), "analysis.scaling.t1", rc.seed);

  rc.hash = config_hash(t);
  return rc;
}

RunConfig load_config(const std::optional<std::string>& file, const std::vector<std::string>& sets,
                      std::optional<std::uint64_t> seed, std::optional<std::string> output) {
  json tree = default_tree();
  if (file) {
    std::ifstream in(*file);
    if (!in) fail(Errc::config, "config: cannot open '" + *file + "'");
    json user = json::parse(in, nullptr, false, true);
    if (user.is_discarded()) fail(Errc::config, "config: '" + *file + "' is not valid JSON");
    merge(tree, user, "");
  }
  for (const auto& s : sets) merge(tree, parse_override(s), "");
  if (seed) tree["seed"] = *seed;
  if (output) tree["output"] = *output;
  const json& sd = tree["seed"];
  if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<std::int64_t>() >= 0)) {
    config_error("seed", "must be a non-negative integer");
  }
  return from_tree(tree);
}

std::string config_hash(const json& tree) {
  json t = tree;
  t.erase("seed");
  t.erase("output");
  const std::string text = t.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CampaignConfig campaign_config(const RunConfig& rc) {
  CampaignConfig c;
  c.device = rc.device;
  c.lab = rc.lab;
  c.drift = rc.drift;
  c.drift_dt_s = rc.drift_dt_s;
  c.initial_state = rc.state;
  c.initial_passes = rc.initial_passes;
  c.t1_guess_us = rc.t1_guess_us;
  c.t1 = rc.t1;
  c.ramsey = rc.ramsey;
  c.pi = rc.pi;
  c.pi2 = rc.pi2;
  c.crb = rc.crb;
  c.cadence = rc.cadence;
  c.seed = rc.seed;
  return c;
}

}  // namespace sparsecal::app
