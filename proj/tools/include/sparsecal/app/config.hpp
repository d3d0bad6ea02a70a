#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsecal/analysis.hpp"
#include "sparsecal/control_loop.hpp"

namespace sparsecal::app {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ScalingSweep {
  std::vector<double> values;
  ScalingOptions options;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output = "out";

  DeviceTruth device{};
  LabConfig lab{};
  CalibrationState state{};
  double drift_dt_s = 0.01;
  std::vector<std::pair<DriftField, Process>> drift;

  double t1_guess_us = 20.0;
  T1Options t1{};
  ReadoutOptions readout{};
  ResonanceOptions resonance{};
  TrainOptions pi{};
  TrainOptions pi2{};
  RamseyOptions ramsey{};
  CrbOptions crb{};
  std::vector<std::int64_t> dense_lengths;

  Nanos cadence = 0;
  std::int64_t n_cycles = 0;
  int initial_passes = 3;

  std::vector<double> taus_s;
  int allan_per_decade = 8;
  ScalingSweep pi_scaling;
  ScalingSweep t1_scaling;

  json tree;         ///< fully resolved configuration
  std::string hash;  ///< over everything except seed and output
};

/// Built-in defaults as a configuration tree. Every accepted key appears here.
json default_tree();

/// Defaults, then the file (if any), then each `path=value` override, then
/// the explicit seed/output flags. Throws Errc::config with the offending path.
RunConfig load_config(const std::optional<std::string>& file, const std::vector<std::string>& sets,
                      std::optional<std::uint64_t> seed, std::optional<std::string> output);

RunConfig from_tree(const json& tree);

/// 64-bit FNV-1a of the canonical dump, seed and output removed, as hex.
std::string config_hash(const json& tree);

CampaignConfig campaign_config(const RunConfig& rc);

}  // namespace sparsecal::app
