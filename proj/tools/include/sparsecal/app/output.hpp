#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparsecal/app/config.hpp"
#include "sparsecal/error.hpp"

namespace sparsecal::app {

/// Fields every output carries so a file can be traced back to its run.
json provenance(const RunConfig& rc);

json to_json(const Estimate& e);
json to_json(const TimingBudget& b);
json to_json(const CalibrationState& s);

json primitive_record(const RunConfig& rc, const std::string& name, const PrimitiveResult* r,
                      const Error* err);
json cycle_record(const RunConfig& rc, const CycleRecord& r);
json summary_json(const CampaignSummary& s);

/// First line of every table: "# seed=... config_hash=... schema_version=...".
std::string table_preamble(const RunConfig& rc);

/// Writes through a temporary file and renames, so readers never see a
/// half-written file.
void write_text(const std::filesystem::path& path, const std::string& text);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  ///< points instead of a polyline
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Minimal deterministic SVG line/point chart.
std::string render_svg(const Figure& fig, const RunConfig& rc);

}  // namespace sparsecal::app
