#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rbl/estimators.hpp"
#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"
#include "rbl/placement.hpp"

namespace rbl::harness {

enum class Scenario {
  RmseVsSensors,
  RmseVsNoise,
  CompletionBenchmark,
  AnchorlessTwoBody,
  MotionTracking,
  PlacementStudy,
};

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);

// --- built-in geometry ---------------------------------------------------------

inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 1.8;
inline constexpr double kVehicleHeight = 1.5;

/// Sensors on a 4.5 x 1.8 (x 1.5) m box centered at the body origin.
///
/// 3D: the 8 vertices then the 12 edge midpoints (20 nodes); 2D: 4 corners
/// then 4 edge midpoints. The order is fixed so that every prefix of even
/// length is a usable layout and smaller layouts are subsets of larger ones:
///  - nodes 1-2 share a vertical edge, so K=2 leaves the roll about it free;
///  - nodes 1-4 are not coplanar, the smallest layout with a unique pose;
///  - from K=8 on, midpoints are added in opposite pairs.
Conformation box_vehicle(int dim);

/// Anchors at the vertices of a cube (3D, 8 anchors) or square (2D, 4
/// anchors) of side `side` centered at the origin.
AnchorSet cube_anchors(int dim, double side = 60.0);

// --- configuration -----------------------------------------------------------------

struct AnchorConfig {
  /// "cube" | "tight_frame" | "clustered" | "explicit"
  std::string layout = "cube";
  double side = 60.0;        // cube edge (m)
  int count = 8;             // tight_frame / clustered anchor count
  double radius = 30.0;      // tight_frame / clustered distance from origin (m)
  double cluster_spread_deg = 5.0;
  std::optional<Mat> positions; // explicit, D x M
};

struct EstimatorConfig {
  StageWeighting weighting = StageWeighting::Uniform;
  bool occlusion = true;
  int completion_rank_slack = 0;
};

struct MotionConfig {
  double max_angular_speed = 0.5; // rad/s
  double max_linear_speed = 15.0; // m/s
};

struct ExperimentConfig {
  Scenario scenario = Scenario::RmseVsSensors;
  int dim = 3;
  /// "box-vehicle" or a path to a conformation JSON file.
  std::string conformation = "box-vehicle";
  AnchorConfig anchors;
  std::vector<double> sigma_list{0.01, 0.05, 0.1, 0.5};
  std::vector<int> sensor_counts{2, 4, 6, 8, 10, 14};
  double missing_fraction = 0.0;
  int trials = 500;
  std::uint64_t master_seed = 1;
  /// Body translation is drawn uniformly from [-spread, spread]^D (m).
  double position_spread = 5.0;
  EstimatorConfig estimator;
  MotionConfig motion;
  /// Worker threads, 0 = RBL_THREADS or hardware concurrency. Not serialized.
  int threads = 0;
  /// Directory used to resolve a relative conformation path. Not serialized.
  std::filesystem::path base_dir;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
/// Parses, fills defaults, rejects unknown keys and validates.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

Conformation resolve_conformation(const ExperimentConfig& config);
AnchorSet resolve_anchors(const ExperimentConfig& config);

// --- results --------------------------------------------------------------------------

struct ResultRow {
  std::string variant; // scenario-specific label, e.g. the anchor layout
  int dim = 3;
  int sensors = 0;
  double sigma = 0.0;
  double missing_fraction = 0.0;
  double translation_rmse = 0.0;
  double translation_se = 0.0;
  double rotation_rmse = 0.0;
  double rotation_se = 0.0;
  int failures = 0;
  int trials = 0;
  double wall_time_s = 0.0;
};

struct ResultTable {
  Scenario scenario = Scenario::RmseVsSensors;
  std::vector<ResultRow> rows;
};

/// Runs every sweep point; trial seeds derive from (master_seed, sweep, trial).
ResultTable run_experiment(const ExperimentConfig& config);

enum class OutputFormat { Csv, Json, PlotData };
OutputFormat output_format_from_string(std::string_view name);

/// Result CSV: header plus one line per row. Wall time is left out so the
/// file depends only on the configuration.
std::string to_csv(const ResultTable& table);
nlohmann::json to_json(const ResultTable& table);
ResultTable result_table_from_json(const nlohmann::json& j);

struct PlotSeries {
  std::string metric;
  std::string csv; // x,y,series
};
/// One (x, y, series) CSV per metric.
std::vector<PlotSeries> to_plot_data(const ResultTable& table);

/// Writes the table in `format` under `out_dir`; returns the files written.
std::vector<std::filesystem::path> emit_results(const ResultTable& table, OutputFormat format,
                                                const std::filesystem::path& out_dir);

// --- placement command ----------------------------------------------------------------

struct PlacementConfig {
  PlacementProblem problem;
  struct Evaluation {
    std::string conformation = "box-vehicle";
    int sensors = 4;
    double sigma = 0.1;
    int trials = 500;
    double compare_clustered_deg = 5.0;
    double position_jitter = 1.0;
  };
  std::optional<Evaluation> evaluate;
  std::filesystem::path base_dir;
};

PlacementConfig load_placement_config(const std::filesystem::path& path);
PlacementConfig placement_config_from_json(const nlohmann::json& j);

} // namespace rbl::harness
