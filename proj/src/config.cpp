#include <algorithm>
#include <cmath>
#include <set>

#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/io.hpp"

namespace rbl::harness {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Scenario, std::string_view>, 6> kScenarioNames{{
    {Scenario::RmseVsSensors, "rmse_vs_sensors"},
    {Scenario::RmseVsNoise, "rmse_vs_noise"},
    {Scenario::CompletionBenchmark, "completion_benchmark"},
    {Scenario::AnchorlessTwoBody, "anchorless_two_body"},
    {Scenario::MotionTracking, "motion_tracking"},
    {Scenario::PlacementStudy, "placement_study"},
}};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T field(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_opt(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = field<T>(obj, key, where);
}

std::string_view weighting_name(StageWeighting w) {
  return w == StageWeighting::Uniform ? "uniform" : "inverse_variance";
}

StageWeighting weighting_from(const std::string& name) {
  if (name == "uniform") return StageWeighting::Uniform;
  if (name == "inverse_variance") return StageWeighting::InverseVariance;
  throw ConfigError("estimator.weighting: expected 'uniform' or 'inverse_variance', got '" + name + "'");
}

std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_with_position(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " +
                      e.what());
  }
}

} // namespace

std::string_view to_string(Scenario s) {
  for (const auto& [value, name] : kScenarioNames)
    if (value == s) return name;
  return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
  for (const auto& [value, label] : kScenarioNames)
    if (label == name) return value;
  throw ConfigError("scenario: unknown scenario '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim: must be 2 or 3");
  if (trials < 1) throw ConfigError("trials: must be at least 1");
  if (sigma_list.empty()) throw ConfigError("sigma_list: must not be empty");
  for (double s : sigma_list)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma_list: values must be finite and >= 0");
  if (sensor_counts.empty()) throw ConfigError("sensor_counts: must not be empty");
  for (int k : sensor_counts)
    if (k < 2) throw ConfigError("sensor_counts: every value must be >= 2 (a single sensor cannot fix a pose)");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) throw ConfigError("missing_fraction: must lie in [0, 1)");
  if (!(position_spread >= 0.0) || !std::isfinite(position_spread)) throw ConfigError("position_spread: must be >= 0");
  if (conformation.empty()) throw ConfigError("conformation: must name 'box-vehicle' or a file");
  if (conformation == "box-vehicle") {
    const int available = dim == 3 ? 20 : 8;
    for (int k : sensor_counts)
      if (k > available)
        throw ConfigError("sensor_counts: box-vehicle has only " + std::to_string(available) + " nodes in " +
                          std::to_string(dim) + "D");
  }
  const auto& a = anchors;
  if (a.layout == "cube") {
    if (!(a.side > 0.0)) throw ConfigError("anchors.side: must be positive");
  } else if (a.layout == "tight_frame" || a.layout == "clustered") {
    if (a.count < 1) throw ConfigError("anchors.count: must be >= 1");
    if (!(a.radius > 0.0)) throw ConfigError("anchors.radius: must be positive");
    if (!(a.cluster_spread_deg >= 0.0)) throw ConfigError("anchors.cluster_spread_deg: must be >= 0");
  } else if (a.layout == "explicit") {
    if (!a.positions) throw ConfigError("anchors.positions: required for the explicit layout");
    if (a.positions->rows() != dim) throw ConfigError("anchors.positions: points must have dim coordinates");
  } else {
    throw ConfigError("anchors.layout: expected cube, tight_frame, clustered or explicit");
  }
  if (estimator.completion_rank_slack < 0) throw ConfigError("estimator.rank_slack: must be >= 0");
  if (!(motion.max_angular_speed >= 0.0)) throw ConfigError("motion.max_angular_speed: must be >= 0");
  if (!(motion.max_linear_speed >= 0.0)) throw ConfigError("motion.max_linear_speed: must be >= 0");
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"scenario", "dim", "conformation", "anchors", "sigma_list", "sensor_counts", "missing_fraction",
                  "trials", "master_seed", "position_spread", "estimator", "motion"},
                 "config");
  ExperimentConfig c;
  if (j.contains("scenario")) c.scenario = scenario_from_string(field<std::string>(j, "scenario", "config"));
  read_opt(j, "dim", "config", c.dim);
  read_opt(j, "conformation", "config", c.conformation);
  read_opt(j, "sigma_list", "config", c.sigma_list);
  read_opt(j, "sensor_counts", "config", c.sensor_counts);
  read_opt(j, "missing_fraction", "config", c.missing_fraction);
  read_opt(j, "trials", "config", c.trials);
  read_opt(j, "master_seed", "config", c.master_seed);
  read_opt(j, "position_spread", "config", c.position_spread);
  if (j.contains("anchors")) {
    const json& a = j.at("anchors");
    reject_unknown(a, {"layout", "side", "count", "radius", "cluster_spread_deg", "positions"}, "anchors");
    read_opt(a, "layout", "anchors", c.anchors.layout);
    read_opt(a, "side", "anchors", c.anchors.side);
    read_opt(a, "count", "anchors", c.anchors.count);
    read_opt(a, "radius", "anchors", c.anchors.radius);
    read_opt(a, "cluster_spread_deg", "anchors", c.anchors.cluster_spread_deg);
    if (a.contains("positions")) {
      try {
        c.anchors.positions = io::points_from_json(a.at("positions"), c.dim);
      } catch (const Error& e) {
        throw ConfigError(std::string("anchors.positions: ") + e.what());
      } catch (const json::exception& e) {
        throw ConfigError(std::string("anchors.positions: ") + e.what());
      }
    }
  }
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    reject_unknown(e, {"weighting", "occlusion", "rank_slack"}, "estimator");
    if (e.contains("weighting")) c.estimator.weighting = weighting_from(field<std::string>(e, "weighting", "estimator"));
    read_opt(e, "occlusion", "estimator", c.estimator.occlusion);
    read_opt(e, "rank_slack", "estimator", c.estimator.completion_rank_slack);
  }
  if (j.contains("motion")) {
    const json& m = j.at("motion");
    reject_unknown(m, {"max_angular_speed", "max_linear_speed"}, "motion");
    read_opt(m, "max_angular_speed", "motion", c.motion.max_angular_speed);
    read_opt(m, "max_linear_speed", "motion", c.motion.max_linear_speed);
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json anchors{{"layout", c.anchors.layout},
               {"side", c.anchors.side},
               {"count", c.anchors.count},
               {"radius", c.anchors.radius},
               {"cluster_spread_deg", c.anchors.cluster_spread_deg}};
  if (c.anchors.positions) anchors["positions"] = io::points_to_json(*c.anchors.positions);
  return json{{"scenario", std::string(to_string(c.scenario))},
              {"dim", c.dim},
              {"conformation", c.conformation},
              {"anchors", anchors},
              {"sigma_list", c.sigma_list},
              {"sensor_counts", c.sensor_counts},
              {"missing_fraction", c.missing_fraction},
              {"trials", c.trials},
              {"master_seed", c.master_seed},
              {"position_spread", c.position_spread},
              {"estimator",
               {{"weighting", std::string(weighting_name(c.estimator.weighting))},
                {"occlusion", c.estimator.occlusion},
                {"rank_slack", c.estimator.completion_rank_slack}}},
              {"motion",
               {{"max_angular_speed", c.motion.max_angular_speed},
                {"max_linear_speed", c.motion.max_linear_speed}}}};
}

ExperimentConfig parse_config(const std::string& text) {
  return config_from_json(parse_with_position(text, "<config>"));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig c = config_from_json(parse_with_position(text, path.string()));
  c.base_dir = path.parent_path();
  return c;
}

Conformation resolve_conformation(const ExperimentConfig& config) {
  if (config.conformation == "box-vehicle") return box_vehicle(config.dim);
  std::filesystem::path p(config.conformation);
  if (p.is_relative() && !config.base_dir.empty()) p = config.base_dir / p;
  Conformation conf = io::conformation_from_json(json::parse(io::read_text(p)));
  if (conf.dim() != config.dim) throw ConfigError("conformation: file dimension differs from dim");
  for (int k : config.sensor_counts)
    if (k > conf.size()) throw ConfigError("sensor_counts: conformation file has only " + std::to_string(conf.size()) + " nodes");
  return conf;
}

AnchorSet resolve_anchors(const ExperimentConfig& config) {
  const auto& a = config.anchors;
  if (a.layout == "cube") return cube_anchors(config.dim, a.side);
  if (a.layout == "explicit") return AnchorSet(*a.positions);
  PlacementProblem problem{a.count, config.dim, Vec::Zero(config.dim), a.radius, config.master_seed};
  const PlacementResult placed =
      a.layout == "tight_frame" ? optimize_placement(problem) : clustered_placement(problem, a.cluster_spread_deg);
  return AnchorSet(placed.positions);
}

// --- placement command ------------------------------------------------------------

PlacementConfig placement_config_from_json(const json& j) {
  reject_unknown(j, {"num_anchors", "dim", "target_center", "anchor_radius", "seed", "evaluate"}, "placement");
  PlacementConfig c;
  auto& p = c.problem;
  read_opt(j, "num_anchors", "placement", p.num_anchors);
  read_opt(j, "dim", "placement", p.dim);
  read_opt(j, "anchor_radius", "placement", p.anchor_radius);
  read_opt(j, "seed", "placement", p.seed);
  p.target_center = Vec::Zero(p.dim == 2 || p.dim == 3 ? p.dim : 0);
  if (j.contains("target_center")) {
    const auto center = field<std::vector<double>>(j, "target_center", "placement");
    p.target_center = Eigen::Map<const Vec>(center.data(), static_cast<Eigen::Index>(center.size()));
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("placement: ") + e.what());
  }
  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    reject_unknown(e, {"conformation", "sensors", "sigma", "trials", "compare_clustered_deg", "position_jitter"},
                   "evaluate");
    PlacementConfig::Evaluation ev;
    read_opt(e, "conformation", "evaluate", ev.conformation);
    read_opt(e, "sensors", "evaluate", ev.sensors);
    read_opt(e, "sigma", "evaluate", ev.sigma);
    read_opt(e, "trials", "evaluate", ev.trials);
    read_opt(e, "compare_clustered_deg", "evaluate", ev.compare_clustered_deg);
    read_opt(e, "position_jitter", "evaluate", ev.position_jitter);
    if (ev.sensors < 2) throw ConfigError("evaluate.sensors: must be >= 2");
    if (ev.trials < 1) throw ConfigError("evaluate.trials: must be >= 1");
    if (!(ev.sigma >= 0.0)) throw ConfigError("evaluate.sigma: must be >= 0");
    if (!(ev.position_jitter >= 0.0)) throw ConfigError("evaluate.position_jitter: must be >= 0");
    c.evaluate = ev;
  }
  return c;
}

PlacementConfig load_placement_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  PlacementConfig c = placement_config_from_json(parse_with_position(text, path.string()));
  c.base_dir = path.parent_path();
  return c;
}

} // namespace rbl::harness
