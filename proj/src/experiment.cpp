#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/parallel.hpp"
#include "rbl/stats.hpp"

namespace rbl::harness {

namespace {

struct SweepPoint {
  std::string variant;
  const AnchorSet* anchors = nullptr;
  int sensors = 0;
  std::size_t sigma_index = 0;
  double sigma = 0.0;
};

struct TrialOutcome {
  bool ok = false;
  double translation_sq = 0.0;
  double rotation_sq = 0.0;
  double seconds = 0.0;
};

/// Pose sampled at the start of every trial: uniform rotation and a translation
/// uniform in [-spread, spread]^D.
Pose sample_pose(SeedStream& rng, int dim, double spread) {
  const Mat rotation = random_rotation(rng, dim);
  Vec translation(dim);
  for (int d = 0; d < dim; ++d) translation(d) = rng.uniform(-spread, spread);
  return Pose(rotation, translation);
}

MaskedRangeMatrix first_columns(const MaskedRangeMatrix& full, int count) {
  return MaskedRangeMatrix(full.values().leftCols(count), full.mask().leftCols(count), full.noise_sigma());
}

/// The whole vehicle body occludes, whatever subset of its nodes is in use.
/// Measurements are simulated for every node and the first K columns kept, so
/// nested layouts share the same noise draws.
MaskedRangeMatrix vehicle_ranges(const AnchorSet& anchors, const Conformation& full, const Pose& pose, int sensors,
                                 double sigma, const VisibilityModel& visibility, SeedStream& rng) {
  return first_columns(simulate_ranges(anchors, apply_pose(full, pose), sigma, visibility, rng), sensors);
}

MaskedRangeMatrix cross_block(const CompletionResult& completed, int num_anchors, int num_nodes, double sigma) {
  const Mat distances = completed.distances();
  return MaskedRangeMatrix::fully_observed(distances.block(0, num_anchors, num_anchors, num_nodes), sigma);
}

double body_radius(const Conformation& conf) {
  const Vec center = geometric_center(conf);
  double radius = 0.0;
  for (int k = 0; k < conf.size(); ++k) radius = std::max(radius, (conf.node(k) - center).norm());
  return radius;
}

Vec random_direction(SeedStream& rng, int dim) {
  Vec v(dim);
  do {
    for (int d = 0; d < dim; ++d) v(d) = rng.normal();
  } while (v.norm() < 1e-12);
  return v.normalized();
}

class TrialRunner {
public:
  TrialRunner(const ExperimentConfig& config, const Conformation& vehicle)
      : config_(config), vehicle_(vehicle),
        visibility_{config.estimator.occlusion, config.missing_fraction},
        two_stage_{config.estimator.weighting} {
    completion_.rank_slack = config.estimator.completion_rank_slack;
  }

  TrialOutcome run(const SweepPoint& point, SeedStream& rng) const {
    switch (config_.scenario) {
    case Scenario::RmseVsSensors:
    case Scenario::RmseVsNoise:
    case Scenario::PlacementStudy:
      return localize(point, rng, false);
    case Scenario::CompletionBenchmark:
      return localize(point, rng, true);
    case Scenario::AnchorlessTwoBody:
      return anchorless(point, rng);
    case Scenario::MotionTracking:
      return motion(point, rng);
    }
    throw InvalidArgument("unknown scenario");
  }

private:
  TrialOutcome localize(const SweepPoint& point, SeedStream& rng, bool complete_first) const {
    const Pose truth = sample_pose(rng, config_.dim, config_.position_spread);
    SeedStream meas_rng = rng.child(1);
    const AnchorSet& anchors = *point.anchors;
    const Conformation conf = vehicle_.prefix(point.sensors);
    MaskedRangeMatrix ranges =
        vehicle_ranges(anchors, vehicle_, truth, point.sensors, point.sigma, visibility_, meas_rng);
    if (complete_first && !ranges.complete()) {
      const CompletionResult completed = complete_edm(assemble_partial_edm(anchors, conf, ranges), completion_);
      ranges = cross_block(completed, anchors.size(), conf.size(), point.sigma);
    }
    const PoseEstimate est = rbl_two_stage(anchors, ranges, conf, two_stage_);
    return score(est.pose, truth);
  }

  TrialOutcome anchorless(const SweepPoint& point, SeedStream& rng) const {
    const int dim = config_.dim;
    const Conformation conf = vehicle_.prefix(point.sensors);
    const Pose pose1(random_rotation(rng, dim), Vec::Zero(dim));
    const double separation = config_.position_spread + 2.0 * body_radius(vehicle_);
    const Vec offset = random_direction(rng, dim) * separation;
    const Pose pose2(random_rotation(rng, dim), offset);
    SeedStream meas_rng = rng.child(1);

    const PlacedBody body1 = apply_pose(vehicle_, pose1);
    const PlacedBody body2 = apply_pose(vehicle_, pose2);
    const int k = point.sensors;
    std::optional<Occluder> hull1, hull2;
    if (visibility_.body_occlusion) {
      hull1.emplace(body1);
      hull2.emplace(body2);
    }
    Mat values(k, k);
    Mask mask = Mask::Constant(k, k, true);
    for (int j = 0; j < k; ++j) {
      SeedStream noise_rng = meas_rng.child(0x100000 + static_cast<std::uint64_t>(j));
      SeedStream drop_rng = meas_rng.child(0x200000 + static_cast<std::uint64_t>(j));
      for (int i = 0; i < k; ++i) {
        const Vec p = body1.positions.col(i), q = body2.positions.col(j);
        values(i, j) = std::max(0.0, (p - q).norm() + noise_rng.normal(0.0, point.sigma));
        const double u = drop_rng.uniform();
        if (hull1 && (hull1->blocks(p, q) || hull2->blocks(p, q)))
          mask(i, j) = false;
        if (u < visibility_.dropout_probability) mask(i, j) = false;
      }
    }
    MaskedRangeMatrix cross(values, mask, point.sigma);
    if (!cross.complete()) {
      const CompletionResult completed = complete_edm(assemble_two_body_edm(conf, conf, cross), completion_);
      cross = cross_block(completed, k, k, point.sigma);
    }
    const RelativePoseEstimate est = relative_pose_anchorless(conf, conf, cross);
    return score(est.pose, compose(inverse(pose1), pose2));
  }

  TrialOutcome motion(const SweepPoint& point, SeedStream& rng) const {
    const int dim = config_.dim;
    const Pose truth = sample_pose(rng, dim, config_.position_spread);
    const int omega_size = dim == 3 ? 3 : 1;
    Vec omega(omega_size), t_dot(dim);
    for (int i = 0; i < omega_size; ++i)
      omega(i) = rng.uniform(-config_.motion.max_angular_speed, config_.motion.max_angular_speed);
    for (int d = 0; d < dim; ++d)
      t_dot(d) = rng.uniform(-config_.motion.max_linear_speed, config_.motion.max_linear_speed);
    const BodyMotion motion_truth(omega, t_dot);
    SeedStream meas_rng = rng.child(1);
    SeedStream rate_rng = rng.child(2);

    const AnchorSet& anchors = *point.anchors;
    const Conformation conf = vehicle_.prefix(point.sensors);
    const MaskedRangeMatrix ranges =
        vehicle_ranges(anchors, vehicle_, truth, point.sensors, point.sigma, visibility_, meas_rng);
    const PoseEstimate pose_est = rbl_two_stage(anchors, ranges, conf, two_stage_);
    const MaskedMatrix rates = simulate_range_rates(anchors, conf, truth, motion_truth, ranges.mask(), point.sigma, rate_rng);
    const MotionEstimate est = estimate_motion(anchors, pose_est.pose, conf, rates);

    TrialOutcome out;
    out.ok = true;
    out.translation_sq = (est.motion.t_dot() - t_dot).squaredNorm();
    out.rotation_sq = (est.motion.omega() - omega).squaredNorm();
    return out;
  }

  static TrialOutcome score(const Pose& estimate, const Pose& truth) {
    TrialOutcome out;
    out.ok = true;
    out.translation_sq = (estimate.translation() - truth.translation()).squaredNorm();
    const double angle = rotation_error(estimate.rotation(), truth.rotation());
    out.rotation_sq = angle * angle;
    return out;
  }

  const ExperimentConfig& config_;
  const Conformation& vehicle_;
  VisibilityModel visibility_;
  TwoStageOptions two_stage_;
  CompletionOptions completion_;
};

} // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Conformation vehicle = resolve_conformation(config);

  // Anchor sets are built once; placement studies compare two layouts.
  std::vector<std::pair<std::string, AnchorSet>> layouts;
  if (config.scenario == Scenario::PlacementStudy) {
    PlacementProblem problem{config.anchors.count, config.dim, Vec::Zero(config.dim), config.anchors.radius,
                             config.master_seed};
    layouts.emplace_back("tight_frame", AnchorSet(optimize_placement(problem).positions));
    layouts.emplace_back("clustered",
                         AnchorSet(clustered_placement(problem, config.anchors.cluster_spread_deg).positions));
  } else {
    std::string name = config.anchors.layout;
    if (config.scenario == Scenario::AnchorlessTwoBody) name = "anchorless";
    layouts.emplace_back(name, resolve_anchors(config));
  }

  // Sweep order: variant, then sigma, then sensor count.
  std::vector<SweepPoint> points;
  for (const auto& [name, anchors] : layouts)
    for (std::size_t s = 0; s < config.sigma_list.size(); ++s)
      for (int k : config.sensor_counts)
        points.push_back({name, &anchors, k, s, config.sigma_list[s]});

  const int trials = config.trials;
  const std::size_t total = points.size() * static_cast<std::size_t>(trials);
  if (total > static_cast<std::size_t>(std::numeric_limits<int>::max()))
    throw ConfigError("trials: sweep is too large");
  std::vector<TrialOutcome> outcomes(total);
  const TrialRunner runner(config, vehicle);

  parallel_for(static_cast<int>(total), resolve_thread_count(config.threads), [&](int task) {
    const SweepPoint& point = points[static_cast<std::size_t>(task / trials)];
    const int trial = task % trials;
    // Trials share seeds across sensor counts and anchor layouts so those
    // comparisons see the same poses and the same per-node noise.
    SeedStream rng(derive_seed(config.master_seed, {static_cast<std::uint64_t>(point.sigma_index),
                                                    static_cast<std::uint64_t>(trial)}));
    const auto start = std::chrono::steady_clock::now();
    TrialOutcome out;
    try {
      out = runner.run(point, rng);
    } catch (const Error&) {
      out.ok = false;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outcomes[static_cast<std::size_t>(task)] = out;
  });

  ResultTable table;
  table.scenario = config.scenario;
  for (std::size_t p = 0; p < points.size(); ++p) {
    ResultRow row;
    row.variant = points[p].variant;
    row.dim = config.dim;
    row.sensors = points[p].sensors;
    row.sigma = points[p].sigma;
    row.missing_fraction = config.missing_fraction;
    row.trials = trials;
    std::vector<double> t_sq, r_sq;
    for (int trial = 0; trial < trials; ++trial) {
      const TrialOutcome& o = outcomes[p * static_cast<std::size_t>(trials) + static_cast<std::size_t>(trial)];
      row.wall_time_s += o.seconds;
      if (!o.ok) {
        ++row.failures;
        continue;
      }
      t_sq.push_back(o.translation_sq);
      r_sq.push_back(o.rotation_sq);
    }
    const RmseSummary translation = rmse_summary(t_sq);
    const RmseSummary rotation = rmse_summary(r_sq);
    row.translation_rmse = translation.rmse;
    row.translation_se = translation.standard_error;
    row.rotation_rmse = rotation.rmse;
    row.rotation_se = rotation.standard_error;
    table.rows.push_back(std::move(row));
  }
  return table;
}

} // namespace rbl::harness
