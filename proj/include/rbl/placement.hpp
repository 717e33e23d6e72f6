#pragma once

#include <cstdint>

#include "rbl/estimators.hpp"
#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"

namespace rbl {

/// Anchors on a circle/sphere of `anchor_radius` around `target_center`.
struct PlacementProblem {
  int num_anchors = 4;
  int dim = 2;
  Vec target_center;
  double anchor_radius = 30.0; // m
  std::uint64_t seed = 1;

  void validate() const;
};

struct PlacementResult {
  Mat positions;  // D x M
  Mat directions; // D x M, unit columns
  double frame_potential = 0.0;
};

/// Sum over all pairs (i, j) of <u_i, u_j>^2 for unit columns u.
/// Lower bound M^2/D, attained by unit-norm tight frames.
double frame_potential(const Mat& directions);

/// Minimizes the frame potential of the anchor directions by projected
/// gradient descent on the sphere, keeping the best of 20 seeded restarts.
PlacementResult optimize_placement(const PlacementProblem& problem);

/// Anchors whose directions all lie within `spread_deg` of each other
/// (an arc in 2D, a small cone in 3D).
PlacementResult clustered_placement(const PlacementProblem& problem, double spread_deg);

struct PlacementEvaluation {
  double translation_rmse = 0.0; // m
  double translation_se = 0.0;
  double rotation_rmse = 0.0; // rad
  double rotation_se = 0.0;
  int failures = 0;
  int trials = 0;
};

struct EvaluationOptions {
  /// Uniform translation jitter (per axis, m) of the body around the target.
  double position_jitter = 1.0;
  VisibilityModel visibility = VisibilityModel::all_visible();
  TwoStageOptions estimator{StageWeighting::Uniform};
  /// Worker threads; 0 picks the default (RBL_THREADS or hardware).
  int threads = 0;
};

/// Monte-Carlo RMSE of rbl_two_stage with the given anchors: random pose
/// around `target_center`, simulated ranges, estimate, error. Estimator
/// failures are counted, not fatal. Deterministic for a fixed seed.
PlacementEvaluation evaluate_placement(const AnchorSet& anchors, const Conformation& conf,
                                       const Vec& target_center, double sigma, int trials,
                                       std::uint64_t seed, const EvaluationOptions& options = {});

} // namespace rbl
