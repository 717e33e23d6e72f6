#pragma once

#include <optional>
#include <vector>

#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"

namespace rbl {

/// Iterative solvers stop on step norm below this or after kMaxIterations.
inline constexpr double kStepTolerance = 1e-10;
inline constexpr int kMaxIterations = 100;

// --- stage 1: point localization -------------------------------------------------

struct PointEstimate {
  Vec position;
  /// Reflected solution when the observed anchors span only D-1 dimensions.
  std::optional<Vec> mirror;
  bool converged = true;
  /// Observed anchors are affinely degenerate; position is one of several fits.
  bool ambiguous = false;
  int iterations = 0;
  double residual_rms = 0.0;
  int observed = 0;
};

/// Gauss-Newton range-only localization of one node from the observed
/// entries of `ranges` (length M, aligned with `anchors`).
///
/// Needs at least D observed ranges. With exactly D (or anchors spanning
/// only D-1 dimensions) both mirror candidates are returned and the result
/// is flagged ambiguous.
PointEstimate multilaterate(const AnchorSet& anchors, const MaskedVector& ranges,
                            const std::optional<Vec>& initial_guess = std::nullopt);

struct HybridOptions {
  double range_sigma = 1.0; // m
  double angle_sigma = 1.0; // rad
};

/// Gauss-Newton on stacked range and wrapped angle residuals, each scaled by
/// its sigma. `angles` supplies azimuth/elevation rows for this node only.
PointEstimate localize_point_hybrid(const AnchorSet& anchors, const MaskedVector& ranges,
                                    const MaskedVector& azimuth, const MaskedVector& elevation,
                                    const HybridOptions& options = {},
                                    const std::optional<Vec>& initial_guess = std::nullopt);

/// Column `node` of a full angle measurement set, as masked vectors.
MaskedVector azimuth_column(const AngleMeasurements& angles, int node);
MaskedVector elevation_column(const AngleMeasurements& angles, int node);

// --- stage 2: pose fitting --------------------------------------------------------

struct PoseEstimate {
  Pose pose;
  double stage1_residual_rms = 0.0; // m
  double stage2_residual_rms = 0.0; // m
  int iterations_used = 0;
  /// False when the nodes used leave a rotation about some axis free.
  bool rotation_unique = true;
  /// Nodes excluded from the pose fit (too few ranges or ambiguous fix).
  std::vector<int> dropped_nodes;
  int ambiguous_nodes = 0;
  int unconverged_nodes = 0;
};

/// Weighted orthogonal Procrustes (Kabsch) fit of `points` (D x K) to the
/// conformation; minimizes sum_k w_k |s_k - (R c_k + t)|^2 with det R = +1.
PoseEstimate fit_pose_procrustes(const Conformation& conf, const Mat& points,
                                 const std::optional<Vec>& weights = std::nullopt);

enum class StageWeighting {
  InverseVariance, ///< w_k = 1 / (stage-1 residual variance + 1e-12)
  Uniform,
};

struct TwoStageOptions {
  StageWeighting weighting = StageWeighting::InverseVariance;
};

/// Multilaterates every node, then fits the pose to the localized nodes.
PoseEstimate rbl_two_stage(const AnchorSet& anchors, const MaskedRangeMatrix& ranges,
                           const Conformation& conf, const TwoStageOptions& options = {});

// --- anchorless two-body ------------------------------------------------------------

struct RelativePoseEstimate {
  /// Maps body-2 coordinates into the body-1 frame.
  Pose pose;
  /// Geometric center of body 2 minus that of body 1, in the body-1 frame.
  Vec center_offset;
  bool reflection_resolved = true;
  bool rotation_unique = true;
  double residual_rms = 0.0;
};

/// Relative pose of body 2 w.r.t. body 1 from complete cross-body distances
/// (K1 x K2), via classical MDS on the joint EDM and Procrustes alignment.
RelativePoseEstimate relative_pose_anchorless(const Conformation& conf1, const Conformation& conf2,
                                              const MaskedRangeMatrix& cross_distances);

// --- motion ---------------------------------------------------------------------------

struct MotionEstimate {
  BodyMotion motion;
  double residual_rms = 0.0; // m/s
};

/// Linear least squares for (omega, t_dot) from range-rates (M x K, m/s),
/// given the body pose.
MotionEstimate estimate_motion(const AnchorSet& anchors, const Pose& pose, const Conformation& conf,
                               const MaskedMatrix& range_rates);

} // namespace rbl
