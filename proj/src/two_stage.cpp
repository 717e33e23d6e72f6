#include <algorithm>
#include <cmath>

#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"

namespace rbl {

namespace {
constexpr double kVarianceFloor = 1e-12;
}

PoseEstimate rbl_two_stage(const AnchorSet& anchors, const MaskedRangeMatrix& ranges, const Conformation& conf,
                           const TwoStageOptions& options) {
  const int dim = conf.dim();
  if (anchors.dim() != dim) throw DimensionMismatch("anchor and conformation dimensions differ");
  if (ranges.rows() != anchors.size() || ranges.cols() != conf.size())
    throw DimensionMismatch("range matrix must be anchors x nodes");

  const int k_count = conf.size();
  Mat points = Mat::Zero(dim, k_count);
  Vec weights = Vec::Zero(k_count);
  std::vector<int> dropped;
  int ambiguous = 0, unconverged = 0, max_iterations = 0;
  double stage1_sq = 0.0;
  int used = 0;

  for (int k = 0; k < k_count; ++k) {
    const MaskedVector column = ranges.col(k);
    const int observed = column.observed_count();
    if (observed < dim + 1) {
      dropped.push_back(k);
      continue;
    }
    const PointEstimate fix = multilaterate(anchors, column);
    max_iterations = std::max(max_iterations, fix.iterations);
    if (fix.ambiguous) {
      ++ambiguous;
      dropped.push_back(k);
      continue;
    }
    if (!fix.converged) ++unconverged;
    points.col(k) = fix.position;
    const double mean_sq = fix.residual_rms * fix.residual_rms;
    const double variance = mean_sq * observed / static_cast<double>(observed - dim);
    weights(k) = options.weighting == StageWeighting::Uniform ? 1.0 : 1.0 / (variance + kVarianceFloor);
    stage1_sq += mean_sq;
    ++used;
  }
  if (used == 0) throw InsufficientData("no node has enough observed ranges to be localized");

  PoseEstimate est = fit_pose_procrustes(conf, points, weights);
  est.stage1_residual_rms = std::sqrt(stage1_sq / used);
  est.iterations_used = max_iterations;
  est.dropped_nodes = std::move(dropped);
  est.ambiguous_nodes = ambiguous;
  est.unconverged_nodes = unconverged;
  return est;
}

} // namespace rbl
