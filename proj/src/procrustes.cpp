#include <cmath>

#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"

namespace rbl {

PoseEstimate fit_pose_procrustes(const Conformation& conf, const Mat& points, const std::optional<Vec>& weights) {
  const int dim = conf.dim();
  const int k_count = conf.size();
  if (points.rows() != dim || points.cols() != k_count)
    throw DimensionMismatch("point estimates must be " + std::to_string(dim) + "x" + std::to_string(k_count));
  Vec w = weights ? *weights : Vec::Ones(k_count);
  if (w.size() != k_count) throw DimensionMismatch("one weight per node required");
  if (!w.allFinite() || (w.array() < 0.0).any()) throw InvalidArgument("weights must be finite and non-negative");
  const double total = w.sum();
  if (!(total > 0.0)) throw InvalidArgument("all Procrustes weights are zero");

  const Eigen::Index active = (w.array() > 0.0).count();
  for (int k = 0; k < k_count; ++k)
    if (w(k) > 0.0 && !points.col(k).allFinite()) throw InvalidArgument("point estimate is not finite");

  const Vec c_bar = conf.coords() * w / total;
  const Vec s_bar = points * w / total;

  Mat rotation = Mat::Identity(dim, dim);
  bool unique = false;
  if (active > 1) {
    Mat cross = Mat::Zero(dim, dim);
    for (int k = 0; k < k_count; ++k)
      if (w(k) > 0.0) cross += w(k) * (conf.node(k) - c_bar) * (points.col(k) - s_bar).transpose();
    Eigen::JacobiSVD<Mat> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat& u = svd.matrixU();
    const Mat& v = svd.matrixV();
    Mat fix = Mat::Identity(dim, dim);
    fix(dim - 1, dim - 1) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    rotation = v * fix * u.transpose();
    // A proper rotation is pinned down once the cross-covariance has rank D-1.
    const Vec& sv = svd.singularValues();
    const double tol = 1e-9 * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol && sv(i) > 0.0) ++rank;
    unique = rank >= dim - 1;
  }
  Vec translation = s_bar - rotation * c_bar;

  double sq = 0.0;
  for (int k = 0; k < k_count; ++k)
    if (w(k) > 0.0) sq += (points.col(k) - (rotation * conf.node(k) + translation)).squaredNorm();

  PoseEstimate est{Pose::orthonormalized(rotation, std::move(translation)), 0.0, 0.0, 0, true, {}, 0, 0};
  est.stage2_residual_rms = std::sqrt(sq / static_cast<double>(active));
  est.rotation_unique = unique;
  return est;
}

} // namespace rbl
