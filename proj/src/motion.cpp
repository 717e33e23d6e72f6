#include <cmath>

#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"

namespace rbl {

MotionEstimate estimate_motion(const AnchorSet& anchors, const Pose& pose, const Conformation& conf,
                               const MaskedMatrix& range_rates) {
  const int dim = conf.dim();
  if (anchors.dim() != dim || pose.dim() != dim) throw DimensionMismatch("anchor, pose and conformation dimensions differ");
  if (range_rates.rows() != anchors.size() || range_rates.cols() != conf.size())
    throw DimensionMismatch("range-rate matrix must be anchors x nodes");

  const int n_omega = dim == 2 ? 1 : 3;
  const int unknowns = n_omega + dim;
  const int rows = range_rates.observed_count();
  if (rows < unknowns)
    throw RankDeficient("motion needs " + std::to_string(unknowns) + " independent range-rates, got " +
                        std::to_string(rows));

  // Row for pair (n, m): rate = u.(omega x p) + u.t_dot = (p x u).omega + u.t_dot,
  // with p = R c_m the lever arm and u the anchor-to-node unit vector.
  Mat design(rows, unknowns);
  Vec rhs(rows);
  int row = 0;
  for (int m = 0; m < conf.size(); ++m) {
    const Vec lever = pose.rotation() * conf.node(m);
    const Vec position = lever + pose.translation();
    for (int n = 0; n < anchors.size(); ++n) {
      if (!range_rates.observed(n, m)) continue;
      const Vec los = position - anchors.anchor(n);
      const double len = los.norm();
      if (len == 0.0) throw InvalidArgument("range-rate direction undefined for a node at an anchor");
      const Vec u = los / len;
      if (dim == 2) {
        design(row, 0) = u(0) * -lever(1) + u(1) * lever(0);
      } else {
        design.block(row, 0, 1, 3) =
            Eigen::Vector3d(lever).cross(Eigen::Vector3d(u)).transpose();
      }
      design.block(row, n_omega, 1, dim) = u.transpose();
      rhs(row) = range_rates.at(n, m);
      ++row;
    }
  }

  Eigen::JacobiSVD<Mat> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  if (svd.rank() < unknowns) throw RankDeficient("range-rate design matrix is rank deficient");
  const Vec solution = svd.solve(rhs);
  const Vec residual = design * solution - rhs;

  MotionEstimate est{BodyMotion(solution.head(n_omega), solution.tail(dim))};
  est.residual_rms = std::sqrt(residual.squaredNorm() / rows);
  return est;
}

} // namespace rbl
