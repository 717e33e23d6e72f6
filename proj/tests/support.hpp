#pragma once

#include <cmath>
#include <cstdint>

#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"
#include "rbl/random.hpp"

namespace rbl::testing {

/// Points drawn uniformly in [-half, half]^dim.
inline Mat random_points(SeedStream& rng, int dim, int count, double half = 1.0) {
  Mat p(dim, count);
  for (int j = 0; j < count; ++j)
    for (int d = 0; d < dim; ++d) p(d, j) = rng.uniform(-half, half);
  return p;
}

/// A random pose with translation in [-spread, spread]^dim.
inline Pose random_pose(SeedStream& rng, int dim, double spread = 5.0) {
  Mat r = random_rotation(rng, dim);
  Vec t(dim);
  for (int d = 0; d < dim; ++d) t(d) = rng.uniform(-spread, spread);
  return Pose(r, t);
}

inline Mat all_true_ranges(const AnchorSet& anchors, const Mat& nodes) {
  Mat r(anchors.size(), nodes.cols());
  for (int n = 0; n < anchors.size(); ++n)
    for (int m = 0; m < nodes.cols(); ++m) r(n, m) = (anchors.anchor(n) - nodes.col(m)).norm();
  return r;
}

} // namespace rbl::testing
