#include <cmath>
#include <limits>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"

namespace rbl {

namespace {

struct ChiralityFit {
  Pose relative = Pose::identity(2);
  double score = std::numeric_limits<double>::infinity();
  double cross_rms = 0.0;
  bool rotation_unique = true;
};

ChiralityFit fit_chirality(const Conformation& conf1, const Conformation& conf2, const Mat& embedding,
                           const MaskedRangeMatrix& cross) {
  const int k1 = conf1.size(), k2 = conf2.size();
  const PoseEstimate body1 = fit_pose_procrustes(conf1, embedding.leftCols(k1));
  // Body-2 embedding expressed in the body-1 frame.
  const Pose to_body1 = inverse(body1.pose);
  Mat body2_in_1 = to_body1.rotation() * embedding.rightCols(k2);
  body2_in_1.colwise() += to_body1.translation();
  const PoseEstimate body2 = fit_pose_procrustes(conf2, body2_in_1);

  const PlacedBody placed2 = apply_pose(conf2, body2.pose);
  double cross_sq = 0.0;
  for (int i = 0; i < k1; ++i)
    for (int j = 0; j < k2; ++j) {
      const double e = (conf1.node(i) - placed2.positions.col(j)).norm() - cross.at(i, j);
      cross_sq += e * e;
    }
  ChiralityFit fit;
  fit.relative = body2.pose;
  fit.score = cross_sq + k1 * body1.stage2_residual_rms * body1.stage2_residual_rms +
              k2 * body2.stage2_residual_rms * body2.stage2_residual_rms;
  fit.cross_rms = std::sqrt(cross_sq / (k1 * k2));
  fit.rotation_unique = body1.rotation_unique && body2.rotation_unique;
  return fit;
}

} // namespace

RelativePoseEstimate relative_pose_anchorless(const Conformation& conf1, const Conformation& conf2,
                                              const MaskedRangeMatrix& cross_distances) {
  const int dim = conf1.dim();
  if (conf2.dim() != dim) throw DimensionMismatch("conformation dimensions differ");
  if (cross_distances.rows() != conf1.size() || cross_distances.cols() != conf2.size())
    throw DimensionMismatch("cross distances must be K1 x K2");
  if (!cross_distances.complete())
    throw InsufficientData("cross distances are incomplete; complete the EDM first");

  const PartialEdm edm = assemble_two_body_edm(conf1, conf2, cross_distances);
  const MdsEmbedding embedding = edm_to_points(edm.squared_values(), dim);
  if (affine_rank(embedding.points, 1e-7) < dim)
    throw RankDeficient("joint point set does not span the space; relative pose is undefined");

  // MDS fixes the configuration only up to reflection: try both.
  Mat mirrored = embedding.points;
  mirrored.row(0) *= -1.0;
  const ChiralityFit direct = fit_chirality(conf1, conf2, embedding.points, cross_distances);
  const ChiralityFit flipped = fit_chirality(conf1, conf2, mirrored, cross_distances);
  const bool take_direct = direct.score <= flipped.score;
  const ChiralityFit& best = take_direct ? direct : flipped;
  const double gap = std::abs(direct.score - flipped.score);
  const double scale = edm.squared_values().maxCoeff();

  RelativePoseEstimate est{best.relative, Vec()};
  est.center_offset = best.relative.apply(geometric_center(conf2)) - geometric_center(conf1);
  est.reflection_resolved = gap > 1e-9 * std::max(1.0, scale);
  est.rotation_unique = best.rotation_unique;
  est.residual_rms = best.cross_rms;
  return est;
}

} // namespace rbl
