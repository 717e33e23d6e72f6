#include "rbl/geometry.hpp"

#include <cmath>
#include <numbers>

#include "rbl/errors.hpp"

namespace rbl {

namespace {

void require_dim(int dim) {
  if (dim != 2 && dim != 3)
    throw InvalidArgument("unsupported dimension " + std::to_string(dim) + " (expected 2 or 3)");
}

bool all_finite(const Mat& m) { return m.allFinite(); }

} // namespace

// --- Conformation ----------------------------------------------------------

Conformation::Conformation(Mat coords, std::vector<std::string> labels)
    : coords_(std::move(coords)), labels_(std::move(labels)) {
  require_dim(static_cast<int>(coords_.rows()));
  if (coords_.cols() < 1) throw InvalidArgument("conformation needs at least one node");
  if (!all_finite(coords_)) throw InvalidArgument("conformation coordinates must be finite");
  if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(coords_.cols()))
    throw DimensionMismatch("conformation labels do not match node count");
}

int Conformation::affine_rank(double rel_tol) const { return rbl::affine_rank(coords_, rel_tol); }

Conformation Conformation::prefix(int count) const {
  if (count < 1 || count > size())
    throw InvalidArgument("prefix of " + std::to_string(count) + " nodes from a " +
                          std::to_string(size()) + "-node conformation");
  std::vector<std::string> labels;
  if (!labels_.empty()) labels.assign(labels_.begin(), labels_.begin() + count);
  return Conformation(coords_.leftCols(count), std::move(labels));
}

// --- Pose -------------------------------------------------------------------

Pose::Pose(Mat rotation, Vec translation)
    : rotation_(std::move(rotation)), translation_(std::move(translation)) {
  if (rotation_.rows() != rotation_.cols())
    throw DimensionMismatch("rotation must be square");
  require_dim(static_cast<int>(rotation_.rows()));
  if (translation_.size() != rotation_.rows())
    throw DimensionMismatch("translation length does not match rotation size");
  if (!all_finite(rotation_) || !translation_.allFinite())
    throw InvalidArgument("pose entries must be finite");
  const Mat gram = rotation_.transpose() * rotation_;
  const double ortho = (gram - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  if (ortho > kRotationTolerance)
    throw InvalidArgument("rotation is not orthogonal (|R^T R - I| = " + std::to_string(ortho) + ")");
  if (std::abs(rotation_.determinant() - 1.0) > kRotationTolerance)
    throw InvalidArgument("rotation has det != +1");
}

Pose Pose::identity(int dim) {
  require_dim(dim);
  return Pose(Mat::Identity(dim, dim), Vec::Zero(dim));
}

Pose Pose::orthonormalized(const Mat& rotation, Vec translation) {
  if (rotation.rows() != rotation.cols()) throw DimensionMismatch("rotation must be square");
  Eigen::JacobiSVD<Mat> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat u = svd.matrixU();
  const Mat& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(u.cols() - 1) *= -1.0;
  return Pose(u * v.transpose(), std::move(translation));
}

// --- BodyMotion -------------------------------------------------------------

BodyMotion::BodyMotion(Vec omega, Vec t_dot) : omega_(std::move(omega)), t_dot_(std::move(t_dot)) {
  require_dim(static_cast<int>(t_dot_.size()));
  const int expected = t_dot_.size() == 2 ? 1 : 3;
  if (omega_.size() != expected)
    throw DimensionMismatch("angular velocity must have " + std::to_string(expected) +
                            " component(s) in " + std::to_string(t_dot_.size()) + "D");
  if (!omega_.allFinite() || !t_dot_.allFinite())
    throw InvalidArgument("motion components must be finite");
}

BodyMotion BodyMotion::at_rest(int dim) {
  require_dim(dim);
  return BodyMotion(Vec::Zero(dim == 2 ? 1 : 3), Vec::Zero(dim));
}

// --- operations ---------------------------------------------------------------

PlacedBody apply_pose(const Conformation& conf, const Pose& pose) {
  if (conf.dim() != pose.dim()) throw DimensionMismatch("conformation and pose dimensions differ");
  Mat s = pose.rotation() * conf.coords();
  s.colwise() += pose.translation();
  return PlacedBody{std::move(s)};
}

Pose compose(const Pose& p1, const Pose& p2) {
  if (p1.dim() != p2.dim()) throw DimensionMismatch("cannot compose poses of different dimension");
  // Products of rotations drift off SO(D) by O(eps) only, well inside tolerance.
  return Pose(p1.rotation() * p2.rotation(), p1.rotation() * p2.translation() + p1.translation());
}

Pose inverse(const Pose& p) {
  Mat rt = p.rotation().transpose();
  Vec t = -(rt * p.translation());
  return Pose(std::move(rt), std::move(t));
}

Mat rotation_2d(double angle) {
  Mat r(2, 2);
  const double c = std::cos(angle), s = std::sin(angle);
  r << c, -s, s, c;
  return r;
}

Mat rotation_about_axis(const Vec& axis, double angle) {
  if (axis.size() != 3) throw DimensionMismatch("rotation axis must be a 3-vector");
  const double n = axis.norm();
  if (n == 0.0) throw InvalidArgument("rotation axis must be non-zero");
  const Eigen::Vector3d unit = axis / n;
  return Eigen::AngleAxisd(angle, unit).toRotationMatrix();
}

Mat random_rotation(SeedStream& rng, int dim) {
  require_dim(dim);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (dim == 2) return rotation_2d(rng.uniform(-std::numbers::pi, std::numbers::pi));
  // Shoemake's subgroup algorithm: uniform unit quaternion.
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  Eigen::Quaterniond q(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                       a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
  q.normalize();
  return q.toRotationMatrix();
}

Mat cross_matrix(const Vec& omega) {
  if (omega.size() != 3) throw DimensionMismatch("cross_matrix needs a 3-vector");
  Mat w(3, 3);
  w << 0.0, -omega(2), omega(1),
       omega(2), 0.0, -omega(0),
       -omega(1), omega(0), 0.0;
  return w;
}

Mat body_velocities(const Conformation& conf, const Pose& pose, const BodyMotion& motion) {
  if (conf.dim() != pose.dim() || motion.dim() != pose.dim())
    throw DimensionMismatch("conformation, pose and motion dimensions differ");
  const Mat lever = pose.rotation() * conf.coords();
  Mat rate;
  if (conf.dim() == 2) {
    Mat j(2, 2);
    j << 0.0, -1.0, 1.0, 0.0;
    rate = motion.omega()(0) * (j * lever);
  } else {
    rate = cross_matrix(motion.omega()) * lever;
  }
  rate.colwise() += motion.t_dot();
  return rate;
}

Vec geometric_center(const Mat& points) {
  if (points.cols() < 1) throw InvalidArgument("geometric center of an empty point set");
  return points.rowwise().mean();
}

double rotation_angle(const Mat& rotation) {
  const int d = static_cast<int>(rotation.rows());
  if (d == 2) return std::abs(std::atan2(rotation(1, 0), rotation(0, 0)));
  // trace = 1 + 2 cos(theta); use atan2 of the skew part for accuracy near 0 and pi.
  const double c = 0.5 * (rotation.trace() - 1.0);
  const Eigen::Vector3d skew(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                             rotation(1, 0) - rotation(0, 1));
  return std::atan2(0.5 * skew.norm(), c);
}

double rotation_error(const Mat& estimated, const Mat& truth) {
  if (estimated.rows() != truth.rows()) throw DimensionMismatch("rotation sizes differ");
  return rotation_angle(estimated * truth.transpose());
}

int affine_rank(const Mat& points, double rel_tol) {
  if (points.cols() <= 1) return 0;
  Mat centered = points.colwise() - points.rowwise().mean();
  Eigen::JacobiSVD<Mat> svd(centered);
  const Vec& sv = svd.singularValues();
  const double scale = points.cwiseAbs().maxCoeff();
  const double tol = std::max(rel_tol * sv(0), 1e-12 * (1.0 + scale));
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

Mat squared_distances(const Mat& points) {
  const Eigen::Index n = points.cols();
  Mat d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.col(i) - points.col(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

} // namespace rbl
