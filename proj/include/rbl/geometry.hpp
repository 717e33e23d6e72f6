#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbl/random.hpp"

namespace rbl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Tolerance for R^T R = I and det(R) = +1.
inline constexpr double kRotationTolerance = 1e-9;

/// Fixed body-frame sensor coordinates, one column per node (D x K).
///
/// Immutable after construction, so pairwise node distances are a property
/// of the value itself.
class Conformation {
public:
  Conformation(Mat coords, std::vector<std::string> labels = {});

  int dim() const noexcept { return static_cast<int>(coords_.rows()); }
  int size() const noexcept { return static_cast<int>(coords_.cols()); }
  const Mat& coords() const noexcept { return coords_; }
  Vec node(int k) const { return coords_.col(k); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  double distance(int i, int j) const { return (coords_.col(i) - coords_.col(j)).norm(); }

  /// Rank of the centered coordinate matrix.
  int affine_rank(double rel_tol = 1e-9) const;
  /// True when the nodes affinely span R^D, i.e. the pose is identifiable.
  bool spans_space() const { return affine_rank() == dim(); }

  /// Sub-conformation made of the first `count` nodes.
  Conformation prefix(int count) const;

private:
  Mat coords_;
  std::vector<std::string> labels_;
};

/// Rigid transform x -> R x + t with R in SO(D).
class Pose {
public:
  /// Validates orthogonality and det(R) = +1 within kRotationTolerance.
  Pose(Mat rotation, Vec translation);

  static Pose identity(int dim);
  /// Accepts an approximately orthogonal matrix and projects it onto SO(D)
  /// through the polar decomposition before validation.
  static Pose orthonormalized(const Mat& rotation, Vec translation);

  int dim() const noexcept { return static_cast<int>(rotation_.rows()); }
  const Mat& rotation() const noexcept { return rotation_; }
  const Vec& translation() const noexcept { return translation_; }

  Vec apply(const Vec& x) const { return rotation_ * x + translation_; }

private:
  Mat rotation_;
  Vec translation_;
};

/// World-frame node positions of a placed body (D x K).
struct PlacedBody {
  Mat positions;

  int dim() const noexcept { return static_cast<int>(positions.rows()); }
  int size() const noexcept { return static_cast<int>(positions.cols()); }
};

/// Angular and translational velocity. In 2D omega holds the single
/// z-component; in 3D it is the full angular velocity vector.
class BodyMotion {
public:
  BodyMotion(Vec omega, Vec t_dot);

  static BodyMotion at_rest(int dim);

  int dim() const noexcept { return static_cast<int>(t_dot_.size()); }
  const Vec& omega() const noexcept { return omega_; }
  const Vec& t_dot() const noexcept { return t_dot_; }

private:
  Vec omega_;
  Vec t_dot_;
};

PlacedBody apply_pose(const Conformation& conf, const Pose& pose);

/// (R1 R2, R1 t2 + t1): apply p2 first, then p1.
Pose compose(const Pose& p1, const Pose& p2);
Pose inverse(const Pose& p);

Mat random_rotation(SeedStream& rng, int dim);

Mat rotation_2d(double angle);
/// Rotation by `angle` about a (not necessarily unit) axis, Rodrigues' formula.
Mat rotation_about_axis(const Vec& axis, double angle);

/// Skew-symmetric [w]x with [w]x v = w x v.
Mat cross_matrix(const Vec& omega);

/// Node velocities [w]x R c_i + t_dot (2D: w J R c_i + t_dot), one per column.
Mat body_velocities(const Conformation& conf, const Pose& pose, const BodyMotion& motion);

Vec geometric_center(const Mat& points);
inline Vec geometric_center(const Conformation& conf) { return geometric_center(conf.coords()); }
inline Vec geometric_center(const PlacedBody& body) { return geometric_center(body.positions); }

/// Geodesic angle of a rotation, in [0, pi].
double rotation_angle(const Mat& rotation);
/// Geodesic distance angle(R_a R_b^T).
double rotation_error(const Mat& estimated, const Mat& truth);

/// Affine rank of a point set (columns), relative to its largest extent.
int affine_rank(const Mat& points, double rel_tol = 1e-9);

/// Pairwise squared distances of columns.
Mat squared_distances(const Mat& points);

} // namespace rbl
