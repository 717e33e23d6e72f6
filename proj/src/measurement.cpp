#include "rbl/measurement.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rbl/errors.hpp"

namespace rbl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

// Keys of child streams; node-keyed so nested node subsets draw identical noise.
constexpr std::uint64_t kNoiseKey = 0x100000;
constexpr std::uint64_t kDropoutKey = 0x200000;
constexpr std::uint64_t kAzimuthKey = 0x300000;
constexpr std::uint64_t kElevationKey = 0x400000;

} // namespace

// --- AnchorSet ------------------------------------------------------------------

AnchorSet::AnchorSet(Mat positions) : positions_(std::move(positions)) {
  if (positions_.rows() != 2 && positions_.rows() != 3)
    throw InvalidArgument("anchors must be 2D or 3D");
  if (positions_.cols() < 1) throw InvalidArgument("need at least one anchor");
  if (!positions_.allFinite()) throw InvalidArgument("anchor positions must be finite");
  for (Eigen::Index i = 0; i < positions_.cols(); ++i)
    for (Eigen::Index j = i + 1; j < positions_.cols(); ++j)
      if ((positions_.col(i) - positions_.col(j)).norm() < kMinSeparation)
        throw InvalidArgument("anchors " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

// --- MaskedMatrix ---------------------------------------------------------------

MaskedMatrix::MaskedMatrix(Mat values, Mask mask, double noise_sigma)
    : values_(std::move(values)), mask_(std::move(mask)), noise_sigma_(noise_sigma) {
  if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols())
    throw DimensionMismatch("values " + shape(values_.rows(), values_.cols()) + " vs mask " +
                            shape(mask_.rows(), mask_.cols()));
  if (!(noise_sigma_ >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!mask_(i, j)) values_(i, j) = kNaN;
      else if (!std::isfinite(values_(i, j)))
        throw InvalidArgument("observed entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") is not finite");
    }
}

MaskedMatrix MaskedMatrix::fully_observed(Mat values, double noise_sigma) {
  Mask mask = Mask::Constant(values.rows(), values.cols(), true);
  return MaskedMatrix(std::move(values), std::move(mask), noise_sigma);
}

double MaskedMatrix::at(int i, int j) const {
  if (!mask_(i, j))
    throw InvalidArgument("entry (" + std::to_string(i) + "," + std::to_string(j) + ") is unobserved");
  return values_(i, j);
}

MaskedVector MaskedMatrix::row(int i) const {
  return MaskedVector{values_.row(i).transpose(), mask_.row(i).transpose()};
}

MaskedVector MaskedMatrix::col(int j) const { return MaskedVector{values_.col(j), mask_.col(j)}; }

MaskedMatrix MaskedMatrix::with_dropped(const Mask& drop) const {
  if (drop.rows() != mask_.rows() || drop.cols() != mask_.cols())
    throw DimensionMismatch("drop mask shape differs");
  Mask kept = mask_.array() && !drop.array();
  return MaskedMatrix(values_, std::move(kept), noise_sigma_);
}

MaskedRangeMatrix::MaskedRangeMatrix(Mat values, Mask mask, double noise_sigma)
    : MaskedRangeMatrix(MaskedMatrix(std::move(values), std::move(mask), noise_sigma)) {}

MaskedRangeMatrix::MaskedRangeMatrix(MaskedMatrix m) : MaskedMatrix(std::move(m)) {
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (mask_(i, j) && values_(i, j) < 0.0) throw InvalidArgument("observed range is negative");
}

MaskedRangeMatrix MaskedRangeMatrix::fully_observed(Mat values, double noise_sigma) {
  Mask mask = Mask::Constant(values.rows(), values.cols(), true);
  return MaskedRangeMatrix(std::move(values), std::move(mask), noise_sigma);
}

// --- simulation -----------------------------------------------------------------

double wrap_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  double w = std::remainder(angle, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

Mask visibility_mask(const AnchorSet& anchors, const PlacedBody& body, const VisibilityModel& visibility,
                     SeedStream& rng) {
  if (anchors.dim() != body.dim()) throw DimensionMismatch("anchors and body dimensions differ");
  if (!(visibility.dropout_probability >= 0.0 && visibility.dropout_probability <= 1.0))
    throw InvalidArgument("dropout probability must lie in [0, 1]");
  const int m_count = anchors.size(), k_count = body.size();
  Mask mask = Mask::Constant(m_count, k_count, true);
  std::optional<Occluder> hull;
  if (visibility.body_occlusion) hull.emplace(body);
  for (int m = 0; m < k_count; ++m) {
    SeedStream drop_rng = rng.child(kDropoutKey + static_cast<std::uint64_t>(m));
    for (int n = 0; n < m_count; ++n) {
      const double u = drop_rng.uniform();
      const Vec a = anchors.anchor(n);
      const Vec s = body.positions.col(m);
      if (hull && (a - s).norm() > 0.0 && hull->blocks(a, s))
        mask(n, m) = false;
      if (u < visibility.dropout_probability) mask(n, m) = false;
    }
  }
  return mask;
}

MaskedRangeMatrix simulate_ranges(const AnchorSet& anchors, const PlacedBody& body, double sigma,
                                  const VisibilityModel& visibility, SeedStream& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("range noise sigma must be non-negative");
  Mask mask = visibility_mask(anchors, body, visibility, rng);
  Mat values(anchors.size(), body.size());
  for (int m = 0; m < body.size(); ++m) {
    SeedStream noise_rng = rng.child(kNoiseKey + static_cast<std::uint64_t>(m));
    for (int n = 0; n < anchors.size(); ++n) {
      const double noise = noise_rng.normal(0.0, sigma);
      values(n, m) = std::max(0.0, (anchors.anchor(n) - body.positions.col(m)).norm() + noise);
    }
  }
  return MaskedRangeMatrix(std::move(values), std::move(mask), sigma);
}

MaskedMatrix simulate_range_rates(const AnchorSet& anchors, const Conformation& conf, const Pose& pose,
                                  const BodyMotion& motion, const Mask& mask, double sigma,
                                  SeedStream& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("range-rate noise sigma must be non-negative");
  if (mask.rows() != anchors.size() || mask.cols() != conf.size())
    throw DimensionMismatch("range-rate mask must be M x K");
  const PlacedBody body = apply_pose(conf, pose);
  const Mat velocity = body_velocities(conf, pose, motion);
  Mat values(anchors.size(), conf.size());
  for (int m = 0; m < conf.size(); ++m) {
    SeedStream noise_rng = rng.child(kNoiseKey + static_cast<std::uint64_t>(m));
    for (int n = 0; n < anchors.size(); ++n) {
      const double noise = noise_rng.normal(0.0, sigma);
      const Vec los = body.positions.col(m) - anchors.anchor(n);
      const double range = los.norm();
      if (range == 0.0) {
        if (mask(n, m)) throw InvalidArgument("range-rate undefined for a node at an anchor");
        values(n, m) = 0.0;
        continue;
      }
      values(n, m) = los.dot(velocity.col(m)) / range + noise;
    }
  }
  return MaskedMatrix(std::move(values), mask, sigma);
}

AngleMeasurements simulate_aoa(const AnchorSet& anchors, const PlacedBody& body, double sigma_rad,
                               const VisibilityModel& visibility, SeedStream& rng) {
  if (!(sigma_rad >= 0.0)) throw InvalidArgument("angle noise sigma must be non-negative");
  const int dim = anchors.dim();
  AngleMeasurements out;
  out.mask = visibility_mask(anchors, body, visibility, rng);
  out.noise_sigma_rad = sigma_rad;
  out.azimuth = Mat::Zero(anchors.size(), body.size());
  if (dim == 3) out.elevation = Mat::Zero(anchors.size(), body.size());
  constexpr double half_pi = 0.5 * std::numbers::pi;
  for (int m = 0; m < body.size(); ++m) {
    SeedStream az_rng = rng.child(kAzimuthKey + static_cast<std::uint64_t>(m));
    SeedStream el_rng = rng.child(kElevationKey + static_cast<std::uint64_t>(m));
    for (int n = 0; n < anchors.size(); ++n) {
      const double az_noise = az_rng.normal(0.0, sigma_rad);
      const double el_noise = dim == 3 ? el_rng.normal(0.0, sigma_rad) : 0.0;
      const Vec v = body.positions.col(m) - anchors.anchor(n);
      const double len = v.norm();
      if (len == 0.0) throw InvalidArgument("angle undefined for a node coincident with an anchor");
      const double rho = std::hypot(v(0), v(1));
      double az = rho > 1e-12 * len ? std::atan2(v(1), v(0)) : 0.0;
      az += az_noise;
      if (dim == 3) {
        double el = std::atan2(v(2), rho) + el_noise;
        // Noise carrying the direction over a pole flips the azimuth.
        if (el > half_pi) {
          el = std::numbers::pi - el;
          az += std::numbers::pi;
        } else if (el < -half_pi) {
          el = -std::numbers::pi - el;
          az += std::numbers::pi;
        }
        out.elevation(n, m) = el;
      }
      out.azimuth(n, m) = wrap_angle(az);
    }
  }
  return out;
}

// --- PartialEdm -----------------------------------------------------------------

PartialEdm::PartialEdm(Mat squared, Mask mask, int dim, std::optional<BlockLayout> layout)
    : squared_(std::move(squared)), mask_(std::move(mask)), dim_(dim), layout_(layout) {
  const Eigen::Index n = squared_.rows();
  if (squared_.cols() != n) throw DimensionMismatch("EDM must be square");
  if (mask_.rows() != n || mask_.cols() != n) throw DimensionMismatch("EDM mask shape differs");
  if (dim_ != 2 && dim_ != 3) throw InvalidArgument("EDM embedding dimension must be 2 or 3");
  if (layout_ && layout_->num_anchors + layout_->num_nodes != n)
    throw DimensionMismatch("block layout does not cover the EDM");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double diag = squared_(i, i);
    if (std::isfinite(diag) && std::abs(diag) > 1e-12)
      throw InvalidArgument("EDM is not hollow at (" + std::to_string(i) + "," + std::to_string(i) + ")");
    mask_(i, i) = true;
    squared_(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (mask_(i, j) != mask_(j, i)) throw InvalidArgument("EDM mask is not symmetric");
      if (!mask_(i, j)) {
        squared_(i, j) = squared_(j, i) = kNaN;
        continue;
      }
      const double a = squared_(i, j), b = squared_(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0)
        throw InvalidArgument("known EDM entries must be finite and non-negative");
      if (std::abs(a - b) > 1e-9 * std::max(1.0, std::max(a, b)))
        throw InvalidArgument("EDM is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  if (layout_) {
    const int na = layout_->num_anchors;
    if (!mask_.topLeftCorner(na, na).all() || !mask_.bottomRightCorner(n - na, n - na).all())
      throw InvalidArgument("anchor and body blocks of a partial EDM must be fully known");
  }
}

PartialEdm PartialEdm::from_distances(const Mat& distances, const Mask& mask, int dim,
                                      std::optional<BlockLayout> layout) {
  Mask m = mask;
  if (m.rows() != distances.rows() || m.cols() != distances.cols())
    throw DimensionMismatch("distance matrix and mask shapes differ");
  for (Eigen::Index i = 0; i < distances.rows(); ++i)
    for (Eigen::Index j = 0; j < distances.cols(); ++j)
      if (std::isnan(distances(i, j)) && i != j) m(i, j) = false;
  return PartialEdm(distances.cwiseProduct(distances), std::move(m), dim, layout);
}

double PartialEdm::squared(int i, int j) const {
  if (!mask_(i, j))
    throw InvalidArgument("EDM entry (" + std::to_string(i) + "," + std::to_string(j) + ") is unknown");
  return squared_(i, j);
}

double PartialEdm::distance(int i, int j) const { return std::sqrt(squared(i, j)); }

Mat PartialEdm::distances() const { return squared_.cwiseSqrt(); }

PartialEdm assemble_partial_edm(const AnchorSet& anchors, const Conformation& conf,
                                const MaskedRangeMatrix& cross) {
  if (anchors.dim() != conf.dim()) throw DimensionMismatch("anchor and conformation dimensions differ");
  const int m_count = anchors.size(), k_count = conf.size();
  if (cross.rows() != m_count || cross.cols() != k_count)
    throw DimensionMismatch("cross block is " + shape(cross.rows(), cross.cols()) + ", expected " +
                            shape(m_count, k_count));
  const int n = m_count + k_count;
  Mat sq = Mat::Zero(n, n);
  Mask mask = Mask::Constant(n, n, true);
  sq.topLeftCorner(m_count, m_count) = squared_distances(anchors.positions());
  sq.bottomRightCorner(k_count, k_count) = squared_distances(conf.coords());
  for (int a = 0; a < m_count; ++a)
    for (int k = 0; k < k_count; ++k) {
      const bool seen = cross.observed(a, k);
      const double v = seen ? cross.at(a, k) * cross.at(a, k) : kNaN;
      sq(a, m_count + k) = sq(m_count + k, a) = v;
      mask(a, m_count + k) = mask(m_count + k, a) = seen;
    }
  return PartialEdm(std::move(sq), std::move(mask), anchors.dim(), BlockLayout{m_count, k_count});
}

PartialEdm assemble_two_body_edm(const Conformation& conf1, const Conformation& conf2,
                                 const MaskedRangeMatrix& cross) {
  if (conf1.dim() != conf2.dim()) throw DimensionMismatch("conformation dimensions differ");
  const AnchorSet as_anchors(conf1.coords());
  return assemble_partial_edm(as_anchors, conf2, cross);
}

} // namespace rbl
