#include <cmath>
#include <limits>
#include <vector>

#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"
#include "solver_detail.hpp"

namespace rbl {

namespace {

struct HybridObservations {
  int dim = 0;
  std::vector<std::pair<Vec, double>> ranges;    // anchor, distance
  std::vector<std::pair<Vec, double>> azimuths;  // anchor, angle
  std::vector<std::pair<Vec, double>> elevations;
  std::size_t total() const { return ranges.size() + azimuths.size() + elevations.size(); }
};

void check_length(const MaskedVector& v, int expected, const char* what) {
  if (v.size() != 0 && v.size() != expected)
    throw DimensionMismatch(std::string(what) + " vector length does not match anchor count");
}

// Unit direction from azimuth/elevation.
Vec direction(double azimuth, double elevation, int dim) {
  Vec u(dim);
  if (dim == 2) {
    u << std::cos(azimuth), std::sin(azimuth);
  } else {
    u << std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation);
  }
  return u;
}

} // namespace

MaskedVector azimuth_column(const AngleMeasurements& angles, int node) {
  return MaskedVector{angles.azimuth.col(node), angles.mask.col(node)};
}

MaskedVector elevation_column(const AngleMeasurements& angles, int node) {
  if (angles.dim() == 2) return MaskedVector{Vec(0), MaskVec(0)};
  return MaskedVector{angles.elevation.col(node), angles.mask.col(node)};
}

PointEstimate localize_point_hybrid(const AnchorSet& anchors, const MaskedVector& ranges,
                                    const MaskedVector& azimuth, const MaskedVector& elevation,
                                    const HybridOptions& options, const std::optional<Vec>& initial_guess) {
  const int dim = anchors.dim();
  const int m_count = anchors.size();
  check_length(ranges, m_count, "range");
  check_length(azimuth, m_count, "azimuth");
  check_length(elevation, m_count, "elevation");
  if (dim == 2 && elevation.size() != 0) throw DimensionMismatch("elevation is undefined in 2D");
  if (!(options.range_sigma > 0.0) || !(options.angle_sigma > 0.0))
    throw InvalidArgument("hybrid sigmas must be positive");

  HybridObservations obs{dim, {}, {}, {}};
  for (int n = 0; n < ranges.size(); ++n)
    if (ranges.mask(n)) obs.ranges.emplace_back(anchors.anchor(n), ranges.values(n));
  for (int n = 0; n < azimuth.size(); ++n)
    if (azimuth.mask(n)) obs.azimuths.emplace_back(anchors.anchor(n), azimuth.values(n));
  for (int n = 0; n < elevation.size(); ++n)
    if (elevation.mask(n)) obs.elevations.emplace_back(anchors.anchor(n), elevation.values(n));
  if (obs.total() == 0) throw InsufficientData("no measurements for hybrid localization");

  const double sr = options.range_sigma, sa = options.angle_sigma;
  const detail::ResidualFn fn = [&](const Vec& x, Vec& r, Mat& jac) {
    const Eigen::Index rows = static_cast<Eigen::Index>(obs.total());
    r.setZero(rows);
    jac.setZero(rows, dim);
    Eigen::Index row = 0;
    for (const auto& [a, d] : obs.ranges) {
      const Vec v = x - a;
      const double len = v.norm();
      r(row) = (len - d) / sr;
      if (len > 1e-14) jac.row(row) = v.transpose() / (len * sr);
      ++row;
    }
    for (const auto& [a, az] : obs.azimuths) {
      const Vec v = x - a;
      const double rho2 = v(0) * v(0) + v(1) * v(1);
      if (rho2 > 1e-24) {
        r(row) = wrap_angle(std::atan2(v(1), v(0)) - az) / sa;
        jac(row, 0) = -v(1) / (rho2 * sa);
        jac(row, 1) = v(0) / (rho2 * sa);
      }
      ++row;
    }
    for (const auto& [a, el] : obs.elevations) {
      const Vec v = x - a;
      const double rho = std::max(std::hypot(v(0), v(1)), 1e-12);
      const double r2 = v.squaredNorm();
      if (r2 > 1e-24) {
        r(row) = wrap_angle(std::atan2(v(2), rho) - el) / sa;
        jac(row, 0) = -v(2) * v(0) / (rho * r2 * sa);
        jac(row, 1) = -v(2) * v(1) / (rho * r2 * sa);
        jac(row, 2) = rho / (r2 * sa);
      }
      ++row;
    }
  };

  // Candidate starting points; the lowest final cost wins.
  std::vector<Vec> starts;
  if (initial_guess) {
    if (initial_guess->size() != dim) throw DimensionMismatch("initial guess dimension");
    starts.push_back(*initial_guess);
  }
  if (static_cast<int>(obs.ranges.size()) >= dim) {
    const PointEstimate ranged = multilaterate(anchors, ranges);
    starts.push_back(ranged.position);
    if (ranged.mirror) starts.push_back(*ranged.mirror);
  }
  // Polar fixes from anchors that report both range and bearing.
  for (int n = 0; n < m_count; ++n) {
    const bool has_range = ranges.size() && ranges.mask(n);
    const bool has_az = azimuth.size() && azimuth.mask(n);
    const bool has_el = dim == 2 || (elevation.size() && elevation.mask(n));
    if (has_range && has_az && has_el) {
      const double el = dim == 3 ? elevation.values(n) : 0.0;
      starts.push_back(anchors.anchor(n) + ranges.values(n) * direction(azimuth.values(n), el, dim));
    }
  }
  // Bearing-line intersection.
  {
    Mat lhs = Mat::Zero(dim, dim);
    Vec rhs = Vec::Zero(dim);
    int lines = 0;
    for (int n = 0; n < m_count; ++n) {
      const bool has_az = azimuth.size() && azimuth.mask(n);
      const bool has_el = dim == 2 || (elevation.size() && elevation.mask(n));
      if (!has_az || !has_el) continue;
      const Vec u = direction(azimuth.values(n), dim == 3 ? elevation.values(n) : 0.0, dim);
      const Mat proj = Mat::Identity(dim, dim) - u * u.transpose();
      lhs += proj;
      rhs += proj * anchors.anchor(n);
      ++lines;
    }
    if (lines >= 2) {
      Eigen::FullPivLU<Mat> lu(lhs);
      if (lu.rank() == dim) starts.push_back(lu.solve(rhs));
    }
  }
  if (starts.empty()) throw InsufficientData("hybrid measurements do not provide a starting point");

  detail::GaussNewtonResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const Vec& start : starts) {
    detail::GaussNewtonResult gn = detail::gauss_newton(fn, start);
    if (gn.cost < best.cost) best = std::move(gn);
  }
  Eigen::JacobiSVD<Mat> svd(best.jacobian);
  const Vec& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * std::max(sv(0), 1e-300)) ++rank;
  if (rank < dim) throw RankDeficient("hybrid configuration is unobservable");

  PointEstimate est;
  est.position = best.x;
  est.converged = best.converged;
  est.iterations = best.iterations;
  est.observed = static_cast<int>(obs.total());
  est.residual_rms = std::sqrt(best.cost / static_cast<double>(obs.total()));
  return est;
}

} // namespace rbl
