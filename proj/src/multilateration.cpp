#include <cmath>
#include <vector>

#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"
#include "solver_detail.hpp"

namespace rbl {

namespace detail {

GaussNewtonResult gauss_newton(const ResidualFn& residuals, Vec x) {
  GaussNewtonResult out;
  Vec r;
  Mat jac;
  residuals(x, r, jac);
  double cost = r.squaredNorm();
  for (int it = 0; it < kMaxIterations; ++it) {
    out.iterations = it + 1;
    // Minimum-norm step keeps flat directions (rank-deficient J) still.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac);
    cod.setThreshold(1e-12);
    Vec step = cod.solve(-r);
    if (!step.allFinite()) break;
    double scale = 1.0;
    Vec trial_r;
    Mat trial_jac;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      Vec trial = x + scale * step;
      residuals(trial, trial_r, trial_jac);
      const double trial_cost = trial_r.squaredNorm();
      if (trial_cost <= cost) {
        x = std::move(trial);
        r = trial_r;
        jac = trial_jac;
        cost = trial_cost;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    const double moved = scale * step.norm();
    if (!improved || moved < kStepTolerance) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  out.cost = cost;
  out.residuals = std::move(r);
  out.jacobian = std::move(jac);
  return out;
}

} // namespace detail

namespace {

struct ObservedRanges {
  Mat anchors; // D x n
  Vec ranges;
};

ObservedRanges gather(const AnchorSet& anchors, const MaskedVector& ranges) {
  if (ranges.size() != anchors.size())
    throw DimensionMismatch("range vector length " + std::to_string(ranges.size()) + " vs " +
                            std::to_string(anchors.size()) + " anchors");
  const int n = ranges.observed_count();
  ObservedRanges out{Mat(anchors.dim(), n), Vec(n)};
  for (int i = 0, j = 0; i < ranges.size(); ++i) {
    if (!ranges.mask(i)) continue;
    out.anchors.col(j) = anchors.anchor(i);
    out.ranges(j) = ranges.values(i);
    ++j;
  }
  return out;
}

detail::ResidualFn range_residuals(const ObservedRanges& obs) {
  return [&obs](const Vec& x, Vec& r, Mat& jac) {
    const Eigen::Index n = obs.ranges.size();
    r.resize(n);
    jac.setZero(n, x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec diff = x - obs.anchors.col(i);
      const double len = diff.norm();
      r(i) = len - obs.ranges(i);
      if (len > 1e-14) jac.row(i) = diff.transpose() / len;
    }
  };
}

// Linearized fix from differencing every range equation against the first.
Vec linearized_fix(const ObservedRanges& obs) {
  const Eigen::Index n = obs.ranges.size();
  const Vec a0 = obs.anchors.col(0);
  const double d0 = obs.ranges(0);
  Mat lhs(n - 1, a0.size());
  Vec rhs(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Vec ai = obs.anchors.col(i);
    lhs.row(i - 1) = 2.0 * (ai - a0).transpose();
    rhs(i - 1) = ai.squaredNorm() - a0.squaredNorm() - obs.ranges(i) * obs.ranges(i) + d0 * d0;
  }
  return lhs.colPivHouseholderQr().solve(rhs);
}

PointEstimate finish(const detail::GaussNewtonResult& gn, int observed) {
  PointEstimate est;
  est.position = gn.x;
  est.converged = gn.converged;
  est.iterations = gn.iterations;
  est.observed = observed;
  est.residual_rms = observed > 0 ? std::sqrt(gn.cost / observed) : 0.0;
  return est;
}

} // namespace

PointEstimate multilaterate(const AnchorSet& anchors, const MaskedVector& ranges,
                            const std::optional<Vec>& initial_guess) {
  const int dim = anchors.dim();
  if (initial_guess && initial_guess->size() != dim) throw DimensionMismatch("initial guess dimension");
  const ObservedRanges obs = gather(anchors, ranges);
  const int n = static_cast<int>(obs.ranges.size());
  if (n < dim)
    throw InsufficientData("multilateration needs at least " + std::to_string(dim) + " observed ranges, got " +
                           std::to_string(n));
  const auto fn = range_residuals(obs);
  const int rank = affine_rank(obs.anchors);

  if (rank == dim) {
    const Vec start = initial_guess ? *initial_guess : linearized_fix(obs);
    return finish(detail::gauss_newton(fn, start), n);
  }

  // Anchors span a proper affine subspace: solve inside it, then lift along
  // the complement. In codimension one this yields a mirror pair.
  const Vec a0 = obs.anchors.col(0);
  const Mat centered = obs.anchors.colwise() - a0;
  Eigen::JacobiSVD<Mat> svd(centered, Eigen::ComputeFullU);
  const Mat basis = svd.matrixU().leftCols(rank);
  const Vec normal = svd.matrixU().col(rank);
  Vec in_plane = Vec::Zero(rank);
  if (rank > 0) {
    Mat lhs(n - 1, rank);
    Vec rhs(n - 1);
    for (int i = 1; i < n; ++i) {
      const Vec diff = obs.anchors.col(i) - a0;
      lhs.row(i - 1) = 2.0 * (basis.transpose() * diff).transpose();
      rhs(i - 1) = diff.squaredNorm() - obs.ranges(i) * obs.ranges(i) + obs.ranges(0) * obs.ranges(0);
    }
    in_plane = lhs.colPivHouseholderQr().solve(rhs);
  }
  const Vec foot = a0 + basis * in_plane;
  const double height = std::sqrt(std::max(0.0, obs.ranges(0) * obs.ranges(0) - in_plane.squaredNorm()));
  const Vec up = foot + height * normal;
  const Vec down = foot - height * normal;

  PointEstimate first = finish(detail::gauss_newton(fn, up), n);
  PointEstimate second = finish(detail::gauss_newton(fn, down), n);
  if (initial_guess && (second.position - *initial_guess).norm() < (first.position - *initial_guess).norm())
    std::swap(first, second);
  first.ambiguous = true;
  if (rank == dim - 1) first.mirror = second.position;
  return first;
}

} // namespace rbl
