#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"
#include "solver_detail.hpp"

namespace rbl {

namespace {

// Best rank-r approximation of a symmetric matrix (largest |eigenvalues|).
Mat truncate_rank(const Mat& x, int rank) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(x);
  const Vec& values = eig.eigenvalues();
  const Mat& vectors = eig.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values(a)) > std::abs(values(b)); });
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (int i = 0; i < rank && i < static_cast<int>(order.size()); ++i) {
    const Eigen::Index k = order[static_cast<std::size_t>(i)];
    out.noalias() += values(k) * vectors.col(k) * vectors.col(k).transpose();
  }
  return out;
}

// Restore known entries, symmetry, zero diagonal and non-negativity.
Mat project_constraints(const Mat& x, const Mat& known_values, const Mask& known) {
  const Eigen::Index n = x.rows();
  Mat y(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = known(i, j) ? known_values(i, j) : std::max(0.0, 0.5 * (x(i, j) + x(j, i)));
      y(i, j) = v;
      y(j, i) = v;
    }
  }
  return y;
}

bool is_cross(const PartialEdm& partial, Eigen::Index i, Eigen::Index j) {
  if (!partial.layout()) return true;
  const int na = partial.layout()->num_anchors;
  return (i < na) != (j < na);
}

struct Polished {
  Mat completed;
  double gap = 0.0;
  int iterations = 0;
};

// Gauss-Newton on point coordinates, fitting the known squared distances.
// Started from the MDS embedding of the projection result, this removes the
// slow linear tail of alternating projections. Known entries stay fixed in
// the output; only unknown ones are read off the fitted points.
Polished polish(const Mat& x, const Mat& known_values, const Mask& known, int dim) {
  // Classical MDS without the Euclidean check: an unfinished projection run
  // may be far from an EDM and still be a useful starting point.
  const Eigen::Index count = x.rows();
  const Mat centering = Mat::Identity(count, count) - Mat::Constant(count, count, 1.0 / static_cast<double>(count));
  const Mat gram = -0.5 * centering * x * centering;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (gram + gram.transpose()));
  Mat start_points = Mat::Zero(dim, count);
  for (int d = 0; d < dim && d < count; ++d) {
    const Eigen::Index k = count - 1 - d;
    start_points.row(d) = std::sqrt(std::max(eig.eigenvalues()(k), 0.0)) * eig.eigenvectors().col(k).transpose();
  }
  const Eigen::Index n = x.rows();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (known(i, j)) pairs.emplace_back(i, j);
  const double scale = std::max(known_values.cwiseAbs().maxCoeff(), 1e-300);

  const detail::ResidualFn fn = [&](const Vec& flat, Vec& r, Mat& jac) {
    r.resize(static_cast<Eigen::Index>(pairs.size()));
    jac = Mat::Zero(r.size(), flat.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      const Vec diff = flat.segment(i * dim, dim) - flat.segment(j * dim, dim);
      const auto row = static_cast<Eigen::Index>(k);
      r(row) = (diff.squaredNorm() - known_values(i, j)) / scale;
      jac.block(row, i * dim, 1, dim) = 2.0 * diff.transpose() / scale;
      jac.block(row, j * dim, 1, dim) = -2.0 * diff.transpose() / scale;
    }
  };
  const Vec flat = Eigen::Map<const Vec>(start_points.data(), start_points.size());
  const detail::GaussNewtonResult gn = detail::gauss_newton(fn, flat);
  const Mat points = Eigen::Map<const Mat>(gn.x.data(), dim, n);

  Polished out;
  out.completed = squared_distances(points);
  Mat mismatch = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        out.completed(i, j) = 0.0;
      } else if (known(i, j)) {
        mismatch(i, j) = out.completed(i, j) - known_values(i, j);
        out.completed(i, j) = known_values(i, j);
      }
    }
  out.gap = mismatch.norm() / std::max(out.completed.norm(), 1e-300);
  out.iterations = gn.iterations;
  return out;
}

} // namespace

CompletionResult complete_edm(const PartialEdm& partial, const CompletionOptions& options) {
  if (options.rank_slack < 0) throw InvalidArgument("rank slack must be non-negative");
  if (options.max_iterations < 0) throw InvalidArgument("max iterations must be non-negative");
  const Eigen::Index n = partial.size();
  CompletionResult result;
  result.known = partial.mask();
  result.dim = partial.dim();

  if (partial.complete()) {
    result.completed = partial.squared_values();
    result.converged = true;
    return result;
  }

  // Unknown entries start at the mean of the observed cross entries.
  double sum = 0.0, fallback_sum = 0.0;
  int count = 0, fallback_count = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!partial.known(static_cast<int>(i), static_cast<int>(j))) continue;
      const double v = partial.squared_values()(i, j);
      fallback_sum += v;
      ++fallback_count;
      if (is_cross(partial, i, j)) {
        sum += v;
        ++count;
      }
    }
  const double start = count > 0 ? sum / count : (fallback_count > 0 ? fallback_sum / fallback_count : 0.0);

  const Mat& known_values = partial.squared_values();
  const Mask& known = partial.mask();
  Mat x = known_values;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!known(i, j)) x(i, j) = start;

  const int rank = std::min(static_cast<int>(n), partial.dim() + 2 + options.rank_slack);
  double gap = 0.0;
  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    const Mat low_rank = truncate_rank(x, rank);
    Mat next = project_constraints(low_rank, known_values, known);
    const double norm = std::max(next.norm(), 1e-300);
    gap = (low_rank - next).norm() / norm;
    const double change = (next - x).norm() / std::max(x.norm(), 1e-300);
    x = std::move(next);
    if (change < options.relative_tolerance) break;
  }
  if (Polished refined = polish(x, known_values, known, partial.dim()); refined.gap < gap) {
    x = std::move(refined.completed);
    gap = refined.gap;
    result.refinement_iterations = refined.iterations;
  }
  result.completed = std::move(x);
  result.iterations = it;
  result.final_objective = gap;
  result.converged = gap < options.stall_threshold;
  return result;
}

} // namespace rbl
