#include <cmath>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"

namespace rbl {

MdsEmbedding edm_to_points(const Mat& squared_edm, int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("embedding dimension must be 2 or 3");
  const Eigen::Index n = squared_edm.rows();
  if (squared_edm.cols() != n) throw DimensionMismatch("EDM must be square");
  if (n < 1) throw InvalidArgument("empty EDM");
  if (!squared_edm.allFinite()) throw InvalidArgument("EDM has non-finite entries; complete it first");

  const Mat centering = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Mat gram = -0.5 * centering * squared_edm * centering;
  gram = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Vec& values = eig.eigenvalues(); // ascending
  const double largest = values(n - 1);
  const double smallest = values(0);
  const double noise_floor = 1e-12 * (1.0 + squared_edm.cwiseAbs().maxCoeff());
  if (smallest < 0.0 && -smallest > 0.1 * std::max(largest, 0.0) + noise_floor)
    throw NonEuclidean("EDM is far from Euclidean (eigenvalue " + std::to_string(smallest) + " vs " +
                       std::to_string(largest) + ")");

  MdsEmbedding out;
  out.points = Mat::Zero(dim, n);
  for (int d = 0; d < dim && d < n; ++d) {
    const Eigen::Index k = n - 1 - d;
    double lambda = values(k);
    if (lambda < 0.0) {
      if (-lambda > noise_floor) out.conditioning_warning = true;
      lambda = 0.0;
    }
    out.points.row(d) = std::sqrt(lambda) * eig.eigenvectors().col(k).transpose();
  }
  return out;
}

} // namespace rbl
