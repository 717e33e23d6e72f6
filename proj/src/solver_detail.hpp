#pragma once

#include <functional>

#include "rbl/geometry.hpp"

namespace rbl::detail {

/// Fills residual vector and Jacobian at x.
using ResidualFn = std::function<void(const Vec& x, Vec& residuals, Mat& jacobian)>;

struct GaussNewtonResult {
  Vec x;
  Vec residuals;
  Mat jacobian;
  double cost = 0.0; // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Gauss-Newton with step halving on cost increase. Converged when the
/// accepted step is shorter than kStepTolerance or no decrease is possible.
GaussNewtonResult gauss_newton(const ResidualFn& residuals, Vec x);

} // namespace rbl::detail
