#include "rbl/stats.hpp"

#include <cmath>
#include <limits>

namespace rbl {

RmseSummary rmse_summary(std::span<const double> squared_errors) {
  if (squared_errors.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  const double n = static_cast<double>(squared_errors.size());
  double mean = 0.0;
  for (double v : squared_errors) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : squared_errors) var += (v - mean) * (v - mean);
  var = squared_errors.size() > 1 ? var / (n - 1.0) : 0.0;
  RmseSummary out;
  out.rmse = std::sqrt(mean);
  // se(sqrt(m)) = se(m) / (2 sqrt(m))
  out.standard_error = out.rmse > 0.0 ? std::sqrt(var / n) / (2.0 * out.rmse) : 0.0;
  return out;
}

} // namespace rbl
