#pragma once

#include <span>

namespace rbl {

struct RmseSummary {
  double rmse = 0.0;
  /// Standard error of the RMSE (delta method on the mean squared error).
  double standard_error = 0.0;
};

/// RMSE and its standard error from per-trial squared errors. NaN for an empty set.
RmseSummary rmse_summary(std::span<const double> squared_errors);

} // namespace rbl
