#include <algorithm>
#include <cmath>
#include <numbers>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"

namespace rbl {

DistanceAlphabet build_distance_alphabet(const Conformation& conf1, const Conformation& conf2,
                                         double center_distance, int num_rotation_samples,
                                         double quantization_step, std::uint64_t seed) {
  const int dim = conf1.dim();
  if (conf2.dim() != dim) throw DimensionMismatch("conformation dimensions differ");
  if (num_rotation_samples < 1) throw InvalidArgument("need at least one rotation sample");
  if (!(quantization_step > 0.0)) throw InvalidArgument("quantization step must be positive");
  if (!(center_distance >= 0.0) || !std::isfinite(center_distance))
    throw InvalidArgument("center distance must be finite and non-negative");

  const Mat body1 = conf1.coords().colwise() - geometric_center(conf1);
  const Mat body2 = conf2.coords().colwise() - geometric_center(conf2);
  Vec offset = Vec::Zero(dim);
  offset(0) = center_distance;

  SeedStream rng(seed);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(num_rotation_samples) * body1.cols() * body2.cols());
  for (int s = 0; s < num_rotation_samples; ++s) {
    const Mat rotation = dim == 2 ? rotation_2d(2.0 * std::numbers::pi * s / num_rotation_samples)
                                  : random_rotation(rng, 3);
    Mat placed = rotation * body2;
    placed.colwise() += offset;
    for (Eigen::Index i = 0; i < body1.cols(); ++i)
      for (Eigen::Index j = 0; j < placed.cols(); ++j) {
        const double sq = (body1.col(i) - placed.col(j)).squaredNorm();
        values.push_back(std::floor(sq / quantization_step) * quantization_step);
      }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return DistanceAlphabet{std::move(values), quantization_step, num_rotation_samples};
}

CompletionResult snap_to_alphabet(const CompletionResult& result, const DistanceAlphabet& alphabet) {
  if (alphabet.values.empty()) throw InvalidArgument("distance alphabet is empty");
  const auto& symbols = alphabet.values;
  CompletionResult out = result;
  const Eigen::Index n = out.completed.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (out.known(i, j)) continue;
      const double v = out.completed(i, j);
      auto hi = std::lower_bound(symbols.begin(), symbols.end(), v);
      double snapped;
      if (hi == symbols.begin()) snapped = *hi;
      else if (hi == symbols.end()) snapped = symbols.back();
      else {
        const double upper = *hi, lower = *std::prev(hi);
        snapped = (v - lower <= upper - v) ? lower : upper;
      }
      out.completed(i, j) = snapped;
      out.completed(j, i) = snapped;
    }
  return out;
}

} // namespace rbl
