#include "rbl/placement.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "rbl/errors.hpp"
#include "rbl/parallel.hpp"
#include "rbl/stats.hpp"

namespace rbl {

namespace {

constexpr int kRestarts = 20;
constexpr int kMaxDescentIterations = 20000;
const double kGoldenAngle = std::numbers::pi * (3.0 - std::sqrt(5.0));

Mat normalize_columns(Mat u) {
  for (Eigen::Index i = 0; i < u.cols(); ++i) u.col(i).normalize();
  return u;
}

double potential_unchecked(const Mat& u) { return (u.transpose() * u).squaredNorm(); }

Mat descend(Mat u) {
  const double m = static_cast<double>(u.cols());
  double step = 0.25 / m;
  double fp = potential_unchecked(u);
  for (int it = 0; it < kMaxDescentIterations && step > 1e-14; ++it) {
    const Mat frame_op = u * u.transpose();
    Mat grad = 4.0 * frame_op * u;
    // Project onto the tangent space of each sphere.
    for (Eigen::Index i = 0; i < u.cols(); ++i) grad.col(i) -= grad.col(i).dot(u.col(i)) * u.col(i);
    if (grad.norm() < 1e-13) break;
    const Mat trial = normalize_columns(u - step * grad);
    const double trial_fp = potential_unchecked(trial);
    if (trial_fp < fp) {
      u = trial;
      fp = trial_fp;
    } else {
      step *= 0.5;
    }
  }
  return u;
}

PlacementResult place(const PlacementProblem& problem, Mat directions) {
  PlacementResult out;
  out.frame_potential = frame_potential(directions);
  out.positions = (problem.anchor_radius * directions).colwise() + problem.target_center;
  out.directions = std::move(directions);
  return out;
}

} // namespace

void PlacementProblem::validate() const {
  if (num_anchors < 1) throw InvalidArgument("placement needs at least one anchor");
  if (dim != 2 && dim != 3) throw InvalidArgument("placement dimension must be 2 or 3");
  if (!(anchor_radius > 0.0) || !std::isfinite(anchor_radius)) throw InvalidArgument("anchor radius must be positive");
  if (target_center.size() != dim) throw DimensionMismatch("target center dimension differs from problem dimension");
  if (!target_center.allFinite()) throw InvalidArgument("target center must be finite");
}

double frame_potential(const Mat& directions) {
  for (Eigen::Index i = 0; i < directions.cols(); ++i)
    if (std::abs(directions.col(i).norm() - 1.0) > 1e-9)
      throw InvalidArgument("frame potential needs unit vectors (column " + std::to_string(i) + ")");
  return potential_unchecked(directions);
}

PlacementResult optimize_placement(const PlacementProblem& problem) {
  problem.validate();
  Mat best;
  double best_fp = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < kRestarts; ++restart) {
    SeedStream rng(derive_seed(problem.seed, {static_cast<std::uint64_t>(restart)}));
    Mat u(problem.dim, problem.num_anchors);
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      for (Eigen::Index i = 0; i < u.rows(); ++i) u(i, j) = rng.normal();
    u = descend(normalize_columns(std::move(u)));
    const double fp = potential_unchecked(u);
    if (fp < best_fp) {
      best_fp = fp;
      best = std::move(u);
    }
  }
  return place(problem, std::move(best));
}

PlacementResult clustered_placement(const PlacementProblem& problem, double spread_deg) {
  problem.validate();
  if (!(spread_deg >= 0.0)) throw InvalidArgument("spread must be non-negative");
  const double spread = spread_deg * std::numbers::pi / 180.0;
  const int m = problem.num_anchors;
  Mat u(problem.dim, m);
  for (int i = 0; i < m; ++i) {
    const double frac = m > 1 ? static_cast<double>(i) / (m - 1) - 0.5 : 0.0;
    if (problem.dim == 2) {
      u(0, i) = std::cos(spread * frac);
      u(1, i) = std::sin(spread * frac);
    } else {
      // Sunflower spiral inside a cone of half-angle spread/2 around +z: any
      // two directions are within `spread`, and the anchors are not coplanar.
      const double polar = m > 1 ? 0.5 * spread * std::sqrt((i + 0.5) / m) : 0.0;
      const double azimuth = kGoldenAngle * i;
      u(0, i) = std::sin(polar) * std::cos(azimuth);
      u(1, i) = std::sin(polar) * std::sin(azimuth);
      u(2, i) = std::cos(polar);
    }
  }
  return place(problem, std::move(u));
}

PlacementEvaluation evaluate_placement(const AnchorSet& anchors, const Conformation& conf, const Vec& target_center,
                                       double sigma, int trials, std::uint64_t seed,
                                       const EvaluationOptions& options) {
  if (trials < 1) throw InvalidArgument("evaluation needs at least one trial");
  if (anchors.dim() != conf.dim() || target_center.size() != conf.dim())
    throw DimensionMismatch("anchors, conformation and target dimensions differ");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");

  struct Outcome {
    bool ok = false;
    double translation_sq = 0.0;
    double rotation_sq = 0.0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(trials));
  parallel_for(trials, resolve_thread_count(options.threads), [&](int trial) {
    SeedStream rng(derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
    const Mat rotation = random_rotation(rng, conf.dim());
    Vec translation = target_center;
    for (Eigen::Index i = 0; i < translation.size(); ++i)
      translation(i) += rng.uniform(-options.position_jitter, options.position_jitter);
    const Pose truth(rotation, translation);
    SeedStream meas_rng = rng.child(1);
    Outcome& out = outcomes[static_cast<std::size_t>(trial)];
    try {
      const MaskedRangeMatrix ranges = simulate_ranges(anchors, apply_pose(conf, truth), sigma, options.visibility, meas_rng);
      const PoseEstimate est = rbl_two_stage(anchors, ranges, conf, options.estimator);
      out.translation_sq = (est.pose.translation() - truth.translation()).squaredNorm();
      const double angle = rotation_error(est.pose.rotation(), truth.rotation());
      out.rotation_sq = angle * angle;
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  });

  PlacementEvaluation eval;
  eval.trials = trials;
  std::vector<double> t_sq, r_sq;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++eval.failures;
      continue;
    }
    t_sq.push_back(o.translation_sq);
    r_sq.push_back(o.rotation_sq);
  }
  const RmseSummary translation = rmse_summary(t_sq);
  const RmseSummary rotation = rmse_summary(r_sq);
  eval.translation_rmse = translation.rmse;
  eval.translation_se = translation.standard_error;
  eval.rotation_rmse = rotation.rmse;
  eval.rotation_se = rotation.standard_error;
  return eval;
}

} // namespace rbl
