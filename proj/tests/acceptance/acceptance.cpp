// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"
#include "rbl/estimators.hpp"
#include "rbl/harness.hpp"
#include "rbl/placement.hpp"
#include "../support.hpp"

using namespace rbl;
using rbl::testing::all_true_ranges;
using rbl::testing::random_points;
using rbl::testing::random_pose;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// Random points whose affine hull is the whole space, so every rotation is pinned down.
Mat spanning_points(SeedStream& rng, int dim, int count, double half) {
  Mat p;
  do {
    p = random_points(rng, dim, count, half);
  } while (affine_rank(p) < std::min(dim, count - 1));
  return p;
}

// --- 1 ---------------------------------------------------------------------------------

Verdict noiseless_exactness() {
  const auto start = Clock::now();
  SeedStream rng(101);
  double worst_t = 0.0, worst_r = 0.0;
  int errors = 0, runs = 0;
  for (int dim : {2, 3})
    for (int k : {4, 6, 10})
      for (int m : {4, 8}) {
        const AnchorSet anchors(spanning_points(rng, dim, m, 30.0));
        const Conformation conf(spanning_points(rng, dim, k, 2.0));
        for (int trial = 0; trial < 100; ++trial, ++runs) {
          const Pose truth = random_pose(rng, dim);
          const MaskedRangeMatrix ranges =
              MaskedRangeMatrix::fully_observed(all_true_ranges(anchors, apply_pose(conf, truth).positions));
          try {
            const PoseEstimate est = rbl_two_stage(anchors, ranges, conf);
            worst_t = std::max(worst_t, (est.pose.translation() - truth.translation()).norm());
            worst_r = std::max(worst_r, rotation_error(est.pose.rotation(), truth.rotation()));
          } catch (const Error&) {
            ++errors;
          }
        }
      }
  const double elapsed = seconds_since(start);
  const bool pass = errors == 0 && worst_t < 1e-6 && worst_r < 1e-6 && elapsed < 10.0;
  return {pass, format("%d runs, max translation error %.3g m, max rotation error %.3g rad, %d errors, %.2f s", runs,
                       worst_t, worst_r, errors, elapsed)};
}

// --- 2 and 8 ---------------------------------------------------------------------------

harness::ExperimentConfig sensor_sweep() {
  harness::ExperimentConfig c;
  c.scenario = harness::Scenario::RmseVsSensors;
  c.dim = 3;
  c.sigma_list = {0.05, 0.1, 0.5};
  c.sensor_counts = {2, 4, 6, 8, 10, 14};
  c.trials = 500;
  c.master_seed = 2024;
  return c;
}

const harness::ResultRow* find_row(const harness::ResultTable& t, double sigma, int k) {
  for (const auto& r : t.rows)
    if (r.sigma == sigma && r.sensors == k) return &r;
  return nullptr;
}

Verdict sensor_curve(const harness::ResultTable& table, double elapsed) {
  const harness::ExperimentConfig c = sensor_sweep();
  bool ratio_ok = true, monotone_ok = true, plateau_ok = true;
  std::string detail;
  for (double sigma : c.sigma_list) {
    std::vector<const harness::ResultRow*> rows;
    for (int k : c.sensor_counts) rows.push_back(find_row(table, sigma, k));
    if (std::find(rows.begin(), rows.end(), nullptr) != rows.end()) return {false, "missing sweep rows"};

    const double ratio = rows[0]->translation_rmse / rows[1]->translation_rmse;
    ratio_ok = ratio_ok && ratio >= 10.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double se = std::hypot(rows[i - 1]->translation_se, rows[i]->translation_se);
      monotone_ok = monotone_ok && rows[i]->translation_rmse <= rows[i - 1]->translation_rmse + 2.0 * se;
    }
    const double plateau = rows[4]->translation_rmse / rows[5]->translation_rmse;
    plateau_ok = plateau_ok && std::abs(plateau - 1.0) <= 0.2;
    detail += format("sigma=%g: K2/K4=%.1f K10/K14=%.3f; ", sigma, ratio, plateau);
  }
  const bool fast = elapsed < 120.0;
  detail += format("(a) %s (b) %s (c) %s, %.1f s", ratio_ok ? "ok" : "no", monotone_ok ? "ok" : "no",
                   plateau_ok ? "ok" : "no", elapsed);
  return {ratio_ok && monotone_ok && plateau_ok && fast, detail};
}

Verdict determinism(const std::string& csv_8) {
  harness::ExperimentConfig c = sensor_sweep();
  setenv("RBL_THREADS", "1", 1);
  const std::string csv_1a = harness::to_csv(harness::run_experiment(c));
  const std::string csv_1b = harness::to_csv(harness::run_experiment(c));
  setenv("RBL_THREADS", "8", 1);
  const std::string csv_8b = harness::to_csv(harness::run_experiment(c));
  const bool pass = csv_1a == csv_1b && csv_1a == csv_8 && csv_8 == csv_8b;
  return {pass, format("%zu-byte CSV; 1 thread vs 1 thread %s, 1 vs 8 %s, 8 vs 8 %s", csv_8.size(),
                       csv_1a == csv_1b ? "identical" : "differ", csv_1a == csv_8 ? "identical" : "differ",
                       csv_8 == csv_8b ? "identical" : "differ")};
}

// --- 3 ---------------------------------------------------------------------------------

double fit_cost(const Mat& c, const Mat& s, const Mat& rotation) {
  const Vec c_bar = c.rowwise().mean(), s_bar = s.rowwise().mean();
  return ((s.colwise() - s_bar) - rotation * (c.colwise() - c_bar)).squaredNorm();
}

Verdict procrustes_oracle() {
  SeedStream rng(303);
  const double step = 1e-3;
  double worst_angle = 0.0, worst_excess = 0.0;
  int beaten = 0;
  for (int i = 0; i < 50; ++i) {
    const int k = 2 + i % 4;
    const Mat c = spanning_points(rng, 2, k, 2.0);
    const Pose truth = random_pose(rng, 2);
    Mat s = apply_pose(Conformation(c), truth).positions;
    for (Eigen::Index j = 0; j < s.size(); ++j) s(j) += rng.normal(0.0, 0.2);

    const PoseEstimate est = fit_pose_procrustes(Conformation(c), s);
    const double closed_form = fit_cost(c, s, est.pose.rotation());
    double grid_best = INFINITY, grid_angle = 0.0;
    for (double a = -std::numbers::pi; a < std::numbers::pi; a += step) {
      const double cost = fit_cost(c, s, rotation_2d(a));
      if (cost < grid_best) grid_best = cost, grid_angle = a;
    }
    // The grid optimum is within half a step of the true one, so the cost it
    // reaches is at most the curvature times (step/2)^2 above the minimum.
    const double curvature = 2.0 * (c.colwise() - c.rowwise().mean()).squaredNorm();
    const double slack = 0.5 * curvature * 0.25 * step * step + 1e-12;
    if (closed_form > grid_best + 1e-12) ++beaten;
    worst_excess = std::max(worst_excess, (grid_best - closed_form) / slack);
    worst_angle = std::max(worst_angle, rotation_error(est.pose.rotation(), rotation_2d(grid_angle)));
  }
  const bool pass = beaten == 0 && worst_excess <= 1.0 && worst_angle <= step;
  return {pass, format("grid beat closed form %d times, max angle gap %.3g rad, max cost gap %.3g of bound", beaten,
                       worst_angle, worst_excess)};
}

// --- 4 ---------------------------------------------------------------------------------

Verdict velocity_model() {
  SeedStream rng(404);
  bool fd_ok = true;
  std::string detail;
  for (double h : {1e-4, 1e-5, 1e-6}) {
    double worst = 0.0;
    for (int dim : {2, 3})
      for (int i = 0; i < 20; ++i) {
        const Conformation conf(random_points(rng, dim, 5, 2.0));
        const Pose pose = random_pose(rng, dim);
        const Vec omega = random_points(rng, dim == 3 ? 3 : 1, 1).col(0);
        const Vec t_dot = random_points(rng, dim, 1, 10.0).col(0);
        const Mat analytic = body_velocities(conf, pose, BodyMotion(omega, t_dot));
        const Mat step = dim == 3 ? rotation_about_axis(omega.normalized(), omega.norm() * h) : rotation_2d(omega(0) * h);
        const Pose later(step * pose.rotation(), pose.translation() + h * t_dot);
        const Mat fd = (apply_pose(conf, later).positions - apply_pose(conf, pose).positions) / h;
        worst = std::max(worst, (fd - analytic).cwiseAbs().maxCoeff());
      }
    fd_ok = fd_ok && worst <= 10.0 * h;
    detail += format("h=%g: %.3g; ", h, worst);
  }

  double worst_twist = 0.0;
  for (int dim : {2, 3})
    for (int i = 0; i < 50; ++i) {
      const AnchorSet anchors(spanning_points(rng, dim, 6, 30.0));
      const Conformation conf(spanning_points(rng, dim, 4, 2.0));
      const Pose pose = random_pose(rng, dim);
      const BodyMotion motion(random_points(rng, dim == 3 ? 3 : 1, 1).col(0), random_points(rng, dim, 1, 10.0).col(0));
      const MaskedMatrix rates = simulate_range_rates(anchors, conf, pose, motion, Mask::Constant(6, 4, true), 0.0, rng);
      const MotionEstimate est = estimate_motion(anchors, pose, conf, rates);
      worst_twist = std::max({worst_twist, (est.motion.omega() - motion.omega()).norm(),
                              (est.motion.t_dot() - motion.t_dot()).norm()});
    }
  detail += format("twist error %.3g", worst_twist);
  return {fd_ok && worst_twist < 1e-9, detail};
}

// --- 5 ---------------------------------------------------------------------------------

Verdict completion() {
  SeedStream rng(505);
  const int anchors = 5, nodes = 5, n = anchors + nodes, instances = 50;
  int recovered = 0;
  for (int inst = 0; inst < instances; ++inst) {
    Mat all(3, n);
    all << spanning_points(rng, 3, anchors, 10.0), spanning_points(rng, 3, nodes, 2.0);
    const Mat truth = squared_distances(all);
    // Hide exactly a fifth of the anchor-to-node entries.
    std::vector<int> cross(anchors * nodes);
    for (int i = 0; i < anchors * nodes; ++i) cross[static_cast<std::size_t>(i)] = i;
    std::shuffle(cross.begin(), cross.end(), rng.engine());
    Mask mask = Mask::Constant(n, n, true);
    for (int h = 0; h < anchors * nodes / 5; ++h) {
      const int i = cross[static_cast<std::size_t>(h)] / nodes, j = anchors + cross[static_cast<std::size_t>(h)] % nodes;
      mask(i, j) = mask(j, i) = false;
    }
    const CompletionResult r = complete_edm(PartialEdm(truth, mask, 3, BlockLayout{anchors, nodes}));
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!mask(i, j)) worst = std::max(worst, std::abs(std::sqrt(r.completed(i, j)) - std::sqrt(truth(i, j))) / std::sqrt(truth(i, j)));
    recovered += worst <= 1e-4;
  }

  double worst_round_trip = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    const Mat truth = squared_distances(random_points(rng, 3, 10, 10.0));
    const Mat again = squared_distances(edm_to_points(truth, 3).points);
    worst_round_trip = std::max(worst_round_trip, (again - truth).cwiseAbs().maxCoeff());
  }
  const bool pass = recovered * 100 >= 95 * instances && worst_round_trip <= 1e-9;
  return {pass, format("%d/%d instances within 1e-4, MDS round trip error %.3g", recovered, instances, worst_round_trip)};
}

// --- 6 ---------------------------------------------------------------------------------

Verdict anchorless() {
  SeedStream rng(606);
  double worst_t = 0.0, worst_r = 0.0;
  int errors = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Conformation c1(spanning_points(rng, 3, 5, 2.0));
    const Conformation c2(spanning_points(rng, 3, 5, 2.0));
    const Pose rel = random_pose(rng, 3, 10.0);
    const Mat cross = all_true_ranges(AnchorSet(c1.coords()), apply_pose(c2, rel).positions);
    try {
      const RelativePoseEstimate est = relative_pose_anchorless(c1, c2, MaskedRangeMatrix::fully_observed(cross));
      worst_t = std::max(worst_t, (est.pose.translation() - rel.translation()).norm());
      worst_r = std::max(worst_r, rotation_error(est.pose.rotation(), rel.rotation()));
    } catch (const Error&) {
      ++errors;
    }
  }
  const bool pass = errors == 0 && worst_t < 1e-6 && worst_r < 1e-6;
  return {pass, format("100 trials, max translation error %.3g m, max rotation error %.3g rad, %d errors", worst_t,
                       worst_r, errors)};
}

// --- 7 ---------------------------------------------------------------------------------

Verdict frame_potential_checks() {
  Mat mercedes(2, 3);
  for (int i = 0; i < 3; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 3.0;
    mercedes(0, i) = std::cos(a);
    mercedes(1, i) = std::sin(a);
  }
  const double fp = frame_potential(mercedes);
  bool pass = std::abs(fp - 4.5) <= 1e-12;
  std::string detail = format("Mercedes frame %.15g; ", fp);

  double worst_gap = 0.0;
  for (auto [m, d] : {std::pair{2, 2}, {3, 2}, {4, 2}, {3, 3}, {4, 3}, {6, 3}}) {
    const PlacementResult r = optimize_placement(PlacementProblem{m, d, Vec::Zero(d), 30.0, 7});
    worst_gap = std::max(worst_gap, std::abs(r.frame_potential - static_cast<double>(m * m) / d));
  }
  pass = pass && worst_gap <= 1e-3;
  detail += format("max gap to M^2/D %.3g; ", worst_gap);

  for (auto [m, d] : {std::pair{4, 2}, {8, 3}}) {
    const PlacementProblem p{m, d, Vec::Zero(d), 30.0, 7};
    const Conformation conf = harness::box_vehicle(d).prefix(4);
    const PlacementEvaluation tight = evaluate_placement(AnchorSet(optimize_placement(p).positions), conf,
                                                         p.target_center, 0.1, 500, 77);
    const PlacementEvaluation clustered = evaluate_placement(AnchorSet(clustered_placement(p, 5.0).positions), conf,
                                                             p.target_center, 0.1, 500, 77);
    pass = pass && tight.translation_rmse < clustered.translation_rmse;
    detail += format("%dD M=%d tight %.4g m vs clustered %.4g m; ", d, m, tight.translation_rmse,
                     clustered.translation_rmse);
  }
  return {pass, detail};
}

} // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("CRITERION %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  };

  // The sweep is shared by the curve check and the determinism check.
  setenv("RBL_THREADS", "8", 1);
  const auto sweep_start = Clock::now();
  const harness::ResultTable sweep = harness::run_experiment(sensor_sweep());
  const double sweep_seconds = seconds_since(sweep_start);

  report(1, noiseless_exactness);
  report(2, [&] { return sensor_curve(sweep, sweep_seconds); });
  report(3, procrustes_oracle);
  report(4, velocity_model);
  report(5, completion);
  report(6, anchorless);
  report(7, frame_potential_checks);
  report(8, [&] { return determinism(harness::to_csv(sweep)); });
  return failed == 0 ? 0 : 1;
}
