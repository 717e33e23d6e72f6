#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/placement.hpp"
#include "support.hpp"

using namespace rbl;

namespace {

Mat unit_columns(Mat u) {
  for (Eigen::Index i = 0; i < u.cols(); ++i) u.col(i).normalize();
  return u;
}

PlacementProblem problem(int m, int d, std::uint64_t seed = 1) {
  return PlacementProblem{m, d, Vec::Zero(d), 30.0, seed};
}

} // namespace

TEST_CASE("frame potential of the three-point Mercedes frame") {
  Mat u(2, 3);
  for (int i = 0; i < 3; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 3.0;
    u(0, i) = std::cos(a);
    u(1, i) = std::sin(a);
  }
  CHECK(std::abs(frame_potential(u) - 4.5) < 1e-12);
}

TEST_CASE("frame potential of orthonormal and repeated directions") {
  CHECK(frame_potential(Mat::Identity(3, 3)) == doctest::Approx(3.0));
  // Four copies of one direction: every inner product is 1.
  CHECK(frame_potential(Mat::Ones(1, 4).replicate(2, 1) / std::sqrt(2.0)) == doctest::Approx(16.0));
  CHECK_THROWS_AS(frame_potential(2.0 * Mat::Identity(2, 2)), InvalidArgument);
}

TEST_CASE("frame potential is bounded below by max(M^2/D, M)") {
  SeedStream rng(2);
  for (int d : {2, 3}) {
    for (int m = 1; m <= 7; ++m) {
      for (int k = 0; k < 20; ++k) {
        Mat u(d, m);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.normal();
        const double bound = std::max(static_cast<double>(m * m) / d, static_cast<double>(m));
        CHECK(frame_potential(unit_columns(u)) >= bound - 1e-12);
      }
    }
  }
}

TEST_CASE("optimized placements are unit-norm tight frames") {
  for (auto [m, d] : {std::pair{2, 2}, {3, 2}, {4, 2}, {5, 2}, {3, 3}, {4, 3}, {6, 3}, {7, 3}}) {
    const PlacementResult r = optimize_placement(problem(m, d));
    const double optimum = static_cast<double>(m * m) / d;
    CHECK(std::abs(r.frame_potential - optimum) < 1e-3);
    // Tight: the frame operator is (M/D) times the identity.
    const Mat s = r.directions * r.directions.transpose();
    CHECK((s - (static_cast<double>(m) / d) * Mat::Identity(d, d)).norm() < 1e-3);
    for (int i = 0; i < m; ++i) CHECK((r.positions.col(i) - 30.0 * r.directions.col(i)).norm() < 1e-12);
  }
}

TEST_CASE("fewer anchors than dimensions end up orthonormal") {
  const PlacementResult r = optimize_placement(problem(2, 3));
  CHECK(r.frame_potential == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("placement is reproducible and honours the target center") {
  PlacementProblem p = problem(4, 3, 9);
  p.target_center = Vec::Constant(3, 5.0);
  const PlacementResult a = optimize_placement(p), b = optimize_placement(p);
  CHECK(a.positions == b.positions);
  for (int i = 0; i < 4; ++i) CHECK((a.positions.col(i) - p.target_center).norm() == doctest::Approx(30.0));
}

TEST_CASE("placement problems are validated") {
  CHECK_THROWS_AS(optimize_placement(problem(0, 2)), InvalidArgument);
  CHECK_THROWS_AS(optimize_placement(problem(3, 4)), InvalidArgument);
  PlacementProblem p = problem(3, 3);
  p.target_center = Vec::Zero(2);
  CHECK_THROWS_AS(optimize_placement(p), DimensionMismatch);
}

TEST_CASE("clustered placements stay inside the requested spread") {
  for (int d : {2, 3}) {
    const PlacementResult r = clustered_placement(problem(6, d), 5.0);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const double c = std::clamp(r.directions.col(i).dot(r.directions.col(j)), -1.0, 1.0);
        CHECK(std::acos(c) <= 5.0 * std::numbers::pi / 180.0 + 1e-9);
      }
    CHECK(r.frame_potential > 0.95 * 36.0);
  }
}

TEST_CASE("tight frames localize better than clustered anchors") {
  const Conformation conf = harness::box_vehicle(3).prefix(4);
  const PlacementProblem p = problem(8, 3);
  const AnchorSet tight(optimize_placement(p).positions);
  const AnchorSet clustered(clustered_placement(p, 5.0).positions);
  const PlacementEvaluation a = evaluate_placement(tight, conf, p.target_center, 0.1, 100, 5);
  const PlacementEvaluation b = evaluate_placement(clustered, conf, p.target_center, 0.1, 100, 5);
  CHECK(a.trials == 100);
  CHECK(a.failures == 0);
  CHECK(a.translation_rmse < b.translation_rmse);
  CHECK(a.rotation_rmse < b.rotation_rmse);
}

TEST_CASE("noiseless evaluation is exact") {
  const Conformation conf = harness::box_vehicle(2).prefix(4);
  const PlacementProblem p = problem(4, 2);
  const PlacementEvaluation e =
      evaluate_placement(AnchorSet(optimize_placement(p).positions), conf, p.target_center, 0.0, 50, 1);
  CHECK(e.failures == 0);
  CHECK(e.translation_rmse < 1e-8);
  CHECK(e.rotation_rmse < 1e-8);
}
