#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/io.hpp"
#include "rbl/parallel.hpp"
#include "rbl/stats.hpp"
#include "support.hpp"

using namespace rbl;
using namespace rbl::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rbl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.sigma_list = {0.0, 0.1};
  c.sensor_counts = {4, 6};
  c.trials = 20;
  c.master_seed = 7;
  return c;
}

} // namespace

// --- seeding and parallelism ---------------------------------------------------------

TEST_CASE("seed derivation is deterministic and path-sensitive") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(5, {a, b}));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {}) != derive_seed(2, {}));
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  for (int threads : {1, 3, 16}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, threads, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 4, [](int i) {
                    if (i == 7) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
  CHECK(resolve_thread_count(5) == 5);
  CHECK(resolve_thread_count(0) >= 1);
}

// --- statistics ------------------------------------------------------------------------

TEST_CASE("rmse summary matches hand computation") {
  const std::vector<double> sq{1.0, 4.0, 9.0};
  const RmseSummary s = rmse_summary(sq);
  CHECK(s.rmse == doctest::Approx(std::sqrt(14.0 / 3.0)));
  // Sample variance of {1, 4, 9} is 97/3 - ... = 16.333..; se(mean) = sqrt(var/3).
  const double var = ((1 - 14.0 / 3) * (1 - 14.0 / 3) + (4 - 14.0 / 3) * (4 - 14.0 / 3) + (9 - 14.0 / 3) * (9 - 14.0 / 3)) / 2.0;
  CHECK(s.standard_error == doctest::Approx(std::sqrt(var / 3.0) / (2.0 * s.rmse)));
  CHECK(std::isnan(rmse_summary({}).rmse));
}

TEST_CASE("standard error shrinks as one over root n") {
  SeedStream rng(3);
  std::vector<double> sq;
  for (int i = 0; i < 16000; ++i) {
    const double e = rng.normal();
    sq.push_back(e * e);
  }
  const RmseSummary small = rmse_summary(std::span<const double>(sq.data(), 4000));
  const RmseSummary large = rmse_summary(sq);
  CHECK(small.standard_error / large.standard_error == doctest::Approx(2.0).epsilon(0.3));
}

// --- built-in vehicle ----------------------------------------------------------------------

TEST_CASE("box vehicle layouts are nested and documented") {
  const Conformation v3 = box_vehicle(3);
  const Conformation v2 = box_vehicle(2);
  CHECK(v3.size() == 20);
  CHECK(v2.size() == 8);
  // Every node sits on the box surface and no two coincide.
  for (int k = 0; k < v3.size(); ++k) {
    const Vec p = v3.node(k);
    CHECK(std::abs(p(0)) <= kVehicleLength / 2 + 1e-12);
    CHECK(std::abs(p(1)) <= kVehicleWidth / 2 + 1e-12);
    CHECK(std::abs(p(2)) <= kVehicleHeight / 2 + 1e-12);
    const int on_faces = (std::abs(std::abs(p(0)) - kVehicleLength / 2) < 1e-12) +
                         (std::abs(std::abs(p(1)) - kVehicleWidth / 2) < 1e-12) +
                         (std::abs(std::abs(p(2)) - kVehicleHeight / 2) < 1e-12);
    CHECK(on_faces >= 2);
    for (int j = 0; j < k; ++j) CHECK(v3.distance(j, k) > 0.1);
  }
  CHECK(v3.prefix(2).affine_rank() == 1);
  CHECK(v3.prefix(3).affine_rank() == 2);
  CHECK(v3.prefix(4).spans_space());
  CHECK(v2.prefix(2).affine_rank() == 1);
  CHECK(v2.prefix(3).spans_space());
  CHECK(cube_anchors(3).size() == 8);
  CHECK(cube_anchors(2, 10.0).positions().cwiseAbs().maxCoeff() == 5.0);
}

// --- configuration ------------------------------------------------------------------------

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig c = parse_config("{}");
  CHECK(c.scenario == Scenario::RmseVsSensors);
  CHECK(c.dim == 3);
  CHECK(c.conformation == "box-vehicle");
  CHECK(c.anchors.layout == "cube");
  CHECK(c.anchors.side == 60.0);
  CHECK(c.sigma_list == std::vector<double>{0.01, 0.05, 0.1, 0.5});
  CHECK(c.sensor_counts == std::vector<int>{2, 4, 6, 8, 10, 14});
  CHECK(c.trials == 500);
  CHECK(c.missing_fraction == 0.0);
  CHECK(c.estimator.weighting == StageWeighting::Uniform);
}

TEST_CASE("config validation names the offending field") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"sensor_counts": [1]})").find("sensor_counts") != std::string::npos);
  CHECK(message(R"({"trials": 0})").find("trials") != std::string::npos);
  CHECK(message(R"({"sigma_list": []})").find("sigma_list") != std::string::npos);
  CHECK(message(R"({"missing_fraction": 1.0})").find("missing_fraction") != std::string::npos);
  CHECK(message(R"({"dim": 4})").find("dim") != std::string::npos);
  CHECK(message(R"({"scenario": "nope"})").find("scenario") != std::string::npos);
  CHECK(message(R"({"colour": 1})").find("colour") != std::string::npos);
  CHECK(message(R"({"anchors": {"layot": "cube"}})").find("layot") != std::string::npos);
  CHECK(message(R"({"trials": "many"})").find("trials") != std::string::npos);
  CHECK(message(R"({"dim": 2, "sensor_counts": [4, 12]})").find("sensor_counts") != std::string::npos);
}

TEST_CASE("config parse errors report the line") {
  try {
    parse_config("{\n  \"trials\": 5,\n  \"dim\": ,\n}");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("config survives a save and load round trip") {
  ExperimentConfig c = small_sweep();
  c.scenario = Scenario::CompletionBenchmark;
  c.dim = 2;
  c.sensor_counts = {3, 5};
  c.missing_fraction = 0.15;
  c.anchors.layout = "explicit";
  Mat p(2, 3);
  p << 0, 10, 0, 0, 0, 10;
  c.anchors.positions = p;
  c.estimator.weighting = StageWeighting::InverseVariance;
  c.estimator.completion_rank_slack = 1;
  const fs::path dir = scratch_dir("config");
  io::write_text(dir / "c.json", to_json(c).dump(2));
  const ExperimentConfig back = load_config(dir / "c.json");
  CHECK(to_json(back) == to_json(c));
  CHECK(back.base_dir == dir);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("relative conformation paths resolve against the config file") {
  const fs::path dir = scratch_dir("conf_path");
  Mat c(2, 3);
  c << 0, 1, 0, 0, 0, 1;
  io::write_text(dir / "tri.json", io::to_json(Conformation(c)).dump());
  io::write_text(dir / "run.json", R"({"dim": 2, "conformation": "tri.json", "sensor_counts": [3]})");
  const ExperimentConfig cfg = load_config(dir / "run.json");
  CHECK(resolve_conformation(cfg).coords() == c);
}

TEST_CASE("anchor layouts resolve to anchor sets") {
  ExperimentConfig c;
  CHECK(resolve_anchors(c).size() == 8);
  c.anchors.layout = "tight_frame";
  c.anchors.count = 6;
  const AnchorSet tight = resolve_anchors(c);
  CHECK(tight.size() == 6);
  CHECK(tight.anchor(0).norm() == doctest::Approx(30.0));
  c.anchors.layout = "clustered";
  CHECK(resolve_anchors(c).size() == 6);
}

TEST_CASE("placement config parsing") {
  const PlacementConfig p = placement_config_from_json(
      nlohmann::json::parse(R"({"num_anchors": 5, "dim": 3, "target_center": [1, 2, 3], "evaluate": {"sensors": 6}})"));
  CHECK(p.problem.num_anchors == 5);
  CHECK(p.problem.target_center(2) == 3.0);
  REQUIRE(p.evaluate.has_value());
  CHECK(p.evaluate->sensors == 6);
  CHECK(p.evaluate->trials == 500);
  CHECK_THROWS_AS(placement_config_from_json(nlohmann::json::parse(R"({"dim": 3, "target_center": [1, 2]})")),
                  ConfigError);
  CHECK_THROWS_AS(placement_config_from_json(nlohmann::json::parse(R"({"anchors": 5})")), ConfigError);
}

// --- experiments ----------------------------------------------------------------------------

TEST_CASE("noiseless sweep rows are exact and complete") {
  const ResultTable t = run_experiment(small_sweep());
  REQUIRE(t.rows.size() == 4);
  for (const ResultRow& r : t.rows) {
    CHECK(r.failures == 0);
    CHECK(r.trials == 20);
    CHECK(r.translation_rmse >= 0.0);
    if (r.sigma == 0.0) {
      CHECK(r.translation_rmse < 1e-6);
      CHECK(r.rotation_rmse < 1e-6);
    } else {
      CHECK(r.translation_rmse > 1e-4);
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentConfig c = small_sweep();
  c.sensor_counts = {2, 4};
  c.missing_fraction = 0.1;
  c.threads = 1;
  const std::string serial = to_csv(run_experiment(c));
  c.threads = 8;
  CHECK(to_csv(run_experiment(c)) == serial);
}

TEST_CASE("every scenario runs") {
  for (Scenario s : {Scenario::RmseVsNoise, Scenario::CompletionBenchmark, Scenario::AnchorlessTwoBody,
                     Scenario::MotionTracking, Scenario::PlacementStudy}) {
    ExperimentConfig c = small_sweep();
    c.scenario = s;
    c.sensor_counts = {5};
    c.missing_fraction = s == Scenario::CompletionBenchmark ? 0.1 : 0.0;
    c.trials = 8;
    // Two boxes shadowing each other can hide enough cross ranges that the
    // relative pose is no longer identifiable, so exactness is checked without it.
    if (s == Scenario::AnchorlessTwoBody) c.estimator.occlusion = false;
    const ResultTable t = run_experiment(c);
    CAPTURE(to_string(s));
    REQUIRE(!t.rows.empty());
    for (const ResultRow& r : t.rows) {
      CHECK(r.failures <= r.trials);
      if (r.sigma == 0.0 && s != Scenario::CompletionBenchmark) {
        CHECK(r.failures == 0);
        CHECK(r.translation_rmse < 1e-6);
      }
    }
    if (s == Scenario::PlacementStudy) CHECK(t.rows.size() == 4);
  }
}

TEST_CASE("completion benchmark recovers missing ranges without noise") {
  ExperimentConfig c = small_sweep();
  c.scenario = Scenario::CompletionBenchmark;
  c.sigma_list = {0.0};
  c.sensor_counts = {6};
  c.missing_fraction = 0.2;
  c.estimator.occlusion = false;
  c.trials = 10;
  const ResultRow r = run_experiment(c).rows.at(0);
  CHECK(r.failures == 0);
  CHECK(r.translation_rmse < 1e-3);
}

// --- output -------------------------------------------------------------------------------------

TEST_CASE("one-row table gives a two-line CSV") {
  ResultTable t;
  t.rows.push_back(ResultRow{"cube", 3, 4, 0.1, 0.0, 0.2, 0.01, 0.03, 0.001, 0, 10, 1.5});
  const std::string csv = to_csv(t);
  CHECK(count_lines(csv) == 2);
  CHECK(csv.rfind("scenario,variant,dim,sensors,sigma", 0) == 0);
  CHECK(csv.find("1.5") == std::string::npos); // wall time is not part of the CSV
}

TEST_CASE("JSON round trip is bit-exact") {
  ResultTable t;
  t.scenario = Scenario::RmseVsNoise;
  t.rows.push_back(ResultRow{"cube", 3, 4, 0.1, 0.05, 0.1 + 0.2, 1.0 / 3.0, 2e-17, 5e300, 1, 10, 0.25});
  t.rows.push_back(ResultRow{"cube", 3, 2, 0.5, 0.0, std::nan(""), std::nan(""), std::nan(""), std::nan(""), 10, 10, 0.0});
  const ResultTable back = result_table_from_json(nlohmann::json::parse(to_json(t).dump()));
  CHECK(back.scenario == t.scenario);
  REQUIRE(back.rows.size() == 2);
  const ResultRow &a = t.rows[0], &b = back.rows[0];
  CHECK(b.variant == a.variant);
  CHECK(b.sigma == a.sigma);
  CHECK(b.missing_fraction == a.missing_fraction);
  CHECK(b.translation_rmse == a.translation_rmse);
  CHECK(b.translation_se == a.translation_se);
  CHECK(b.rotation_rmse == a.rotation_rmse);
  CHECK(b.rotation_se == a.rotation_se);
  CHECK(b.wall_time_s == a.wall_time_s);
  CHECK(std::isnan(back.rows[1].translation_rmse));
  CHECK(to_csv(back) == to_csv(t));
}

TEST_CASE("plot data has one series per sigma") {
  ExperimentConfig c = small_sweep();
  c.sigma_list = {0.05, 0.1, 0.5};
  c.trials = 5;
  const ResultTable t = run_experiment(c);
  const auto plots = to_plot_data(t);
  REQUIRE(plots.size() == 2);
  std::set<std::string> series;
  std::istringstream in(plots[0].csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,series");
  while (std::getline(in, line)) series.insert(line.substr(line.rfind(',') + 1));
  CHECK(series == std::set<std::string>{"sigma=0.05", "sigma=0.1", "sigma=0.5"});
}

TEST_CASE("emit_results writes files and reports bad paths") {
  ResultTable t;
  t.rows.push_back(ResultRow{"cube", 3, 4, 0.1, 0.0, 0.2, 0.01, 0.03, 0.001, 0, 10, 1.5});
  const fs::path dir = scratch_dir("emit");
  const auto csv = emit_results(t, OutputFormat::Csv, dir / "nested");
  REQUIRE(csv.size() == 1);
  CHECK(fs::exists(csv[0]));
  CHECK(emit_results(t, OutputFormat::PlotData, dir).size() == 2);
  CHECK(output_format_from_string("plot-data") == OutputFormat::PlotData);
  CHECK_THROWS_AS(output_format_from_string("xml"), ConfigError);
  io::write_text(dir / "blocker", "x");
  try {
    emit_results(t, OutputFormat::Json, dir / "blocker" / "sub");
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("blocker") != std::string::npos);
  }
  CHECK_THROWS_AS(emit_results(ResultTable{}, OutputFormat::Csv, dir), InvalidArgument);
}

// --- io ---------------------------------------------------------------------------------------------

TEST_CASE("shortest round-trip number formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-7}) CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(std::nan("")) == "NaN");
}

TEST_CASE("masked CSV round trip") {
  Mat v(2, 3);
  v << 1.5, 2, 3, 4, 5, 6;
  Mask m = Mask::Constant(2, 3, true);
  m(1, 2) = false;
  const MaskedMatrix mm(v, m);
  const fs::path dir = scratch_dir("csv");
  io::write_masked_csv(dir / "v.csv", dir / "m.csv", mm);
  const MaskedMatrix back = io::read_masked_csv(dir / "v.csv", dir / "m.csv");
  CHECK(back.mask() == m);
  CHECK(back.at(0, 0) == 1.5);
  const MaskedMatrix derived = io::read_masked_csv(dir / "v.csv", fs::path());
  CHECK(derived.mask() == m);
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "nope.csv"), IoError);
}

TEST_CASE("JSON layouts for conformations, poses and partial EDMs") {
  const Conformation v = box_vehicle(3).prefix(4);
  const Conformation back = io::conformation_from_json(io::to_json(v));
  CHECK(back.coords() == v.coords());
  CHECK(back.labels() == v.labels());
  CHECK(io::to_json(v)["coords"].size() == 4);

  SeedStream rng(1);
  const Pose p = rbl::testing::random_pose(rng, 3);
  const Pose pb = io::pose_from_json(io::to_json(p));
  CHECK(pb.rotation() == p.rotation());
  CHECK(pb.translation() == p.translation());

  const nlohmann::json edm = nlohmann::json::parse(R"({"values": [[0, 3, null], [3, 0, 4], [null, 4, 0]], "dim": 2})");
  const PartialEdm partial = io::partial_edm_from_json(edm);
  CHECK(partial.dim() == 2);
  CHECK_FALSE(partial.known(0, 2));
  CHECK(partial.squared(1, 2) == 16.0);
  const nlohmann::json again = io::to_json(partial);
  CHECK(again["values"][0][2].is_null());
}
