// Command-line front end: experiment sweeps, anchor placement and EDM completion.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rbl/completion.hpp"
#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/io.hpp"

namespace fs = std::filesystem;
using namespace rbl;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int threads = 0;
  std::string out_dir = "results";
  std::string format = "csv";
};

int run_command(const std::string& config_path, const Overrides& o) {
  harness::ExperimentConfig config = harness::load_config(config_path);
  if (o.seed) config.master_seed = *o.seed;
  if (o.trials) config.trials = *o.trials;
  config.threads = o.threads;
  config.validate();
  const harness::OutputFormat format = harness::output_format_from_string(o.format);

  const harness::ResultTable table = harness::run_experiment(config);
  for (const auto& path : harness::emit_results(table, format, o.out_dir)) std::cout << path.string() << '\n';
  for (const auto& r : table.rows) {
    std::cerr << r.variant << " K=" << r.sensors << " sigma=" << io::format_double(r.sigma)
              << "  t_rmse=" << io::format_double(r.translation_rmse)
              << "  R_rmse=" << io::format_double(r.rotation_rmse) << "  failures=" << r.failures << '/'
              << r.trials << '\n';
  }
  return 0;
}

int placement_command(const std::string& config_path, const Overrides& o) {
  harness::PlacementConfig config = harness::load_placement_config(config_path);
  if (o.seed) config.problem.seed = *o.seed;
  const PlacementResult tight = optimize_placement(config.problem);

  nlohmann::json out{{"tight_frame", io::to_json(tight)},
                     {"optimum", static_cast<double>(config.problem.num_anchors * config.problem.num_anchors) /
                                     config.problem.dim}};
  if (config.evaluate) {
    const auto& ev = *config.evaluate;
    harness::ExperimentConfig source;
    source.dim = config.problem.dim;
    source.conformation = ev.conformation;
    source.sensor_counts = {ev.sensors};
    source.base_dir = config.base_dir;
    const Conformation conf = harness::resolve_conformation(source).prefix(ev.sensors);
    const int trials = o.trials.value_or(ev.trials);
    if (trials < 1) throw ConfigError("trials: must be at least 1");

    EvaluationOptions options;
    options.position_jitter = ev.position_jitter;
    options.threads = o.threads;
    const PlacementResult clustered = clustered_placement(config.problem, ev.compare_clustered_deg);
    auto evaluate = [&](const PlacementResult& p) {
      const PlacementEvaluation e = evaluate_placement(AnchorSet(p.positions), conf, config.problem.target_center,
                                                       ev.sigma, trials, config.problem.seed, options);
      return nlohmann::json{{"translation_rmse", e.translation_rmse}, {"translation_se", e.translation_se},
                            {"rotation_rmse", e.rotation_rmse},       {"rotation_se", e.rotation_se},
                            {"failures", e.failures},                 {"trials", e.trials}};
    };
    out["clustered"] = io::to_json(clustered);
    out["evaluation"] = {{"tight_frame", evaluate(tight)}, {"clustered", evaluate(clustered)}};
  }
  const fs::path path = fs::path(o.out_dir) / "placement.json";
  io::write_text(path, out.dump(2) + "\n");
  std::cout << path.string() << '\n';
  return 0;
}

int complete_command(const std::vector<std::string>& inputs, int dim, const Overrides& o) {
  if (inputs.empty() || inputs.size() > 2) throw ConfigError("complete: expected <edm.json> or <values.csv> [mask.csv]");
  const fs::path first(inputs[0]);
  std::optional<PartialEdm> partial;
  if (first.extension() == ".json") {
    if (inputs.size() != 1) throw ConfigError("complete: a JSON input carries its own mask");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_text(first));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(first.string() + ": " + e.what());
    }
    partial = io::partial_edm_from_json(j, dim);
  } else {
    const MaskedMatrix m = io::read_masked_csv(first, inputs.size() == 2 ? fs::path(inputs[1]) : fs::path());
    partial = PartialEdm::from_distances(m.values(), m.mask(), dim);
  }
  const CompletionResult result = complete_edm(*partial);
  if (!result.converged)
    std::cerr << "warning: completion stopped after " << result.iterations
              << " iterations without reaching a consistent EDM (gap " << io::format_double(result.final_objective)
              << ")\n";

  fs::path path;
  if (o.format == "json") {
    path = fs::path(o.out_dir) / "completed.json";
    io::write_text(path, io::to_json(result).dump(2) + "\n");
  } else if (o.format == "csv") {
    path = fs::path(o.out_dir) / "completed.csv";
    io::write_matrix_csv(path, result.distances());
  } else {
    throw ConfigError("format: complete supports csv or json");
  }
  std::cout << path.string() << '\n';
  return 0;
}

int validate_command(const std::string& config_path) {
  const harness::ExperimentConfig config = harness::load_config(config_path);
  harness::resolve_conformation(config);
  std::cout << config_path << ": ok (" << harness::to_string(config.scenario) << ")\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid body localization toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Override the master seed");
    cmd->add_option("--trials", o.trials, "Override the number of trials per sweep point")->check(CLI::PositiveNumber);
    cmd->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", o.format, "Output format: csv, json or plot-data")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker threads (0 = RBL_THREADS or all cores)");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment");
  run->add_option("config", config_path, "Experiment configuration (JSON)")->required();
  add_common(run);

  auto* placement = app.add_subcommand("placement", "Optimize anchor placement");
  placement->add_option("config", config_path, "Placement configuration (JSON)")->required();
  add_common(placement);

  std::vector<std::string> inputs;
  int dim = 3;
  auto* complete = app.add_subcommand("complete", "Complete a partial distance matrix");
  complete->add_option("inputs", inputs, "<edm.json> or <values.csv> [mask.csv]")->required()->expected(1, 2);
  complete->add_option("--dim", dim, "Embedding dimension")->check(CLI::IsMember({2, 3}))->capture_default_str();
  add_common(complete);

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config", config_path, "Experiment configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*run) return run_command(config_path, o);
    if (*placement) return placement_command(config_path, o);
    if (*complete) return complete_command(inputs, dim, o);
    if (*validate) return validate_command(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
