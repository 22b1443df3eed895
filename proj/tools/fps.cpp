#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fps/artifacts.hpp"
#include "fps/config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitArtifactError = 3;

struct RunOptions {
  std::string config_path;
  std::string backend;
  std::string seed;
  std::string out_dir;
  std::string intervention;
  std::string profile;
};

int do_run(const RunOptions& options) {
  fps::AppConfig config = fps::parse_config(options.config_path);
  if (!options.backend.empty()) config.backend = fps::parse_backend(options.backend);
  if (!options.seed.empty()) config.seed = std::stoull(options.seed);
  if (!options.out_dir.empty()) config.out_dir = options.out_dir;
  if (!options.intervention.empty())
    config.intervention = fps::parse_intervention(options.intervention);
  if (!options.profile.empty()) config.profile = fps::parse_profile(options.profile);
  config.validate();

  auto backend = fps::build_backend(config);
  const fps::SimulationTrace trace = fps::run_command(config, *backend, std::cout);
  std::cout << "backend=" << trace.backend_name << " calls=" << trace.backend_calls
            << " failures=" << trace.backend_failures << "\n";
  std::cout << "artifacts written to " << config.out_dir << "\n";
  return kExitOk;
}

int do_fit(const std::string& counts_path, std::string out_path) {
  if (out_path.empty())
    out_path = (std::filesystem::path(counts_path).parent_path() / "fit.json").string();
  const fps::FitArtifact artifact = fps::fit_command(counts_path, out_path);
  std::cout << "beta=" << artifact.params.beta << " gamma=" << artifact.params.gamma
            << " residual=" << artifact.params.residual
            << " status=" << fps::to_string(artifact.params.status) << "\n";
  std::cout << "fit written to " << out_path << "\n";
  return kExitOk;
}

int do_metrics(const std::string& run_dir) {
  const fps::MetricsReport report = fps::metrics_command(fps::RunPaths{run_dir});
  std::cout << fps::render_report_table(
      {{std::filesystem::path(run_dir).filename().string(), report}});
  return kExitOk;
}

int do_report(const std::vector<std::string>& run_dirs) {
  std::vector<std::filesystem::path> paths(run_dirs.begin(), run_dirs.end());
  std::cout << fps::report_command(paths);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fps - agent-based fake-news propagation simulator"};
  app.require_subcommand(1);

  RunOptions run_options;
  auto* run = app.add_subcommand("run", "Simulate a full run and write its artifacts");
  run->add_option("--config", run_options.config_path, "Run configuration file")->required();
  run->add_option("--backend", run_options.backend, "Override backend: mock or llm");
  run->add_option("--seed", run_options.seed, "Override the run seed");
  run->add_option("--out", run_options.out_dir, "Override the output directory");
  run->add_option("--intervention", run_options.intervention,
                  "Override the official-agent schedule, e.g. none, on_days(7), every_k(1,3)");
  run->add_option("--profile", run_options.profile,
                  "Override the trait profile: random, credulous, or skeptical");

  std::string counts_path, fit_out;
  auto* fit = app.add_subcommand("fit", "Fit transmission/recovery rates to a counts file");
  fit->add_option("counts", counts_path, "counts.csv produced by a run")->required();
  fit->add_option("--out", fit_out, "Output path (default: fit.json next to the input)");

  std::string metrics_dir;
  auto* metrics = app.add_subcommand("metrics", "Recompute the metrics for a run directory");
  metrics->add_option("run_dir", metrics_dir, "Run directory")->required();

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "Metrics table across one or more runs");
  report->add_option("run_dirs", report_dirs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& error) {
    app.exit(error);
    return kExitConfigError;
  }

  try {
    if (run->parsed()) return do_run(run_options);
    if (fit->parsed()) return do_fit(counts_path, fit_out);
    if (metrics->parsed()) return do_metrics(metrics_dir);
    if (report->parsed()) return do_report(report_dirs);
  } catch (const fps::ConfigError& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return kExitConfigError;
  } catch (const fps::ArtifactError& error) {
    std::cerr << "artifact error: " << error.what() << "\n";
    return kExitArtifactError;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return kExitOk;
}
