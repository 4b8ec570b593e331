// pnr-lab: simulate, fit and analyze photon-number-resolving detector spectra.
#include <CLI11.hpp>

#include "pnr/commands.hpp"
#include "pnr/io.hpp"

int main(int argc, char** argv) {
  using namespace pnr::cli;

  CLI::App app{"pnr-lab: photon-number-resolving detector simulation and analysis"};
  app.set_version_flag("--version", std::string("pnr-lab ") + pnr::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed in the config");
  app.add_option("--out-dir", out_dir, "Directory for output files");
  app.add_flag("--quiet", opts.quiet, "Suppress progress messages");
  app.add_option("--threads", opts.threads, "Simulation threads (0: OpenMP default)");

  std::string config, histogram, fit_config, report, out_path;
  std::string priors = "equal";

  auto* sim = app.add_subcommand("simulate", "Generate pulses and a pulse-area histogram");
  sim->add_option("config", config, "Simulation config JSON")->required();

  auto* fit = app.add_subcommand("fit", "Fit a histogram with a constrained Gaussian mixture");
  fit->add_option("histogram", histogram, "Histogram CSV")->required();
  fit->add_option("fit_config", fit_config, "Fit config JSON (optional)");
  fit->add_option("-o,--out", out_path, "Fit report path (default: <out-dir>/fit_report.json)");

  auto* analyze = app.add_subcommand("analyze", "Decision thresholds, error rates and noise figures");
  analyze->add_option("fit_report", report, "Fit report JSON")->required();
  analyze->add_option("-o,--out", out_path, "Analysis path (default: <out-dir>/analysis.json)");
  analyze->add_option("--priors", priors, "equal | from-weights")
      ->check(CLI::IsMember({"equal", "from-weights"}));

  auto* qe = app.add_subcommand("qe", "Quantum efficiency from a calibration measurement");
  qe->add_option("config", config, "Efficiency config JSON")->required();

  auto* pipeline = app.add_subcommand("pipeline", "simulate, fit and analyze in one run");
  pipeline->add_option("config", config, "Pipeline config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }
  if (*seed_opt) opts.seed = seed;

  const fs::path dir(out_dir);
  if (*sim) return cmd_simulate(config, dir, opts);
  if (*fit) return cmd_fit(histogram, fit_config, out_path.empty() ? dir / "fit_report.json" : fs::path(out_path), opts);
  if (*analyze)
    return cmd_analyze(report, out_path.empty() ? dir / "analysis.json" : fs::path(out_path), opts,
                       priors == "equal" ? pnr::PriorMode::Equal : pnr::PriorMode::FromWeights);
  if (*qe) return cmd_qe(config, opts);
  if (*pipeline) return cmd_pipeline(config, dir, opts);
  return kInputError;
}
