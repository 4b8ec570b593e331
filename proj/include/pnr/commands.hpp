// Command implementations behind the pnr-lab executable.
//
// Exit codes: 0 success, 2 bad config or input, 3 I/O failure, 4 fit did
// not converge (outputs are still written).
#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>

#include "pnr/discriminate.hpp"

namespace pnr::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kIoError = 3, kNoConvergence = 4 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool quiet = false;
  int threads = 0;  // simulation threads; 0 uses the OpenMP default
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

namespace fs = std::filesystem;

/// Writes pulses.csv, histogram.csv and manifest.json into out_dir.
int cmd_simulate(const fs::path& config, const fs::path& out_dir, const GlobalOptions& opts);

/// Writes the fit report to out_path, plus fit_curve.csv and
/// fit_manifest.json beside it. An empty fit_config uses the defaults.
int cmd_fit(const fs::path& histogram, const fs::path& fit_config, const fs::path& out_path,
            const GlobalOptions& opts);

/// Writes the decision scheme, confusion matrix and noise report to out_path,
/// plus errors_vs_n.csv, variance_vs_n.csv, confusion.csv and
/// analyze_manifest.json beside it.
int cmd_analyze(const fs::path& fit_report, const fs::path& out_path, const GlobalOptions& opts,
                PriorMode priors = PriorMode::Equal);

/// Prints raw and intrinsic efficiency as JSON on opts.out.
int cmd_qe(const fs::path& config, const GlobalOptions& opts);

/// simulate -> fit -> analyze from one config with "simulate", "fit" and an
/// optional "analyze" section; every output lands in out_dir.
int cmd_pipeline(const fs::path& config, const fs::path& out_dir, const GlobalOptions& opts);

}  // namespace pnr::cli
