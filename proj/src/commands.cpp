#include "pnr/commands.hpp"

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

#include "pnr/io.hpp"

namespace pnr::cli {

namespace {

using Clock = std::chrono::steady_clock;

class Manifest {
 public:
  Manifest(std::string command, json config, std::optional<std::uint64_t> seed)
      : command_(std::move(command)), config_(std::move(config)), seed_(seed),
        start_(Clock::now()) {}

  void write(const fs::path& path, const std::string& text) {
    write_text_file(path, text);
    outputs_.push_back(path.filename().string());
  }

  void finish(const fs::path& path) const {
    json j;
    j["command"] = command_;
    j["tool_version"] = kToolVersion;
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    j["config"] = config_;
    j["outputs"] = outputs_;
    j["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    write_text_file(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  json config_;
  std::optional<std::uint64_t> seed_;
  Clock::time_point start_;
  std::vector<std::string> outputs_;
};

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

fs::path sibling_dir(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

template <class Fn>
int guarded(const GlobalOptions& opts, const char* command, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    *opts.err << command << ": I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    *opts.err << command << ": I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    *opts.err << command << ": " << e.what() << '\n';
    return kInputError;
  } catch (const json::exception& e) {
    *opts.err << command << ": " << e.what() << '\n';
    return kInputError;
  }
}

std::string csv(auto&& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

SimConfig load_sim_config(const json& j, const GlobalOptions& opts) {
  SimConfig c = sim_config_from_json(j);
  if (opts.seed) c.seed = *opts.seed;
  return c;
}

void write_simulation(const SimResult& sim, const fs::path& dir, Manifest& manifest) {
  manifest.write(dir / "pulses.csv", csv([&](auto& o) { write_pulses_csv(o, sim.pulses); }));
  manifest.write(dir / "histogram.csv", csv([&](auto& o) { write_histogram_csv(o, sim.histogram); }));
}

FitReport write_fit(const Histogram& hist, const FitConfig& cfg, const fs::path& report_path,
                    Manifest& manifest) {
  FitReport rep = fit_spectrum(hist, cfg);
  manifest.write(report_path, to_json(rep).dump(2) + "\n");
  manifest.write(sibling_dir(report_path) / "fit_curve.csv",
                 csv([&](auto& o) { write_fit_curve_csv(o, hist, rep.model, rep.fit_upper); }));
  return rep;
}

void write_analysis(const json& report, const fs::path& out_path, PriorMode mode,
                    Manifest& manifest) {
  const auto peaks = peaks_from_report(report);
  if (peaks.size() < 3) throw InvalidInput("analyze: need at least 3 peaks");
  const DecisionScheme scheme = build_scheme(peaks, mode);
  const ConfusionMatrix conf = confusion(peaks, scheme.priors);
  const NoiseReport noise = variance_law(peaks);
  std::vector<double> one_two(peaks.size(), 0.0);
  one_two[1] = one_two[2] = 0.5;

  json j;
  j["priors"] = mode == PriorMode::Equal ? "equal" : "from-weights";
  j["decision_scheme"] = to_json(scheme);
  j["confusion"] = to_json(conf);
  j["noise"] = to_json(noise);
  j["one_vs_many_error"] = one_vs_many_error(peaks, one_two);
  const fs::path dir = sibling_dir(out_path);
  manifest.write(out_path, j.dump(2) + "\n");
  manifest.write(dir / "errors_vs_n.csv", csv([&](auto& o) { write_errors_csv(o, peaks, scheme); }));
  manifest.write(dir / "variance_vs_n.csv",
                 csv([&](auto& o) { write_variance_csv(o, peaks, noise); }));
  manifest.write(dir / "confusion.csv", csv([&](auto& o) { write_confusion_csv(o, conf); }));
}

PriorMode prior_mode_from(const json& j) {
  if (!j.contains("priors")) return PriorMode::Equal;
  const auto& v = j.at("priors");
  if (v == "equal") return PriorMode::Equal;
  if (v == "from-weights") return PriorMode::FromWeights;
  throw InvalidInput("field 'analyze.priors': expected \"equal\" or \"from-weights\"");
}

}  // namespace

int cmd_simulate(const fs::path& config, const fs::path& out_dir, const GlobalOptions& opts) {
  return guarded(opts, "simulate", [&] {
    const SimConfig cfg = load_sim_config(read_json_file(config), opts);
    ensure_dir(out_dir);
    Manifest manifest("simulate", to_json(cfg), cfg.seed);
    const SimResult sim = run(cfg, opts.threads);
    write_simulation(sim, out_dir, manifest);
    manifest.finish(out_dir / "manifest.json");
    if (!opts.quiet)
      *opts.err << "simulate: " << sim.pulses.size() << " pulses, " << sim.histogram.bin_count()
                << " bins -> " << out_dir.string() << '\n';
    return int{kOk};
  });
}

int cmd_fit(const fs::path& histogram, const fs::path& fit_config, const fs::path& out_path,
            const GlobalOptions& opts) {
  return guarded(opts, "fit", [&] {
    const Histogram hist = [&] {
      std::istringstream in(read_text_file(histogram));
      return read_histogram_csv(in);
    }();
    if (hist.in_range() == 0) throw InvalidInput("histogram is empty");
    const FitConfig cfg =
        fit_config.empty() ? FitConfig{} : fit_config_from_json(read_json_file(fit_config));
    ensure_dir(sibling_dir(out_path));
    Manifest manifest("fit", fit_config_to_json(cfg), std::nullopt);
    const FitReport rep = write_fit(hist, cfg, out_path, manifest);
    manifest.finish(sibling_dir(out_path) / "fit_manifest.json");
    if (!opts.quiet)
      *opts.err << "fit: " << rep.model.size() << " peaks, objective " << rep.objective << ", "
                << rep.iterations << " iterations" << (rep.converged ? "" : " (NOT converged)")
                << '\n';
    return int{rep.converged ? kOk : kNoConvergence};
  });
}

int cmd_analyze(const fs::path& fit_report, const fs::path& out_path, const GlobalOptions& opts,
                PriorMode priors) {
  return guarded(opts, "analyze", [&] {
    const json report = read_json_file(fit_report);
    ensure_dir(sibling_dir(out_path));
    Manifest manifest("analyze", json{{"fit_report", fit_report.string()}}, std::nullopt);
    write_analysis(report, out_path, priors, manifest);
    manifest.finish(sibling_dir(out_path) / "analyze_manifest.json");
    return int{kOk};
  });
}

int cmd_qe(const fs::path& config, const GlobalOptions& opts) {
  return guarded(opts, "qe", [&] {
    const EfficiencyResult r = measured_efficiency(efficiency_from_json(read_json_file(config)));
    *opts.out << to_json(r).dump(2) << '\n';
    return int{kOk};
  });
}

int cmd_pipeline(const fs::path& config, const fs::path& out_dir, const GlobalOptions& opts) {
  return guarded(opts, "pipeline", [&] {
    const json j = read_json_file(config);
    if (!j.contains("simulate")) throw InvalidInput("missing field 'simulate'");
    const SimConfig sim_cfg = load_sim_config(j.at("simulate"), opts);
    const FitConfig fit_cfg = j.contains("fit") ? fit_config_from_json(j.at("fit")) : FitConfig{};
    const PriorMode mode = j.contains("analyze") ? prior_mode_from(j.at("analyze")) : PriorMode::Equal;

    json echo = j;
    echo["simulate"] = to_json(sim_cfg);
    echo["fit"] = fit_config_to_json(fit_cfg);
    ensure_dir(out_dir);
    Manifest manifest("pipeline", echo, sim_cfg.seed);

    const SimResult sim = run(sim_cfg, opts.threads);
    write_simulation(sim, out_dir, manifest);
    const FitReport rep = write_fit(sim.histogram, fit_cfg, out_dir / "fit_report.json", manifest);
    write_analysis(to_json(rep), out_dir / "analysis.json", mode, manifest);
    manifest.finish(out_dir / "manifest.json");
    if (!opts.quiet)
      *opts.err << "pipeline: " << sim.pulses.size() << " pulses, fit "
                << (rep.converged ? "converged" : "did NOT converge") << " -> " << out_dir.string()
                << '\n';
    return int{rep.converged ? kOk : kNoConvergence};
  });
}

}  // namespace pnr::cli
