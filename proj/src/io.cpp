#include "pnr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pnr {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// ---- CSV helpers -----------------------------------------------------------

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <class T>
T parse_cell(const std::string& raw, std::size_t line_no, const char* column) {
  const std::string s = trim(raw);
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("line " + std::to_string(line_no) + ": bad value '" + s + "' in column " +
                       column);
  return v;
}

/// Data rows of a CSV with the given header; comment lines are skipped.
std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_rows(
    std::istream& in, const std::vector<std::string>& header) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (!seen_header) {
      for (auto& c : cells) c = trim(c);
      if (cells != header)
        throw InvalidInput("line " + std::to_string(line_no) + ": unexpected CSV header '" + t + "'");
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size())
      throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " columns");
    rows.emplace_back(line_no, std::move(cells));
  }
  if (!seen_header) throw InvalidInput("CSV: missing header line");
  return rows;
}

// ---- JSON field access -----------------------------------------------------

const json& field(const json& j, const std::string& name, const std::string& path) {
  if (!j.is_object()) throw InvalidInput("field '" + path + "': expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw InvalidInput("missing field '" + path + "." + name + "'");
  return *it;
}

double number(const json& j, const std::string& name, const std::string& path) {
  const json& v = field(j, name, path);
  if (!v.is_number()) throw InvalidInput("field '" + path + "." + name + "': expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& name, const std::string& path, double fallback) {
  return j.contains(name) ? number(j, name, path) : fallback;
}

std::uint64_t unsigned_integer(const json& j, const std::string& name, const std::string& path) {
  const json& v = field(j, name, path);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw InvalidInput("field '" + path + "." + name + "': expected a non-negative integer");
}

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---- CSV -------------------------------------------------------------------

void write_pulses_csv(std::ostream& out, std::span<const PulseRecord> pulses) {
  out << kCsvVersionLine << '\n' << "true_incident,true_detected,area\n";
  for (const auto& p : pulses)
    out << p.true_incident << ',' << p.true_detected << ',' << format_real(p.area) << '\n';
}

std::vector<PulseRecord> read_pulses_csv(std::istream& in) {
  std::vector<PulseRecord> out;
  for (auto& [line, c] : csv_rows(in, {"true_incident", "true_detected", "area"}))
    out.push_back({parse_cell<int>(c[0], line, "true_incident"),
                   parse_cell<int>(c[1], line, "true_detected"), parse_cell<double>(c[2], line, "area")});
  return out;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << kCsvVersionLine << '\n' << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < hist.bin_count(); ++b)
    out << format_real(hist.bin_left(b)) << ',' << format_real(hist.bin_right(b)) << ','
        << hist.counts()[b] << '\n';
}

Histogram read_histogram_csv(std::istream& in) {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  for (auto& [line, c] : csv_rows(in, {"bin_left", "bin_right", "count"})) {
    const double left = parse_cell<double>(c[0], line, "bin_left");
    const double right = parse_cell<double>(c[1], line, "bin_right");
    if (edges.empty()) {
      edges.push_back(left);
    } else if (left != edges.back()) {
      throw InvalidInput("line " + std::to_string(line) + ": bins are not contiguous");
    }
    edges.push_back(right);
    counts.push_back(parse_cell<std::uint64_t>(c[2], line, "count"));
  }
  if (counts.empty()) throw InvalidInput("histogram CSV has no bins");
  return Histogram(std::move(edges), std::move(counts));
}

void write_fit_curve_csv(std::ostream& out, const Histogram& hist, const MixtureModel& model,
                         double fit_upper) {
  out << kCsvVersionLine << '\n' << "bin_center,data";
  for (std::size_t i = 0; i < model.size(); ++i) out << ",peak_" << i;
  out << ",total\n";
  std::vector<std::vector<double>> per_peak;
  for (std::size_t i = 0; i < model.size(); ++i)
    per_peak.push_back(expected_counts(hist, model, static_cast<int>(i), fit_upper));
  const auto total = expected_counts(hist, model, -1, fit_upper);
  for (std::size_t b = 0; b < hist.bin_count(); ++b) {
    out << format_real(hist.bin_center(b)) << ',' << hist.counts()[b];
    for (const auto& col : per_peak) out << ',' << format_real(col[b]);
    out << ',' << format_real(total[b]) << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& c) {
  out << kCsvVersionLine << '\n' << "true_number";
  for (std::size_t j = 0; j < c.matrix.size(); ++j) out << ",decide_" << j;
  out << '\n';
  for (std::size_t i = 0; i < c.matrix.size(); ++i) {
    out << i;
    for (double v : c.matrix[i]) out << ',' << format_real(v);
    out << '\n';
  }
}

void write_errors_csv(std::ostream& out, std::span<const GaussianPeak> peaks,
                      const DecisionScheme& scheme) {
  out << kCsvVersionLine << '\n' << "n,mean,std_dev,region_lo,region_hi,error\n";
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const std::string lo = i == 0 ? "-inf" : format_real(scheme.thresholds[i - 1]);
    const std::string hi = i + 1 == peaks.size() ? "inf" : format_real(scheme.thresholds[i]);
    out << peaks[i].index << ',' << format_real(peaks[i].mean) << ',' << format_real(peaks[i].std_dev)
        << ',' << lo << ',' << hi << ',' << format_real(scheme.error_per_number[i]) << '\n';
  }
}

void write_variance_csv(std::ostream& out, std::span<const GaussianPeak> peaks,
                        const NoiseReport& noise) {
  out << kCsvVersionLine << '\n' << "n,variance,excess_variance,linear_model\n";
  for (const auto& p : peaks) {
    const double var = p.std_dev * p.std_dev;
    out << p.index << ',' << format_real(var) << ',' << format_real(var - noise.electronic_var) << ',';
    if (p.index > 0) out << format_real(noise.sigma_0_sq + p.index * noise.sigma_m_sq);
    out << '\n';
  }
}

// ---- JSON: simulation ------------------------------------------------------

DetectorModel detector_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw InvalidInput("field '" + path + "': expected an object");
  DetectorModel m;
  m.mean_photon_number = number(j, "mean_photon_number", path);
  m.quantum_efficiency = number(j, "quantum_efficiency", path);
  m.gain_per_photon = number(j, "gain_per_photon", path);
  m.mult_noise_var = number(j, "mult_noise_var", path);
  m.electronic_noise_var = number(j, "electronic_noise_var", path);
  m.extra_per_photon_var = number_or(j, "extra_per_photon_var", path, 0.0);
  m.area_offset = number_or(j, "area_offset", path, 0.0);
  m.saturation_coeff = number_or(j, "saturation_coeff", path, 0.0);
  m.dark_rate_per_gate = number_or(j, "dark_rate_per_gate", path, 0.0);
  if (j.contains("cell_count")) {
    const json& c = j.at("cell_count");
    if (c.is_string()) {
      if (c.get<std::string>() != "infinite")
        throw InvalidInput("field '" + path + ".cell_count': expected a positive integer or \"infinite\"");
    } else {
      m.cell_count = unsigned_integer(j, "cell_count", path);
    }
  }
  try {
    m.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput("invalid " + path + "." + e.what());
  }
  return m;
}

json to_json(const DetectorModel& m) {
  json j;
  j["mean_photon_number"] = m.mean_photon_number;
  j["quantum_efficiency"] = m.quantum_efficiency;
  j["gain_per_photon"] = m.gain_per_photon;
  j["mult_noise_var"] = m.mult_noise_var;
  j["electronic_noise_var"] = m.electronic_noise_var;
  j["extra_per_photon_var"] = m.extra_per_photon_var;
  j["area_offset"] = m.area_offset;
  j["saturation_coeff"] = m.saturation_coeff;
  j["dark_rate_per_gate"] = m.dark_rate_per_gate;
  j["cell_count"] = m.cell_count ? json(*m.cell_count) : json("infinite");
  return j;
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.model = detector_from_json(field(j, "model", "config"), "model");
  c.n_pulses = unsigned_integer(j, "n_pulses", "config");
  c.seed = unsigned_integer(j, "seed", "config");
  if (j.contains("bin_width")) {
    const json& b = j.at("bin_width");
    if (b.is_string()) {
      if (b.get<std::string>() != "auto")
        throw InvalidInput("field 'config.bin_width': expected a number or \"auto\"");
    } else {
      c.bin_width = number(j, "bin_width", "config");
    }
  }
  try {
    c.validate();
  } catch (const CapacityError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("invalid config.") + e.what());
  }
  return c;
}

json to_json(const SimConfig& c) {
  json j;
  j["model"] = to_json(c.model);
  j["n_pulses"] = c.n_pulses;
  j["seed"] = c.seed;
  j["bin_width"] = c.bin_width ? json(*c.bin_width) : json("auto");
  return j;
}

// ---- JSON: fitting ---------------------------------------------------------

json to_json(const MixtureModel& m) {
  json j;
  j["constraint"] = std::string(to_string(m.constraint()));
  j["x0"] = m.x0();
  j["delta"] = m.spacing();
  j["sat"] = m.sat();
  json peaks = json::array();
  for (const auto& p : m.peaks())
    peaks.push_back({{"i", p.index}, {"mean", p.mean}, {"std", p.std_dev}, {"weight", p.weight}});
  j["peaks"] = std::move(peaks);
  if (auto mu = m.poisson_mu()) j["mu"] = *mu;
  if (auto law = m.variance_law())
    j["variance_law"] = {{"electronic_var", law->electronic_var},
                         {"extra_var", law->extra_var},
                         {"mult_var", law->mult_var}};
  return j;
}

json to_json(const FitReport& r) {
  json j = to_json(r.model);
  j["objective"] = r.objective;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["fit_upper"] = real_or_null(r.fit_upper);
  j["warnings"] = r.warnings;
  return j;
}

std::vector<GaussianPeak> peaks_from_report(const json& j) {
  const json& arr = field(j, "peaks", "report");
  if (!arr.is_array()) throw InvalidInput("field 'report.peaks': expected an array");
  std::vector<GaussianPeak> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string path = "report.peaks[" + std::to_string(k) + "]";
    GaussianPeak p;
    p.index = static_cast<int>(unsigned_integer(arr[k], "i", path));
    p.mean = number(arr[k], "mean", path);
    p.std_dev = number(arr[k], "std", path);
    p.weight = number_or(arr[k], "weight", path, 0.0);
    if (!(p.std_dev > 0.0)) throw InvalidInput("field '" + path + ".std': must be > 0");
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

MixtureModel model_from_report(const json& j) {
  const auto peaks = peaks_from_report(j);
  const double x0 = number(j, "x0", "report");
  const double delta = number(j, "delta", "report");
  const double sat = number_or(j, "sat", "report", 0.0);
  std::vector<double> sd, w;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (peaks[i].index != static_cast<int>(i))
      throw InvalidInput("field 'report.peaks': photon numbers must run 0..K-1");
    sd.push_back(peaks[i].std_dev);
    w.push_back(peaks[i].weight);
  }
  const auto kind = j.contains("constraint")
                        ? constraint_from_string(field(j, "constraint", "report").get<std::string>())
                        : ConstraintKind::FreeWeightsFreeSigmas;
  try {
    if (kind == ConstraintKind::PoissonWeights && j.contains("mu"))
      return MixtureModel::poisson(x0, delta, sat, sd, number(j, "mu", "report"));
    if (kind == ConstraintKind::LinearVariance && j.contains("variance_law")) {
      const json& v = j.at("variance_law");
      return MixtureModel::linear_variance(
          x0, delta, sat,
          {number(v, "electronic_var", "report.variance_law"),
           number(v, "extra_var", "report.variance_law"), number(v, "mult_var", "report.variance_law")},
          w);
    }
    // renormalize weights that were rounded on output
    double s = 0.0;
    for (double v : w) s += v;
    if (s > 0.0)
      for (auto& v : w) v /= s;
    return MixtureModel::free(x0, delta, sat, sd, w);
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("report: ") + e.what());
  }
}

FitConfig fit_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("fit config: expected an object");
  FitConfig c;
  if (j.contains("n_peaks")) {
    const json& n = j.at("n_peaks");
    if (n.is_string()) {
      if (n.get<std::string>() != "auto")
        throw InvalidInput("field 'fit.n_peaks': expected an integer or \"auto\"");
    } else {
      c.n_peaks = static_cast<int>(unsigned_integer(j, "n_peaks", "fit"));
    }
  }
  if (j.contains("constraint")) {
    const json& k = j.at("constraint");
    if (!k.is_string()) throw InvalidInput("field 'fit.constraint': expected a string");
    c.constraint = constraint_from_string(k.get<std::string>());
  }
  if (j.contains("max_iterations"))
    c.max_iterations = static_cast<int>(unsigned_integer(j, "max_iterations", "fit"));
  c.tolerance = number_or(j, "tolerance", "fit", c.tolerance);
  if (j.contains("init")) c.init = model_from_report(j.at("init"));
  if (j.contains("upper_cutoff")) {
    const json& u = j.at("upper_cutoff");
    if (u.is_number()) {
      c.cutoff = CutoffMode::Fixed;
      c.cutoff_area = u.get<double>();
    } else if (u == "auto") {
      c.cutoff = CutoffMode::Auto;
    } else if (u == "none") {
      c.cutoff = CutoffMode::None;
    } else {
      throw InvalidInput("field 'fit.upper_cutoff': expected a number, \"auto\" or \"none\"");
    }
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("invalid fit.") + e.what());
  }
  return c;
}

json fit_config_to_json(const FitConfig& c) {
  json j;
  j["n_peaks"] = c.n_peaks ? json(*c.n_peaks) : json("auto");
  j["constraint"] = std::string(to_string(c.constraint));
  j["max_iterations"] = c.max_iterations;
  j["tolerance"] = c.tolerance;
  if (c.init) j["init"] = to_json(*c.init);
  switch (c.cutoff) {
    case CutoffMode::Auto: j["upper_cutoff"] = "auto"; break;
    case CutoffMode::None: j["upper_cutoff"] = "none"; break;
    case CutoffMode::Fixed: j["upper_cutoff"] = c.cutoff_area; break;
  }
  return j;
}

// ---- JSON: analysis --------------------------------------------------------

json to_json(const DecisionScheme& s) {
  return {{"thresholds", s.thresholds}, {"priors", s.priors}, {"error_per_number", s.error_per_number}};
}

json to_json(const ConfusionMatrix& c) { return {{"matrix", c.matrix}, {"priors", c.priors}}; }

json to_json(const NoiseReport& r) {
  json j;
  j["sigma_m_sq"] = r.sigma_m_sq;
  j["sigma_0_sq"] = r.sigma_0_sq;
  j["electronic_var"] = r.electronic_var;
  j["spacing"] = r.spacing;
  j["enf"] = r.enf;
  j["n_max"] = r.n_max_unbounded ? json("unbounded") : real_or_null(r.n_max);
  j["regression_residual"] = r.regression_residual;
  return j;
}

EfficiencyInput efficiency_from_json(const json& j) {
  const std::string path = "qe";
  EfficiencyInput in;
  in.wavelength = number(j, "wavelength", path);
  in.power = number(j, "power", path);
  in.nd_transmission = number(j, "nd_transmission", path);
  in.counts = number(j, "counts", path);
  in.dark_counts = number(j, "dark_counts", path);
  if (j.contains("loss_factors")) {
    const json& lf = j.at("loss_factors");
    if (!lf.is_array()) throw InvalidInput("field 'qe.loss_factors': expected an array");
    for (const auto& v : lf) {
      if (!v.is_number()) throw InvalidInput("field 'qe.loss_factors': expected numbers");
      in.loss_factors.push_back(v.get<double>());
    }
  }
  in.validate();
  return in;
}

json to_json(const EfficiencyResult& r) {
  json j;
  j["photon_flux"] = r.photon_flux;
  j["raw"] = r.raw;
  j["intrinsic"] = r.intrinsic;
  j["calibration_suspect"] = r.calibration_suspect;
  j["flags"] = r.flags;
  return j;
}

// ---- Files -----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace pnr
