// File formats: JSON configs and reports, CSV bulk arrays.
//
// Every CSV starts with the version line "# pnr-lab v1" followed by a column
// header. Reals are written in shortest round-trip form, so a given run
// always produces the same bytes.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "pnr/core.hpp"
#include "pnr/discriminate.hpp"
#include "pnr/fit.hpp"
#include "pnr/noise.hpp"
#include "pnr/simulate.hpp"

namespace pnr {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kCsvVersionLine = "# pnr-lab v1";

using json = nlohmann::ordered_json;

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string format_real(double v);

// CSV ------------------------------------------------------------------------

void write_pulses_csv(std::ostream& out, std::span<const PulseRecord> pulses);
std::vector<PulseRecord> read_pulses_csv(std::istream& in);

void write_histogram_csv(std::ostream& out, const Histogram& hist);
/// Bins must be contiguous; total_pulses is the sum of the counts.
Histogram read_histogram_csv(std::istream& in);

/// Bin centres, data, one column per peak and the total model.
void write_fit_curve_csv(std::ostream& out, const Histogram& hist, const MixtureModel& model,
                         double fit_upper = std::numeric_limits<double>::infinity());
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& c);
void write_errors_csv(std::ostream& out, std::span<const GaussianPeak> peaks,
                      const DecisionScheme& scheme);
void write_variance_csv(std::ostream& out, std::span<const GaussianPeak> peaks,
                        const NoiseReport& noise);

// JSON -----------------------------------------------------------------------

/// Parsers throw InvalidInput naming the offending field.
DetectorModel detector_from_json(const json& j, const std::string& path = "model");
json to_json(const DetectorModel& m);

SimConfig sim_config_from_json(const json& j);
json to_json(const SimConfig& c);

FitConfig fit_config_from_json(const json& j);
json fit_config_to_json(const FitConfig& c);

json to_json(const MixtureModel& m);
json to_json(const FitReport& r);

/// Peaks of a serialized fit report, in photon-number order.
std::vector<GaussianPeak> peaks_from_report(const json& j);
/// The constrained model of a serialized fit report.
MixtureModel model_from_report(const json& j);

json to_json(const DecisionScheme& s);
json to_json(const ConfusionMatrix& c);
json to_json(const NoiseReport& r);

EfficiencyInput efficiency_from_json(const json& j);
json to_json(const EfficiencyResult& r);

// Files ----------------------------------------------------------------------

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pnr
