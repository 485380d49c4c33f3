#pragma once

// Flat-file persistence: spectra CSV, curve and density CSV, JSON records,
// run manifests with SHA-256 content hashes, static SVG plots.
//
// Numbers are written with std::to_chars (shortest round-trip form), so every
// data file parses back to the identical doubles.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cgue/basis.hpp"
#include "cgue/constraining_function.hpp"
#include "cgue/density.hpp"
#include "cgue/ensembles.hpp"
#include "cgue/spectral_stats.hpp"

namespace cgue {

using json = nlohmann::ordered_json;

std::string format_double(double v);
double parse_double(const std::string& s);

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootVariable = "CGUE_OUTPUT_ROOT";
/// $CGUE_OUTPUT_ROOT, else "cgue-out".
std::filesystem::path default_output_root();

// ---------------------------------------------------------------- spectra

struct SpectrumRow {
  Index sample_index = 0;
  Eigen::VectorXd eigenvalues;
};

/// One row per sample: sample_index, then the eigenvalues.
void write_spectra_csv(const std::filesystem::path& path, const std::vector<SpectrumSample>& samples);
/// Throws InvalidArgument on an empty or malformed file.
std::vector<SpectrumRow> read_spectra_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------- curves

void write_curve_csv(const std::filesystem::path& path, const Curve& c);
Curve read_curve_csv(const std::filesystem::path& path);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);
/// eps, rho rows.
void write_density_csv(const std::filesystem::path& path, const DensityModel& dm);
std::pair<Eigen::VectorXd, Eigen::VectorXd> read_density_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------- JSON records

json to_json(const EnsembleSpec& spec);
json to_json(const ConstraintSet& cs);
json to_json(const Histogram& h);
json to_json(const Curve& c);
json to_json(const FluctuationReport& r);
json to_json(const ComparisonSummary& c);
json to_json(const FPValue& v);
json to_json(const DegeneracyProfile& p);
json to_json(const EffectiveField& f);
/// Metadata only (n_max, iterations, residual, support, moments).
json to_json(const DensityModel& dm);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

// ---------------------------------------------------------------- manifest

std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  ///< relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  json config;
  std::string code_version;
  std::string started;
  std::string finished;
  std::vector<ManifestEntry> files;
};

/// Hashes each listed file (paths relative to dir).
RunManifest make_manifest(const json& config, const std::filesystem::path& dir, const std::vector<std::string>& files,
                          const std::string& started);
json to_json(const RunManifest& m);
/// UTC, ISO 8601.
std::string utc_timestamp();

// ---------------------------------------------------------------- SVG

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool bars = false;
};

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series);
/// NNSD histogram with the Wigner surmise and exp(-s).
std::string nnsd_svg(const NnsdResult& r);
/// Sigma^2 with the GUE asymptote and the Poisson line L.
std::string sigma2_svg(const Curve& c);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cgue
