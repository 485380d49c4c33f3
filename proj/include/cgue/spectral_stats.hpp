#pragma once

// Unfolding and level-fluctuation measures: nearest-neighbour spacing
// distribution, spacing ratios, number variance and the Dyson-Mehta Delta3.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgue/ensembles.hpp"

namespace cgue {

enum class UnfoldMethod { polynomial, semicircle, ensemble_average };

std::string to_string(UnfoldMethod m);
UnfoldMethod unfold_method_from_string(const std::string& s);

struct UnfoldOptions {
  UnfoldMethod method = UnfoldMethod::polynomial;
  int degree = 7;               ///< polynomial staircase
  double lambda = 1.0;          ///< semicircle
  double edge_fraction = 0.05;  ///< discarded per edge
};

struct UnfoldedSpectrum {
  Eigen::VectorXd values;  // strictly ascending, unit mean spacing
  UnfoldMethod method = UnfoldMethod::polynomial;
  int degree = 0;
  double edge_fraction = 0.0;
};

/// Mean counting function of a pooled ensemble, linearly interpolated
/// between the pooled levels.
class EnsembleStaircase {
 public:
  EnsembleStaircase() = default;
  explicit EnsembleStaircase(const std::vector<Eigen::VectorXd>& spectra);
  double operator()(double x) const;
  std::size_t samples() const { return samples_; }

 private:
  std::vector<double> pooled_;
  std::size_t samples_ = 0;
};

/// Semicircle counting function N * F(x / lambda).
double semicircle_staircase(double x, Index n, double lambda);

UnfoldedSpectrum unfold(const Eigen::VectorXd& ascending, const UnfoldOptions& options,
                        const EnsembleStaircase* staircase = nullptr);

/// Ensemble-average staircase with >= 50 samples, else polynomial degree 7.
UnfoldOptions default_unfold_options(std::size_t samples);
std::vector<UnfoldedSpectrum> unfold_all(const std::vector<Eigen::VectorXd>& spectra, const UnfoldOptions& options);

/// Eigenvalue vectors of a sample collection.
std::vector<Eigen::VectorXd> eigenvalue_vectors(const std::vector<SpectrumSample>& samples);

// ---------------------------------------------------------------- references

double wigner_surmise_pdf(double s);  // (32/pi^2) s^2 exp(-4 s^2 / pi)
double wigner_surmise_cdf(double s);  // erf(2s/sqrt(pi)) - (4/pi) s exp(-4 s^2 / pi)
double poisson_spacing_cdf(double s);
/// <r~> for independent exponential spacings, 2 ln 2 - 1.
double poisson_ratio_mean();

// ---------------------------------------------------------------- summaries

/// Mergeable count / mean / M2 accumulator.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x);
  void merge(const Moments& o);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct Histogram {
  std::vector<double> edges;
  std::vector<double> density;  ///< normalized over in-range counts
  std::size_t count = 0;        ///< in-range entries
  std::size_t total = 0;        ///< all entries offered
  double integral() const;
};

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins);

struct Curve {
  std::vector<double> L;
  std::vector<double> value;
  std::vector<double> error;
};

struct NnsdResult {
  Histogram histogram;
  bool distances_reported = false;
  double ks_gue = 0.0;
  double ks_poisson = 0.0;
  double repulsion_exponent = 0.0;  ///< NaN when too few small spacings
};

inline constexpr std::size_t kMinSpacingsForDistances = 1000;

std::vector<double> unfolded_spacings(const std::vector<UnfoldedSpectrum>& unfolded);
NnsdResult nnsd(const std::vector<double>& spacings, int bins = 40, double s_max = 4.0);

/// One-sample KS distance of `values` against a CDF.
template <typename Cdf>
double ks_distance(std::vector<double> values, Cdf&& cdf);
/// Two-sample KS distance and asymptotic p-value.
struct KsTwoSample {
  double distance = 0.0;
  double p_value = 1.0;
};
KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Kolmogorov survival function Q(lambda).
double kolmogorov_q(double lambda);

/// Log-log slope of the empirical CDF minus one over s in [lo, hi].
double repulsion_exponent(const std::vector<double>& spacings, double lo = 0.05, double hi = 0.3);

struct RatioSummary {
  double mean = 0.0;
  double error = 0.0;
  std::size_t count = 0;
  Histogram histogram;  ///< r~ on [0, 1]
  std::vector<double> values;
};

/// r~ = min(r, 1/r) of consecutive raw spacings after trimming
/// edge_fraction of the levels at each edge.
RatioSummary spacing_ratios(const std::vector<Eigen::VectorXd>& raw, double edge_fraction = 0.05, int bins = 20);

struct WindowOptions {
  double step = 0.5;                  ///< window start stride (mean spacings)
  double max_window_fraction = 0.1;   ///< L_max / retained length
};

/// Variance of level counts in windows of length L. Errors from the spread
/// of the per-sample contributions.
Curve number_variance(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
                      const WindowOptions& options = {});
/// Least-squares deviation of the staircase from a line, averaged over windows.
Curve delta3(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
             const WindowOptions& options = {});

/// Delta3 of a single window [a, a + L] of an ascending sequence.
double delta3_window(const Eigen::VectorXd& values, double a, double L);

// ---------------------------------------------------------------- reports

struct ReportOptions {
  UnfoldOptions unfold;
  bool auto_unfold = true;  ///< pick the default method from the sample count
  int nnsd_bins = 40;
  std::vector<double> L_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  WindowOptions windows;
  int ratio_bins = 20;
};

struct FluctuationReport {
  std::size_t samples = 0;
  UnfoldMethod unfold_method = UnfoldMethod::polynomial;
  std::vector<double> spacings;
  NnsdResult nnsd;
  RatioSummary ratios;
  Curve sigma2;
  Curve delta3;
};

FluctuationReport fluctuation_report(const std::vector<Eigen::VectorXd>& spectra, const ReportOptions& options = {});

struct ComparisonSummary {
  KsTwoSample nnsd;
  double ratio_difference = 0.0;
  double ratio_sigma = 0.0;  ///< combined standard error
  double sigma2_sup = 0.0;
  double sigma2_sup_z = 0.0;
  double delta3_sup = 0.0;
  double delta3_sup_z = 0.0;
  /// Ratio and curves within 3 sigma, KS p-value above 0.01.
  bool consistent = false;
};

ComparisonSummary compare(const FluctuationReport& a, const FluctuationReport& b);

/// "GUE-consistent", "Poisson-consistent" or "inconclusive".
std::string classify(const FluctuationReport& r, double gue_ratio_reference);

// ---------------------------------------------------------------- template

template <typename Cdf>
double ks_distance(std::vector<double> values, Cdf&& cdf) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace cgue
