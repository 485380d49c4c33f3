#include "cgue/spectral_stats.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "cgue/errors.hpp"

namespace cgue {

std::string to_string(UnfoldMethod m) {
  switch (m) {
    case UnfoldMethod::polynomial: return "polynomial";
    case UnfoldMethod::semicircle: return "semicircle";
    case UnfoldMethod::ensemble_average: return "ensemble-average";
  }
  return "polynomial";
}

UnfoldMethod unfold_method_from_string(const std::string& s) {
  static const std::map<std::string, UnfoldMethod> names{{"polynomial", UnfoldMethod::polynomial},
                                                         {"semicircle", UnfoldMethod::semicircle},
                                                         {"ensemble-average", UnfoldMethod::ensemble_average}};
  auto it = names.find(s);
  if (it == names.end()) throw InvalidArgument("unknown unfolding method '" + s + "'");
  return it->second;
}

// ---------------------------------------------------------------- unfolding

EnsembleStaircase::EnsembleStaircase(const std::vector<Eigen::VectorXd>& spectra) : samples_(spectra.size()) {
  if (spectra.empty()) throw InvalidArgument("EnsembleStaircase: no spectra");
  for (const auto& s : spectra) pooled_.insert(pooled_.end(), s.data(), s.data() + s.size());
  std::sort(pooled_.begin(), pooled_.end());
}

double EnsembleStaircase::operator()(double x) const {
  // Node j sits at height (j + 1/2) / M.
  const double m = static_cast<double>(samples_);
  const auto k = pooled_.size();
  if (k == 0) return 0.0;
  if (x <= pooled_.front()) return 0.5 / m;
  if (x >= pooled_.back()) return (static_cast<double>(k) - 0.5) / m;
  const auto it = std::upper_bound(pooled_.begin(), pooled_.end(), x);
  const auto j = static_cast<std::size_t>(it - pooled_.begin());  // pooled_[j-1] <= x < pooled_[j]
  const double lo = pooled_[j - 1], hi = pooled_[j];
  const double frac = hi > lo ? (x - lo) / (hi - lo) : 0.0;
  return (static_cast<double>(j) - 0.5 + frac) / m;
}

double semicircle_staircase(double x, Index n, double lambda) {
  const double e = std::clamp(x / lambda, -2.0, 2.0);
  const double f = 0.5 + e * std::sqrt(4.0 - e * e) / (4.0 * std::numbers::pi) + std::asin(e / 2.0) / std::numbers::pi;
  return static_cast<double>(n) * f;
}

namespace {

Eigen::VectorXd polynomial_staircase(const Eigen::VectorXd& x, int degree) {
  const Index n = x.size();
  const double center = 0.5 * (x[0] + x[n - 1]);
  const double half = 0.5 * (x[n - 1] - x[0]);
  if (!(half > 0.0)) throw NumericFailure("unfold: spectrum has zero width");
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd target(n);
  for (Index i = 0; i < n; ++i) {
    const double t = (x[i] - center) / half;
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      design(i, d) = p;
      p *= t;
    }
    target[i] = static_cast<double>(i) + 0.5;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < degree + 1) {
    std::ostringstream os;
    os << "unfold: polynomial fit of degree " << degree << " is rank deficient (rank " << qr.rank() << ")";
    throw NumericFailure(os.str());
  }
  return design * qr.solve(target);
}

}  // namespace

UnfoldedSpectrum unfold(const Eigen::VectorXd& ascending, const UnfoldOptions& options,
                        const EnsembleStaircase* staircase) {
  const Index n = ascending.size();
  if (n < 20) throw InvalidArgument("unfold: need at least 20 levels");
  if (options.edge_fraction < 0.0 || options.edge_fraction >= 0.5)
    throw InvalidArgument("unfold: edge fraction must lie in [0, 0.5)");
  for (Index i = 1; i < n; ++i)
    if (ascending[i] < ascending[i - 1]) throw InvalidArgument("unfold: eigenvalues must be ascending");

  Eigen::VectorXd mapped(n);
  switch (options.method) {
    case UnfoldMethod::polynomial:
      if (options.degree < 1) throw InvalidArgument("unfold: polynomial degree must be >= 1");
      mapped = polynomial_staircase(ascending, options.degree);
      break;
    case UnfoldMethod::semicircle:
      if (!(options.lambda > 0.0)) throw InvalidArgument("unfold: lambda must be positive");
      for (Index i = 0; i < n; ++i) mapped[i] = semicircle_staircase(ascending[i], n, options.lambda);
      break;
    case UnfoldMethod::ensemble_average:
      if (!staircase || staircase->samples() == 0) throw InvalidArgument("unfold: ensemble staircase required");
      for (Index i = 0; i < n; ++i) mapped[i] = (*staircase)(ascending[i]);
      break;
  }

  const auto cut = static_cast<Index>(std::floor(options.edge_fraction * static_cast<double>(n)));
  UnfoldedSpectrum out;
  out.values = mapped.segment(cut, n - 2 * cut);
  out.method = options.method;
  out.degree = options.method == UnfoldMethod::polynomial ? options.degree : 0;
  out.edge_fraction = options.edge_fraction;
  for (Index i = 1; i < out.values.size(); ++i) {
    if (!(out.values[i] > out.values[i - 1]))
      throw NumericFailure("unfold: unfolded levels are not strictly ascending");
  }
  return out;
}

UnfoldOptions default_unfold_options(std::size_t samples) {
  UnfoldOptions o;
  if (samples >= 50) {
    o.method = UnfoldMethod::ensemble_average;
  } else {
    o.method = UnfoldMethod::polynomial;
    o.degree = 7;
  }
  return o;
}

std::vector<UnfoldedSpectrum> unfold_all(const std::vector<Eigen::VectorXd>& spectra, const UnfoldOptions& options) {
  std::vector<UnfoldedSpectrum> out;
  out.reserve(spectra.size());
  EnsembleStaircase staircase;
  if (options.method == UnfoldMethod::ensemble_average) staircase = EnsembleStaircase(spectra);
  for (const auto& s : spectra) out.push_back(unfold(s, options, &staircase));
  return out;
}

std::vector<Eigen::VectorXd> eigenvalue_vectors(const std::vector<SpectrumSample>& samples) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.eigenvalues);
  return out;
}

// ---------------------------------------------------------------- references

double wigner_surmise_pdf(double s) {
  if (s < 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  return 32.0 / (pi * pi) * s * s * std::exp(-4.0 * s * s / pi);
}

double wigner_surmise_cdf(double s) {
  if (s <= 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  return std::erf(2.0 * s / std::sqrt(pi)) - 4.0 / pi * s * std::exp(-4.0 * s * s / pi);
}

double poisson_spacing_cdf(double s) { return s <= 0.0 ? 0.0 : -std::expm1(-s); }

double poisson_ratio_mean() { return 2.0 * std::numbers::ln2 - 1.0; }

// ---------------------------------------------------------------- summaries

void Moments::add(double x) {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

void Moments::merge(const Moments& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
  const double d = o.mean - mean;
  const double total = na + nb;
  mean += d * nb / total;
  m2 += o.m2 + d * d * na * nb / total;
  n += o.n;
}

double Histogram::integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) s += density[i] * (edges[i + 1] - edges[i]);
  return s;
}

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw InvalidArgument("histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    ++h.total;
    if (!(v >= lo && v <= hi)) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= counts.size()) b = counts.size() - 1;
    ++counts[b];
    ++h.count;
  }
  h.density.assign(static_cast<std::size_t>(bins), 0.0);
  if (h.count > 0)
    for (std::size_t b = 0; b < counts.size(); ++b)
      h.density[b] = static_cast<double>(counts[b]) / (static_cast<double>(h.count) * width);
  return h;
}

std::vector<double> unfolded_spacings(const std::vector<UnfoldedSpectrum>& unfolded) {
  std::vector<double> s;
  for (const auto& u : unfolded)
    for (Index i = 1; i < u.values.size(); ++i) s.push_back(u.values[i] - u.values[i - 1]);
  return s;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

double repulsion_exponent(const std::vector<double>& spacings, double lo, double hi) {
  std::vector<double> s = spacings;
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  // Weighted least squares of log F(s) on log s; weight = count (Poisson).
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  constexpr int points = 10;
  for (int k = 0; k < points; ++k) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
    const auto c = static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
    if (c < 1) continue;
    const double lx = std::log(x), ly = std::log(c / n);
    sw += c;
    sx += c * lx;
    sy += c * ly;
    sxx += c * lx * lx;
    sxy += c * lx * ly;
    ++used;
  }
  if (used < 3) return std::numeric_limits<double>::quiet_NaN();
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  return slope - 1.0;
}

NnsdResult nnsd(const std::vector<double>& spacings, int bins, double s_max) {
  NnsdResult r;
  r.histogram = make_histogram(spacings, 0.0, s_max, bins);
  r.repulsion_exponent = repulsion_exponent(spacings);
  if (spacings.size() >= kMinSpacingsForDistances) {
    r.distances_reported = true;
    r.ks_gue = ks_distance(spacings, wigner_surmise_cdf);
    r.ks_poisson = ks_distance(spacings, poisson_spacing_cdf);
  }
  return r;
}

RatioSummary spacing_ratios(const std::vector<Eigen::VectorXd>& raw, double edge_fraction, int bins) {
  if (edge_fraction < 0.0 || edge_fraction >= 0.5) throw InvalidArgument("spacing_ratios: bad edge fraction");
  RatioSummary out;
  Moments per_sample;
  Moments all;
  for (const auto& x : raw) {
    const Index n = x.size();
    const auto cut = static_cast<Index>(std::floor(edge_fraction * static_cast<double>(n)));
    Moments mine;
    for (Index i = cut + 1; i + 1 < n - cut; ++i) {
      const double s0 = x[i] - x[i - 1];
      const double s1 = x[i + 1] - x[i];
      const double big = std::max(s0, s1);
      if (!(big > 0.0)) continue;
      const double r = std::min(s0, s1) / big;
      out.values.push_back(r);
      mine.add(r);
    }
    if (mine.n > 0) per_sample.add(mine.mean);
    all.merge(mine);
  }
  out.count = all.n;
  out.mean = all.mean;
  if (per_sample.n > 1) {
    out.error = std::sqrt(per_sample.variance() / static_cast<double>(per_sample.n));
  } else if (all.n > 1) {
    out.error = std::sqrt(all.variance() / static_cast<double>(all.n));
  }
  out.histogram = make_histogram(out.values, 0.0, 1.0, bins);
  return out;
}

namespace {

void check_windows(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
                   const WindowOptions& options, const char* who) {
  if (unfolded.empty()) throw InvalidArgument(std::string(who) + ": no spectra");
  if (L_grid.empty()) throw InvalidArgument(std::string(who) + ": empty L grid");
  if (!(options.step > 0.0)) throw InvalidArgument(std::string(who) + ": window step must be positive");
  const double l_max = *std::max_element(L_grid.begin(), L_grid.end());
  for (double L : L_grid)
    if (!(L > 0.0)) throw InvalidArgument(std::string(who) + ": L must be positive");
  for (const auto& u : unfolded) {
    const double length = u.values.size() > 1 ? u.values[u.values.size() - 1] - u.values[0] : 0.0;
    if (l_max > options.max_window_fraction * length) {
      std::ostringstream os;
      os << who << ": L_max = " << l_max << " exceeds " << options.max_window_fraction
         << " of the retained length " << length;
      throw InvalidArgument(os.str());
    }
  }
}

// Per-sample means of a window statistic, combined into mean and stderr.
template <typename F>
Curve window_curve(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
                   const WindowOptions& options, F&& stat) {
  Curve c;
  c.L = L_grid;
  for (double L : L_grid) {
    Moments across;
    for (const auto& u : unfolded) {
      Moments mine;
      const double a0 = u.values[0];
      const double a1 = u.values[u.values.size() - 1] - L;
      for (double a = a0; a <= a1; a += options.step) mine.add(stat(u.values, a, L));
      if (mine.n > 0) across.add(mine.mean);
    }
    c.value.push_back(across.mean);
    c.error.push_back(across.n > 1 ? std::sqrt(across.variance() / static_cast<double>(across.n)) : 0.0);
  }
  return c;
}

}  // namespace

Curve number_variance(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
                      const WindowOptions& options) {
  check_windows(unfolded, L_grid, options, "number_variance");
  auto count = [](const Eigen::VectorXd& v, double a, double L) {
    const double* b = v.data();
    const double* e = v.data() + v.size();
    return static_cast<double>(std::lower_bound(b, e, a + L) - std::lower_bound(b, e, a));
  };
  // Grand mean count per L first, then squared deviations per sample.
  std::vector<double> grand;
  for (double L : L_grid) {
    Moments m;
    for (const auto& u : unfolded) {
      const double a1 = u.values[u.values.size() - 1] - L;
      for (double a = u.values[0]; a <= a1; a += options.step) m.add(count(u.values, a, L));
    }
    grand.push_back(m.mean);
  }
  std::size_t idx = 0;
  Curve c;
  c.L = L_grid;
  for (double L : L_grid) {
    const double mean = grand[idx++];
    const std::vector<double> one{L};
    auto part = window_curve(unfolded, one, options, [&](const Eigen::VectorXd& v, double a, double len) {
      const double d = count(v, a, len) - mean;
      return d * d;
    });
    c.value.push_back(part.value[0]);
    c.error.push_back(part.error[0]);
  }
  return c;
}

double delta3_window(const Eigen::VectorXd& values, double a, double L) {
  const double* b = values.data();
  const double* e = values.data() + values.size();
  const double* first = std::upper_bound(b, e, a);
  const double* last = std::upper_bound(b, e, a + L);
  // Staircase n(t) on [0, L]: j on [t_j, t_{j+1}).
  double i0 = 0, i1 = 0, i2 = 0;
  double prev = 0.0;
  double j = 0.0;
  for (const double* p = first; p <= last; ++p) {
    const double t = (p == last) ? L : *p - a;
    i0 += j * (t - prev);
    i1 += j * (t * t - prev * prev) / 2.0;
    i2 += j * j * (t - prev);
    prev = t;
    j += 1.0;
  }
  // Normal equations for min over (A, B) of int (n - A - B t)^2.
  const double m00 = L, m01 = L * L / 2.0, m11 = L * L * L / 3.0;
  const double det = m00 * m11 - m01 * m01;
  const double A = (i0 * m11 - i1 * m01) / det;
  const double B = (m00 * i1 - m01 * i0) / det;
  return std::max(0.0, (i2 - A * i0 - B * i1) / L);
}

Curve delta3(const std::vector<UnfoldedSpectrum>& unfolded, const std::vector<double>& L_grid,
             const WindowOptions& options) {
  check_windows(unfolded, L_grid, options, "delta3");
  return window_curve(unfolded, L_grid, options, delta3_window);
}

// ---------------------------------------------------------------- reports

FluctuationReport fluctuation_report(const std::vector<Eigen::VectorXd>& spectra, const ReportOptions& options) {
  if (spectra.empty()) throw InvalidArgument("fluctuation_report: no spectra");
  UnfoldOptions uo = options.unfold;
  if (options.auto_unfold) {
    const auto d = default_unfold_options(spectra.size());
    uo.method = d.method;
    uo.degree = d.degree;
  }
  const auto unfolded = unfold_all(spectra, uo);
  FluctuationReport r;
  r.samples = spectra.size();
  r.unfold_method = uo.method;
  r.spacings = unfolded_spacings(unfolded);
  r.nnsd = nnsd(r.spacings, options.nnsd_bins);
  r.ratios = spacing_ratios(spectra, uo.edge_fraction, options.ratio_bins);
  r.sigma2 = number_variance(unfolded, options.L_grid, options.windows);
  r.delta3 = delta3(unfolded, options.L_grid, options.windows);
  return r;
}

namespace {
void sup_difference(const Curve& a, const Curve& b, double& sup, double& sup_z) {
  sup = 0.0;
  sup_z = 0.0;
  for (std::size_t i = 0; i < a.value.size(); ++i) {
    const double d = std::abs(a.value[i] - b.value[i]);
    const double s = std::hypot(a.error[i], b.error[i]);
    sup = std::max(sup, d);
    sup_z = std::max(sup_z, s > 0.0 ? d / s : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
}
}  // namespace

ComparisonSummary compare(const FluctuationReport& a, const FluctuationReport& b) {
  if (a.sigma2.L != b.sigma2.L || a.delta3.L != b.delta3.L)
    throw InvalidArgument("compare: reports use different L grids");
  if (a.nnsd.histogram.edges != b.nnsd.histogram.edges)
    throw InvalidArgument("compare: reports use different NNSD bins");
  ComparisonSummary c;
  if (!a.spacings.empty() && !b.spacings.empty()) c.nnsd = ks_two_sample(a.spacings, b.spacings);
  c.ratio_difference = std::abs(a.ratios.mean - b.ratios.mean);
  c.ratio_sigma = std::hypot(a.ratios.error, b.ratios.error);
  sup_difference(a.sigma2, b.sigma2, c.sigma2_sup, c.sigma2_sup_z);
  sup_difference(a.delta3, b.delta3, c.delta3_sup, c.delta3_sup_z);
  const bool ratio_ok = c.ratio_difference <= 3.0 * c.ratio_sigma;
  c.consistent = ratio_ok && c.sigma2_sup_z <= 3.0 && c.delta3_sup_z <= 3.0 && c.nnsd.p_value > 0.01;
  return c;
}

std::string classify(const FluctuationReport& r, double gue_ratio_reference) {
  const double band = std::max(0.01, 3.0 * r.ratios.error);
  const bool near_gue = std::abs(r.ratios.mean - gue_ratio_reference) <= band;
  const bool near_poisson = std::abs(r.ratios.mean - poisson_ratio_mean()) <= band;
  if (r.nnsd.distances_reported) {
    if (near_gue && r.nnsd.ks_gue < r.nnsd.ks_poisson) return "GUE-consistent";
    if (near_poisson && r.nnsd.ks_poisson < r.nnsd.ks_gue) return "Poisson-consistent";
    return "inconclusive";
  }
  if (near_gue) return "GUE-consistent";
  if (near_poisson) return "Poisson-consistent";
  return "inconclusive";
}

}  // namespace cgue
