#include "cgue/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cgue/errors.hpp"
#include "cgue/quadrature.hpp"

namespace cgue {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Chebyshev U_{k} at t for k = 0..n-1 by recurrence.
double u_series(const std::vector<double>& d, double t) {
  double u_prev = 0.0, u = 1.0, sum = 0.0;
  for (std::size_t n = 1; n < d.size(); ++n) {
    sum += d[n] * u;
    const double next = 2.0 * t * u - u_prev;
    u_prev = u;
    u = next;
  }
  return sum;
}

// Odd coefficients of g(eps) = eps - f(eps): g[k] multiplies eps^(2k+1).
std::vector<double> g_coefficients(const EffectiveField& field) {
  std::vector<double> g(std::max<std::size_t>(1, field.c.size()), 0.0);
  for (std::size_t k = 0; k < field.c.size(); ++k) g[k] = -field.c[k];
  g[0] += 1.0;
  return g;
}

// gamma_n of g(a t) = sum_n gamma_n T_n(t), n = 0..2K-1.
std::vector<double> chebyshev_of_g(const std::vector<double>& g, double a) {
  std::vector<double> gamma(2 * g.size() + 1, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int p = static_cast<int>(2 * k + 1);
    const double coef = g[k] * std::pow(a, p) * std::pow(2.0, 1 - p);
    for (int i = 0; i <= static_cast<int>(k); ++i) gamma[static_cast<std::size_t>(p - 2 * i)] += coef * binom(p, i);
  }
  return gamma;
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Index i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Mirrored Chebyshev-Lobatto nodes on [-a, a].
Eigen::VectorXd symmetric_grid(double a, Index points) {
  if (points < 3 || points % 2 == 0) throw InvalidArgument("density grid: need an odd number of points >= 3");
  Eigen::VectorXd x(points);
  const Index half = points / 2;
  for (Index i = 0; i < half; ++i) {
    x[i] = -a * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1));
    x[points - 1 - i] = -x[i];
  }
  x[half] = 0.0;
  return x;
}

DensityModel build_model(double a, std::vector<double> d, const GridOptions& opt) {
  DensityModel m;
  m.a = a;
  m.coefficients = std::move(d);
  m.grid = symmetric_grid(a, opt.points);
  m.rho.resize(opt.points);
  const Index half = opt.points / 2;
  for (Index i = 0; i <= half; ++i) m.rho[i] = m(m.grid[i]);
  for (Index i = 0; i < half; ++i) m.rho[opt.points - 1 - i] = m.rho[i];
  const double peak = m.rho.maxCoeff();
  const double floor = m.rho.minCoeff();
  if (floor < -1e-12 * std::max(peak, 1e-300)) {
    std::ostringstream os;
    os << "solve_density: infeasible field, rho reaches " << floor
       << " on the support; try a smaller n_max or fewer constraints";
    throw NumericFailure(os.str());
  }
  m.rho = m.rho.cwiseMax(0.0);
  m.moments.assign(static_cast<std::size_t>(opt.n_moments) + 1, 0.0);
  for (int n = 0; n <= opt.n_moments; ++n)
    m.moments[static_cast<std::size_t>(n)] = trapezoid(m.grid, (m.grid.array().pow(2 * n) * m.rho.array()).matrix());
  return m;
}

}  // namespace

double DensityModel::operator()(double eps) const {
  if (std::abs(eps) >= a) return 0.0;
  return std::sqrt(a * a - eps * eps) * u_series(coefficients, eps / a);
}

double DensityModel::norm() const { return trapezoid(grid, rho); }

double EffectiveField::operator()(double eps) const {
  double sum = 0.0, p = eps;
  for (double ck : c) {
    sum += ck * p;
    p *= eps * eps;
  }
  return sum;
}

bool EffectiveField::zero() const {
  return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

DensityModel semicircle(const GridOptions& grid) {
  return build_model(2.0, {0.0, 1.0 / (2.0 * std::numbers::pi)}, grid);
}

std::vector<double> radial_moments(const std::vector<double>& s, Index n_q, int k_max) {
  if (n_q < 1) throw InvalidArgument("radial_moments: need N_Q >= 1");
  if (s.size() < 2 || !(s[1] < 0.0)) throw InvalidArgument("radial_moments: s_1 must be negative");
  const double leading = s.back();
  if (!(leading < 0.0)) {
    std::ostringstream os;
    os << "radial integral diverges: leading exponent coefficient s_" << s.size() - 1 << " = " << leading
       << " is not negative";
    throw DivergenceError(os.str(), "s = " + std::to_string(leading));
  }
  const double half = 0.5 * static_cast<double>(n_q);
  // Integrate in t = ln u: weight exp((N_Q/2 + k) t + S(e^t)).
  auto log_weight = [&](double t, int k) {
    const double u = std::exp(t);
    double S = 0.0, p = u;
    for (std::size_t n = 1; n < s.size(); ++n) {
      S += s[n] * p;
      p *= u;
    }
    return (half + k) * t + S;
  };
  const double t0 = std::log(half / -s[1]);
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 1.0);
  double log_norm = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    constexpr int kGrid = 8001;
    double lo = t0 - 60.0, hi = t0 + 60.0;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> vals(kGrid);
    for (int i = 0; i < kGrid; ++i) {
      const double t = lo + (hi - lo) * i / (kGrid - 1);
      vals[static_cast<std::size_t>(i)] = log_weight(t, k);
      best = std::max(best, vals[static_cast<std::size_t>(i)]);
    }
    int first = 0, last = kGrid - 1;
    while (first < kGrid - 1 && vals[static_cast<std::size_t>(first)] < best - 60.0) ++first;
    while (last > 0 && vals[static_cast<std::size_t>(last)] < best - 60.0) --last;
    const double a = lo + (hi - lo) * std::max(0, first - 1) / (kGrid - 1);
    const double b = lo + (hi - lo) * std::min(kGrid - 1, last + 1) / (kGrid - 1);
    const auto r = quad::integrate([&](double t) { return std::exp(log_weight(t, k) - best); }, a, b, 1e-12, 0.0,
                                   2000);
    if (!r.converged || !(r.value > 0.0)) throw NumericFailure("radial_moments: quadrature did not converge");
    const double log_i = best + std::log(r.value);
    if (k == 0)
      log_norm = log_i;
    else
      out[static_cast<std::size_t>(k)] = std::exp(log_i - log_norm);
  }
  return out;
}

EffectiveField effective_field(const DensityModel& dm, const AngularMomentTable& table, Index n, Index n_q,
                               int n_max) {
  if (n_max < 1) throw InvalidArgument("effective_field: n_max must be >= 1");
  if (n_q >= n * (n - 1) / 2 && n_q > 0) throw InvalidArgument("effective_field: need N_Q < N(N-1)/2");
  EffectiveField field;
  field.c.assign(static_cast<std::size_t>(n_max), 0.0);
  if (n_q == 0) return field;
  if (static_cast<int>(dm.moments.size()) <= n_max) throw InvalidArgument("effective_field: density moments too short");
  if (table.n_max < 2 * n_max) throw InvalidArgument("effective_field: angular moment table too short");
  const double nn = static_cast<double>(n);
  std::vector<double> s(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int k = 1; k <= n_max; ++k) {
    const double sign = (k % 2) ? -1.0 : 1.0;
    s[static_cast<std::size_t>(k)] = sign * dm.moment(k) * table.M(2 * k) / (2.0 * k * std::pow(nn, 2 * k - 1));
  }
  const auto u = radial_moments(s, n_q, n_max);
  field.c[0] = static_cast<double>(n_q) / (nn * nn * dm.moment(1));
  for (int k = 1; k <= n_max; ++k) {
    const double sign = (k % 2) ? -1.0 : 1.0;
    field.c[static_cast<std::size_t>(k - 1)] +=
        sign * table.M(2 * k) * u[static_cast<std::size_t>(k)] / std::pow(nn, 2 * k + 1);
  }
  for (std::size_t j = 1; j < field.c.size(); ++j) {
    if (!(std::abs(field.c[j]) < std::abs(field.c[j - 1]))) {
      field.decreasing = false;
      std::ostringstream os;
      os << "field coefficients do not decrease: |c_" << 2 * j + 1 << "| = " << std::abs(field.c[j]) << " >= |c_"
         << 2 * j - 1 << "| = " << std::abs(field.c[j - 1]);
      field.warning = os.str();
      break;
    }
  }
  return field;
}

DensityModel solve_density(const EffectiveField& field, const GridOptions& grid) {
  for (double c : field.c)
    if (!std::isfinite(c)) throw InvalidArgument("solve_density: field is not finite");
  const auto g = g_coefficients(field);
  auto normalization = [&](double a) { return a * chebyshev_of_g(g, a)[1] / 4.0 - 1.0; };

  // All sign changes on a log grid; keep the root closest to the zero-field edge 2.
  constexpr int kScan = 4000;
  double best = std::numeric_limits<double>::quiet_NaN();
  double prev_a = 1e-3, prev_v = normalization(prev_a);
  for (int i = 1; i <= kScan; ++i) {
    const double a = 1e-3 * std::pow(1e5, static_cast<double>(i) / kScan);
    const double v = normalization(a);
    if ((prev_v <= 0.0) != (v <= 0.0)) {
      const double root = quad::brent_root(normalization, prev_a, a, 1e-15);
      if (std::isnan(best) || std::abs(root - 2.0) < std::abs(best - 2.0)) best = root;
    }
    prev_a = a;
    prev_v = v;
  }
  if (std::isnan(best))
    throw NumericFailure("solve_density: infeasible field, no support width satisfies the normalization");
  const auto gamma = chebyshev_of_g(g, best);
  std::vector<double> d(gamma.size(), 0.0);
  for (std::size_t k = 1; k < gamma.size(); ++k) d[k] = gamma[k] / (2.0 * std::numbers::pi * best);
  auto model = build_model(best, std::move(d), grid);
  model.field = field;
  return model;
}

double self_consistency_residual(const DensityModel& dm, const EffectiveField& field, double interior, int points) {
  const double a = dm.a;
  const double edge = interior * a;
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double eps = -edge + 2.0 * edge * i / (points - 1);
    const double r0 = dm(eps);
    auto f = [&](double t) { return t == eps ? 0.0 : (dm(t) - r0) / (eps - t); };
    const auto left = quad::integrate(f, -a, eps, 1e-11, 1e-13, 2000);
    const auto right = quad::integrate(f, eps, a, 1e-11, 1e-13, 2000);
    const double pv = left.value + right.value + r0 * std::log((a + eps) / (a - eps));
    worst = std::max(worst, std::abs(eps - field(eps) - 2.0 * pv));
  }
  return worst;
}

DensityModel iterate_density(const AngularMomentTable& table, Index n, Index n_q, const IterateOptions& options) {
  if (options.max_iters < 1) throw InvalidArgument("iterate_density: max_iters must be positive");
  if (!(options.mixing > 0.0 && options.mixing <= 1.0)) throw InvalidArgument("iterate_density: mixing in (0, 1]");
  GridOptions grid = options.grid;
  grid.n_moments = std::max(grid.n_moments, options.n_max);
  DensityModel current = semicircle(grid);
  std::vector<double> c_prev(static_cast<std::size_t>(options.n_max), 0.0);
  std::vector<double> trace;
  for (int it = 1; it <= options.max_iters; ++it) {
    EffectiveField field = effective_field(current, table, n, n_q, options.n_max);
    for (std::size_t j = 0; j < field.c.size(); ++j)
      field.c[j] = options.mixing * field.c[j] + (1.0 - options.mixing) * c_prev[j];
    c_prev = field.c;
    DensityModel next = solve_density(field, grid);
    const double change = l1_distance(next, current);
    trace.push_back(change);
    current = std::move(next);
    if (change < options.tol) {
      current.iterations = it;
      current.converged = true;
      current.trace = trace;
      // The warning refers to the undamped field at the fixed point.
      const auto undamped = effective_field(current, table, n, n_q, options.n_max);
      current.field.decreasing = undamped.decreasing;
      current.field.warning = undamped.warning;
      current.residual = self_consistency_residual(current, current.field);
      return current;
    }
  }
  std::ostringstream t;
  for (std::size_t i = 0; i < trace.size(); ++i) t << (i ? " " : "") << trace[i];
  std::ostringstream os;
  os << "iterate_density: no convergence to " << options.tol << " in " << options.max_iters << " iterations";
  throw DivergenceError(os.str(), t.str());
}

double l1_distance(const DensityModel& a, const DensityModel& b) {
  std::vector<double> cuts{-a.a, a.a, -b.a, b.a, 0.0};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i)
    total += quad::integrate([&](double e) { return std::abs(a(e) - b(e)); }, cuts[i - 1], cuts[i], 1e-10, 1e-14,
                             4000)
                 .value;
  return total;
}

double sup_distance(const DensityModel& a, const DensityModel& b, Index points) {
  const double r = std::max(a.a, b.a);
  double worst = 0.0;
  for (Index i = 0; i < points; ++i) {
    const double e = -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(points - 1);
    worst = std::max(worst, std::abs(a(e) - b(e)));
  }
  return worst;
}

double l1_to_empirical(const DensityModel& dm, const std::vector<Eigen::VectorXd>& spectra, double lambda, int bins,
                       double range) {
  if (spectra.empty() || bins < 1) throw InvalidArgument("l1_to_empirical: need spectra and bins");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  double total = 0.0, outside = 0.0;
  const double width = 2.0 * range / bins;
  for (const auto& s : spectra)
    for (Index i = 0; i < s.size(); ++i) {
      const double e = s[i] / lambda;
      total += 1.0;
      const auto b = static_cast<long>(std::floor((e + range) / width));
      if (b < 0 || b >= bins)
        outside += 1.0;
      else
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
  double l1 = outside / total;
  for (int b = 0; b < bins; ++b) {
    const double lo = -range + b * width;
    const double model =
        quad::integrate([&](double e) { return dm(e); }, lo, lo + width, 1e-10, 1e-14, 200).value / width;
    l1 += std::abs(counts[static_cast<std::size_t>(b)] / (total * width) - model) * width;
  }
  return l1;
}

}  // namespace cgue
