#include "cgue/constraining_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "cgue/errors.hpp"
#include "cgue/haar.hpp"
#include "cgue/quadrature.hpp"
#include "cgue/random.hpp"

namespace cgue {

using cplx = std::complex<double>;

std::string to_string(FPRoute r) {
  switch (r) {
    case FPRoute::determinant: return "determinant";
    case FPRoute::haar_mc: return "haar-mc";
    case FPRoute::moment_expansion: return "moment-expansion";
  }
  return "determinant";
}

Eigen::VectorXd reference_spectrum(Index n, double lambda) {
  if (n < 2) throw InvalidArgument("reference_spectrum: need N >= 2");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  x[0] = -lambda;
  x[1] = lambda;
  return x;
}

// ---------------------------------------------------------------- determinant

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

cplx ipow(int n) {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((n % 4) + 4) % 4];
}

// Value and derivative order within its coincidence cluster, per index of an
// ascending vector; plus the confluent Vandermonde prod (xi_b - xi_a)^(k_a k_b).
struct Confluent {
  std::vector<int> order;
  double vandermonde = 1.0;
  bool all_equal = false;
};

Confluent confluent_structure(const Eigen::VectorXd& v, double tol) {
  Confluent c;
  const Index n = v.size();
  c.order.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> value;
  std::vector<int> size;
  for (Index i = 0; i < n; ++i) {
    if (i > 0 && v[i] - v[i - 1] <= tol) {
      c.order[static_cast<std::size_t>(i)] = c.order[static_cast<std::size_t>(i - 1)] + 1;
      ++size.back();
    } else {
      value.push_back(v[i]);
      size.push_back(1);
    }
  }
  // Cluster representative: first member (exact for true coincidences).
  for (std::size_t a = 0; a < value.size(); ++a)
    for (std::size_t b = a + 1; b < value.size(); ++b)
      c.vandermonde *= std::pow(value[b] - value[a], size[a] * size[b]);
  c.all_equal = value.size() == 1 && n > 1;
  return c;
}

// Finite part of int_0^inf r^a exp(i r c) dr.
cplx radial_integral(int a, double c) {
  if (a >= 0) {
    if (c == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    return factorial(a) * std::pow(cplx(0.0, 1.0 / c), a + 1);
  }
  const int m = -a - 1;
  if (c == 0.0) return m > 0 ? cplx(0.0) : cplx(std::numeric_limits<double>::infinity(), 0.0);
  double harmonic = 0.0;
  for (int j = 1; j <= m; ++j) harmonic += 1.0 / j;
  const cplx log_mic(std::log(std::abs(c)), -0.5 * std::numbers::pi * (c > 0 ? 1.0 : -1.0));
  const cplx mic_pow = std::pow(cplx(0.0, -c), m);
  const double sign = (m % 2) ? -1.0 : 1.0;
  return sign / factorial(m) * mic_pow * (cplx(-kEulerGamma + harmonic) - log_mic);
}

struct DeterminantSetup {
  Index n = 0;
  Index n_q = 0;
  int beta = 0;  // N_Q - 1 - N(N-1)/2
  int big_d = 0;
  Eigen::VectorXd x;  // ascending
  Confluent xs;
  std::vector<std::vector<int>> perms;
  std::vector<int> signs;
  double coincidence_tol = 1e-7;
};

// R(Omega) / (Delta(x) Delta(b(Omega))) for unit direction omega.
cplx angular_integrand(const DeterminantSetup& s, const ConstraintSet& cs, const Eigen::VectorXd& omega) {
  const Eigen::VectorXd b = eigenvalues(cs.combination(omega));
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  const Confluent bs = confluent_structure(b, s.coincidence_tol * scale);
  const auto n = static_cast<std::size_t>(s.n);
  const int max_pow = 2 * static_cast<int>(n) * static_cast<int>(n);

  // Entry (mu, nu): exp(i r x_mu b_nu) * sum_p coef[p] r^p.
  std::vector<std::vector<std::vector<std::pair<int, cplx>>>> entry(n, std::vector<std::vector<std::pair<int, cplx>>>(n));
  for (std::size_t mu = 0; mu < n; ++mu) {
    const int k = s.xs.order[mu];
    for (std::size_t nu = 0; nu < n; ++nu) {
      const int l = bs.order[nu];
      const double xv = s.x[static_cast<Index>(mu)], bv = b[static_cast<Index>(nu)];
      for (int j = 0; j <= std::min(k, l); ++j) {
        const cplx coef = binom(k, j) * ipow(l) * (factorial(l) / factorial(l - j)) * std::pow(xv, l - j) *
                          std::pow(cplx(0.0, bv), k - j) / (factorial(k) * factorial(l));
        entry[mu][nu].push_back({l + k - j, coef});
      }
    }
  }

  cplx total = 0.0;
  std::vector<cplx> poly(static_cast<std::size_t>(max_pow) + 1), next(poly.size());
  for (std::size_t p = 0; p < s.perms.size(); ++p) {
    const auto& perm = s.perms[p];
    std::fill(poly.begin(), poly.end(), cplx(0.0));
    poly[0] = 1.0;
    int degree = 0;
    double phase = 0.0;
    for (std::size_t mu = 0; mu < n; ++mu) {
      const auto nu = static_cast<std::size_t>(perm[mu]);
      phase += s.x[static_cast<Index>(mu)] * b[static_cast<Index>(nu)];
      std::fill(next.begin(), next.end(), cplx(0.0));
      int next_degree = 0;
      for (const auto& [pw, coef] : entry[mu][nu]) {
        for (int d = 0; d <= degree; ++d) next[static_cast<std::size_t>(d + pw)] += poly[static_cast<std::size_t>(d)] * coef;
        next_degree = std::max(next_degree, degree + pw);
      }
      std::swap(poly, next);
      degree = next_degree;
    }
    cplx term = 0.0;
    for (int d = 0; d <= degree; ++d)
      if (poly[static_cast<std::size_t>(d)] != cplx(0.0))
        term += poly[static_cast<std::size_t>(d)] * radial_integral(s.beta + d, phase);
    total += static_cast<double>(s.signs[p]) * term;
  }
  return total / (s.xs.vandermonde * bs.vandermonde);
}

DeterminantSetup make_setup(const Eigen::VectorXd& x, const ConstraintSet& cs, const DeterminantOptions& o) {
  const Index n = x.size();
  if (n != cs.dim()) throw InvalidArgument("fp_determinant: spectrum length differs from N");
  if (n > 6 || cs.n_q() > 3) {
    std::ostringstream os;
    os << "fp_determinant: N = " << n << ", N_Q = " << cs.n_q() << " exceeds the guard N <= 6, N_Q <= 3";
    throw CapacityError(os.str());
  }
  if (n < 2) throw InvalidArgument("fp_determinant: need N >= 2");
  if (!cs.traceless()) throw InvalidArgument("fp_determinant: constraints must be traceless");
  DeterminantSetup s;
  s.n = n;
  s.n_q = cs.n_q();
  s.big_d = static_cast<int>(n * (n - 1) / 2);
  s.beta = static_cast<int>(s.n_q) - 1 - s.big_d;
  s.x = x;
  std::sort(s.x.data(), s.x.data() + n);
  s.coincidence_tol = o.coincidence_tol;
  const double spread = s.x[n - 1] - s.x[0];
  const double xscale = std::max(s.x.cwiseAbs().maxCoeff(), 1e-300);
  s.xs = confluent_structure(s.x, o.coincidence_tol * xscale);
  if (spread == 0.0) s.xs.all_equal = true;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = i + 1; j < perm.size(); ++j) inversions += perm[i] > perm[j];
    s.perms.push_back(perm);
    s.signs.push_back(inversions % 2 ? -1 : 1);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return s;
}

[[noreturn]] void throw_divergent(const DeterminantSetup& s, const std::string& detail) {
  std::ostringstream os;
  os << "fp_determinant: the s-integral does not converge (" << detail
     << "); convergence requires N_Q < N_Q^crit, here N = " << s.n << ", N_Q = " << s.n_q;
  std::ostringstream trace;
  trace << "N=" << s.n << " N_Q=" << s.n_q << " radial exponent=" << s.beta;
  throw DivergenceError(os.str(), trace.str());
}

}  // namespace

double fp_determinant_absolute(const Eigen::VectorXd& x, const ConstraintSet& cs, const DeterminantOptions& o) {
  if (cs.n_q() == 0) return 1.0;
  const auto s = make_setup(x, cs, o);
  if (s.xs.all_equal) return std::numeric_limits<double>::infinity();

  const cplx rotate = ipow(-s.big_d);
  auto real_part = [&](const Eigen::VectorXd& omega) { return (rotate * angular_integrand(s, cs, omega)).real(); };

  double angular = 0.0;
  bool converged = true;
  if (s.n_q == 1) {
    Eigen::VectorXd w(1);
    w[0] = 1.0;
    angular = real_part(w);
    w[0] = -1.0;
    angular += real_part(w);
  } else if (s.n_q == 2) {
    auto f = [&](double theta) {
      Eigen::VectorXd w(2);
      w << std::cos(theta), std::sin(theta);
      return real_part(w);
    };
    const auto r = quad::integrate(f, 0.0, 2.0 * std::numbers::pi, o.rel_tol, 1e-14, o.max_segments);
    angular = r.value;
    converged = r.converged;
  } else {
    auto outer = [&](double theta) {
      auto inner = [&](double phi) {
        Eigen::VectorXd w(3);
        w << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
        return real_part(w);
      };
      const auto r = quad::integrate(inner, 0.0, 2.0 * std::numbers::pi, o.rel_tol, 1e-14, o.max_segments);
      if (!r.converged) converged = false;
      return std::sin(theta) * r.value;
    };
    const auto r = quad::integrate(outer, 0.0, std::numbers::pi, o.rel_tol, 1e-14, o.max_segments);
    angular = r.value;
    converged = converged && r.converged;
  }
  if (!std::isfinite(angular)) throw_divergent(s, "non-finite angular integrand");
  if (!converged) throw_divergent(s, "angular quadrature did not reach tolerance");

  double c_n = 1.0;
  for (Index p = 1; p < s.n; ++p) c_n *= factorial(static_cast<int>(p));
  const double pref =
      std::pow(o.lambda * o.lambda / (2.0 * std::numbers::pi * static_cast<double>(s.n)), 0.5 * static_cast<double>(s.n_q));
  // Rounding can leave a tiny negative value where F vanishes identically.
  return std::max(0.0, pref * c_n * angular);
}

FPValue fp_determinant(const Eigen::VectorXd& x, const ConstraintSet& cs, const DeterminantOptions& o) {
  FPValue out;
  out.route = FPRoute::determinant;
  out.x_ref = reference_spectrum(x.size(), o.lambda);
  out.absolute = fp_determinant_absolute(x, cs, o);
  out.singular = std::isinf(out.absolute);
  out.reference = fp_determinant_absolute(out.x_ref, cs, o);
  if (out.reference > 0.0 && std::isfinite(out.reference)) {
    out.value = out.absolute / out.reference;
  } else {
    out.value = out.absolute;
    out.normalized = false;
  }
  return out;
}

// ---------------------------------------------------------------- Haar MC

namespace {

struct McSums {
  double n = 0, wx = 0, wx2 = 0, wr = 0, wr2 = 0, wxr = 0;
  void merge(const McSums& o) {
    n += o.n;
    wx += o.wx;
    wx2 += o.wx2;
    wr += o.wr;
    wr2 += o.wr2;
    wxr += o.wxr;
  }
};

}  // namespace

FPValue fp_haar_mc(const Eigen::VectorXd& x, const ConstraintSet& cs, const HaarMcOptions& o) {
  const Index n = x.size();
  if (n != cs.dim()) throw InvalidArgument("fp_haar_mc: spectrum length differs from N");
  if (!(o.sigma > 0.0)) throw InvalidArgument("fp_haar_mc: sigma must be positive");
  if (o.samples < 1 || o.chunk < 1) throw InvalidArgument("fp_haar_mc: need positive sample and chunk counts");
  FPValue out;
  out.route = FPRoute::haar_mc;
  out.x_ref = reference_spectrum(n, o.lambda);
  if (cs.n_q() == 0) {
    out.value = out.absolute = out.reference = 1.0;
    out.error = 0.0;
    out.effective_samples = static_cast<double>(o.samples);
    return out;
  }
  if (cs.n_q() > kHaarMcMaxConstraints) {
    std::ostringstream os;
    os << "fp_haar_mc: N_Q = " << cs.n_q() << " exceeds the guard " << kHaarMcMaxConstraints;
    throw CapacityError(os.str());
  }
  std::vector<ComplexMatrix> bq;
  for (const auto& b : cs.constraints()) bq.push_back(b.dense());
  const double scale = std::sqrt(static_cast<double>(n) / (2.0 * std::numbers::pi * o.lambda * o.lambda));
  const double norm = 1.0 / (o.sigma * std::sqrt(2.0 * std::numbers::pi));
  const Index chunks = (o.samples + o.chunk - 1) / o.chunk;
  std::vector<McSums> partial(static_cast<std::size_t>(chunks));

  parallel_for(chunks, o.threads, [&](std::int64_t c) {
    auto engine = make_engine(o.seed, static_cast<std::uint64_t>(c), domain::haar);
    McSums acc;
    const Index count = std::min(o.chunk, o.samples - c * o.chunk);
    for (Index i = 0; i < count; ++i) {
      const ComplexMatrix u = haar_unitary(n, engine);
      double wx = 1.0, wr = 1.0;
      for (const auto& b : bq) {
        // <B|U x U^dagger> = sum_mu x_mu (U^dagger B U)_{mu mu}
        const Eigen::VectorXd diag = u.conjugate().cwiseProduct(b * u).colwise().sum().real().transpose();
        const double yx = scale * x.dot(diag);
        const double yr = scale * out.x_ref.dot(diag);
        wx *= norm * std::exp(-yx * yx / (2.0 * o.sigma * o.sigma));
        wr *= norm * std::exp(-yr * yr / (2.0 * o.sigma * o.sigma));
      }
      acc.n += 1;
      acc.wx += wx;
      acc.wx2 += wx * wx;
      acc.wr += wr;
      acc.wr2 += wr * wr;
      acc.wxr += wx * wr;
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });
  McSums t;
  for (const auto& p : partial) t.merge(p);

  const double mx = t.wx / t.n, mr = t.wr / t.n;
  const double vx = std::max(0.0, t.wx2 / t.n - mx * mx);
  const double vr = std::max(0.0, t.wr2 / t.n - mr * mr);
  const double cxr = t.wxr / t.n - mx * mr;
  out.absolute = mx;
  out.reference = mr;
  out.effective_samples = std::min(t.wx2 > 0 ? t.wx * t.wx / t.wx2 : 0.0, t.wr2 > 0 ? t.wr * t.wr / t.wr2 : 0.0);
  out.unreliable = out.effective_samples < 100.0;
  if (mr > 0.0) {
    out.value = mx / mr;
    const double var = (vx / (mr * mr) + mx * mx * vr / (mr * mr * mr * mr) - 2.0 * mx * cxr / (mr * mr * mr)) / t.n;
    out.error = std::sqrt(std::max(0.0, var));
  } else {
    out.value = mx;
    out.normalized = false;
    out.error = std::sqrt(vx / t.n);
  }
  return out;
}

FPValue fp_haar_mc_extrapolated(const Eigen::VectorXd& x, const ConstraintSet& cs, HaarMcOptions o,
                                const std::vector<double>& sigmas) {
  if (sigmas.size() < 2) throw InvalidArgument("fp_haar_mc_extrapolated: need at least two widths");
  const std::uint64_t base = o.seed;
  std::vector<FPValue> runs;
  for (std::size_t j = 0; j < sigmas.size(); ++j) {
    o.sigma = sigmas[j];
    o.seed = stream_key(base, j, domain::haar);
    runs.push_back(fp_haar_mc(x, cs, o));
  }
  if (cs.n_q() == 0) return runs.front();

  // Weighted least squares value = A + B sigma^2; returns (A, se(A)).
  auto fit = [&](auto value_of, auto error_of) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < runs.size(); ++j) {
      const double e = error_of(runs[j]);
      const double w = e > 0.0 ? 1.0 / (e * e) : 1.0;
      const double s2 = sigmas[j] * sigmas[j];
      m(0, 0) += w;
      m(0, 1) += w * s2;
      m(1, 1) += w * s2 * s2;
      rhs[0] += w * value_of(runs[j]);
      rhs[1] += w * s2 * value_of(runs[j]);
    }
    m(1, 0) = m(0, 1);
    const Eigen::Matrix2d cov = m.inverse();
    return std::pair<double, double>{(cov * rhs)[0], std::sqrt(std::max(0.0, cov(0, 0)))};
  };
  FPValue out = runs.back();
  const auto [ratio, ratio_se] = fit([](const FPValue& v) { return v.value; },
                                     [](const FPValue& v) { return v.error.value_or(0.0); });
  const auto [abs_value, abs_se] = fit([](const FPValue& v) { return v.absolute; },
                                       [](const FPValue& v) { return v.error.value_or(0.0) * v.reference; });
  (void)abs_se;
  out.value = std::max(0.0, ratio);
  out.error = ratio_se;
  out.absolute = std::max(0.0, abs_value);
  out.unreliable = false;
  out.effective_samples = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    out.unreliable = out.unreliable || r.unreliable;
    out.effective_samples = std::min(out.effective_samples, r.effective_samples);
  }
  return out;
}

// ---------------------------------------------------------------- regularization

double tilde_factor(const Eigen::VectorXd& x, Index n_q, double lambda) {
  if (n_q == 0) return 1.0;
  const double n = static_cast<double>(x.size());
  const double centered = (x.array() - x.mean()).square().sum();
  return std::pow(centered / (n * lambda * lambda), 0.5 * static_cast<double>(n_q));
}

FPValue tilde_regularize(const FPValue& fp, const Eigen::VectorXd& x, Index n_q, double lambda) {
  FPValue out = fp;
  out.regularized = true;
  const double fx = tilde_factor(x, n_q, lambda);
  const double fr = fp.x_ref.size() == x.size() ? tilde_factor(fp.x_ref, n_q, lambda) : 1.0;
  // F~ is homogeneous of degree 0; at H~ = 0 the vanishing factor absorbs the
  // singularity and the value is reported as 0 with the singular flag kept.
  out.absolute = fp.singular ? 0.0 : fp.absolute * fx;
  out.reference = fp.reference * fr;
  if (fp.normalized && out.reference > 0.0) {
    out.value = out.absolute / out.reference;
    if (fp.error) out.error = *fp.error * (fr > 0.0 ? fx / fr : 0.0);
  } else {
    out.value = out.absolute;
    if (fp.error) out.error = *fp.error * fx;
  }
  if (!std::isfinite(out.value)) out.value = 0.0;
  return out;
}

// ---------------------------------------------------------------- moments

AngularMomentTable angular_moments(const ConstraintSet& cs, int n_max, Index mc_samples, std::uint64_t seed,
                                   int threads) {
  if (cs.n_q() < 1) throw InvalidArgument("angular_moments: need at least one constraint");
  if (n_max < 2) throw InvalidArgument("angular_moments: n_max must be >= 2");
  AngularMomentTable t;
  t.n_max = n_max;
  t.moments.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  t.errors.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  t.moments[0] = static_cast<double>(cs.dim());

  auto powers = [&](const Eigen::VectorXd& b) {
    std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
    Eigen::ArrayXd bn = Eigen::ArrayXd::Ones(b.size());
    for (int k = 0; k <= n_max; ++k) {
      p[static_cast<std::size_t>(k)] = bn.sum();
      bn *= b.array();
    }
    return p;
  };

  if (cs.n_q() == 1) {
    const auto p = powers(eigenvalues(cs.constraint(0)));
    for (int k = 1; k <= n_max; ++k) {
      t.max_abs_sampled = std::max(t.max_abs_sampled, std::abs(p[static_cast<std::size_t>(k)]));
      if (k % 2 == 0) t.moments[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)];
    }
  } else {
    if (mc_samples < 2) throw InvalidArgument("angular_moments: need at least two samples");
    std::vector<std::vector<double>> per(static_cast<std::size_t>(mc_samples));
    parallel_for(mc_samples, threads, [&](std::int64_t i) {
      auto engine = make_engine(seed, static_cast<std::uint64_t>(i), domain::moments);
      std::normal_distribution<double> normal;
      Eigen::VectorXd w(cs.n_q());
      for (Index q = 0; q < w.size(); ++q) w[q] = normal(engine);
      w.normalize();
      per[static_cast<std::size_t>(i)] = powers(eigenvalues(cs.combination(w)));
    });
    for (int k = 1; k <= n_max; ++k) {
      double sum = 0.0, sum2 = 0.0;
      for (const auto& p : per) {
        const double v = p[static_cast<std::size_t>(k)];
        t.max_abs_sampled = std::max(t.max_abs_sampled, std::abs(v));
        sum += v;
        sum2 += v * v;
      }
      if (k % 2 == 1) continue;
      const double m = static_cast<double>(mc_samples);
      t.moments[static_cast<std::size_t>(k)] = sum / m;
      t.errors[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, sum2 / m - (sum / m) * (sum / m)) / m);
    }
    t.samples = mc_samples;
  }
  t.moments[2] = 1.0;
  t.errors[2] = 0.0;
  return t;
}

std::complex<double> log_haar_integral_expansion(const std::vector<double>& h_moments,
                                                 const std::vector<double>& b_moments, Index n, int n_max) {
  if (n_max < 2) throw InvalidArgument("log_haar_integral_expansion: n_max must be >= 2");
  if (static_cast<int>(h_moments.size()) <= n_max || static_cast<int>(b_moments.size()) <= n_max)
    throw InvalidArgument("log_haar_integral_expansion: moment tables shorter than n_max");
  cplx sum = 0.0;
  for (int k = 2; k <= n_max; ++k) {
    const double coeff = 1.0 / (k * std::pow(static_cast<double>(n), k - 1));
    sum += coeff * ipow(k) * h_moments[static_cast<std::size_t>(k)] * b_moments[static_cast<std::size_t>(k)];
  }
  return sum;
}

std::vector<double> normalized_trace_moments(const Eigen::VectorXd& x, int n_max, double lambda, bool center) {
  const double mean = center ? x.mean() : 0.0;
  const Eigen::ArrayXd e = (x.array() - mean) / lambda;
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  Eigen::ArrayXd p = Eigen::ArrayXd::Ones(e.size());
  for (int k = 0; k <= n_max; ++k) {
    out[static_cast<std::size_t>(k)] = p.mean();
    p *= e;
  }
  return out;
}

std::vector<double> trace_powers(const Eigen::VectorXd& b, int n_max) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  Eigen::ArrayXd p = Eigen::ArrayXd::Ones(b.size());
  for (int k = 0; k <= n_max; ++k) {
    out[static_cast<std::size_t>(k)] = p.sum();
    p *= b.array();
  }
  return out;
}

ExpansionCheck validate_expansion(const Eigen::VectorXd& h, const Eigen::VectorXd& b, double lambda, int n_max,
                                  Index samples, std::uint64_t seed, int threads) {
  const Index n = h.size();
  if (b.size() != n) throw InvalidArgument("validate_expansion: spectra of different lengths");
  if (samples < 2) throw InvalidArgument("validate_expansion: need at least two samples");
  const Eigen::VectorXd ht = (h.array() - h.mean()) / lambda;
  const double bmax = b.cwiseAbs().maxCoeff();
  std::vector<Index> active;
  for (Index nu = 0; nu < n; ++nu)
    if (std::abs(b[nu]) > 1e-14 * bmax) active.push_back(nu);
  const auto k = static_cast<Index>(active.size());

  // Unitary invariance: <U B U^dagger | H~> = sum_nu b_nu sum_mu h_mu |U_{mu nu}|^2
  // with both in their eigenbases; only the columns with b_nu != 0 are needed.
  constexpr Index kChunk = 1000;
  const Index chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::array<double, 5>> partial(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    auto engine = make_engine(seed, static_cast<std::uint64_t>(c), domain::haar);
    std::array<double, 5> acc{};
    const Index count = std::min(kChunk, samples - c * kChunk);
    for (Index i = 0; i < count; ++i) {
      double phase = 0.0;
      if (k > 0) {
        const ComplexMatrix u = haar_columns(n, k, engine);
        for (Index j = 0; j < k; ++j) phase += b[active[static_cast<std::size_t>(j)]] * (u.col(j).cwiseAbs2().dot(ht));
      }
      const double re = std::cos(phase), im = std::sin(phase);
      acc[0] += 1;
      acc[1] += re;
      acc[2] += re * re;
      acc[3] += im;
      acc[4] += im * im;
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });
  std::array<double, 5> t{};
  for (const auto& p : partial)
    for (int j = 0; j < 5; ++j) t[static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(j)];

  ExpansionCheck out;
  out.samples = samples;
  const double m = t[0];
  out.lhs = {t[1] / m, t[3] / m};
  const double var = (t[2] / m - std::norm(out.lhs.real())) + (t[4] / m - std::norm(out.lhs.imag()));
  out.lhs_error = std::sqrt(std::max(0.0, var) / m);
  const auto hm = normalized_trace_moments(h, n_max, lambda, true);
  const auto bm = trace_powers(b, n_max);
  out.rhs = std::exp(log_haar_integral_expansion(hm, bm, n, n_max));
  out.relative_error = std::abs(out.lhs - out.rhs) / std::abs(out.rhs);
  return out;
}

}  // namespace cgue
