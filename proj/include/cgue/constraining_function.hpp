#pragma once

// The constraining function F_P(x): Haar average of the constraint deltas
// evaluated on a spectrum x.
//
//   F_P(x) = int d[U] prod_q delta( sqrt(N / (2 pi lambda^2)) <B_q|U x U^dagger> )
//          = (lambda^2 / (2 pi N))^(N_Q/2) int ds int d[U] exp(i <B(s)|U x U^dagger>)
//
// Two routes evaluate it at small N: the determinant (HCIZ) formula
// integrated over s, and Haar Monte Carlo with Gaussian-smoothed deltas.
// Both return the absolute value above and its ratio to x_ref.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgue/basis.hpp"

namespace cgue {

enum class FPRoute { determinant, haar_mc, moment_expansion };
std::string to_string(FPRoute r);

struct FPValue {
  double value = 0.0;             ///< F(x) / F(x_ref), or absolute if !normalized
  std::optional<double> error;  ///< standard error, haar-mc only
  FPRoute route = FPRoute::determinant;
  bool regularized = false;
  double absolute = 0.0;
  double reference = 0.0;  ///< F(x_ref)
  Eigen::VectorXd x_ref;
  bool normalized = true;
  bool singular = false;    ///< all x equal
  bool unreliable = false;  ///< effective sample size below 100
  double effective_samples = 0.0;
};

/// lambda * (-1, +1, 0, ..., 0).
Eigen::VectorXd reference_spectrum(Index n, double lambda = 1.0);

struct DeterminantOptions {
  double lambda = 1.0;
  double rel_tol = 1e-9;
  double coincidence_tol = 1e-7;  ///< relative; closer values are treated as confluent
  std::size_t max_segments = 4000;
};

/// Determinant route. Guards: N <= 6, N_Q <= 3 (CapacityError), traceless
/// constraints (InvalidArgument). The radial s-integral is done in closed form
/// (finite part of int r^a e^{irc} dr); the angular part by adaptive
/// Gauss-Kronrod. Coincident x or b(s) use the confluent (divided-difference)
/// limit of det / Vandermonde. Throws DivergenceError if the s-integral is
/// not finite.
FPValue fp_determinant(const Eigen::VectorXd& x, const ConstraintSet& cs, const DeterminantOptions& options = {});
/// Absolute F_P(x) only; +inf with all x equal.
double fp_determinant_absolute(const Eigen::VectorXd& x, const ConstraintSet& cs,
                               const DeterminantOptions& options = {});

struct HaarMcOptions {
  double lambda = 1.0;
  double sigma = 0.1;
  Index samples = 20000;
  std::uint64_t seed = 0;
  int threads = 1;
  Index chunk = 1000;  ///< samples per counter stream
};

inline constexpr Index kHaarMcMaxConstraints = 8;

/// Haar MC with delta(y) -> exp(-y^2 / 2 sigma^2) / (sigma sqrt(2 pi)).
/// x and x_ref share the unitary draws; the ratio stderr uses the delta method.
FPValue fp_haar_mc(const Eigen::VectorXd& x, const ConstraintSet& cs, const HaarMcOptions& options = {});

/// sigma -> 0 by weighted linear fit in sigma^2 of the ratio estimates at
/// each sigma (independent streams per sigma).
FPValue fp_haar_mc_extrapolated(const Eigen::VectorXd& x, const ConstraintSet& cs, HaarMcOptions options,
                                const std::vector<double>& sigmas = {0.2, 0.1, 0.05});

/// Multiplies by (<H~^2> / (N lambda^2))^(N_Q / 2), <H~^2> = sum (x - mean)^2.
FPValue tilde_regularize(const FPValue& fp, const Eigen::VectorXd& x, Index n_q, double lambda = 1.0);
double tilde_factor(const Eigen::VectorXd& x, Index n_q, double lambda = 1.0);

// ---------------------------------------------------------------- moments

struct AngularMomentTable {
  int n_max = 0;
  std::vector<double> moments;  ///< index n: sphere average of <B^n(Omega)>
  std::vector<double> errors;
  Index samples = 0;
  double max_abs_sampled = 0.0;  ///< largest |<B^n(Omega)>| seen
  double M(int n) const { return moments.at(static_cast<std::size_t>(n)); }
};

/// M_2 = 1 exactly; odd moments vanish by Omega -> -Omega. For N_Q = 1 the
/// sphere is two points and the even moments are exact.
AngularMomentTable angular_moments(const ConstraintSet& cs, int n_max, Index mc_samples, std::uint64_t seed,
                                   int threads = 1);

/// sum_{n=2}^{n_max} (1/n) (i^n / N^(n-1)) h_n b_n with
/// h_n = (1/N) <(H~/lambda)^n>, b_n = <B^n(t)> (index n of each vector).
std::complex<double> log_haar_integral_expansion(const std::vector<double>& h_moments,
                                                 const std::vector<double>& b_moments, Index n, int n_max);

/// (1/N) Tr (x / lambda)^n after centering, for n = 0..n_max.
std::vector<double> normalized_trace_moments(const Eigen::VectorXd& x, int n_max, double lambda = 1.0,
                                             bool center = true);
/// Tr b^n for n = 0..n_max.
std::vector<double> trace_powers(const Eigen::VectorXd& b, int n_max);

struct ExpansionCheck {
  std::complex<double> lhs;  ///< Haar MC of int d[U] exp(i <U B U^dagger | H~/lambda>)
  double lhs_error = 0.0;
  std::complex<double> rhs;  ///< exp of the truncated expansion
  double relative_error = 0.0;
  Index samples = 0;
};

/// h: eigenvalues of H~ (centered internally), b: eigenvalues of B(t).
ExpansionCheck validate_expansion(const Eigen::VectorXd& h, const Eigen::VectorXd& b, double lambda, int n_max,
                                  Index samples, std::uint64_t seed, int threads = 1);

}  // namespace cgue
