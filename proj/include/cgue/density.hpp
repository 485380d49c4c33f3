#pragma once

// Large-N level density of the constrained ensemble in units eps = x / lambda.
//
// The saddle-point condition is solved in its continuum form
//
//   g(eps) = 2 P int rho(eps') / (eps - eps') d eps',   g(eps) = eps - f(eps),
//
// with f the odd polynomial field from the constraints. On the support
// [-a, a] the soft-edge solution is
//
//   rho(eps) = sum_n d_n sqrt(a^2 - eps^2) U_{n-1}(eps / a),  d_n = gamma_n / (2 pi a),
//
// where gamma_n are the Chebyshev-T coefficients of g(a t), and a solves
// a gamma_1(a) / 4 = 1.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgue/constraining_function.hpp"
#include "cgue/hermitian.hpp"

namespace cgue {

/// Odd polynomial f(eps) = sum_j c[j] eps^(2j+1).
struct EffectiveField {
  std::vector<double> c;
  bool decreasing = true;  ///< |c_{2j+1}| < |c_{2j-1}| for all j
  std::string warning;
  double operator()(double eps) const;
  bool zero() const;
};

struct DensityModel {
  Eigen::VectorXd grid;  ///< symmetric, ascending, spans [-a, a]
  Eigen::VectorXd rho;
  double a = 2.0;
  std::vector<double> moments;       ///< index n: <eps^(2n)> by trapezoid on the grid
  std::vector<double> coefficients;  ///< d_1, d_2, ... (index 0 unused)
  int iterations = 0;
  bool converged = true;
  double residual = -1.0;      ///< interior sup-norm, negative if not computed
  std::vector<double> trace;  ///< L1 change per iteration
  EffectiveField field;       ///< field the density solves for

  /// Closed-form evaluation from the coefficients; 0 off the support.
  double operator()(double eps) const;
  double moment(int n) const { return moments.at(static_cast<std::size_t>(n)); }
  /// Trapezoid integral of rho over the grid.
  double norm() const;
};

struct GridOptions {
  Index points = 2001;  ///< odd, so eps = 0 is a node
  int n_moments = 3;
};

/// rho = sqrt(4 - eps^2) / (2 pi).
DensityModel semicircle(const GridOptions& grid = {});

/// Field from the moments of dm and the angular moment table:
///   c_1 = N_Q / (N^2 <eps^2>) - M_2 <u> / N^3,
///   c_{2n-1} += (-1)^n M_{2n} <u^n> / N^(2n+1),
/// with <u^n> the moments of u = r^2 under the radial weight
///   r^(N_Q-1) exp(sum_n (-1)^n <eps^2n> M_{2n} r^(2n) / (2n N^(2n-1))).
/// Throws DivergenceError when the leading exponent is non-negative
/// (even n_max), InvalidArgument outside n_max >= 1 or N_Q >= N(N-1)/2.
EffectiveField effective_field(const DensityModel& dm, const AngularMomentTable& table, Index n, Index n_q,
                               int n_max);

/// Radial moments <u^k>, k = 0..k_max, for the exponent coefficients s[n]
/// (index n multiplies u^n; s[0] unused).
std::vector<double> radial_moments(const std::vector<double>& s, Index n_q, int k_max);

/// Soft-edge solution for g(eps) = eps - field(eps). Throws NumericFailure
/// (infeasible) if no support exists or rho < 0 somewhere.
DensityModel solve_density(const EffectiveField& field, const GridOptions& grid = {});

/// Sup-norm of g(eps) - 2 P int rho / (eps - eps') over the inner `interior`
/// fraction of the support, by direct singularity-subtracted quadrature.
double self_consistency_residual(const DensityModel& dm, const EffectiveField& field, double interior = 0.9,
                                 int points = 41);

struct IterateOptions {
  int n_max = 3;
  double tol = 1e-8;
  int max_iters = 200;
  double mixing = 0.5;
  GridOptions grid;
};

/// Damped fixed point from the semicircle. Throws DivergenceError with the
/// L1 trace if it does not converge.
DensityModel iterate_density(const AngularMomentTable& table, Index n, Index n_q, const IterateOptions& options = {});

/// int |rho_1 - rho_2| by adaptive quadrature of the closed forms.
double l1_distance(const DensityModel& a, const DensityModel& b);
double sup_distance(const DensityModel& a, const DensityModel& b, Index points = 4001);

/// L1 between the pooled eigenvalues (scaled by 1/lambda) and the model:
/// histogram over [-range, range] normalized by the total count, compared
/// with bin averages of the model.
double l1_to_empirical(const DensityModel& dm, const std::vector<Eigen::VectorXd>& spectra, double lambda = 1.0,
                       int bins = 60, double range = 2.5);

}  // namespace cgue
