#pragma once

// Samplers for GUE, constrained (CGUE), deformed, banded and EGUE(k)
// ensembles. Every draw is a pure function of (spec, sample_index).
//
// Constrained sampling draws H from the Gaussian measure restricted to the
// P-span. Integrating that non-invariant measure over eigenvectors gives the
// GUE eigenvalue weight times the Haar average of the constraint deltas,
// which is the constrained eigenvalue density. So the eigenvalues are exact
// CGUE draws, and the unitary average never has to be sampled.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgue/basis.hpp"
#include "cgue/hermitian.hpp"

namespace cgue {

enum class EnsembleKind { gue, constrained, deformed, banded, egue };

std::string to_string(EnsembleKind k);
EnsembleKind ensemble_kind_from_string(const std::string& s);

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gue;
  Index dim = 0;                 ///< gue, constrained, deformed, banded
  int l = 0, m = 0, k = 0;       ///< egue
  double lambda = 1.0;
  ConstraintSet constraints;     ///< constrained, deformed
  double epsilon = 0.0;          ///< deformed
  Index bandwidth = 0;           ///< banded
  std::uint64_t seed = 0;
  /// Constrained only: resample the radius of the traceless part so the
  /// eigenvalues follow the regularized weight GUE * F~_P instead of GUE * F_P.
  bool regularized = false;

  /// Hilbert-space dimension N of the sampled matrices.
  Index hilbert_dim() const;
  /// Throws InvalidArgument / CapacityError when the fields are unusable.
  void validate() const;
};

struct SpectrumSample {
  Eigen::VectorXd eigenvalues;  // ascending
  std::shared_ptr<const EnsembleSpec> spec;
  Index sample_index = 0;
};

/// Standard-basis coordinates, iid Normal(0, lambda^2 / N), for one draw.
Eigen::VectorXd gaussian_coordinates(Index n, double lambda, std::uint64_t seed, Index sample_index);

HermitianMatrix sample_gue(const EnsembleSpec& spec, Index sample_index);
HermitianMatrix sample_constrained_matrix(const EnsembleSpec& spec, Index sample_index);
HermitianMatrix sample_deformed_matrix(const EnsembleSpec& spec, Index sample_index);
HermitianMatrix sample_banded_matrix(const EnsembleSpec& spec, Index sample_index);
/// GUE coefficients on the k-particle space, lifted to m particles (egue.hpp).
HermitianMatrix build_egue(const EnsembleSpec& spec, Index sample_index);

SpectrumSample sample_constrained_spectrum(const EnsembleSpec& spec, Index sample_index);
SpectrumSample sample_deformed(const EnsembleSpec& spec, Index sample_index);
SpectrumSample sample_banded(const EnsembleSpec& spec, Index sample_index);

/// Number of independent real parameters inside the band |mu - nu| <= b.
Index banded_parameter_count(Index n, Index bandwidth);
/// N^2 minus the in-band parameter count.
Index banded_constraint_count(Index n, Index bandwidth);

/// Matrix of any kind.
HermitianMatrix sample_matrix(const EnsembleSpec& spec, Index sample_index);
/// Spectrum of any kind.
SpectrumSample sample_spectrum(const EnsembleSpec& spec, Index sample_index);

/// Samples [first, first + count) on `threads` workers. Output order and
/// values do not depend on the worker count.
std::vector<SpectrumSample> sample_ensemble(const EnsembleSpec& spec, Index count, int threads = 1,
                                            Index first = 0);

}  // namespace cgue
