#pragma once

// Orthonormal Hermitian bases, constraint sets (the Q subspace and its
// complement P), the rotation that leaves at most one constraint with
// non-zero trace, and the critical constraint count.
//
// All subspaces are stored in standard-basis coordinates (see hermitian.hpp),
// where the trace scalar product is the Euclidean one.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgue/hermitian.hpp"

namespace cgue {

/// A sequence of Hermitian matrices, orthonormal under <A|B> = Tr(AB).
/// The standard basis is implicit; explicit bases hold one coordinate column
/// per element.
class BasisSet {
 public:
  static BasisSet standard(Index n);
  /// Explicit basis; throws if the matrices are not orthonormal within 1e-10.
  static BasisSet from_matrices(Index n, const std::vector<HermitianMatrix>& matrices);

  Index dim() const { return dim_; }
  Index size() const { return explicit_ ? columns_.cols() : dim_ * dim_; }
  bool complete() const { return size() == dim_ * dim_; }
  bool is_standard() const { return !explicit_; }

  HermitianMatrix operator[](Index alpha) const;

  /// h_alpha = <B_alpha|H>; throws InvalidArgument on an incomplete basis.
  Eigen::VectorXd expand(const HermitianMatrix& h) const;
  /// sum_alpha h_alpha B_alpha.
  HermitianMatrix reconstruct(const Eigen::VectorXd& coefficients) const;

  /// Gram matrix <B_a|B_b>.
  Eigen::MatrixXd gram() const;

 private:
  Index dim_ = 0;
  bool explicit_ = false;
  Eigen::MatrixXd columns_;
};

enum class ConstraintGenerator { none, random_traceless, random, explicit_set, band_complement, diagonal_p, reduced };

std::string to_string(ConstraintGenerator g);
ConstraintGenerator constraint_generator_from_string(const std::string& s);

/// The constraint subspace Q with N_Q orthonormal matrices B_q and its
/// orthogonal complement P (N_P = N^2 - N_Q). Immutable; copies share data.
///
/// Two storage forms:
///  - standard subset: Q is spanned by the standard-basis elements listed in
///    q_indices(); P by the remaining ones. Both sides are implicit, so sets
///    with N_Q close to N^2 are cheap.
///  - explicit: the N_Q constraint coordinate vectors are stored as columns.
class ConstraintSet {
 public:
  ConstraintSet() = default;

  static ConstraintSet none(Index n);
  static ConstraintSet from_standard_indices(Index n, std::vector<Index> q_indices, ConstraintGenerator generator);
  /// Columns must be orthonormal within 1e-10.
  static ConstraintSet from_columns(Index n, Eigen::MatrixXd q_columns, ConstraintGenerator generator,
                                    std::uint64_t seed = 0);
  static ConstraintSet from_matrices(Index n, const std::vector<HermitianMatrix>& matrices);

  Index dim() const { return dim_; }
  Index n_q() const;
  Index n_p() const { return dim_ * dim_ - n_q(); }
  ConstraintGenerator generator() const { return generator_; }
  std::uint64_t seed() const { return seed_; }
  bool is_standard_subset() const { return standard_subset_; }
  const std::vector<Index>& q_indices() const;

  HermitianMatrix constraint(Index q) const;
  std::vector<HermitianMatrix> constraints() const;
  /// N^2 x N_Q coordinate columns (materialized for standard subsets).
  Eigen::MatrixXd q_columns() const;
  /// Traces <B_q>.
  Eigen::VectorXd traces() const;
  /// All |<B_q>| below tol.
  bool traceless(double tol = 1e-10) const;

  /// Q and P projections of a coordinate vector.
  Eigen::VectorXd project_q(const Eigen::VectorXd& coords) const;
  Eigen::VectorXd project_p(const Eigen::VectorXd& coords) const;
  /// coords - (1 - keep) Q coords: keep = 0 gives the P projection, keep = 1
  /// leaves the vector untouched.
  Eigen::VectorXd scale_q(const Eigen::VectorXd& coords, double keep) const;
  /// Q-coefficients <B_q|H> of a coordinate vector.
  Eigen::VectorXd q_coefficients(const Eigen::VectorXd& coords) const;
  /// sum_q s_q B_q.
  HermitianMatrix combination(const Eigen::VectorXd& s) const;

  /// Same span with the basis of Q replaced by Q O^T for orthogonal O.
  ConstraintSet with_columns(Eigen::MatrixXd q_columns, ConstraintGenerator generator) const;

 private:
  Index dim_ = 0;
  ConstraintGenerator generator_ = ConstraintGenerator::none;
  std::uint64_t seed_ = 0;
  bool standard_subset_ = true;
  std::shared_ptr<const std::vector<Index>> q_indices_;
  std::shared_ptr<const std::vector<char>> in_q_;
  std::shared_ptr<const Eigen::MatrixXd> columns_;
};

/// Standard orthonormal basis for dimension n.
BasisSet standard_basis(Index n);

/// n_q orthonormal traceless constraints: Gaussian seeds projected off the
/// trace direction, then Gram-Schmidt with a second re-orthogonalization pass.
ConstraintSet random_traceless_constraints(Index n, Index n_q, std::uint64_t seed);
/// As above without the traceless projection.
ConstraintSet random_constraints(Index n, Index n_q, std::uint64_t seed);
/// Q = every off-diagonal coordinate, so P is the diagonal matrices (N_P = N).
ConstraintSet diagonal_p_constraints(Index n);
/// Q = coordinates outside the band |mu - nu| <= b.
ConstraintSet band_complement_constraints(Index n, Index bandwidth);

/// Orthonormalizes the columns of `block` in place against `against` and
/// against each other (blocked classical Gram-Schmidt, two passes).
void orthonormalize_columns(Eigen::MatrixXd& block, const Eigen::MatrixXd* against = nullptr);

struct TracelessReduction {
  ConstraintSet reduced;        ///< B~_q; only B~_1 may carry a trace
  double leading_trace = 0.0;   ///< <B~_1> >= 0
  double alpha_squared = 1.0;   ///< 1 - <B~_1>^2 / N
  double alpha = 1.0;
  HermitianMatrix leading_traceless_unit;  ///< B^_1, traceless, unit norm; zero if alpha == 0
  bool alpha_zero = false;
  bool alpha_one = false;
};

/// Orthogonal rotation within Q so that at most the first constraint has a
/// trace. A Householder reflection sends the normalized trace vector to the
/// first axis. Already-traceless sets are returned unchanged.
TracelessReduction traceless_reduce(const ConstraintSet& cs, double trace_tol = 1e-12);

struct DegeneracyProfile {
  Index clusters = 0;                 ///< J
  std::vector<Index> multiplicities;  ///< L_j, descending
  Index nq_crit = 0;
};

struct DegeneracyOptions {
  Index n_directions = 8;
  std::vector<double> magnitudes{1e3, 1e4, 1e5};
  double cluster_tol = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// N(N-1)/2 - sum_j L_j (L_j - 1) / 2.
Index critical_count(Index n, const std::vector<Index>& multiplicities);

/// Clusters the eigenvalues of B(s) = sum_q s_q B_q for random directions s
/// at each magnitude. Throws AmbiguityError if patterns disagree.
DegeneracyProfile degeneracy_profile(const ConstraintSet& cs, const DegeneracyOptions& options = {});

/// Multiplicity pattern of an ascending eigenvalue list under relative gap
/// clustering; descending order.
std::vector<Index> cluster_multiplicities(const Eigen::VectorXd& ascending, double relative_tol);

/// Superoperator H -> sum_s <B_s|H> B_s over one side of the partition.
class SubspaceProjector {
 public:
  enum class Side { p, q };
  SubspaceProjector(ConstraintSet cs, Side side) : cs_(std::move(cs)), side_(side) {}
  HermitianMatrix operator()(const HermitianMatrix& h) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& coords) const;
  Side side() const { return side_; }

 private:
  ConstraintSet cs_;
  Side side_;
};

/// (P, Q).
std::pair<SubspaceProjector, SubspaceProjector> projectors(const ConstraintSet& cs);

}  // namespace cgue
