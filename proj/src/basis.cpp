#include "cgue/basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "cgue/errors.hpp"
#include "cgue/random.hpp"

namespace cgue {
namespace {

constexpr double kOrthonormalTol = 1e-10;

void require_orthonormal(const Eigen::MatrixXd& columns, const char* who) {
  if (columns.cols() == 0) return;
  const Eigen::MatrixXd gram = columns.transpose() * columns;
  const double defect = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (defect > kOrthonormalTol) {
    std::ostringstream os;
    os << who << ": matrices are not orthonormal (Gram defect " << defect << ")";
    throw InvalidArgument(os.str());
  }
}

Eigen::MatrixXd coordinate_columns(Index n, const std::vector<HermitianMatrix>& matrices) {
  Eigen::MatrixXd cols(n * n, static_cast<Index>(matrices.size()));
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (matrices[i].dim() != n) throw InvalidArgument("basis matrices have inconsistent dimension");
    cols.col(static_cast<Index>(i)) = to_coordinates(matrices[i]);
  }
  return cols;
}

Eigen::MatrixXd gaussian_block(Index rows, Index cols, std::uint64_t seed) {
  // One stream per column keeps a column's values independent of n_q.
  Eigen::MatrixXd g(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    auto engine = make_engine(seed, static_cast<std::uint64_t>(c), domain::constraints);
    std::normal_distribution<double> normal;
    for (Index r = 0; r < rows; ++r) g(r, c) = normal(engine);
  }
  return g;
}

ConstraintSet random_set(Index n, Index n_q, std::uint64_t seed, bool traceless) {
  if (n < 1) throw InvalidArgument("random constraints: dimension must be positive");
  const Index limit = traceless ? n * n - 1 : n * n;
  if (n_q < 0 || n_q > limit) {
    std::ostringstream os;
    os << "random constraints: n_q = " << n_q << " exceeds the available dimension " << limit;
    throw InvalidArgument(os.str());
  }
  if (n_q == 0) return ConstraintSet::none(n);
  Eigen::MatrixXd q = gaussian_block(n * n, n_q, seed);
  if (traceless) {
    const Eigen::MatrixXd u = trace_direction(n);
    orthonormalize_columns(q, &u);
  } else {
    orthonormalize_columns(q, nullptr);
  }
  return ConstraintSet::from_columns(n, std::move(q),
                                     traceless ? ConstraintGenerator::random_traceless : ConstraintGenerator::random,
                                     seed);
}

}  // namespace

// ---------------------------------------------------------------- BasisSet

BasisSet BasisSet::standard(Index n) {
  if (n < 1) throw InvalidArgument("standard_basis: dimension must be at least 1");
  BasisSet b;
  b.dim_ = n;
  return b;
}

BasisSet BasisSet::from_matrices(Index n, const std::vector<HermitianMatrix>& matrices) {
  if (n < 1) throw InvalidArgument("BasisSet: dimension must be at least 1");
  BasisSet b;
  b.dim_ = n;
  b.explicit_ = true;
  b.columns_ = coordinate_columns(n, matrices);
  require_orthonormal(b.columns_, "BasisSet");
  return b;
}

HermitianMatrix BasisSet::operator[](Index alpha) const {
  if (alpha < 0 || alpha >= size()) throw InvalidArgument("BasisSet: index out of range");
  if (explicit_) return from_coordinates(dim_, columns_.col(alpha));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_ * dim_);
  e[alpha] = 1.0;
  return from_coordinates(dim_, e);
}

Eigen::VectorXd BasisSet::expand(const HermitianMatrix& h) const {
  if (h.dim() != dim_) throw InvalidArgument("BasisSet::expand: dimension mismatch");
  if (!complete()) throw InvalidArgument("BasisSet::expand: basis is incomplete");
  Eigen::VectorXd c = to_coordinates(h);
  if (explicit_) return columns_.transpose() * c;
  return c;
}

HermitianMatrix BasisSet::reconstruct(const Eigen::VectorXd& coefficients) const {
  if (!complete()) throw InvalidArgument("BasisSet::reconstruct: basis is incomplete");
  if (coefficients.size() != size()) throw InvalidArgument("BasisSet::reconstruct: coefficient count mismatch");
  if (explicit_) return from_coordinates(dim_, Eigen::VectorXd(columns_ * coefficients));
  return from_coordinates(dim_, coefficients);
}

Eigen::MatrixXd BasisSet::gram() const {
  if (explicit_) return columns_.transpose() * columns_;
  // The standard basis is built from exact coordinates; evaluate the trace
  // products on the matrices themselves rather than assuming the answer.
  const Index k = size();
  std::vector<HermitianMatrix> ms;
  ms.reserve(static_cast<std::size_t>(k));
  for (Index a = 0; a < k; ++a) ms.push_back((*this)[a]);
  Eigen::MatrixXd g(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = a; b < k; ++b) g(a, b) = g(b, a) = trace_inner_product(ms[static_cast<std::size_t>(a)], ms[static_cast<std::size_t>(b)]);
  return g;
}

BasisSet standard_basis(Index n) { return BasisSet::standard(n); }

// ---------------------------------------------------------- ConstraintSet

std::string to_string(ConstraintGenerator g) {
  switch (g) {
    case ConstraintGenerator::none: return "none";
    case ConstraintGenerator::random_traceless: return "random-traceless";
    case ConstraintGenerator::random: return "random";
    case ConstraintGenerator::explicit_set: return "explicit";
    case ConstraintGenerator::band_complement: return "band-complement";
    case ConstraintGenerator::diagonal_p: return "diagonal-p";
    case ConstraintGenerator::reduced: return "reduced";
  }
  return "none";
}

ConstraintGenerator constraint_generator_from_string(const std::string& s) {
  static const std::map<std::string, ConstraintGenerator> names{
      {"none", ConstraintGenerator::none},
      {"random-traceless", ConstraintGenerator::random_traceless},
      {"random", ConstraintGenerator::random},
      {"explicit", ConstraintGenerator::explicit_set},
      {"band-complement", ConstraintGenerator::band_complement},
      {"diagonal-p", ConstraintGenerator::diagonal_p},
      {"reduced", ConstraintGenerator::reduced}};
  auto it = names.find(s);
  if (it == names.end()) throw InvalidArgument("unknown constraint generator '" + s + "'");
  return it->second;
}

ConstraintSet ConstraintSet::none(Index n) { return from_standard_indices(n, {}, ConstraintGenerator::none); }

ConstraintSet ConstraintSet::from_standard_indices(Index n, std::vector<Index> q_indices,
                                                   ConstraintGenerator generator) {
  if (n < 1) throw InvalidArgument("ConstraintSet: dimension must be positive");
  std::sort(q_indices.begin(), q_indices.end());
  q_indices.erase(std::unique(q_indices.begin(), q_indices.end()), q_indices.end());
  std::vector<char> mask(static_cast<std::size_t>(n * n), 0);
  for (Index i : q_indices) {
    if (i < 0 || i >= n * n) throw InvalidArgument("ConstraintSet: standard index out of range");
    mask[static_cast<std::size_t>(i)] = 1;
  }
  ConstraintSet cs;
  cs.dim_ = n;
  cs.generator_ = generator;
  cs.standard_subset_ = true;
  cs.q_indices_ = std::make_shared<const std::vector<Index>>(std::move(q_indices));
  cs.in_q_ = std::make_shared<const std::vector<char>>(std::move(mask));
  return cs;
}

ConstraintSet ConstraintSet::from_columns(Index n, Eigen::MatrixXd q_columns, ConstraintGenerator generator,
                                          std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("ConstraintSet: dimension must be positive");
  if (q_columns.rows() != n * n) throw InvalidArgument("ConstraintSet: columns must have n^2 rows");
  if (q_columns.cols() > n * n) throw InvalidArgument("ConstraintSet: more than n^2 constraints");
  require_orthonormal(q_columns, "ConstraintSet");
  ConstraintSet cs;
  cs.dim_ = n;
  cs.generator_ = generator;
  cs.seed_ = seed;
  cs.standard_subset_ = false;
  cs.columns_ = std::make_shared<const Eigen::MatrixXd>(std::move(q_columns));
  return cs;
}

ConstraintSet ConstraintSet::from_matrices(Index n, const std::vector<HermitianMatrix>& matrices) {
  return from_columns(n, coordinate_columns(n, matrices), ConstraintGenerator::explicit_set);
}

ConstraintSet ConstraintSet::with_columns(Eigen::MatrixXd q_columns, ConstraintGenerator generator) const {
  auto cs = from_columns(dim_, std::move(q_columns), generator, seed_);
  return cs;
}

Index ConstraintSet::n_q() const {
  if (dim_ == 0) return 0;
  return standard_subset_ ? static_cast<Index>(q_indices_->size()) : columns_->cols();
}

const std::vector<Index>& ConstraintSet::q_indices() const {
  static const std::vector<Index> empty;
  return standard_subset_ && q_indices_ ? *q_indices_ : empty;
}

Eigen::MatrixXd ConstraintSet::q_columns() const {
  if (!standard_subset_) return *columns_;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim_ * dim_, n_q());
  for (std::size_t j = 0; j < q_indices_->size(); ++j) q((*q_indices_)[j], static_cast<Index>(j)) = 1.0;
  return q;
}

HermitianMatrix ConstraintSet::constraint(Index q) const {
  if (q < 0 || q >= n_q()) throw InvalidArgument("ConstraintSet: constraint index out of range");
  if (!standard_subset_) return from_coordinates(dim_, columns_->col(q));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_ * dim_);
  e[(*q_indices_)[static_cast<std::size_t>(q)]] = 1.0;
  return from_coordinates(dim_, e);
}

std::vector<HermitianMatrix> ConstraintSet::constraints() const {
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(n_q()));
  for (Index q = 0; q < n_q(); ++q) out.push_back(constraint(q));
  return out;
}

Eigen::VectorXd ConstraintSet::traces() const {
  Eigen::VectorXd t(n_q());
  if (standard_subset_) {
    for (std::size_t j = 0; j < q_indices_->size(); ++j) t[static_cast<Index>(j)] = (*q_indices_)[j] < dim_ ? 1.0 : 0.0;
    return t;
  }
  // Trace = sum of the diagonal coordinates.
  return columns_->topRows(dim_).colwise().sum().transpose();
}

bool ConstraintSet::traceless(double tol) const {
  if (n_q() == 0) return true;
  return traces().cwiseAbs().maxCoeff() < tol;
}

Eigen::VectorXd ConstraintSet::q_coefficients(const Eigen::VectorXd& coords) const {
  if (coords.size() != dim_ * dim_) throw InvalidArgument("ConstraintSet: coordinate size mismatch");
  if (!standard_subset_) return columns_->transpose() * coords;
  Eigen::VectorXd c(n_q());
  for (std::size_t j = 0; j < q_indices_->size(); ++j) c[static_cast<Index>(j)] = coords[(*q_indices_)[j]];
  return c;
}

Eigen::VectorXd ConstraintSet::project_q(const Eigen::VectorXd& coords) const {
  if (coords.size() != dim_ * dim_) throw InvalidArgument("ConstraintSet: coordinate size mismatch");
  if (!standard_subset_) return *columns_ * (columns_->transpose() * coords);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coords.size());
  for (Index i : *q_indices_) out[i] = coords[i];
  return out;
}

Eigen::VectorXd ConstraintSet::scale_q(const Eigen::VectorXd& coords, double keep) const {
  if (coords.size() != dim_ * dim_) throw InvalidArgument("ConstraintSet: coordinate size mismatch");
  if (keep == 1.0 || n_q() == 0) return coords;
  if (!standard_subset_) {
    Eigen::VectorXd out = coords;
    out.noalias() -= (1.0 - keep) * (*columns_ * (columns_->transpose() * coords));
    return out;
  }
  Eigen::VectorXd out = coords;
  for (Index i : *q_indices_) out[i] *= keep;
  return out;
}

Eigen::VectorXd ConstraintSet::project_p(const Eigen::VectorXd& coords) const { return scale_q(coords, 0.0); }

HermitianMatrix ConstraintSet::combination(const Eigen::VectorXd& s) const {
  if (s.size() != n_q()) throw InvalidArgument("ConstraintSet::combination: coefficient count mismatch");
  if (!standard_subset_) return from_coordinates(dim_, Eigen::VectorXd(*columns_ * s));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim_ * dim_);
  for (std::size_t j = 0; j < q_indices_->size(); ++j) c[(*q_indices_)[j]] = s[static_cast<Index>(j)];
  return from_coordinates(dim_, c);
}

// ---------------------------------------------------------- generators

void orthonormalize_columns(Eigen::MatrixXd& block, const Eigen::MatrixXd* against) {
  constexpr Index kBlock = 32;
  const Index k = block.cols();
  for (Index start = 0; start < k; start += kBlock) {
    const Index width = std::min(kBlock, k - start);
    auto cur = block.middleCols(start, width);
    for (int pass = 0; pass < 2; ++pass) {
      if (against && against->cols() > 0) {
        const Eigen::MatrixXd coeff = against->transpose() * cur;
        cur.noalias() -= *against * coeff;
      }
      if (start > 0) {
        auto prev = block.leftCols(start);
        const Eigen::MatrixXd coeff = prev.transpose() * cur;
        cur.noalias() -= prev * coeff;
      }
    }
    for (Index j = 0; j < width; ++j) {
      auto v = cur.col(j);
      const double before = v.norm();
      for (int pass = 0; pass < 2 && j > 0; ++pass) {
        const Eigen::VectorXd coeff = cur.leftCols(j).transpose() * v;
        v.noalias() -= cur.leftCols(j) * coeff;
      }
      const double after = v.norm();
      if (!(after > 1e-10 * std::max(before, 1e-300)))
        throw NumericFailure("orthonormalize_columns: columns are numerically dependent");
      v /= after;
    }
  }
}

ConstraintSet random_traceless_constraints(Index n, Index n_q, std::uint64_t seed) {
  return random_set(n, n_q, seed, true);
}

ConstraintSet random_constraints(Index n, Index n_q, std::uint64_t seed) { return random_set(n, n_q, seed, false); }

ConstraintSet diagonal_p_constraints(Index n) {
  std::vector<Index> q;
  q.reserve(static_cast<std::size_t>(n * n - n));
  for (Index i = n; i < n * n; ++i) q.push_back(i);
  return ConstraintSet::from_standard_indices(n, std::move(q), ConstraintGenerator::diagonal_p);
}

ConstraintSet band_complement_constraints(Index n, Index bandwidth) {
  if (bandwidth < 1 || bandwidth > n) throw InvalidArgument("band_complement_constraints: need 1 <= b <= N");
  const Index pairs = n * (n - 1) / 2;
  std::vector<Index> q;
  Index p = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++p) {
      if (j - i > bandwidth) {
        q.push_back(n + p);
        q.push_back(n + pairs + p);
      }
    }
  }
  return ConstraintSet::from_standard_indices(n, std::move(q), ConstraintGenerator::band_complement);
}

// ---------------------------------------------------------- reduction

TracelessReduction traceless_reduce(const ConstraintSet& cs, double trace_tol) {
  if (cs.n_q() < 1) throw InvalidArgument("traceless_reduce: need at least one constraint");
  const Index n = cs.dim();
  const Eigen::VectorXd tau = cs.traces();
  const double norm = tau.norm();

  TracelessReduction out;
  if (norm <= trace_tol) {
    out.reduced = cs;
    out.leading_trace = 0.0;
    out.alpha_squared = 1.0;
    out.alpha = 1.0;
    out.alpha_one = true;
    out.leading_traceless_unit = cs.constraint(0);
    return out;
  }

  // Householder reflection R = I - 2 v v^T / v^T v maps tau/|tau| to -sign(t_0) e_1.
  Eigen::VectorXd v = tau / norm;
  const double sign = v[0] >= 0.0 ? 1.0 : -1.0;
  v[0] += sign;
  Eigen::MatrixXd q = cs.q_columns();
  const Eigen::VectorXd qv = q * v;
  q.noalias() -= (2.0 / v.squaredNorm()) * qv * v.transpose();
  if (q.topRows(n).col(0).sum() < 0.0) q.col(0) *= -1.0;
  // Clean the residual traces of B~_q, q > 1, left by rounding.
  const Eigen::VectorXd u = trace_direction(n);
  for (Index j = 1; j < q.cols(); ++j) q.col(j) -= u.dot(q.col(j)) * u;

  out.reduced = ConstraintSet::from_columns(n, std::move(q), ConstraintGenerator::reduced, cs.seed());
  const HermitianMatrix b1 = out.reduced.constraint(0);
  out.leading_trace = b1.trace();
  out.alpha_squared = std::clamp(1.0 - out.leading_trace * out.leading_trace / static_cast<double>(n), 0.0, 1.0);
  out.alpha = std::sqrt(out.alpha_squared);
  out.alpha_zero = out.alpha_squared < 1e-12;
  out.alpha_one = out.alpha_squared > 1.0 - 1e-12;
  if (out.alpha_zero) {
    out.leading_traceless_unit = HermitianMatrix::zero(n);
  } else {
    out.leading_traceless_unit = (1.0 / out.alpha) * center(b1);
  }
  return out;
}

// ---------------------------------------------------------- degeneracy

Index critical_count(Index n, const std::vector<Index>& multiplicities) {
  Index total = 0;
  Index degenerate = 0;
  for (Index l : multiplicities) {
    if (l < 1) throw InvalidArgument("critical_count: multiplicities must be positive");
    total += l;
    degenerate += l * (l - 1) / 2;
  }
  if (total != n) throw InvalidArgument("critical_count: multiplicities must sum to N");
  return n * (n - 1) / 2 - degenerate;
}

std::vector<Index> cluster_multiplicities(const Eigen::VectorXd& ascending, double relative_tol) {
  std::vector<Index> out;
  if (ascending.size() == 0) return out;
  const double scale = ascending.cwiseAbs().maxCoeff();
  Index run = 1;
  for (Index i = 1; i < ascending.size(); ++i) {
    if (ascending[i] - ascending[i - 1] <= relative_tol * scale) {
      ++run;
    } else {
      out.push_back(run);
      run = 1;
    }
  }
  out.push_back(run);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

namespace {
std::string pattern_string(const std::vector<Index>& p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}
}  // namespace

DegeneracyProfile degeneracy_profile(const ConstraintSet& cs, const DegeneracyOptions& options) {
  if (cs.n_q() < 1) throw InvalidArgument("degeneracy_profile: need at least one constraint");
  if (options.n_directions < 1 || options.magnitudes.empty())
    throw InvalidArgument("degeneracy_profile: need at least one direction and magnitude");
  const auto nd = options.n_directions;
  const auto nm = static_cast<Index>(options.magnitudes.size());
  std::vector<std::vector<Index>> patterns(static_cast<std::size_t>(nd * nm));
  parallel_for(nd, options.threads, [&](std::int64_t d) {
    auto engine = make_engine(options.seed, static_cast<std::uint64_t>(d), domain::directions);
    std::normal_distribution<double> normal;
    Eigen::VectorXd s(cs.n_q());
    for (Index q = 0; q < s.size(); ++q) s[q] = normal(engine);
    s.normalize();
    for (Index m = 0; m < nm; ++m) {
      const auto b = eigenvalues(cs.combination(options.magnitudes[static_cast<std::size_t>(m)] * s));
      patterns[static_cast<std::size_t>(d * nm + m)] = cluster_multiplicities(b, options.cluster_tol);
    }
  });
  const auto& first = patterns.front();
  for (const auto& p : patterns) {
    if (p != first) {
      throw AmbiguityError("degeneracy_profile: multiplicity pattern depends on the direction of s",
                           pattern_string(first), pattern_string(p));
    }
  }
  DegeneracyProfile out;
  out.clusters = static_cast<Index>(first.size());
  out.multiplicities = first;
  out.nq_crit = critical_count(cs.dim(), first);
  return out;
}

// ---------------------------------------------------------- projectors

Eigen::VectorXd SubspaceProjector::apply(const Eigen::VectorXd& coords) const {
  return side_ == Side::q ? cs_.project_q(coords) : cs_.project_p(coords);
}

HermitianMatrix SubspaceProjector::operator()(const HermitianMatrix& h) const {
  if (h.dim() != cs_.dim()) throw InvalidArgument("SubspaceProjector: dimension mismatch");
  return from_coordinates(h.dim(), apply(to_coordinates(h)));
}

std::pair<SubspaceProjector, SubspaceProjector> projectors(const ConstraintSet& cs) {
  return {SubspaceProjector(cs, SubspaceProjector::Side::p), SubspaceProjector(cs, SubspaceProjector::Side::q)};
}

}  // namespace cgue
