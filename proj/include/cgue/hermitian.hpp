#pragma once

// Dense Hermitian matrices, the trace scalar product <A|B> = Tr(AB), and the
// real coordinate map onto the standard orthonormal Hermitian basis.
//
// Standard basis ordering for dimension n (N^2 elements in total):
//   [0, n)                       E_mm
//   [n, n + n(n-1)/2)            (E_mn + E_nm) / sqrt(2),   m < n, row-major
//   [n + n(n-1)/2, n^2)          i (E_mn - E_nm) / sqrt(2), m < n, row-major
// The map H -> coordinates is an isometry: <A|B> equals the Euclidean dot
// product of the coordinate vectors.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgue/errors.hpp"

namespace cgue {

using Index = Eigen::Index;

template <typename Real>
class BasicHermitianMatrix {
 public:
  using RealScalar = Real;
  using Scalar = std::complex<Real>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  static constexpr Real default_tolerance() { return Real(1e-12); }

  BasicHermitianMatrix() = default;

  /// Validates Hermiticity relative to the largest entry, then stores the
  /// exact Hermitian part so later arithmetic starts from a clean matrix.
  explicit BasicHermitianMatrix(const Dense& m, Real tol = default_tolerance()) {
    if (m.rows() != m.cols()) throw InvalidArgument("HermitianMatrix: matrix is not square");
    if (m.rows() == 0) throw InvalidArgument("HermitianMatrix: dimension must be positive");
    const Real scale = std::max<Real>(Real(1), m.cwiseAbs().maxCoeff());
    const Real defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (defect > tol * scale) {
      std::ostringstream os;
      os << "HermitianMatrix: Hermiticity defect " << defect << " exceeds tolerance";
      throw InvalidArgument(os.str());
    }
    data_ = hermitian_part_of(m);
  }

  /// Hermitian part (m + m^dagger) / 2 without validation.
  static BasicHermitianMatrix hermitian_part(const Dense& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw InvalidArgument("HermitianMatrix: matrix must be square and non-empty");
    BasicHermitianMatrix h;
    h.data_ = hermitian_part_of(m);
    return h;
  }

  static BasicHermitianMatrix zero(Index n) { return hermitian_part(Dense::Zero(n, n)); }
  static BasicHermitianMatrix identity(Index n) { return hermitian_part(Dense::Identity(n, n)); }

  static BasicHermitianMatrix diagonal(const RealVector& d) {
    Dense m = Dense::Zero(d.size(), d.size());
    m.diagonal() = d.template cast<Scalar>();
    return hermitian_part(m);
  }

  Index dim() const { return data_.rows(); }
  const Dense& dense() const { return data_; }
  Scalar operator()(Index r, Index c) const { return data_(r, c); }
  Real trace() const { return data_.diagonal().real().sum(); }

  BasicHermitianMatrix& operator+=(const BasicHermitianMatrix& o) {
    require_same_dim(o);
    data_ += o.data_;
    return *this;
  }
  BasicHermitianMatrix& operator-=(const BasicHermitianMatrix& o) {
    require_same_dim(o);
    data_ -= o.data_;
    return *this;
  }
  BasicHermitianMatrix& operator*=(Real s) {
    data_ *= s;
    return *this;
  }
  friend BasicHermitianMatrix operator+(BasicHermitianMatrix a, const BasicHermitianMatrix& b) { return a += b; }
  friend BasicHermitianMatrix operator-(BasicHermitianMatrix a, const BasicHermitianMatrix& b) { return a -= b; }
  friend BasicHermitianMatrix operator*(Real s, BasicHermitianMatrix a) { return a *= s; }
  friend BasicHermitianMatrix operator*(BasicHermitianMatrix a, Real s) { return a *= s; }

  /// U H U^dagger for unitary U.
  BasicHermitianMatrix conjugated_by(const Dense& u) const { return hermitian_part(u * data_ * u.adjoint()); }

 private:
  static Dense hermitian_part_of(const Dense& m) {
    Dense h = (m + m.adjoint()) * Real(0.5);
    for (Index i = 0; i < h.rows(); ++i) h(i, i) = Scalar(h(i, i).real(), Real(0));
    return h;
  }
  void require_same_dim(const BasicHermitianMatrix& o) const {
    if (o.dim() != dim()) throw InvalidArgument("HermitianMatrix: dimension mismatch");
  }

  Dense data_;
};

template <typename Real>
struct BasicEigenDecomposition {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues;                           // ascending
  Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // columns
};

using HermitianMatrix = BasicHermitianMatrix<double>;
using EigenDecomposition = BasicEigenDecomposition<double>;
using ComplexMatrix = HermitianMatrix::Dense;

/// <a|b> = Tr(ab); real for Hermitian arguments.
template <typename Real>
Real trace_inner_product(const BasicHermitianMatrix<Real>& a, const BasicHermitianMatrix<Real>& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("trace_inner_product: dimension mismatch");
  // Tr(ab) = sum_ij a_ij b_ji = sum_ij a_ij conj(b_ij)
  return (a.dense().array() * b.dense().array().conjugate()).real().sum();
}

/// H - (Tr H / N) 1_N.
template <typename Real>
BasicHermitianMatrix<Real> center(const BasicHermitianMatrix<Real>& h) {
  const Real mean = h.trace() / static_cast<Real>(h.dim());
  auto m = h.dense();
  m.diagonal().array() -= mean;
  return BasicHermitianMatrix<Real>::hermitian_part(m);
}

/// FNV-1a over the raw entries; identifies a matrix in failure reports.
template <typename Real>
std::uint64_t matrix_hash(const BasicHermitianMatrix<Real>& h) {
  std::uint64_t x = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(h.dense().data());
  const auto n = static_cast<std::size_t>(h.dense().size()) * sizeof(std::complex<Real>);
  for (std::size_t i = 0; i < n; ++i) {
    x ^= bytes[i];
    x *= 0x100000001b3ULL;
  }
  return x;
}

namespace detail {
template <typename Real>
[[noreturn]] void throw_eigen_failure(const BasicHermitianMatrix<Real>& h) {
  std::ostringstream os;
  os << "eigendecompose: solver did not converge (matrix hash " << std::hex << matrix_hash(h) << ")";
  throw NumericFailure(os.str());
}

template <typename Real>
void sort_ascending(Eigen::Matrix<Real, Eigen::Dynamic, 1>& values,
                    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>* vectors) {
  const auto n = values.size();
  bool sorted = true;
  for (Index i = 1; i < n; ++i) sorted = sorted && values[i - 1] <= values[i];
  if (sorted) return;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });
  auto v = values;
  for (Index i = 0; i < n; ++i) values[i] = v[order[static_cast<std::size_t>(i)]];
  if (vectors) {
    auto w = *vectors;
    for (Index i = 0; i < n; ++i) vectors->col(i) = w.col(order[static_cast<std::size_t>(i)]);
  }
}
}  // namespace detail

/// H = V x V^dagger with ascending eigenvalues.
template <typename Real>
BasicEigenDecomposition<Real> eigendecompose(const BasicHermitianMatrix<Real>& h) {
  Eigen::SelfAdjointEigenSolver<typename BasicHermitianMatrix<Real>::Dense> solver(h.dense());
  if (solver.info() != Eigen::Success) detail::throw_eigen_failure(h);
  BasicEigenDecomposition<Real> out{solver.eigenvalues(), solver.eigenvectors()};
  detail::sort_ascending(out.eigenvalues, &out.eigenvectors);
  return out;
}

/// Ascending eigenvalues only.
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues(const BasicHermitianMatrix<Real>& h) {
  Eigen::SelfAdjointEigenSolver<typename BasicHermitianMatrix<Real>::Dense> solver(h.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) detail::throw_eigen_failure(h);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> values = solver.eigenvalues();
  detail::sort_ascending<Real>(values, nullptr);
  return values;
}

/// V diag(x) V^dagger.
template <typename Real>
BasicHermitianMatrix<Real> reconstruct(const BasicEigenDecomposition<Real>& e) {
  const auto& v = e.eigenvectors;
  return BasicHermitianMatrix<Real>::hermitian_part(v * e.eigenvalues.template cast<std::complex<Real>>().asDiagonal() *
                                                    v.adjoint());
}

/// Number of real standard-basis coordinates, n^2.
inline Index coordinate_count(Index n) { return n * n; }

/// Coordinates of h on the standard orthonormal basis (see file comment).
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> to_coordinates(const BasicHermitianMatrix<Real>& h) {
  const Index n = h.dim();
  const Index pairs = n * (n - 1) / 2;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> c(n * n);
  const Real root2 = std::sqrt(Real(2));
  Index p = 0;
  for (Index i = 0; i < n; ++i) c[i] = h(i, i).real();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++p) {
      c[n + p] = root2 * h(i, j).real();
      c[n + pairs + p] = root2 * h(i, j).imag();
    }
  }
  return c;
}

/// Inverse of to_coordinates.
template <typename Real, typename Derived>
BasicHermitianMatrix<Real> from_coordinates_as(Index n, const Eigen::MatrixBase<Derived>& c) {
  if (c.size() != n * n) throw InvalidArgument("from_coordinates: expected n^2 coordinates");
  using Dense = typename BasicHermitianMatrix<Real>::Dense;
  const Index pairs = n * (n - 1) / 2;
  const Real inv_root2 = Real(1) / std::sqrt(Real(2));
  Dense m(n, n);
  Index p = 0;
  for (Index i = 0; i < n; ++i) m(i, i) = std::complex<Real>(c[i], 0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++p) {
      const std::complex<Real> z(c[n + p] * inv_root2, c[n + pairs + p] * inv_root2);
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }
  return BasicHermitianMatrix<Real>::hermitian_part(m);
}

template <typename Derived>
HermitianMatrix from_coordinates(Index n, const Eigen::MatrixBase<Derived>& c) {
  return from_coordinates_as<typename Derived::Scalar>(n, c);
}

/// Coordinate vector of 1_N / sqrt(N), the unit trace direction.
inline Eigen::VectorXd trace_direction(Index n) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n * n);
  u.head(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  return u;
}

}  // namespace cgue
