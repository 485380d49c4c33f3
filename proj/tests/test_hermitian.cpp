#include <doctest.h>

#include <random>

#include "cgue/basis.hpp"
#include "cgue/hermitian.hpp"
#include "cgue/matrix_io.hpp"

using namespace cgue;

namespace {

ComplexMatrix random_dense(Index n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  ComplexMatrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = {d(g), d(g)};
  return m;
}

HermitianMatrix random_hermitian(Index n, std::uint64_t seed) {
  return HermitianMatrix::hermitian_part(random_dense(n, seed));
}

}  // namespace

TEST_CASE("trace inner product") {
  CHECK(trace_inner_product(HermitianMatrix::identity(5), HermitianMatrix::identity(5)) == doctest::Approx(5.0));

  const auto basis = standard_basis(4);
  for (Index a = 0; a < basis.size(); ++a)
    for (Index b = 0; b < basis.size(); ++b)
      CHECK(std::abs(trace_inner_product(basis[a], basis[b]) - (a == b ? 1.0 : 0.0)) < 1e-12);

  const auto h = random_hermitian(6, 3);
  double frob = 0.0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) frob += std::norm(h(i, j));
  CHECK(trace_inner_product(h, h) == doctest::Approx(frob).epsilon(1e-13));

  CHECK_THROWS_AS(trace_inner_product(h, HermitianMatrix::identity(3)), InvalidArgument);
}

TEST_CASE("construction validates hermiticity") {
  ComplexMatrix m = random_dense(3, 1);
  CHECK_THROWS_AS(HermitianMatrix{m}, InvalidArgument);
  CHECK_THROWS_AS(HermitianMatrix{ComplexMatrix(2, 3)}, InvalidArgument);
  const HermitianMatrix h{random_hermitian(3, 1).dense()};
  CHECK(h.dim() == 3);
}

TEST_CASE("center") {
  CHECK(center(HermitianMatrix::identity(4)).dense().norm() < 1e-15);

  auto h = center(random_hermitian(5, 7));
  CHECK((center(h).dense() - h.dense()).norm() < 1e-14);

  Eigen::VectorXd d(2);
  d << 3, 1;
  const auto c = center(HermitianMatrix::diagonal(d));
  CHECK(c(0, 0).real() == doctest::Approx(1.0));
  CHECK(c(1, 1).real() == doctest::Approx(-1.0));
}

TEST_CASE("eigendecompose") {
  Eigen::VectorXd d(3);
  d << 1, 2, 3;
  auto e = eigendecompose(HermitianMatrix::diagonal(d));
  CHECK((e.eigenvalues - d).norm() < 1e-14);
  CHECK((e.eigenvectors.cwiseAbs() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);

  ComplexMatrix x = ComplexMatrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  auto ev = eigenvalues(HermitianMatrix{x});
  CHECK(ev[0] == doctest::Approx(-1.0));
  CHECK(ev[1] == doctest::Approx(1.0));

  const auto h = random_hermitian(12, 11);
  e = eigendecompose(h);
  const Index n = 12;
  CHECK((e.eigenvectors.adjoint() * e.eigenvectors - ComplexMatrix::Identity(n, n)).norm() < 1e-10);
  for (Index i = 1; i < n; ++i) CHECK(e.eigenvalues[i - 1] <= e.eigenvalues[i]);
  CHECK((reconstruct(e).dense() - h.dense()).norm() / h.dense().norm() < 1e-10);
  CHECK((eigenvalues(h) - e.eigenvalues).norm() < 1e-10);
}

TEST_CASE("float instantiation") {
  using HF = BasicHermitianMatrix<float>;
  Eigen::VectorXf d(2);
  d << 2.0f, -1.0f;
  const auto ev = eigenvalues(HF::diagonal(d));
  CHECK(ev[0] == doctest::Approx(-1.0f));
  CHECK(ev[1] == doctest::Approx(2.0f));
}

TEST_CASE("expand and reconstruct") {
  const Index n = 4;
  const auto basis = standard_basis(n);
  auto c = basis.expand(basis[7]);
  for (Index a = 0; a < c.size(); ++a) CHECK(std::abs(c[a] - (a == 7 ? 1.0 : 0.0)) < 1e-14);

  c = basis.expand(HermitianMatrix::identity(n));
  for (Index a = 0; a < c.size(); ++a) CHECK(std::abs(c[a] - (a < n ? 1.0 : 0.0)) < 1e-14);

  const auto h = random_hermitian(n, 5);
  CHECK((basis.reconstruct(basis.expand(h)).dense() - h.dense()).norm() < 1e-10);

  // coordinate map is an isometry
  const auto g = random_hermitian(n, 6);
  CHECK(to_coordinates(h).dot(to_coordinates(g)) == doctest::Approx(trace_inner_product(h, g)).epsilon(1e-13));
  CHECK((from_coordinates(n, to_coordinates(h)).dense() - h.dense()).norm() < 1e-14);
  CHECK(trace_direction(n).dot(to_coordinates(h)) * std::sqrt(double(n)) == doctest::Approx(h.trace()));
}

TEST_CASE("matrix file round trip") {
  const auto h = random_hermitian(5, 9);
  std::stringstream s;
  write_matrix(s, h);
  const auto back = read_matrix(s);
  CHECK(back.dense() == h.dense());

  std::stringstream bad("{\"dim\":2}\n");
  CHECK_THROWS_AS(read_matrix(bad), InvalidArgument);
}
