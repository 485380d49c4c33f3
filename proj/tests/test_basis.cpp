#include <doctest.h>

#include <random>

#include "cgue/basis.hpp"
#include "cgue/random.hpp"

using namespace cgue;

namespace {

Eigen::VectorXd random_coords(Index n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n * n);
  for (auto& x : v) x = d(g);
  return v;
}

// Q projector rebuilt from the constraint matrices alone.
Eigen::VectorXd brute_q(const ConstraintSet& cs, const Eigen::VectorXd& coords) {
  const auto h = from_coordinates(cs.dim(), coords);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coords.size());
  for (const auto& b : cs.constraints()) out += trace_inner_product(b, h) * to_coordinates(b);
  return out;
}

double gram_defect(const ConstraintSet& cs) {
  const auto bs = cs.constraints();
  double worst = 0.0;
  for (std::size_t a = 0; a < bs.size(); ++a)
    for (std::size_t b = 0; b < bs.size(); ++b)
      worst = std::max(worst, std::abs(trace_inner_product(bs[a], bs[b]) - (a == b ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TEST_CASE("standard basis") {
  auto b1 = standard_basis(1);
  CHECK(b1.size() == 1);
  CHECK(b1[0](0, 0).real() == 1.0);

  auto b2 = standard_basis(2);
  CHECK(b2.size() == 4);
  CHECK((b2.gram() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);

  auto b5 = standard_basis(5);
  CHECK(b5.complete());
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto h = from_coordinates(5, random_coords(5, s));
    CHECK((b5.reconstruct(b5.expand(h)).dense() - h.dense()).norm() < 1e-9);
  }
}

TEST_CASE("explicit basis must be orthonormal and complete to expand") {
  const Index n = 2;
  auto std2 = standard_basis(n);
  std::vector<HermitianMatrix> ms{std2[0], std2[1]};
  auto partial = BasisSet::from_matrices(n, ms);
  CHECK_FALSE(partial.complete());
  CHECK_THROWS_AS(partial.expand(HermitianMatrix::identity(n)), InvalidArgument);
  ms[1] = ms[0];
  CHECK_THROWS_AS(BasisSet::from_matrices(n, ms), InvalidArgument);
}

TEST_CASE("random traceless constraints") {
  auto empty = random_traceless_constraints(4, 0, 1);
  CHECK(empty.n_q() == 0);
  CHECK(empty.n_p() == 16);

  auto cs = random_traceless_constraints(4, 3, 2);
  CHECK(cs.n_q() == 3);
  CHECK(gram_defect(cs) < 1e-10);
  CHECK(cs.traces().cwiseAbs().maxCoeff() < 1e-10);

  auto full = random_traceless_constraints(4, 15, 3);
  CHECK(full.n_p() == 1);
  CHECK(gram_defect(full) < 1e-10);
  // P is the trace direction
  const Eigen::VectorXd u = trace_direction(4);
  CHECK((full.project_p(u) - u).norm() < 1e-10);
  const auto probe = random_coords(4, 9);
  CHECK((full.project_p(probe) - u.dot(probe) * u).norm() < 1e-10);

  CHECK_THROWS_AS(random_traceless_constraints(4, 16, 1), InvalidArgument);
}

TEST_CASE("large constraint sets stay orthonormal") {
  auto cs = random_traceless_constraints(12, 140, 5);
  CHECK(gram_defect(cs) < 1e-10);
  auto plain = random_constraints(6, 30, 5);
  CHECK(gram_defect(plain) < 1e-10);
}

TEST_CASE("traceless reduce") {
  SUBCASE("already traceless") {
    auto cs = random_traceless_constraints(5, 4, 11);
    auto r = traceless_reduce(cs);
    CHECK(r.alpha == 1.0);
    CHECK(r.alpha_one);
    CHECK((r.reduced.q_columns() - cs.q_columns()).norm() == 0.0);
  }
  SUBCASE("contains the unit trace direction") {
    const Index n = 4;
    Eigen::MatrixXd cols(n * n, 2);
    cols.col(0) = trace_direction(n);
    cols.col(1) = to_coordinates(standard_basis(n)[n]);  // off-diagonal, traceless
    auto cs = ConstraintSet::from_columns(n, cols, ConstraintGenerator::explicit_set);
    auto r = traceless_reduce(cs);
    CHECK(r.alpha_zero);
    CHECK(std::abs(r.alpha) < 1e-12);
    CHECK((r.reduced.q_columns().col(0) - trace_direction(n)).norm() < 1e-12);
  }
  SUBCASE("generic traces at N=6") {
    auto cs = random_constraints(6, 5, 21);
    CHECK(cs.traces().cwiseAbs().minCoeff() > 1e-6);
    auto r = traceless_reduce(cs);
    const auto t = r.reduced.traces();
    int nonzero = 0;
    for (Index q = 0; q < t.size(); ++q) nonzero += std::abs(t[q]) > 1e-10;
    CHECK(nonzero == 1);
    CHECK(std::abs(t[0]) > 1e-10);
    CHECK(r.leading_trace >= 0.0);
    CHECK(r.alpha * r.alpha + r.leading_trace * r.leading_trace / 6.0 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(gram_defect(r.reduced) < 1e-10);
    CHECK(std::abs(r.leading_traceless_unit.trace()) < 1e-10);
    CHECK(trace_inner_product(r.leading_traceless_unit, r.leading_traceless_unit) ==
          doctest::Approx(1.0).epsilon(1e-10));
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto v = random_coords(6, 100 + s);
      CHECK((brute_q(cs, v) - brute_q(r.reduced, v)).norm() < 1e-9);
    }
  }
}

TEST_CASE("critical count") {
  CHECK(critical_count(10, std::vector<Index>(10, 1)) == 45);
  CHECK(critical_count(8, {4, 4}) == 16);
  CHECK(critical_count(495, std::vector<Index>(495, 1)) == 495 * 247);
  CHECK(critical_count(495, std::vector<Index>(495, 1)) == 122265);
}

TEST_CASE("degeneracy profile") {
  SUBCASE("generic N=10") {
    auto cs = random_traceless_constraints(10, 6, 4);
    DegeneracyOptions o;
    o.n_directions = 3;
    auto p = degeneracy_profile(cs, o);
    CHECK(p.clusters == 10);
    CHECK(p.nq_crit == 45);
  }
  SUBCASE("two blocks at N=8") {
    const Index n = 8;
    Eigen::VectorXd d(n);
    d << 1, 1, 1, 1, -1, -1, -1, -1;
    d /= std::sqrt(double(n));
    auto cs = ConstraintSet::from_matrices(n, {HermitianMatrix::diagonal(d)});
    auto p = degeneracy_profile(cs);
    CHECK(p.clusters == 2);
    CHECK(p.multiplicities == std::vector<Index>{4, 4});
    CHECK(p.nq_crit == 16);
    Index total = 0;
    for (auto l : p.multiplicities) total += l;
    CHECK(total == n);
  }
  SUBCASE("clustering helper") {
    Eigen::VectorXd v(5);
    v << -1.0, -1.0 + 1e-12, 0.3, 2.0, 2.0;
    CHECK(cluster_multiplicities(v, 1e-6) == std::vector<Index>{2, 2, 1});
  }
}

TEST_CASE("projectors") {
  const Index n = 5;
  auto cs = random_traceless_constraints(n, 7, 8);
  auto [p, q] = projectors(cs);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto h = from_coordinates(n, random_coords(n, s));
    const auto ph = p(h);
    const auto qh = q(h);
    CHECK(((ph + qh).dense() - h.dense()).norm() < 1e-10);
    CHECK((q(qh).dense() - qh.dense()).norm() < 1e-10);
    CHECK(q(ph).dense().norm() < 1e-10);
    CHECK((qh.dense() - from_coordinates(n, brute_q(cs, to_coordinates(h))).dense()).norm() < 1e-10);
  }

  auto diag = diagonal_p_constraints(n);
  CHECK(diag.n_p() == n);
  auto [pd, qd] = projectors(diag);
  const auto h = from_coordinates(n, random_coords(n, 77));
  const auto ph = pd(h);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(std::abs(ph(i, j) - (i == j ? h(i, j) : 0.0)) < 1e-14);
}

TEST_CASE("eigenvalue bound for unit directions") {
  auto cs = random_traceless_constraints(7, 9, 13);
  std::mt19937_64 g(5);
  std::normal_distribution<double> d;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd omega(cs.n_q());
    for (auto& w : omega) w = d(g);
    omega.normalize();
    const auto b = eigenvalues(cs.combination(omega));
    CHECK(b.squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(b.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("band complement") {
  auto cs = band_complement_constraints(6, 1);
  // in-band: 6 diagonal + 2 * 5 off-diagonal real parameters
  CHECK(cs.n_p() == 16);
  CHECK(band_complement_constraints(6, 6).n_q() == 0);
}
