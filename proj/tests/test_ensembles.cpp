#include <doctest.h>

#include <numbers>
#include <random>

#include "cgue/egue.hpp"
#include "cgue/ensembles.hpp"
#include "cgue/haar.hpp"
#include "cgue/spectral_stats.hpp"

using namespace cgue;

namespace {

EnsembleSpec gue(Index n, std::uint64_t seed) {
  EnsembleSpec s;
  s.kind = EnsembleKind::gue;
  s.dim = n;
  s.seed = seed;
  return s;
}

EnsembleSpec constrained(ConstraintSet cs, std::uint64_t seed) {
  EnsembleSpec s;
  s.kind = EnsembleKind::constrained;
  s.dim = cs.dim();
  s.constraints = std::move(cs);
  s.seed = seed;
  return s;
}

std::vector<double> largest(const std::vector<SpectrumSample>& xs) {
  std::vector<double> out;
  for (const auto& x : xs) out.push_back(x.eigenvalues[x.eigenvalues.size() - 1]);
  return out;
}

double ratio_mean(const std::vector<SpectrumSample>& xs) { return spacing_ratios(eigenvalue_vectors(xs)).mean; }

}  // namespace

TEST_CASE("GUE second moment") {
  const Index n = 8;
  auto spec = gue(n, 1);
  double sum = 0.0;
  const int count = 4000;
  for (int i = 0; i < count; ++i) {
    const auto h = sample_gue(spec, i);
    sum += trace_inner_product(h, h);
  }
  // <H|H> is lambda^2/N times a chi-square with N^2 degrees of freedom
  const double se = std::sqrt(2.0 * n * n) / n / std::sqrt(double(count));
  CHECK(std::abs(sum / count - double(n)) < 4 * se);
}

TEST_CASE("GUE edges and semicircle") {
  auto xs = sample_ensemble(gue(200, 2), 100);
  double lo = 0, hi = 0;
  std::vector<double> pooled;
  for (const auto& x : xs) {
    lo += x.eigenvalues[0] / 100.0;
    hi += x.eigenvalues[199] / 100.0;
    for (double v : x.eigenvalues) pooled.push_back(v);
  }
  CHECK(hi > 1.9);
  CHECK(hi < 2.1);
  CHECK(lo < -1.9);
  CHECK(lo > -2.1);
  // L1 to sqrt(4 - x^2) / 2 pi on 50 bins
  const int bins = 50;
  auto hist = make_histogram(pooled, -2.5, 2.5, bins);
  double l1 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double w = hist.edges[b + 1] - hist.edges[b];
    const double mid = 0.5 * (hist.edges[b] + hist.edges[b + 1]);
    const double rho = std::abs(mid) < 2 ? std::sqrt(4 - mid * mid) / (2 * std::numbers::pi) : 0.0;
    l1 += std::abs(hist.density[b] - rho) * w;
  }
  CHECK(l1 < 0.05);
}

TEST_CASE("determinism across worker counts") {
  auto spec = constrained(random_traceless_constraints(12, 40, 3), 17);
  auto a = sample_ensemble(spec, 9, 1);
  auto b = sample_ensemble(spec, 9, 3);
  auto c = sample_ensemble(spec, 4, 2, 5);
  for (int i = 0; i < 9; ++i) CHECK(a[i].eigenvalues == b[i].eigenvalues);
  for (int i = 0; i < 4; ++i) CHECK(c[i].eigenvalues == a[i + 5].eigenvalues);
  CHECK(sample_matrix(spec, 3).dense() == sample_matrix(spec, 3).dense());
}

TEST_CASE("no constraints is GUE") {
  auto g = gue(10, 4);
  auto c = constrained(ConstraintSet::none(10), 4);
  for (int i = 0; i < 5; ++i) CHECK((sample_spectrum(g, i).eigenvalues - sample_spectrum(c, i).eigenvalues).norm() < 1e-12);
}

TEST_CASE("diagonal P gives independent Gaussian levels") {
  const Index n = 60;
  auto xs = sample_ensemble(constrained(diagonal_p_constraints(n), 5), 400);
  // oracle: sorted iid normals
  std::mt19937_64 g(99);
  std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(double(n)));
  std::vector<Eigen::VectorXd> oracle;
  for (int s = 0; s < 400; ++s) {
    Eigen::VectorXd v(n);
    for (auto& x : v) x = d(g);
    std::sort(v.begin(), v.end());
    oracle.push_back(v);
  }
  const auto mine = spacing_ratios(eigenvalue_vectors(xs));
  const auto ref = spacing_ratios(oracle);
  CHECK(std::abs(mine.mean - ref.mean) < 3 * std::hypot(mine.error, ref.error));
  CHECK(std::abs(mine.mean - poisson_ratio_mean()) < 0.015);
  // every level is Normal(0, 1/N): second moment 1/N
  double m2 = 0.0;
  for (const auto& x : xs) m2 += x.eigenvalues.squaredNorm();
  m2 /= 400.0 * n;
  CHECK(m2 * n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("deformed endpoints") {
  auto cs = random_traceless_constraints(10, 50, 7);
  EnsembleSpec d;
  d.kind = EnsembleKind::deformed;
  d.dim = 10;
  d.constraints = cs;
  d.seed = 8;
  d.epsilon = 1.0;
  for (int i = 0; i < 3; ++i) CHECK((sample_spectrum(d, i).eigenvalues - sample_spectrum(gue(10, 8), i).eigenvalues).norm() < 1e-12);
  d.epsilon = 0.0;
  auto c = constrained(cs, 8);
  for (int i = 0; i < 3; ++i) CHECK((sample_spectrum(d, i).eigenvalues - sample_spectrum(c, i).eigenvalues).norm() < 1e-12);
  d.epsilon = -0.1;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("deformed diagonal-P trend") {
  const Index n = 64;
  EnsembleSpec d;
  d.kind = EnsembleKind::deformed;
  d.dim = n;
  d.constraints = diagonal_p_constraints(n);
  d.seed = 12;
  d.epsilon = 0.0;
  const double r0 = ratio_mean(sample_ensemble(d, 200));
  d.epsilon = 0.05;
  const double r1 = ratio_mean(sample_ensemble(d, 200));
  d.epsilon = 1.0;
  const double r2 = ratio_mean(sample_ensemble(d, 200));
  CHECK(r0 < r1);
  CHECK(r1 < r2 + 0.01);
  // off-diagonal weight 0.05 couples levels spaced 1/N apart strongly
  CHECK(std::abs(r1 - r2) < 0.03);
}

TEST_CASE("banded") {
  SUBCASE("full band is GUE") {
    EnsembleSpec b;
    b.kind = EnsembleKind::banded;
    b.dim = 12;
    b.bandwidth = 12;
    b.seed = 3;
    for (int i = 0; i < 3; ++i) CHECK((sample_spectrum(b, i).eigenvalues - sample_spectrum(gue(12, 3), i).eigenvalues).norm() < 1e-12);
    CHECK(banded_constraint_count(12, 12) == 0);
  }
  SUBCASE("tridiagonal is near Poisson") {
    EnsembleSpec b;
    b.kind = EnsembleKind::banded;
    b.dim = 400;
    b.bandwidth = 1;
    b.seed = 4;
    const auto h = sample_banded_matrix(b, 0);
    CHECK(std::abs(h(0, 2)) == 0.0);
    CHECK(std::abs(h(0, 1)) > 0.0);
    const double r = ratio_mean(sample_ensemble(b, 40));
    CHECK(std::abs(r - poisson_ratio_mean()) < std::abs(r - 0.6));
  }
  SUBCASE("constraint count") {
    // brute force: pairs with 0 < nu - mu <= b carry two reals
    for (Index n : {5, 40, 400}) {
      for (Index bw : {1, 2, 3}) {
        Index in_band = n;
        for (Index i = 0; i < n; ++i)
          for (Index j = i + 1; j < n; ++j) in_band += (j - i <= bw) ? 2 : 0;
        CHECK(banded_parameter_count(n, bw) == in_band);
        CHECK(banded_constraint_count(n, bw) == band_complement_constraints(n, bw).n_q());
      }
    }
    const Index n = 400;
    CHECK(double(banded_constraint_count(n, 2)) > n * n - n * std::sqrt(double(n)));
  }
}

TEST_CASE("EGUE") {
  CHECK(binomial(12, 4) == 495);
  CHECK(slater_states(12, 4).size() == 495);
  EnsembleSpec e;
  e.kind = EnsembleKind::egue;
  e.l = 12;
  e.m = 4;
  e.k = 2;
  e.seed = 1;
  CHECK(e.hilbert_dim() == 495);
  const auto h = build_egue(e, 0);
  CHECK(h.dim() == 495);
  CHECK((h.dense() - h.dense().adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("k = m lifts to a GUE") {
    EnsembleSpec f;
    f.kind = EnsembleKind::egue;
    f.l = 6;
    f.m = 2;
    f.k = 2;
    f.seed = 2;
    const Index n = 15;
    const int count = 3000;
    double diag = 0, off = 0, pseudo = 0;
    for (int s = 0; s < count; ++s) {
      const auto m = build_egue(f, s).dense();
      for (Index i = 0; i < n; ++i) {
        diag += std::norm(m(i, i));
        for (Index j = i + 1; j < n; ++j) {
          off += std::norm(m(i, j));
          pseudo += (m(i, j) * m(i, j)).real();
        }
      }
    }
    diag /= double(count) * n;
    off /= double(count) * n * (n - 1) / 2;
    pseudo /= double(count) * n * (n - 1) / 2;
    CHECK(diag * n == doctest::Approx(1.0).epsilon(0.03));
    CHECK(off * n == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(pseudo * n) < 0.03);
  }
  SUBCASE("lift of a one-body operator") {
    // number operator: identity on orbitals lifts to m times identity
    const auto one = HermitianMatrix::identity(6);
    const auto lifted = lift_k_body(one, 6, 1, 3);
    CHECK((lifted.dense() - 3.0 * ComplexMatrix::Identity(20, 20)).norm() < 1e-12);
  }
  e.k = 5;
  CHECK_THROWS_AS(e.validate(), InvalidArgument);
}

TEST_CASE("reduced set samples the same law") {
  auto cs = random_constraints(6, 8, 31);
  auto r = traceless_reduce(cs);
  auto a = sample_ensemble(constrained(cs, 40), 200);
  auto b = sample_ensemble(constrained(r.reduced, 41), 200);
  CHECK(ks_two_sample(largest(a), largest(b)).p_value > 0.01);
  CHECK(r.reduced.n_q() == cs.n_q());
}

TEST_CASE("Haar conjugation of the constraints") {
  const Index n = 6;
  auto cs = random_traceless_constraints(n, 10, 50);
  const auto u = haar_unitary(n, 123, 0);
  std::vector<HermitianMatrix> rotated;
  for (const auto& b : cs.constraints()) rotated.push_back(b.conjugated_by(u));
  auto cu = ConstraintSet::from_matrices(n, rotated);
  auto a = sample_ensemble(constrained(cs, 60), 200);
  auto b = sample_ensemble(constrained(cu, 61), 200);
  CHECK(ks_two_sample(largest(a), largest(b)).p_value > 0.01);
  std::vector<double> sa, sb;
  for (int i = 0; i < 200; ++i) {
    sa.push_back(a[i].eigenvalues[3] - a[i].eigenvalues[2]);
    sb.push_back(b[i].eigenvalues[3] - b[i].eigenvalues[2]);
  }
  CHECK(ks_two_sample(sa, sb).p_value > 0.01);
}

TEST_CASE("Haar unitary") {
  const auto u = haar_unitary(5, 7, 3);
  CHECK((u.adjoint() * u - ComplexMatrix::Identity(5, 5)).norm() < 1e-12);
  auto eng = make_engine(1, 2);
  const auto c = haar_columns(7, 3, eng);
  CHECK((c.adjoint() * c - ComplexMatrix::Identity(3, 3)).norm() < 1e-12);
  // E|U_00|^2 = 1/N
  double s = 0.0;
  for (int i = 0; i < 4000; ++i) s += std::norm(haar_unitary(4, 11, i)(0, 0));
  CHECK(s / 4000 == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("spec validation") {
  EnsembleSpec s = gue(4, 0);
  s.lambda = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = constrained(random_traceless_constraints(3, 2, 1), 0);
  s.dim = 4;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}
