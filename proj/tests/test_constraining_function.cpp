#include <doctest.h>

#include <numbers>
#include <random>

#include "cgue/constraining_function.hpp"
#include "cgue/errors.hpp"

using namespace cgue;

namespace {

ConstraintSet sigma_z() {
  Eigen::VectorXd d(2);
  d << 1, -1;
  return ConstraintSet::from_matrices(2, {HermitianMatrix::diagonal(d / std::sqrt(2.0))});
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// int_{-R}^{R} sin(k s) / s ds by composite Simpson; tends to pi for any k > 0.
double sinc_integral(double k, double R, int panels) {
  auto f = [k](double s) { return s == 0.0 ? k : std::sin(k * s) / s; };
  const double h = R / panels;
  double acc = f(0.0) + f(R);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 2.0 * acc * h / 3.0;
}

}  // namespace

TEST_CASE("determinant route, N=2 sinc") {
  // F(dx) is proportional to (1 / dx) int sin(dx s / sqrt 2) / s ds
  const double R = 4000.0;
  const double f1 = sinc_integral(1.0 / std::sqrt(2.0), R, 400000) / 1.0;
  const double f2 = sinc_integral(2.0 / std::sqrt(2.0), R, 400000) / 2.0;
  CHECK(std::abs(f1 / f2 - 2.0) < 1e-3);

  const auto cs = sigma_z();
  const auto a = fp_determinant(vec({0.0, 1.0}), cs);
  const auto b = fp_determinant(vec({0.0, 2.0}), cs);
  CHECK(a.value / b.value == doctest::Approx(f1 / f2).epsilon(1e-3));
  CHECK(a.value / b.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(b.value == doctest::Approx(1.0).epsilon(1e-9));  // x_ref = (-1, 1)
  CHECK(a.route == FPRoute::determinant);
  CHECK_FALSE(a.error.has_value());
  // absolute normalization: sqrt(lambda^2 / 2 pi N) * sqrt 2 pi / dx
  CHECK(a.absolute == doctest::Approx(std::sqrt(1.0 / (4 * std::numbers::pi)) * std::sqrt(2.0) * std::numbers::pi)
                          .epsilon(1e-9));
}

TEST_CASE("determinant route, two constraints at N=2") {
  // two of the three traceless coordinates pinned: F scales as 1 / dx^2
  const auto cs = random_traceless_constraints(2, 2, 5);
  CHECK(fp_determinant(vec({0.0, 1.0}), cs).value == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(fp_determinant(vec({0.0, 3.0}), cs).value == doctest::Approx(4.0 / 9.0).epsilon(1e-8));
}

TEST_CASE("determinant route symmetries") {
  const auto cs = random_traceless_constraints(3, 2, 17);
  const auto x = vec({-0.4, 0.1, 0.9});
  const double f = fp_determinant(x, cs).value;
  CHECK(f > 0.0);
  CHECK(fp_determinant(vec({0.9, -0.4, 0.1}), cs).value == doctest::Approx(f).epsilon(1e-8));
  CHECK(fp_determinant(-x, cs).value == doctest::Approx(f).epsilon(1e-8));
}

TEST_CASE("coincident eigenvalues are regular") {
  const auto cs = random_traceless_constraints(3, 1, 3);
  const double at = fp_determinant(vec({-0.5, 0.3, 0.3}), cs).value;
  CHECK(std::isfinite(at));
  CHECK(at > 0.0);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double near = fp_determinant(vec({-0.5, 0.3, 0.3 + eps}), cs).value;
    CHECK(std::abs(near - at) < 20 * eps * std::max(1.0, at));
  }
}

TEST_CASE("determinant route guards") {
  const auto x = vec({-1, 0, 1});
  CHECK(fp_determinant(x, ConstraintSet::none(3)).value == 1.0);
  CHECK_THROWS_AS(fp_determinant(Eigen::VectorXd::LinSpaced(7, 0, 1), random_traceless_constraints(7, 1, 1)),
                  CapacityError);
  CHECK_THROWS_AS(fp_determinant(x, random_traceless_constraints(3, 4, 1)), CapacityError);
  CHECK_THROWS_AS(fp_determinant(x, random_constraints(3, 1, 1)), InvalidArgument);
  CHECK_THROWS_AS(fp_determinant(vec({0, 1}), random_traceless_constraints(3, 1, 1)), InvalidArgument);
  const auto all_equal = fp_determinant(vec({0.2, 0.2, 0.2}), random_traceless_constraints(3, 1, 1));
  CHECK(all_equal.singular);
  // every constraint pins a coordinate of the 3-dimensional traceless part
  CHECK(fp_determinant(vec({0, 1}), random_traceless_constraints(2, 3, 2)).value == 0.0);
}

TEST_CASE("Haar Monte Carlo") {
  SUBCASE("no constraints") {
    const auto v = fp_haar_mc(vec({-1, 0, 2}), ConstraintSet::none(3), {});
    CHECK(v.value == 1.0);
    CHECK(v.absolute == 1.0);
    REQUIRE(v.error.has_value());
    CHECK(*v.error == 0.0);
  }
  SUBCASE("agrees with the determinant route at N=2") {
    HaarMcOptions o;
    o.samples = 60000;
    o.seed = 4;
    const auto cs = sigma_z();
    const auto x = vec({0.0, 1.0});
    const auto mc = fp_haar_mc_extrapolated(x, cs, o, {0.1, 0.07, 0.05});
    const auto det = fp_determinant(x, cs);
    REQUIRE(mc.error.has_value());
    CHECK(mc.route == FPRoute::haar_mc);
    CHECK(std::abs(mc.value - det.value) < 3 * *mc.error);
    CHECK_FALSE(mc.unreliable);
  }
  SUBCASE("permutation of x") {
    HaarMcOptions o;
    o.samples = 20000;
    o.sigma = 0.2;
    const auto cs = random_traceless_constraints(3, 1, 8);
    const auto a = fp_haar_mc(vec({-0.6, 0.1, 0.8}), cs, o);
    o.seed = 1;
    const auto b = fp_haar_mc(vec({0.8, -0.6, 0.1}), cs, o);
    CHECK(std::abs(a.value - b.value) < 3 * std::hypot(*a.error, *b.error));
  }
  SUBCASE("thread count does not change the estimate") {
    HaarMcOptions o;
    o.samples = 5000;
    o.chunk = 500;
    const auto cs = random_traceless_constraints(3, 2, 8);
    const auto a = fp_haar_mc(vec({-0.6, 0.1, 0.8}), cs, o);
    o.threads = 3;
    const auto b = fp_haar_mc(vec({-0.6, 0.1, 0.8}), cs, o);
    CHECK(a.value == b.value);
  }
  SUBCASE("guards") {
    HaarMcOptions o;
    o.sigma = 0.0;
    CHECK_THROWS_AS(fp_haar_mc(vec({0, 1}), sigma_z(), o), InvalidArgument);
    CHECK_THROWS_AS(fp_haar_mc(Eigen::VectorXd::LinSpaced(5, 0, 1), random_traceless_constraints(5, 9, 1), {}),
                    CapacityError);
  }
}

TEST_CASE("tilde regularization") {
  const auto x = vec({-1.0, 0.5, 2.0});
  const double mean = x.mean();
  const double h2 = (x.array() - mean).square().sum();
  CHECK(tilde_factor(x, 4, 1.5) == doctest::Approx(std::pow(h2 / (3 * 2.25), 2.0)));
  CHECK(tilde_factor(x, 0) == 1.0);
  CHECK(tilde_factor(vec({0.3, 0.3, 0.3}), 2) == 0.0);
  // equal centred norm, different spectra
  const auto y = vec({0.0, 0.0, std::sqrt(1.5 * h2)});
  CHECK(tilde_factor(y, 3) == doctest::Approx(tilde_factor(x, 3)).epsilon(1e-12));

  const auto cs = random_traceless_constraints(3, 1, 1);
  const auto singular = fp_determinant(vec({0.2, 0.2, 0.2}), cs);
  const auto reg = tilde_regularize(singular, vec({0.2, 0.2, 0.2}), 1);
  CHECK(reg.regularized);
  CHECK(std::isfinite(reg.value));
  CHECK(reg.value >= 0.0);
  const auto fp = fp_determinant(x, cs);
  CHECK(tilde_regularize(fp, x, 1).absolute == doctest::Approx(fp.absolute * tilde_factor(x, 1)));
}

TEST_CASE("angular moments") {
  const auto cs = random_traceless_constraints(6, 5, 2);
  const auto t = angular_moments(cs, 6, 4000, 9);
  CHECK(t.M(2) == 1.0);
  CHECK(t.M(3) == 0.0);
  CHECK(t.max_abs_sampled <= 1.0 + 1e-12);
  for (int n = 2; n <= 6; ++n) CHECK(std::abs(t.M(n)) <= 1.0);
  // direct sphere average of Tr B(Omega)^4 as an oracle
  std::mt19937_64 g(77);
  std::normal_distribution<double> d;
  double m4 = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    Eigen::VectorXd w(5);
    for (auto& v : w) v = d(g);
    const auto b = eigenvalues(cs.combination(w.normalized()));
    m4 += b.array().pow(4).sum() / draws;
  }
  CHECK(std::abs(t.M(4) - m4) < 4 * t.errors[4] + 0.01 * m4);

  const auto one = random_traceless_constraints(5, 1, 3);
  const auto t1 = angular_moments(one, 5, 10, 0);
  const auto b = eigenvalues(one.constraint(0));
  CHECK(t1.M(4) == doctest::Approx(b.array().pow(4).sum()).epsilon(1e-12));
  CHECK(t1.M(5) == 0.0);
  CHECK(t1.errors[4] == 0.0);
}

TEST_CASE("moment expansion") {
  const std::vector<double> h{1.0, 0.0, 0.8, 0.3, 1.1};
  const std::vector<double> b{4.0, 0.0, 1.0, 0.2, 0.5};
  const Index n = 4;
  // n_max = 2: -(1 / 2N) h_2 b_2
  const auto e2 = log_haar_integral_expansion(h, b, n, 2);
  CHECK(e2.real() == doctest::Approx(-0.8 * 1.0 / (2.0 * n)));
  CHECK(e2.imag() == 0.0);
  // third-order term: (1/3) (i^3 / N^2) h_3 b_3
  const auto e3 = log_haar_integral_expansion(h, b, n, 3);
  CHECK((e3 - e2).imag() == doctest::Approx(-0.3 * 0.2 / (3.0 * n * n)));
  CHECK((e3 - e2).real() == doctest::Approx(0.0));
  const auto e4 = log_haar_integral_expansion(h, b, n, 4);
  CHECK((e4 - e3).real() == doctest::Approx(1.1 * 0.5 / (4.0 * n * n * n)));
  CHECK_THROWS_AS(log_haar_integral_expansion(h, b, n, 1), InvalidArgument);
  CHECK_THROWS_AS(log_haar_integral_expansion(h, b, n, 6), InvalidArgument);

  const auto m = normalized_trace_moments(vec({1.0, 2.0, 3.0}), 3, 2.0);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(0.0));
  CHECK(m[2] == doctest::Approx((0.25 + 0.25) / 3.0));
  const auto p = trace_powers(vec({1.0, -2.0}), 3);
  CHECK(p[3] == doctest::Approx(-7.0));
}

TEST_CASE("expansion against Haar integral at N=32") {
  const Index n = 32;
  std::mt19937_64 g(5);
  std::normal_distribution<double> d;
  Eigen::VectorXd h(n), b = Eigen::VectorXd::Zero(n);
  for (auto& v : h) v = 0.5 * d(g);
  b[0] = 1.0 / std::sqrt(2.0);
  b[1] = -1.0 / std::sqrt(2.0);
  const auto r = validate_expansion(h, b * 4.0, 1.0, 4, 20000, 3);
  CHECK(r.relative_error <= 0.1);
  CHECK(r.samples == 20000);
}
