#include <doctest.h>

#include <cmath>

#include "llt/diagnostics.hpp"
#include "llt/rng.hpp"

using namespace llt;

namespace {
GaussianLaw g1(double m, double v) { return {vec1(m), Mat::Constant(1, 1, v)}; }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}  // namespace

TEST_CASE("gaussian divergences") {
  CHECK(chi2_gaussian(g1(0.3, 2.0), g1(0.3, 2.0)) == 0.0);
  CHECK(kl_gaussian(g1(0.3, 2.0), g1(0.3, 2.0)) == 0.0);
  CHECK(kl_gaussian(g1(1, 1), g1(0, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(chi2_gaussian(g1(0, 4), g1(0, 1)) == std::numeric_limits<double>::infinity());
  CHECK(chi2_quadrature_1d(g1(0, 4), g1(0, 1)) == std::numeric_limits<double>::infinity());
  for (auto [m, s] : {std::pair{0.4, 0.7}, {-1.2, 1.6}, {2.0, 0.3}}) {
    const auto mu = g1(m, s), pi = g1(0.1, 1.1);
    CHECK(chi2_gaussian(mu, pi) == doctest::Approx(chi2_quadrature_1d(mu, pi)).epsilon(1e-8));
    CHECK(kl_gaussian(mu, pi) == doctest::Approx(kl_quadrature_1d(mu, pi)).epsilon(1e-8));
  }
  // Tiny perturbations keep full relative precision
  const double e = 1e-9;
  CHECK(chi2_gaussian(g1(e, 1.0), g1(0, 1)) == doctest::Approx(std::expm1(e * e)).epsilon(1e-12));
  CHECK(kl_gaussian(g1(0, 1 + e), g1(0, 1)) == doctest::Approx(0.25 * e * e).epsilon(1e-8));
  GaussianLaw bad{Vec::Zero(2), Mat::Identity(2, 2)};
  bad.cov(0, 1) = 2.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("gaussian LLT identity by quadrature") {
  const auto r1 = gaussian_llt_identity(vec1(1.0), Mat::Constant(1, 1, 2.0), 20);
  CHECK(r1.max_deviation < 1e-6);
  CHECK(r1.grad_deviation < 1e-8);
  Mat s(2, 2);
  s << 1.0, 0.3, 0.3, 4.0;
  const auto r2 = gaussian_llt_identity(Vec::Zero(2), s, 20);
  CHECK(r2.max_deviation < 1e-6);
  CHECK(r2.hess_deviation < 1e-8);
  Mat s3 = Mat::Identity(3, 3);
  s3(0, 2) = s3(2, 0) = -0.2;
  CHECK(gaussian_llt_identity(Vec::Ones(3), s3, 10).max_deviation < 1e-6);
}

TEST_CASE("assumption 1 reporter") {
  const auto phi = make_gaussian(Vec::Zero(1), Mat::Identity(1, 1));
  const auto v = make_separable({{Scalar1D::Kind::quadratic, 1.0, 0.0, 2.0}});
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.3 * i);
  const auto r = assumption1_check(v, phi, 1.0, grid);
  CHECK(r.premise);
  CHECK(r.holds);
  CHECK(r.worst_margin > -1e-6);
  const auto quartic = make_separable({{Scalar1D::Kind::quartic, 1.0, 0.0, 4.0}});
  const auto z = assumption1_check(v, quartic, 0.0, grid);
  CHECK(z.holds);
  CHECK(z.worst_margin == doctest::Approx(0.0));
}

TEST_CASE("quartic counterexample") {
  CHECK(quartic_block_value(1.0, 1.0, 0.5) == -6.0);
  CHECK(quartic_block_value(1.0, 1.0, 0.0) >= 0.0);
  const auto r = x4_counterexample_check();
  CHECK(r.found);
  CHECK(r.conv_hess < r.half_hess - 1e-6);
  // Gaussian potentials: (phi^{*2})'' = phi'' / 2 exactly
  const auto g = make_separable({{Scalar1D::Kind::quadratic, 1.0, 0.0, 2.0}});
  CHECK(conv2_hessian(g, 1.3) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("two-sample and KS tests") {
  Rng rng(11);
  Mat a(1, 1000), b(1, 1000), c(1, 1000);
  for (int i = 0; i < 1000; ++i) {
    a(0, i) = rng.normal();
    b(0, i) = rng.normal() + 3.0;
    c(0, i) = rng.normal();
  }
  CHECK(two_sample_test(a, a).p_value == 1.0);
  CHECK(two_sample_test(a, b).p_value < 0.01);
  CHECK(two_sample_test(a, c, 200, 3).p_value > 0.01);
  // Brute-force statistic in d = 2 agrees with the d = 1 fast path on embedded data
  Mat a2 = Mat::Zero(2, 150), c2 = Mat::Zero(2, 150);
  a2.row(0) = a.leftCols(150);
  c2.row(0) = c.leftCols(150);
  CHECK(two_sample_test(a2, c2, 50, 9).statistic ==
        doctest::Approx(two_sample_test(a.leftCols(150), c.leftCols(150), 50, 9).statistic).epsilon(1e-12));
  CHECK_THROWS_AS(two_sample_test(Mat::Zero(1, 200), Mat::Zero(1, 200)), InputError);

  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(rng.normal());
  const auto ks = ks_test(xs, normal_cdf);
  CHECK(ks.statistic < 0.02);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("Bregman, Rayleigh and PI convolution") {
  const auto phi = make_lq_squared(1.5, 1.0, 2);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Vec x(2), y(2);
    x << rng.normal(), rng.normal();
    y << rng.normal(), rng.normal();
    CHECK(bregman_divergence(phi, y, x) >= -1e-12);
    CHECK(std::abs(bregman_divergence(phi, x, x)) < 1e-12);
  }
  const LltView psi(make_separable({{Scalar1D::Kind::abs, 1.0, 0.0, 2.0}}));
  const auto v = make_separable({{Scalar1D::Kind::quadratic, 0.5, 0.0, 2.0}});
  for (double alpha : {0.5, 2.0}) CHECK(brascamp_lieb_check(v, psi, alpha).infimum >= alpha - 1e-3);
  const auto pc = pi_convolution_check(2.0, 0.5);
  CHECK(pc.computed == doctest::Approx(pc.exact).epsilon(1e-10));
}
