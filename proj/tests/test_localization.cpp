#include <doctest.h>

#include <chrono>
#include <cmath>

#include "llt/localization.hpp"
#include "llt/quadrature.hpp"
#include "llt/rng.hpp"

using namespace llt;

TEST_CASE("joint models are normalized") {
  const auto g = gaussian_model(2, 1.5);
  CHECK(std::abs(g.log_z) < 1e-12);
  const auto l = laplace_noise_model();
  // integral of (1 - x^2) N(x; 0, 1) over (-1, 1) equals 2 N(1; 0, 1)
  const double expect = std::log(2.0 * std::exp(-0.5) / std::sqrt(2.0 * M_PI));
  CHECK(l.log_z == doctest::Approx(expect).epsilon(1e-11));
  CHECK(l.log_pi(vec1(1.0)) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("renormalized potential in closed form and by quadrature") {
  const auto g = gaussian_model(1, 0.7);
  const auto r0 = renorm_eval(g, 0, vec1(0.0));
  CHECK(std::abs(r0.value) < 1e-12);
  // V_t(a) = -(a^2 / 2) / (1/sigma^2 + t) + (1/2) log(1 + t sigma^2) for standard normal noise
  const double s2 = 0.49, a = 0.8;
  const int t = 3;
  const double v = -0.5 * a * a / (1.0 / s2 + t) + 0.5 * std::log(1.0 + t * s2);
  CHECK(renorm_value(g, t, vec1(a)) == doctest::Approx(v).epsilon(1e-12));

  const auto l = laplace_noise_model();
  CHECK(std::abs(renorm_value(l, 0, vec1(0.0))) < 1e-11);
  const double h = 1e-4;
  for (double y : {-1.3, 0.2, 2.5}) {
    const auto e = renorm_eval(l, 2, vec1(y));
    const double fd = (renorm_value(l, 2, vec1(y + h)) - renorm_value(l, 2, vec1(y - h))) / (2 * h);
    CHECK(e.grad(0) == doctest::Approx(fd).epsilon(1e-7));
    const double fd2 = (renorm_value(l, 2, vec1(y + h)) - 2 * e.value + renorm_value(l, 2, vec1(y - h))) / (h * h);
    CHECK(e.hess(0, 0) == doctest::Approx(fd2).epsilon(1e-4));
    CHECK(e.hess(0, 0) < 0.0);
  }
}

TEST_CASE("increment densities and the semigroup") {
  for (const auto& m : {gaussian_model(1, 1.2), laplace_noise_model()}) {
    // Laplace increments have polynomial tails that are cut at |w| = 1e4
    const double tol = m.gaussian() ? 1e-9 : 1e-6;
    for (double y : {-0.6, 1.1}) {
      CHECK(semigroup_apply(m, 1, 2, [](double) { return 1.0; }, y) == doctest::Approx(1.0).epsilon(tol));
      CHECK(semigroup_apply(m, 0, 2, [](double) { return 1.0; }, y) == doctest::Approx(1.0).epsilon(tol));
    }
    CHECK(increment_density(m, 0, 0.3, 0.2) > 0.0);
  }
  // Chapman-Kolmogorov for the gaussian model
  const auto g = gaussian_model(1, 0.9);
  auto f = [](double x) { return std::cos(x); };
  const double two = semigroup_apply(g, 0, 2, f, 0.4);
  const double nested = semigroup_apply(g, 0, 1, [&](double a) { return semigroup_apply(g, 1, 2, f, a); }, 0.4);
  CHECK(nested == doctest::Approx(two).epsilon(1e-8));
  // P_{0,t} f(0) = E f(y_t) with y_t ~ N(0, t^2 sigma^2 + t)
  const double v = 4 * 0.81 + 2;
  CHECK(semigroup_apply(g, 0, 2, f, 0.0) == doctest::Approx(std::exp(-0.5 * v)).epsilon(1e-9));
}

TEST_CASE("noise convolution powers") {
  const auto g = gaussian_model(1, 1.0);
  const NoisePower1D p(g, 3);
  CHECK(p(0.5) == doctest::Approx(-0.5 * std::log(2 * M_PI * 3) - 0.25 / 6));
  // Laplace noise squared: exp(-phi)^{*2}(y) = (1 + |y|) e^{-|y|} / 4, with phi normalized up to e^{-phi} = e^{-|y|}/2
  const auto l = laplace_noise_model();
  const NoisePower1D q(l, 2);
  for (double y : {0.0, 0.7, -2.0}) CHECK(q(y) == doctest::Approx(std::log((1 + std::abs(y)) * std::exp(-std::abs(y)) / 4)).epsilon(1e-10));
}

TEST_CASE("martingale property of the tilted densities") {
  const auto g = gaussian_model(2, 1.3);
  std::vector<double> xs{-2.0, -0.5, 0.0, 0.9, 2.4};
  for (int t = 0; t <= 3; ++t) CHECK(martingale_check(g, t, xs).max_deviation < 1e-12);
  const auto l = laplace_noise_model();
  const auto rep = martingale_check(l, 1, {-0.8, -0.1, 0.4, 0.95});
  CHECK(rep.max_deviation < 1e-8);
}

TEST_CASE("sequential localization matches the moments of the direct construction") {
  const auto g = gaussian_model(1, 0.8);
  Rng rng(7);
  const int t = 3, n = 4000;
  const Mat seq = sequential_tilts(g, t, n, rng);
  const Mat dir = direct_tilts(g, t, n, rng);
  const double var = t * t * 0.64 + t;
  for (const Mat* m : {&seq, &dir}) {
    const double mean = m->mean();
    const double v = (m->array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean) < 5 * std::sqrt(var / n));
    CHECK(v == doctest::Approx(var).epsilon(0.08));
  }
  Localizer loc(g);
  const auto run = loc.run(4, rng, true);
  CHECK(run.ys.size() == 4);
  CHECK(run.zs.size() == 4);
  CHECK(run.x.size() == 1);
}
