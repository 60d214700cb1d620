#include <cmath>

#include "doctest.h"
#include "llt/common.hpp"
#include "llt/quadrature.hpp"
#include "llt/rng.hpp"

using namespace llt;

TEST_CASE("adaptive Gauss-Kronrod on smooth and kinked integrands") {
  auto e = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
  CHECK(std::abs(e.value - (std::exp(1.0) - 1.0)) < 1e-14);
  const double brk[] = {0.3};
  auto k = quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-13, 0.0, brk);
  CHECK(std::abs(k.value - (0.045 + 0.245)) < 1e-14);
}

TEST_CASE("Gauss rules integrate polynomials exactly") {
  auto gl = quad::gauss_legendre(8);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 14);
  CHECK(std::abs(s - 2.0 / 15.0) < 1e-14);
  auto gh = quad::gauss_hermite(10);
  double m0 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    m0 += gh.weights[i];
    m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
  }
  CHECK(std::abs(m0 / std::sqrt(2 * M_PI) - 1.0) < 1e-13);
  CHECK(std::abs(m4 / m0 - 3.0) < 1e-12);
}

TEST_CASE("Tilted1D moments of a Gaussian and a Laplace density") {
  quad::LogDensity1D g;
  g.log_f = [](double t) { return -0.5 * (t - 1.5) * (t - 1.5) / 4.0; };
  g.hint = 0.0;
  quad::Tilted1D tg(g);
  CHECK(std::abs(tg.log_mass() - 0.5 * std::log(2 * M_PI * 4.0)) < 1e-12);
  CHECK(std::abs(tg.mean() - 1.5) < 1e-11);
  CHECK(std::abs(tg.var() - 4.0) < 1e-10);
  CHECK(std::abs(tg.third_central()) < 1e-9);

  quad::LogDensity1D l;
  l.log_f = [](double t) { return -std::abs(t) + 0.5 * t; };
  l.breaks = {0.0};
  quad::Tilted1D tl(l);
  // Asymmetric Laplace: rates 0.5 (right) and 1.5 (left).
  CHECK(std::abs(tl.log_mass() - std::log(1 / 0.5 + 1 / 1.5)) < 1e-12);
  CHECK(std::abs(tl.mean() - (0.75 * 2.0 - 0.25 * (1 / 1.5))) < 1e-10);
}

TEST_CASE("Tilted1D inverse CDF and sampling") {
  quad::LogDensity1D g;
  g.log_f = [](double t) { return -0.5 * t * t; };
  quad::Tilted1D t(g);
  CHECK(std::abs(t.quantile(0.975) - 1.959963984540054) < 1e-8);
  CHECK(std::abs(t.cdf(-1.0) - 0.15865525393145707) < 1e-10);
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = t.sample(rng);
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.03);
  CHECK(std::abs(s2 / n - 1.0) < 0.04);
}

TEST_CASE("Tilted1D on a bounded support and a divergent density") {
  quad::LogDensity1D b;
  b.log_f = [](double t) { return std::log1p(-t * t); };
  b.lo = -1.0;
  b.hi = 1.0;
  quad::Tilted1D tb(b);
  CHECK(std::abs(tb.log_mass() - std::log(4.0 / 3.0)) < 1e-10);

  quad::LogDensity1D bad;
  bad.log_f = [](double t) { return 0.1 * t; };
  CHECK_THROWS_AS(quad::Tilted1D{bad}, DivergenceError);
}
