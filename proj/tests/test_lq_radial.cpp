#include <cmath>

#include "doctest.h"
#include "llt/lq_radial.hpp"
#include "llt/quadrature.hpp"

using namespace llt;

TEST_CASE("mixing kernel reproduces exp(-lambda^beta)") {
  for (double p : {1.25, 1.5, 1.8}) {
    const LqRadial lq(p, 1.0, 1);
    const double beta = 2.0 * (p - 1.0) / p;
    for (double lam : {0.3, 1.0, 4.0}) {
      // int_0^inf k(v) exp(-lam v^{-(1-beta)/beta}) dv in log v.
      const auto r = quad::integrate(
          [&](double ell) {
            const double v = std::exp(ell);
            return std::exp(lq.log_kernel(v) + ell - lam * std::pow(v, -(1.0 - beta) / beta));
          },
          -40.0, 9.0, 1e-11);
      CHECK(std::abs(r.value / std::exp(-std::pow(lam, beta)) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("lq transform matches the closed form in one dimension") {
  for (double p : {1.0, 1.3, 1.5, 1.9}) {
    const LqRadial lq(p, 0.8, 1);
    for (double x : {0.0, 0.5, -2.0, 6.0}) {
      const auto e = lq.eval(vec1(x));
      CHECK(std::abs(e.value - lq_llt_closed_1d(0.8, x)) < 1e-10);
      CHECK(std::abs(e.grad(0) - x / 1.6) < 1e-9);
      CHECK(std::abs(e.hess(0, 0) - 1.0 / 1.6) < 1e-8);
    }
  }
}

TEST_CASE("lq transform matches nested quadrature in two dimensions") {
  for (double p : {1.0, 1.5}) {
    const LqRadial lq(p, 1.2, 2);
    for (const Vec& x : {Vec((Vec(2) << 0.3, -0.7).finished()), Vec((Vec(2) << 2.5, 1.0).finished())}) {
      const double ref = lq_llt_direct(p, 1.2, x);
      CHECK(std::abs(lq.value(x) - ref) < 1e-9);
    }
  }
}

TEST_CASE("lq gradient and Hessian agree with finite differences in three dimensions") {
  const LqRadial lq(1.4, 0.5, 3);
  const Vec x = (Vec(3) << 0.7, -1.3, 0.2).finished();
  const auto e = lq.eval(x);
  const double h = 1e-4;
  for (int i = 0; i < 3; ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    const auto ea = lq.eval(a), eb = lq.eval(b);
    CHECK(std::abs((ea.value - eb.value) / (2 * h) - e.grad(i)) < 1e-7);
    CHECK(((ea.grad - eb.grad) / (2 * h) - e.hess.col(i)).norm() < 1e-6);
  }
}
