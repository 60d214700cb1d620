#include <cmath>

#include "doctest.h"
#include "llt/grid_sampler.hpp"
#include "llt/llt_engine.hpp"
#include "llt/rng.hpp"

using namespace llt;

namespace {

Potential laplace() { return make_separable({{Scalar1D::Kind::abs, 1.0, 0.0, 2.0}}); }
Potential quartic() { return normalize(make_separable({{Scalar1D::Kind::quartic, 1.0, 0.0, 2.0}})).first; }

}  // namespace

TEST_CASE("closed-form examples") {
  const LltView g(make_gaussian(Vec::Zero(1), Mat::Identity(1, 1)));
  CHECK(g.backend() == LltBackend::closed_form_gaussian);
  CHECK(std::abs(g.value(vec1(1.0)) - 0.5) < 1e-15);
  CHECK(std::abs(g.value(vec1(0.0))) < 1e-15);
  CHECK(std::abs(g.grad(vec1(2.0))(0) - 2.0) < 1e-15);

  const LltView l(laplace());
  CHECK(std::abs(l.value(vec1(0.5)) - 0.2876820724517809) < 1e-14);
  CHECK(std::abs(l.grad(vec1(0.5))(0) - 4.0 / 3.0) < 1e-14);
  CHECK_THROWS_AS(l.value(vec1(1.0)), DivergenceError);
  CHECK(std::isinf(l.value1(1.5)));
}

TEST_CASE("quadrature backend agrees with the closed forms") {
  Domain wide;
  wide.kind = Domain::Kind::box;
  wide.lo = vec1(-200.0);
  wide.hi = vec1(200.0);
  const LltView q(laplace().with_domain(wide));
  CHECK(q.backend() == LltBackend::separable_product);
  const LltView c(laplace());
  for (double x : {-0.7, 0.0, 0.3, 0.5}) {
    const auto a = q.eval1(x), b = c.eval1(x);
    CHECK(std::abs(a.value - b.value) < 1e-9);
    CHECK(std::abs(a.d1 - b.d1) < 1e-8);
    CHECK(std::abs(a.d2 - b.d2) < 1e-7);
    CHECK(std::abs(a.d3 - b.d3) < 1e-6);
  }
  // A tabulated potential goes through the generic quadrature path.
  const LltView t(normalize(make_tabulated({-2, 0, 1, 3}, {4, 0, 1, 5})).first);
  CHECK(t.backend() == LltBackend::quadrature_1d);
  CHECK(std::abs(t.value(vec1(0.0))) < 1e-12);
}

TEST_CASE("derivatives match finite differences and the third cumulant") {
  const LltView v(quartic());
  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    const auto e = v.eval1(x);
    const double h = 1e-3;
    const auto ep = v.eval1(x + h), em = v.eval1(x - h);
    CHECK(std::abs((ep.value - em.value) / (2 * h) - e.d1) < 1e-6 * (1 + std::abs(e.d1)));
    CHECK(std::abs((ep.d1 - em.d1) / (2 * h) - e.d2) < 1e-5 * (1 + e.d2));
    CHECK(std::abs((ep.d2 - em.d2) / (2 * h) - e.d3) < 1e-5 * (1 + std::abs(e.d3)));
    CHECK(std::abs(e.d3) <= 2.0 * std::pow(e.d2, 1.5) + 1e-6);
  }
}

TEST_CASE("tilted draws have the right mean") {
  Rng rng(5);
  const LltView l(laplace());
  const Mat s = l.sample_tilted_n(vec1(0.0), rng, 100000);
  CHECK(std::abs(s.mean()) < 4.0 * std::sqrt(2.0 / 1e5));
  const Mat t = l.sample_tilted_n(vec1(0.5), rng, 20000);
  const double var = l.hess(vec1(0.5))(0, 0);
  CHECK(std::abs(t.mean() - 4.0 / 3.0) < 4.0 * std::sqrt(var / 2e4));

  Mat cov(2, 2);
  cov << 1.0, 0.4, 0.4, 2.0;
  const LltView g(make_gaussian(Vec::Ones(2), cov));
  const Vec x = (Vec(2) << 0.5, -0.25).finished();
  const Mat gs = g.sample_tilted_n(x, rng, 20000);
  const Vec m = gs.rowwise().mean();
  CHECK((m - (Vec::Ones(2) + cov * x)).norm() < 0.05);

  const LltView q(quartic());
  const Mat qs = q.sample_tilted_n(vec1(1.0), rng, 20000);
  const auto e = q.eval1(1.0);
  CHECK(std::abs(qs.mean() - e.d1) < 4.0 * std::sqrt(e.d2 / 2e4));
}

TEST_CASE("lq tilted draws on the per-call grid") {
  Rng rng(9);
  const LltView v(make_lq_squared(1.5, 1.0, 2));
  CHECK(v.backend() == LltBackend::lq_radial);
  const Vec x = (Vec(2) << 0.8, -0.3).finished();
  const auto e = v.eval(x, 2);
  const Mat s = v.sample_tilted_n(x, rng, 20000);
  const Vec m = s.rowwise().mean();
  for (int i = 0; i < 2; ++i) CHECK(std::abs(m(i) - e.grad(i)) < 4.0 * std::sqrt(e.hess(i, i) / 2e4));
  CHECK(std::abs(v.value(x) - v.value(-x)) < 1e-12);
}

TEST_CASE("convolution identity in one dimension") {
  for (const Potential& phi : {make_gaussian(Vec::Zero(1), Mat::Identity(1, 1)), laplace(), quartic()}) {
    const LltView v(phi);
    for (double x : {-0.5, 0.0, 0.4}) {
      const auto c = convolved_llt_check(v, 2, vec1(x));
      CHECK(std::abs(c.lhs - c.rhs) < 1e-8);
    }
  }
  const LltView l(laplace());
  const auto c = convolved_llt_check(l, 2, vec1(0.5));
  CHECK(std::abs(c.lhs - 0.575364144903562) < 1e-8);
  // The one-fold case is the definition.
  const auto one = convolved_llt_check(LltView(quartic()), 1, vec1(0.7));
  CHECK(std::abs(one.lhs - one.rhs) < 1e-10);
}

TEST_CASE("grid sampler matches the moments of a correlated Gaussian") {
  Mat P(2, 2);
  P << 2.0, 0.6, 0.6, 1.0;
  GridSpec spec{Vec::Constant(2, -9.0), Vec::Constant(2, 9.0), {256, 256}};
  GridDensity g(spec, [&](const Vec& x) { return -0.5 * x.dot(P * x); });
  const Vec y = (Vec(2) << 1.0, -0.5).finished();
  const auto t = g.tilted(y);
  const Mat C = P.inverse();
  CHECK((t.mean() - C * y).norm() < 1e-6);
  CHECK((t.cov() - C).norm() < 3e-3);
  const double log_z = 0.5 * y.dot(C * y) + std::log(2 * M_PI) - 0.5 * std::log(P.determinant());
  CHECK(std::abs(t.log_mass() - log_z) < 1e-3);
  Rng rng(2);
  Vec s = Vec::Zero(2);
  const int n = 40000;
  for (int i = 0; i < n; ++i) s += t.draw(rng);
  CHECK((s / n - C * y).norm() < 0.03);
}
