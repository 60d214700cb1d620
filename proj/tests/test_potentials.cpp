#include <cmath>

#include "doctest.h"
#include "llt/potentials.hpp"

using namespace llt;

namespace {

Vec fd_grad(const Potential& phi, const Vec& y, double h = 1e-6) {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) {
    Vec a = y, b = y;
    a(i) += h;
    b(i) -= h;
    g(i) = (phi.value(a) - phi.value(b)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("gaussian potential is normalized and has exact derivatives") {
  Mat cov(2, 2);
  cov << 2.0, 0.3, 0.3, 0.5;
  const auto phi = make_gaussian(Vec::Constant(2, 0.1), cov);
  CHECK(std::abs(log_partition(phi).first) < 1e-14);
  const Vec y = (Vec(2) << 0.4, -1.2).finished();
  CHECK((phi.gradient(y) - fd_grad(phi, y)).norm() < 1e-8);
  CHECK((phi.hessian(y) - cov.inverse()).norm() < 1e-12);
  CHECK_THROWS_AS(make_gaussian(Vec::Zero(2), -cov), InputError);
}

TEST_CASE("separable potential: kinks, support and round trip") {
  auto phi = make_separable({{Scalar1D::Kind::abs, 2.0, 0.5, 2.0}});
  CHECK(std::abs(log_partition(phi).first) < 1e-14);
  REQUIRE(phi.kinks1().size() == 1);
  CHECK(phi.kinks1()[0] == 0.5);
  CHECK(phi.d1(1.0) == doctest::Approx(2.0));
  const auto back = Potential::from_json(phi.to_json());
  CHECK(back.id() == phi.id());
  CHECK(back.value1(0.1) == doctest::Approx(phi.value1(0.1)).epsilon(1e-15));
}

TEST_CASE("lq-squared potential: derivatives and partition") {
  const auto phi = make_lq_squared(1.5, 0.7, 3);
  const Vec y = (Vec(3) << 0.3, -0.8, 1.1).finished();
  CHECK((phi.gradient(y) - fd_grad(phi, y)).norm() < 1e-7);
  Mat fd(3, 3);
  for (int i = 0; i < 3; ++i) {
    Vec a = y, b = y;
    a(i) += 1e-5;
    b(i) -= 1e-5;
    fd.col(i) = (phi.gradient(a) - phi.gradient(b)) / 2e-5;
  }
  CHECK((phi.hessian(y) - fd).norm() < 1e-6);
  // d = 1 reduces to a Gaussian with precision 2a.
  const auto one = make_lq_squared(1.5, 0.7, 1);
  CHECK(std::abs(log_partition(one).first - 0.5 * std::log(M_PI / 0.7)) < 1e-13);
}

TEST_CASE("tabulated potential must be convex") {
  CHECK_NOTHROW(make_tabulated({-1, 0, 1}, {1, 0, 1}));
  CHECK_THROWS_AS(make_tabulated({-1, 0, 1}, {0, 1, 0}), InputError);
  const auto t = make_tabulated({-1, 0, 1}, {1, 0, 1});
  CHECK(std::abs(log_partition(t).first - std::log(2.0 * (1.0 - std::exp(-1.0)))) < 1e-14);
}

TEST_CASE("schema errors are InputError") {
  Json j = {{"kind", "gaussian"}, {"dim", 1}, {"params", {{"mean", {0.0}}, {"cov", {{1.0}}}}}, {"extra", 1}};
  CHECK_THROWS_AS(Potential::from_json(j), InputError);
  Json k = {{"kind", "banana"}, {"dim", 1}};
  CHECK_THROWS_AS(Potential::from_json(k), InputError);
}

TEST_CASE("domains restrict the oracles") {
  Domain box;
  box.kind = Domain::Kind::box;
  box.lo = Vec::Constant(1, -1.0);
  box.hi = Vec::Constant(1, 1.0);
  const auto phi = make_separable({{Scalar1D::Kind::quadratic, 1.0, 0.0, 2.0}}).with_domain(box);
  CHECK(phi.in_domain(vec1(0.5)));
  CHECK_THROWS_AS(phi.value(vec1(2.0)), DomainError);
  CHECK(std::isinf(phi.value1(2.0)));
  const double want = std::log(std::sqrt(2 * M_PI) * std::erf(1 / std::sqrt(2.0))) - 0.5 * std::log(2 * M_PI);
  CHECK(std::abs(log_partition(phi).first - want) < 1e-11);
}
