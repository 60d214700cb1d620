#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "llt/gibbs_discrete.hpp"
#include "llt/rng.hpp"

using namespace llt;

TEST_CASE("perfectly correlated and independent joints") {
  const auto diag = DiscreteJoint::from_matrix(0.5 * Mat::Identity(2, 2));
  const auto o = build_operators(diag);
  CHECK(o.K.isApprox(Mat::Identity(2, 2)));
  CHECK(o.PX.isApprox(Mat::Identity(2, 2)));
  CHECK(spectral_gap(diag).lambda2 == doctest::Approx(1.0));
  CHECK(spectral_gap(diag).gap == doctest::Approx(0.0).epsilon(1e-12));
  const auto cc = channel_contraction(diag);
  CHECK(cc.forward_sup == doctest::Approx(1.0));
  CHECK(cc.backward_sup == doctest::Approx(1.0));

  Vec r(3), c(4);
  r << 0.2, 0.5, 0.3;
  c << 0.1, 0.4, 0.25, 0.25;
  const auto ind = DiscreteJoint::from_matrix(r * c.transpose());
  CHECK(std::abs(spectral_gap(ind).lambda2) < 1e-12);
  const auto ci = channel_contraction(ind);
  CHECK(ci.forward_sup < 1e-24);
  CHECK(ci.backward_sup < 1e-24);
  const auto oi = build_operators(ind);
  for (int i = 0; i < 3; ++i) CHECK((oi.PX.row(i).transpose() - r).norm() < 1e-15);
}

TEST_CASE("operator identities on random joints") {
  Rng rng(31);
  for (auto [n, m] : {std::pair{3, 4}, {5, 5}, {6, 5}, {7, 3}, {20, 15}}) {
    const auto j = random_joint(n, m, rng);
    const auto o = build_operators(j);
    CHECK((o.PX.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const Mat rp = j.r.asDiagonal() * o.PX;
    CHECK((rp - rp.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const auto g = spectral_gap(j);
    const auto cc = channel_contraction(j);
    CHECK(std::abs(cc.forward_sup - cc.backward_sup) < 1e-10);
    CHECK(std::abs(cc.forward_sup - g.lambda2) < 1e-10);
    const auto rep = gibbs_report(j, 7, 200);
    for (const auto& [name, c] : rep["checks"].items()) {
      INFO(name);
      CHECK(c["pass"].get<bool>());
    }
  }
}

TEST_CASE("variational brute force agrees with the eigenvalue") {
  Rng rng(5);
  const auto j = random_joint(5, 5, rng);
  const auto o = build_operators(j);
  const double l2 = spectral_gap(j).lambda2;
  // sup of <f, P_X f>_r / Var_r f over mean-zero f, by random search plus the exact top eigenvector
  double best = -1.0;
  for (int t = 0; t < 10000; ++t) {
    Vec f(5);
    for (int i = 0; i < 5; ++i) f(i) = rng.normal();
    f.array() -= j.r.dot(f);
    best = std::max(best, (o.PX * f).cwiseProduct(j.r).dot(f) / f.cwiseProduct(j.r).dot(f));
  }
  CHECK(best <= l2 + 1e-12);
  const Vec rs = j.r.cwiseSqrt();
  const Eigen::SelfAdjointEigenSolver<Mat> es(rs.asDiagonal() * o.PX * rs.cwiseInverse().asDiagonal());
  const Vec f = rs.cwiseInverse().asDiagonal() * es.eigenvectors().col(3);
  const double q = (o.PX * f).cwiseProduct(j.r).dot(f) / f.cwiseProduct(j.r).dot(f);
  CHECK(q == doctest::Approx(l2).epsilon(1e-6));
}

TEST_CASE("mean-zero maps and input validation") {
  Rng rng(9);
  const auto j = random_joint(7, 3, rng);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Vec f(7), g(3);
    for (int i = 0; i < 7; ++i) f(i) = rng.normal();
    for (int i = 0; i < 3; ++i) g(i) = rng.normal();
    f.array() -= j.r.dot(f);
    g.array() -= j.c.dot(g);
    const auto [a, b] = mean_zero_check(j, f, g);
    worst = std::max({worst, std::abs(a), std::abs(b)});
  }
  CHECK(worst <= 1e-12);
  CHECK_THROWS_AS(mean_zero_check(j, Vec::Ones(7), Vec::Zero(3)), InputError);

  Mat z = Mat::Zero(2, 2);
  z(0, 0) = 1.0;
  CHECK_THROWS_AS(DiscreteJoint::from_matrix(z), InputError);
  CHECK_THROWS_AS(DiscreteJoint::from_matrix(Mat::Constant(2, 2, 0.3)), InputError);

  const std::string path = "gibbs_test_joint.csv";
  {
    std::ofstream out(path);
    out << "0.5,0\n0,0.5\n";
  }
  const auto rd = read_joint_csv(path);
  CHECK(rd.P.isApprox(0.5 * Mat::Identity(2, 2)));
  {
    std::ofstream out(path);
    out << "0.5,x\n0,0.5\n";
  }
  CHECK_THROWS_AS(read_joint_csv(path), InputError);
  std::remove(path.c_str());
}
