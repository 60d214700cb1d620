#include <doctest.h>

#include <cmath>

#include "llt/dp_planner.hpp"
#include "llt/potentials.hpp"
#include "llt/rng.hpp"

using namespace llt;

namespace {

DpConstants fixed_range(double theta) {
  DpConstants c;
  c.theta_value = theta;
  return c;
}

}  // namespace

TEST_CASE("erm schedule by substitution") {
  DpInstance in;
  in.n = 1000;
  in.epsilon = 1.0;
  in.delta = 1e-6;
  in.d = 10;
  const auto plan = plan_erm(in, fixed_range(1.0));
  CHECK(plan.k == doctest::Approx(std::sqrt(10.0) * 1000.0 / std::sqrt(2.0 * std::log(5e5))).epsilon(1e-14));
  CHECK(plan.k == doctest::Approx(617.3).epsilon(1e-4));
  CHECK(plan.mu == doctest::Approx(0.01620).epsilon(2e-4));
  CHECK(plan.a == doctest::Approx(1.0 / (10.0 * std::log(10.0))));
  CHECK(plan.alpha == doctest::Approx(2.0 * plan.a * plan.k * plan.mu / 0.5));

  DpInstance in2 = in;
  in2.n *= 2;
  const auto p2 = plan_erm(in2, fixed_range(1.0));
  CHECK(p2.k == doctest::Approx(2.0 * plan.k));
  CHECK(p2.mu == doctest::Approx(0.5 * plan.mu));
  CHECK(plan_erm(in, fixed_range(4.0)).k == doctest::Approx(0.5 * plan.k));

  // beta = exp(G D) by default, so log beta = 2.
  CHECK(plan.beta == doctest::Approx(std::exp(2.0)));
  CHECK(plan.tau == doctest::Approx(1e6 * std::log(1000.0 * 10.0 * 2.0 / 1e-6)));
  CHECK(plan.T == doctest::Approx(plan.tau / plan.alpha * std::log(std::exp(2.0) / 1e-6)));
}

TEST_CASE("sco schedule by substitution and branch continuity") {
  DpInstance in;
  in.n = 1e6;
  in.epsilon = 0.1;
  in.delta = 1e-6;
  in.d = 10;
  const auto plan = plan_sco(in, fixed_range(1.0));
  const double L = std::log(1.0 / 2e-6), ne2 = 1e12 * 0.01;
  const double k = std::sqrt(10.0 * L / ne2 + 1e-6) * std::min(ne2 / L, 1e7);
  CHECK(plan.k == doctest::Approx(k).epsilon(1e-14));
  CHECK(plan.mu == doctest::Approx(k * std::max(L / ne2, 1.0 / 1e7)).epsilon(1e-14));
  CHECK(plan.mu * ne2 >= k * L * (1.0 - 1e-15));

  // ne2 / L = n d at d = ne2 / (L n); both branches agree there.
  DpInstance sw = in;
  sw.n = 1000;
  sw.epsilon = 0.5;
  const double dstar = sw.n * sw.epsilon * sw.epsilon / L;
  auto k_at = [&](double dd) {
    const double n2 = sw.n * sw.n * sw.epsilon * sw.epsilon;
    return std::sqrt(dd * L / n2 + 1.0 / sw.n) * std::min(n2 / L, sw.n * dd);
  };
  for (int d = 1; d <= 30; ++d) {
    sw.d = d;
    CHECK(plan_sco(sw, fixed_range(1.0)).k == doctest::Approx(k_at(d)).epsilon(1e-13));
  }
  CHECK(std::abs(k_at(dstar * (1 + 1e-9)) - k_at(dstar * (1 - 1e-9))) < 1e-6 * k_at(dstar));
}

TEST_CASE("regularizer range surrogate") {
  // a = d gives 1 + 1/d + sqrt(log(d + 1)); the constant 2 appears only at d = 1.
  for (int d : {1, 2, 5, 9}) CHECK(regularizer_range(1.5, d, d) == doctest::Approx(1.0 + 1.0 / d + std::sqrt(std::log(d + 1.0))));
  CHECK(regularizer_range(1.5, 1.0, 1) == doctest::Approx(2.0 + std::sqrt(std::log(2.0))));
  CHECK(regularizer_range(1.5, 1.0, 2, 3.0) == doctest::Approx(3.0 * regularizer_range(1.5, 1.0, 2)));
  const double grid = regularizer_range_grid(1.5, 1.0);
  CHECK(grid > 0.0);
  CHECK(grid <= regularizer_range(1.5, 1.0, 2));
  CHECK_THROWS_AS(regularizer_range(2.0, 1.0, 2), InputError);
  CHECK_THROWS_AS(regularizer_range(1.5, 0.0, 2), InputError);
}

TEST_CASE("alpha psi is k mu strongly convex in the p-norm") {
  Rng rng(5);
  for (int d : {2, 3}) {
    for (double p : {1.2, 1.5, 1.8}) {
      DpInstance in;
      in.d = d;
      in.p = p;
      const auto plan = plan_erm(in);
      CHECK(plan.a == doctest::Approx(1.0 / (d * std::log(double(d)))));
      CHECK(strong_convexity_check(plan, p, d, 60, rng).min_ratio >= 1.0 - 1e-6);
    }
  }
}

TEST_CASE("plans reject degenerate input and scale monotonically") {
  DpInstance in;
  CHECK_NOTHROW(in.validate());
  DpInstance bad = in;
  bad.p = 2.0;
  CHECK_THROWS_AS(plan_erm(bad), InputError);
  bad = in;
  bad.p = 1.0;
  CHECK_THROWS_AS(plan_erm(bad), InputError);
  bad = in;
  bad.delta = 1.0;
  CHECK_THROWS_AS(plan_erm(bad), InputError);
  bad = in;
  bad.beta = 1.0;  // log beta = 0
  CHECK_THROWS_AS(plan_erm(bad), InputError);
  CHECK_THROWS_AS(plan_erm(in, fixed_range(-1.0)), InputError);

  double prev = excess_risk_scale(in);
  for (double n : {2e3, 4e3, 8e3}) {
    DpInstance m = in;
    m.n = n;
    CHECK(excess_risk_scale(m) < prev);
    prev = excess_risk_scale(m);
  }
  DpInstance e = in;
  e.epsilon = 0.5;
  CHECK(excess_risk_scale(e) > excess_risk_scale(in));

  const auto plan = plan_erm(in);
  CHECK(plan.threshold_lhs == doctest::Approx(plan.tau * plan.k * plan.mu));
  const Json j = plan.to_json(in);
  CHECK(j["surrogate"].size() == 5);
  CHECK(DpInstance::from_json(in.to_json()).n == in.n);
  Json extra = in.to_json();
  extra["nn"] = 3;
  CHECK_THROWS_AS(DpInstance::from_json(extra), InputError);
  CHECK_THROWS_AS(DpConstants::from_json(Json{{"c_tau", "x"}}), InputError);
}

TEST_CASE("toy target assembly and sampling") {
  Rng rng(77);
  ToyConfig cfg;
  cfg.inst.n = 200;
  cfg.inst.d = 2;
  cfg.grid_nodes = 32;
  cfg.iterations = 4;
  const auto losses = synthetic_losses(200, 2, 1.0, 1.5, rng);
  for (const auto& g : losses) CHECK(lp_norm(g, 3.0) == doctest::Approx(1.0));

  std::vector<Vec> pts;
  for (int i = 0; i < 50; ++i) {
    Vec x(2);
    x << 1.6 * rng.uniform() - 0.8, 1.0 * rng.uniform() - 0.5;
    if (lp_norm(x, 1.5) < 1.0) pts.push_back(x);
  }
  CHECK(toy_target_identity(cfg, losses, pts) < 1e-10);

  // Zero losses: symmetric target, mean of the draws near 0.
  const std::vector<Vec> zero(4, Vec::Zero(2));
  Mat xs(2, 20);
  for (int s = 0; s < 20; ++s) {
    Rng r = rng.split(s);
    xs.col(s) = run_toy_erm(cfg, zero, r).x;
  }
  for (int i = 0; i < 2; ++i) {
    const double m = xs.row(i).mean();
    const double sd = std::sqrt((xs.row(i).array() - m).square().sum() / 19.0);
    CHECK(std::abs(m) < 4.0 * sd / std::sqrt(20.0));
  }

  // A single loss pushes the draws to the face minimizing <g, x>.
  cfg.inst.n = 2000;
  Vec g(2);
  g << 1.0, 0.0;
  double first = 0.0;
  for (int s = 0; s < 4; ++s) {
    Rng r = rng.split(100 + s);
    const auto res = run_toy_erm(cfg, {g}, r);
    first += res.x(0) / 4.0;
    CHECK(res.excess_risk >= -2.0 / 32);
    CHECK(res.accept_rate == 1.0);
  }
  CHECK(first < -0.5);

  ToyConfig big = cfg;
  big.inst.d = 4;
  CHECK_THROWS_AS(run_toy_erm(big, {Vec::Zero(4)}, rng), InputError);
  Vec too_long(2);
  too_long << 2.0, 0.0;
  CHECK_THROWS_AS(run_toy_erm(cfg, {too_long}, rng), InputError);
}
