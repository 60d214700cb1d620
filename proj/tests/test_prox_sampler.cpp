#include <doctest.h>

#include <cmath>

#include "llt/prox_sampler.hpp"
#include "llt/rng.hpp"

using namespace llt;

namespace {
GaussianLaw law1(double m, double v) { return {vec1(m), Mat::Constant(1, 1, v)}; }
}  // namespace

TEST_CASE("forward and backward steps on the gaussian model") {
  const int tau = 3;
  const auto m = gaussian_model(1, 0.5, tau);
  Rng rng(21);
  const int n = 100000;
  const double x = 0.7;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double y = forward_step(m, vec1(x), rng)(0);
    s += y;
    s2 += y * y;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean - tau * x) < 4 * std::sqrt(double(tau) / n));
  CHECK(var == doctest::Approx(tau).epsilon(0.02));

  BackwardSampler back(m.target, m.noise, tau, BackwardKind::exact_gaussian);
  const auto [bm, bc] = back.gaussian_law(vec1(1.3));
  const double prec = tau + 1.0 / 0.25;
  CHECK(bm(0) == doctest::Approx(1.3 / prec).epsilon(1e-14));
  CHECK(bc(0, 0) == doctest::Approx(1.0 / prec).epsilon(1e-14));
}

TEST_CASE("exact gaussian recursion") {
  // pi = N(0, 1), alpha = 1, tau = 1, mu_0 = N(3, 1)
  const auto m = gaussian_model(1, 1.0, 1);
  const auto kern = gaussian_prox_kernel(m);
  GaussianLaw law = law1(3.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto next = kern.step(law);
    CHECK(next.mean(0) == doctest::Approx(law.mean(0) / 2).epsilon(1e-14));
    law = next;
  }
  const auto s = gaussian_prox_series(m, law1(3.0, 1.0), 20);
  for (int k = 1; k <= 20; ++k) CHECK(s.chi2[k] / s.chi2[k - 1] <= 0.25 + 1e-12);
  const auto s4 = gaussian_prox_series(gaussian_model(1, 1.0, 4), law1(-1.0, 0.6), 20);
  for (int k = 1; k <= 20; ++k) CHECK(s4.chi2[k] / s4.chi2[k - 1] <= 0.64 + 1e-9);
  // Starting at pi every iterate is pi
  const auto st = gaussian_prox_series(m, target_law(m), 10);
  for (double c : st.chi2) CHECK(c == 0.0);
  for (double k : st.kl) CHECK(k == 0.0);
}

TEST_CASE("gaussian PI constants") {
  for (double alpha : {0.25, 1.0, 4.0})
    for (int tau : {1, 2, 8}) {
      const auto c = gaussian_pi_constants(gaussian_model(2, 1.0 / std::sqrt(alpha), tau));
      CHECK(c.alpha == doctest::Approx(alpha).epsilon(1e-12));
      CHECK(c.dual == doctest::Approx(alpha / (tau * (alpha + tau))).epsilon(1e-12));
      CHECK(c.halfway_sup == doctest::Approx(1.0 / (1.0 + alpha / tau)).epsilon(1e-12));
    }
}

TEST_CASE("sampled chain follows the exact law") {
  ProxConfig cfg{gaussian_model(1, 0.8, 2)};
  cfg.iterations = 3;
  cfg.init = law1(2.0, 0.5);
  Rng rng(4);
  const int reps = 4000;
  double s = 0;
  ChainStats last;
  for (int r = 0; r < reps; ++r) {
    Rng rr = rng.split(r);
    last = run_chain(cfg, rr);
    s += last.xs.back()(0);
  }
  REQUIRE(last.laws.size() == 4);
  CHECK(last.xs.size() == 4);
  CHECK(last.ys.size() == 3);
  CHECK(last.accept_rate.size() == 3);
  const auto& law = last.laws.back();
  CHECK(std::abs(s / reps - law.mean(0)) < 4 * std::sqrt(law.cov(0, 0) / reps));
  for (std::size_t k = 1; k < last.chi2.size(); ++k) CHECK(last.chi2[k] <= last.chi2[k - 1]);

  ProxConfig bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("one-step kernel by quadrature") {
  const auto g = gaussian_model(1, 1.4, 2);
  const auto kern = gaussian_prox_kernel(g);
  for (double x : {-1.0, 0.4})
    for (double xp : {-0.8, 0.0, 1.5}) {
      const double m = kern.A(0, 0) * x + kern.b(0), v = kern.Q(0, 0);
      const double dens = std::exp(-0.5 * (xp - m) * (xp - m) / v) / std::sqrt(2 * M_PI * v);
      CHECK(gibbs_kernel_density(g, x, xp) == doctest::Approx(dens).epsilon(1e-8));
      CHECK(gibbs_kernel_cdf(g, x, xp) == doctest::Approx(0.5 * std::erfc(-(xp - m) / std::sqrt(2 * v))).epsilon(1e-8));
    }
  // symmetric model, x = 0: symmetric kernel
  const auto l = laplace_noise_model(1);
  CHECK(gibbs_kernel_density(l, 0.0, 0.3) == doctest::Approx(gibbs_kernel_density(l, 0.0, -0.3)).epsilon(1e-9));
  Rng rng(8);
  const auto rep = gibbs_equivalence_check(l, {-0.5, 0.2}, {-0.6, -0.2, 0.0, 0.3, 0.7}, 4000, rng);
  CHECK(rep.max_deviation < 0.03);
  CHECK(rep.detailed_balance < 1e-6);
}

TEST_CASE("rejection threshold gate") {
  MixtureParams mp;
  mp.gradients = {(Vec(2) << 1.0, 0.0).finished(), (Vec(2) << 0.0, -1.0).finished()};
  mp.weight = 0.004;
  mp.lipschitz = 1.0;
  mp.p = 1.5;
  Domain dom;
  dom.kind = Domain::Kind::lp_ball;
  dom.p = 1.5;
  const auto base = make_mixture(mp, 2).with_domain(dom);
  const auto reg = make_lq_squared(1.5, 1.0, 2);
  Target t{base, 0.0, nullptr};
  ProxConfig small{make_joint(t, reg, 4)};
  small.iterations = 1;
  small.x0 = Vec::Zero(2);
  small.backend = BackwardKind::rejection;
  CHECK_THROWS_AS(ProxChain{small}, InputError);

  ProxConfig big = small;
  big.model = make_joint(t, reg, 12);
  big.iterations = 2;
  ProxChain chain(big);
  const auto th = rejection_threshold(chain.sampler(), t, big.backward.delta);
  CHECK(th.holds());
  Rng rng(2);
  const auto st = chain.run(rng);
  CHECK(st.xs.size() == 3);
  CHECK(st.backward.draws == 2);
  CHECK(st.backward.accept_rate() > 0.0);
}
