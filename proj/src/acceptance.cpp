#include "llt/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "llt/dp_planner.hpp"
#include "llt/gibbs_discrete.hpp"
#include "llt/llt_engine.hpp"
#include "llt/localization.hpp"
#include "llt/prox_sampler.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Collects the parts of one criterion. The margin is the smallest slack
// (limit - value for upper bounds, value - bound for lower bounds) over the
// numerical parts; the runtime part decides pass/fail only.
class Tally {
 public:
  explicit Tally(std::string name) : start_(std::chrono::steady_clock::now()) { rep_.name = std::move(name); }

  void upper(const std::string& part, double value, double tol) {
    add(part, value, tol, "<=", value <= tol, tol - value);
  }
  void lower(const std::string& part, double value, double bound) {
    add(part, value, bound, ">=", value >= bound, value - bound);
  }
  Json& witnesses() { return rep_.witnesses; }

  CheckReport finish(double seconds_limit) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const double margin = margin_;
    upper("seconds", secs, seconds_limit);
    rep_.margin = margin;
    rep_.status = failed_ ? CheckReport::Status::fail : CheckReport::Status::pass;
    return rep_;
  }

 private:
  void add(const std::string& part, double value, double limit, const char* rel, bool ok, double slack) {
    rep_.witnesses["parts"][part] = {{"value", value}, {rel, limit}, {"pass", ok}};
    if (!ok || std::isnan(value)) failed_ = true;
    margin_ = std::min(margin_, std::isnan(value) ? -kInf : slack);
  }

  CheckReport rep_;
  double margin_ = kInf;
  bool failed_ = false;
  std::chrono::steady_clock::time_point start_;
};

const double kAlphas[] = {0.25, 1.0, 4.0};
const int kTaus[] = {1, 2, 8};

// pi = N(0, I_2 / alpha) with phi = |y|^2 / 2, started from an offset and
// anisotropic Gaussian with finite chi^2.
GaussianSeries alpha_tau_series(double alpha, int tau, int steps) {
  const auto model = gaussian_model(2, 1.0 / std::sqrt(alpha), tau);
  GaussianLaw init;
  init.mean = (Vec(2) << 1.0, -0.5).finished() / std::sqrt(alpha);
  init.cov = (Vec(2) << 0.6, 1.5).finished().asDiagonal();
  init.cov /= alpha;
  return gaussian_prox_series(model, init, steps);
}

Potential laplace_phi() { return make_separable({{Scalar1D::Kind::abs, 1.0, 0.0, 2.0}}); }
Potential quartic_phi() { return normalize(make_separable({{Scalar1D::Kind::quartic, 1.0, 0.0, 2.0}})).first; }
Potential gaussian_phi() { return make_gaussian(Vec::Zero(1), Mat::Identity(1, 1)); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

// Independent substitution oracle for the DP schedules, in long double.
struct OraclePlan {
  long double k, mu, theta, alpha, tau, T;
};

OraclePlan dp_oracle(const DpInstance& in, bool sco) {
  using LD = long double;
  const LD n = in.n, e = in.epsilon, dl = in.delta, G = in.G, D = in.D, p = in.p, d = in.d;
  const LD a = 1.0L / (d * std::log(d));
  const LD theta = 1.0L + 1.0L / a + std::sqrt(d / a * std::log(a + d / a));
  const LD L = -std::log(2.0L * dl);
  const LD log_beta = G * D;
  OraclePlan o{};
  o.theta = theta;
  LD scale;
  if (!sco) {
    o.k = std::sqrt(d) * n * e / (G * std::sqrt(2.0L * theta * L));
    o.mu = 2.0L * G * G * o.k * L / (n * n * e * e);
    scale = n * n * e * e;
  } else {
    const LD r = std::sqrt(d * L / (e * e * n * n) + 1.0L / n);
    const LD m = std::min(e * e * n * n / L, n * d);
    o.k = r * m / (G * std::sqrt(theta));
    o.mu = G * G * o.k * std::max(L / (n * n * e * e), 1.0L / (n * d));
    scale = std::min(n * n * e * e, n * d);
  }
  o.alpha = 2.0L * a * o.k * o.mu / (p - 1.0L);
  o.tau = scale * (std::log(n) + std::log(d) + std::log(log_beta) - std::log(dl));
  o.T = o.tau / o.alpha * (log_beta - std::log(dl));
  return o;
}

double rel_err(double got, long double want) { return double(std::abs((got - want) / want)); }

}  // namespace

Suite parse_suite(std::string_view s) {
  if (s == "gaussian") return Suite::gaussian;
  if (s == "localization") return Suite::localization;
  if (s == "llt") return Suite::llt;
  if (s == "discrete") return Suite::discrete;
  if (s == "appendix") return Suite::appendix;
  if (s == "dp") return Suite::dp;
  if (s == "all") return Suite::all;
  throw InputError("unknown suite '" + std::string(s) + "'");
}

std::string_view suite_name(Suite s) {
  switch (s) {
    case Suite::gaussian: return "gaussian";
    case Suite::localization: return "localization";
    case Suite::llt: return "llt";
    case Suite::discrete: return "discrete";
    case Suite::appendix: return "appendix";
    case Suite::dp: return "dp";
    case Suite::all: return "all";
  }
  return "?";
}

std::vector<int> suite_criteria(Suite s) {
  switch (s) {
    case Suite::gaussian: return {1, 2, 8};
    case Suite::localization: return {3, 4};
    case Suite::llt: return {6, 7};
    case Suite::discrete: return {5};
    case Suite::appendix: return {8, 9};
    case Suite::dp: return {10};
    case Suite::all: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  }
  return {};
}

CheckReport run_criterion(int i, std::uint64_t seed) {
  static const char* names[] = {"chi2_rate",          "dual_poincare",       "martingale",
                                "markov_equivalence", "discrete_gibbs",      "convolution_identity",
                                "llt_derivatives",    "kl_rate",             "quartic_counterexample",
                                "dp_formulas"};
  if (i < 1 || i > kCriterionCount) throw InputError("criterion number out of range");
  try {
    switch (i) {
      case 1: return chi2_rate_check();
      case 2: return dual_poincare_check();
      case 3: return martingale_suite_check();
      case 4: return markov_equivalence_check(seed);
      case 5: return discrete_gibbs_check(seed);
      case 6: return convolution_identity_check();
      case 7: return llt_derivative_check();
      case 8: return kl_rate_check();
      case 9: return quartic_counterexample_check();
      default: return dp_formula_check(seed);
    }
  } catch (const std::exception& e) {
    CheckReport r;
    r.name = names[i - 1];
    r.status = CheckReport::Status::fail;
    r.margin = -kInf;
    r.witnesses["error"] = e.what();
    return r;
  }
}

CheckReport chi2_rate_check() {
  Tally t("chi2_rate");
  double worst = -kInf;
  Json wit;
  for (double alpha : kAlphas) {
    for (int tau : kTaus) {
      const auto s = alpha_tau_series(alpha, tau, 20);
      const double rate = 1.0 / ((1.0 + alpha / tau) * (1.0 + alpha / tau));
      for (int k = 1; k <= 20; ++k) {
        if (s.chi2[k - 1] == 0.0) continue;
        const double excess = s.chi2[k] / s.chi2[k - 1] - rate;
        if (excess > worst) {
          worst = excess;
          wit = {{"alpha", alpha}, {"tau", tau}, {"k", k}, {"ratio", s.chi2[k] / s.chi2[k - 1]}, {"bound", rate}};
        }
      }
    }
  }
  t.upper("ratio_minus_rate", worst, 1e-12);
  t.witnesses()["worst"] = wit;
  return t.finish(1.0);
}

CheckReport dual_poincare_check() {
  Tally t("dual_poincare");
  double worst = 0.0;
  Json wit;
  for (double alpha : kAlphas) {
    for (int tau : kTaus) {
      const auto c = gaussian_pi_constants(gaussian_model(2, 1.0 / std::sqrt(alpha), tau));
      const double exact = alpha / (tau * (alpha + tau));
      const double dev = std::abs(c.dual - exact);
      if (dev >= worst) {
        worst = dev;
        wit = {{"alpha", alpha}, {"tau", tau}, {"computed", c.dual}, {"exact", exact}};
      }
    }
  }
  t.upper("max_deviation", worst, 1e-10);
  t.witnesses()["worst"] = wit;
  return t.finish(1.0);
}

CheckReport martingale_suite_check() {
  Tally t("martingale");
  const auto gx = linspace(-3.0, 3.0, 41);
  const auto lx = linspace(-0.95, 0.95, 39);
  for (int tau = 1; tau <= 3; ++tau) {
    const auto g = martingale_check(gaussian_model(1, 0.8), tau, gx);
    t.upper("gaussian_tau" + std::to_string(tau), g.max_deviation, 1e-6);
    const auto l = martingale_check(laplace_noise_model(), tau, lx);
    t.upper("laplace_tau" + std::to_string(tau), l.max_deviation, 1e-6);
  }
  return t.finish(30.0);
}

CheckReport markov_equivalence_check(std::uint64_t seed) {
  Tally t("markov_equivalence");
  const int n = 10000;
  struct Case {
    const char* name;
    JointModel model;
    int tau;
  };
  const Case cases[] = {{"laplace_tau3", laplace_noise_model(), 3}, {"gaussian_tau2", gaussian_model(1, 1.0), 2}};
  std::uint64_t stream = 0;
  for (const auto& c : cases) {
    Rng rs = Rng(seed, 40).split(stream++);
    Rng rd = Rng(seed, 41).split(stream++);
    const Mat seq = sequential_tilts(c.model, c.tau, n, rs);
    const Mat dir = direct_tilts(c.model, c.tau, n, rd);
    const auto res = two_sample_test(seq, dir, 500, seed);
    t.lower(std::string(c.name) + "_p_value", res.p_value, 0.01);
    t.witnesses()[c.name] = {{"statistic", res.statistic}, {"p_value", res.p_value}, {"permutations", res.permutations},
                             {"seed", res.seed}, {"n", n}};
  }
  return t.finish(60.0);
}

CheckReport discrete_gibbs_check(std::uint64_t seed) {
  Tally t("discrete_gibbs");
  Rng rng(seed, 50);
  Json worst_by_check;
  double balance = 0, sup_eq = 0, sup_l2 = 0, var_excess = -kInf;
  for (int i = 0; i < 50; ++i) {
    const int n = i == 49 ? 20 : 2 + int(rng.index(19));
    const int m = i == 49 ? 15 : 2 + int(rng.index(14));
    const auto j = random_joint(n, m, rng);
    const Json rep = gibbs_report(j, seed + i, 1000);
    const Json& c = rep["checks"];
    balance = std::max(balance, c["detailed_balance"]["value"].get<double>());
    sup_eq = std::max(sup_eq, c["sup_equality"]["value"].get<double>());
    sup_l2 = std::max(sup_l2, c["sup_equals_lambda2"]["value"].get<double>());
    var_excess = std::max(var_excess, c["variance_contraction"]["value"].get<double>());
  }
  t.upper("detailed_balance", balance, 1e-12);
  t.upper("forward_backward_sup", sup_eq, 1e-10);
  t.upper("sup_minus_lambda2", sup_l2, 1e-10);
  t.upper("variance_ratio_minus_lambda2_sq", var_excess, 1e-9);
  t.witnesses()["joints"] = 50;
  t.witnesses()["functions_per_joint"] = 1000;
  return t.finish(10.0);
}

CheckReport convolution_identity_check() {
  Tally t("convolution_identity");
  const auto probes = linspace(-0.9, 0.9, 11);
  const std::pair<const char*, Potential> pots[] = {
      {"gaussian", gaussian_phi()}, {"laplace", laplace_phi()}, {"quartic", quartic_phi()}};
  for (const auto& [name, phi] : pots) {
    const LltView v(phi);
    double worst = 0.0, at = 0.0;
    for (double x : probes) {
      const auto c = convolved_llt_check(v, 2, vec1(x));
      const double dev = std::abs(c.lhs - c.rhs);
      if (dev >= worst) worst = dev, at = x;
    }
    t.upper(name, worst, 1e-6);
    t.witnesses()["worst_x"][name] = at;
  }
  return t.finish(30.0);
}

CheckReport llt_derivative_check() {
  Tally t("llt_derivatives");
  struct Case {
    const char* name;
    Potential phi;
    double lo, hi;
  };
  const Case cases[] = {{"gaussian", gaussian_phi(), -3.0, 3.0},
                        {"laplace", laplace_phi(), -0.7, 0.7},
                        {"quartic", quartic_phi(), -3.0, 3.0}};
  // Five-point stencil, so truncation error is O(h^4) and the comparison
  // measures the derivative oracles rather than the stencil.
  const double h = 1e-3;
  auto stencil = [h](double fm2, double fm1, double fp1, double fp2) { return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h); };
  auto rel = [](double approx, double exact) { return std::abs(approx - exact) / (1 + std::abs(exact)); };
  for (const auto& c : cases) {
    const LltView v(c.phi);
    double fd = 0.0, sc = kInf;
    for (double x : linspace(c.lo, c.hi, 15)) {
      const auto e = v.eval1(x);
      const auto m2 = v.eval1(x - 2 * h), m1 = v.eval1(x - h), p1 = v.eval1(x + h), p2 = v.eval1(x + 2 * h);
      fd = std::max(fd, rel(stencil(m2.value, m1.value, p1.value, p2.value), e.d1));
      fd = std::max(fd, rel(stencil(m2.d1, m1.d1, p1.d1, p2.d1), e.d2));
      fd = std::max(fd, rel(stencil(m2.d2, m1.d2, p1.d2, p2.d2), e.d3));
      sc = std::min(sc, 2.0 * std::pow(e.d2, 1.5) - std::abs(e.d3));
    }
    t.upper(std::string(c.name) + "_finite_difference", fd, 1e-5);
    t.lower(std::string(c.name) + "_self_concordance", sc, -1e-6);
  }

  // Gradient and Hessian of the d = 2 lq transform against differences of
  // the value and the gradient.
  const LltView lq(make_lq_squared(1.5, 1.0, 2));
  double fd2 = 0.0;
  for (const Vec& x : {Vec((Vec(2) << 0.3, -0.2).finished()), Vec((Vec(2) << -1.1, 0.7).finished()),
                       Vec((Vec(2) << 0.0, 1.5).finished())}) {
    const auto e = lq.eval(x, 2);
    for (int i = 0; i < 2; ++i) {
      LltEval ev[4];
      for (int s = 0; s < 4; ++s) {
        Vec xs = x;
        xs(i) += h * (s < 2 ? s - 2 : s - 1);
        ev[s] = lq.eval(xs, 1);
      }
      fd2 = std::max(fd2, rel(stencil(ev[0].value, ev[1].value, ev[2].value, ev[3].value), e.grad(i)));
      for (int j = 0; j < 2; ++j)
        fd2 = std::max(fd2, rel(stencil(ev[0].grad(j), ev[1].grad(j), ev[2].grad(j), ev[3].grad(j)), e.hess(j, i)));
    }
  }
  t.upper("lq2_finite_difference", fd2, 1e-5);
  return t.finish(30.0);
}

CheckReport kl_rate_check() {
  Tally t("kl_rate");
  double worst = -kInf;
  Json wit;
  for (double alpha : kAlphas) {
    for (int tau : kTaus) {
      const auto s = alpha_tau_series(alpha, tau, 20);
      for (int k = 1; k <= 20; ++k) {
        const double bound = std::pow(1.0 + alpha / tau, -(2.0 * k - 1.0)) * s.kl[0];
        const double excess = s.kl[k] - bound;
        if (excess > worst) {
          worst = excess;
          wit = {{"alpha", alpha}, {"tau", tau}, {"k", k}, {"kl", s.kl[k]}, {"bound", bound}};
        }
      }
    }
  }
  t.upper("kl_minus_bound", worst, 1e-12);
  t.witnesses()["worst"] = wit;
  return t.finish(1.0);
}

CheckReport quartic_counterexample_check() {
  Tally t("quartic_counterexample");
  const auto q = x4_counterexample_check();
  t.upper("block_value_error", std::abs(q.block_value + 6.0), 0.0);
  t.lower("conv_hessian_violation", q.half_hess - q.conv_hess, 1e-6);
  t.witnesses()["block_value"] = q.block_value;
  t.witnesses()["witness_w"] = q.witness;
  t.witnesses()["conv_hessian"] = q.conv_hess;
  t.witnesses()["half_hessian"] = q.half_hess;
  return t.finish(30.0);
}

CheckReport dp_formula_check(std::uint64_t seed) {
  Tally t("dp_formulas");
  Rng rng(seed, 100);
  double worst = 0.0;
  Json wit;
  for (int i = 0; i < 20; ++i) {
    DpInstance in;
    in.n = std::round(std::exp(std::log(50.0) + rng.uniform() * std::log(2e4)));
    in.epsilon = 0.05 + 0.95 * rng.uniform();
    in.delta = std::pow(10.0, -3.0 - 7.0 * rng.uniform());
    in.G = 0.5 + 4.5 * rng.uniform();
    in.D = 0.5 + 9.5 * rng.uniform();
    in.p = 1.1 + 0.8 * rng.uniform();
    in.d = 2 + int(rng.index(49));
    for (bool sco : {false, true}) {
      const DpPlan plan = sco ? plan_sco(in) : plan_erm(in);
      const OraclePlan o = dp_oracle(in, sco);
      const double errs[] = {rel_err(plan.k, o.k),         rel_err(plan.mu, o.mu),   rel_err(plan.theta, o.theta),
                             rel_err(plan.alpha, o.alpha), rel_err(plan.tau, o.tau), rel_err(plan.T, o.T)};
      const double e = *std::max_element(std::begin(errs), std::end(errs));
      if (e >= worst) {
        worst = e;
        wit = in.to_json();
        wit["problem"] = sco ? "sco" : "erm";
      }
    }
  }
  t.upper("oracle_relative_error", worst, 1e-12);
  t.witnesses()["worst_instance"] = wit;

  ToyConfig cfg;
  cfg.inst.n = 200;
  cfg.inst.epsilon = 1.0;
  cfg.inst.delta = 1e-6;
  cfg.inst.d = 2;
  cfg.inst.p = 1.5;
  cfg.inst.G = 1.0;
  cfg.inst.D = 2.0;
  double mean = 0.0;
  std::vector<double> risks;
  for (int s = 0; s < 20; ++s) {
    Rng r = Rng(seed, 101).split(s);
    const auto losses = synthetic_losses(200, 2, 1.0, 1.5, r);
    const auto res = run_toy_erm(cfg, losses, r);
    risks.push_back(res.excess_risk);
    mean += res.excess_risk / 20.0;
  }
  const double bound = 10.0 * excess_risk_scale(cfg.inst);
  t.upper("toy_mean_excess_risk", mean, bound);
  t.witnesses()["toy_excess_risks"] = risks;
  return t.finish(300.0);
}

}  // namespace llt
