#include "llt/dp_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "llt/llt_engine.hpp"
#include "llt/potentials.hpp"
#include "llt/prox_sampler.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const char* msg) {
  if (!ok) throw InputError(std::string("dp: ") + msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double log_checked(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("dp: degenerate logarithm argument in ") + what);
  return std::log(v);
}

double dual_order(double p) { return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0); }

// tau and T from the common tail of both schedules; `scale` is n^2 eps^2 for
// ERM and min(n^2 eps^2, n d) for SCO.
void finish_plan(DpPlan& plan, const DpInstance& inst, const DpConstants& c, double scale) {
  require(inst.p > 1.0, "p = 1 gives an unbounded relative convexity alpha");
  plan.a = c.a ? *c.a : default_lq_a(inst.d);
  require(finite_positive(plan.a), "lq parameter a must be positive");
  plan.alpha = 2.0 * plan.a * plan.k * plan.mu / (inst.p - 1.0);
  plan.beta = warm_start_beta(inst, c);
  const double log_beta = log_checked(plan.beta, "log beta");
  const double inner = log_checked(inst.n * inst.d * log_beta / inst.delta, "tau");
  require(inner > 0.0, "tau schedule has a non-positive logarithm");
  plan.tau = c.c_tau * scale * inner;
  const double t_log = log_checked(plan.beta / inst.delta, "T");
  plan.T = c.c_T * (plan.tau / plan.alpha) * t_log;
  plan.threshold_lhs = plan.tau * plan.k * plan.mu;
  const double kg = plan.k * inst.G;
  plan.threshold_rhs = c.c_reject * 1e4 * kg * kg * std::log(std::max(plan.T, 1.0) / inst.delta);
  plan.constants = c;
}

std::vector<Vec> ball_grid(int d, int nodes, double p) {
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= std::size_t(nodes);
  const double h = 2.0 / nodes;
  Vec x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (int i = 0; i < d; ++i) {
      x(i) = -1.0 + (double(r % nodes) + 0.5) * h;
      r /= nodes;
    }
    if (lp_norm(x, p) <= 1.0) pts.push_back(x);
  }
  return pts;
}

Target toy_target(const DpPlan& plan, const DpInstance& inst, const std::vector<Vec>& losses) {
  MixtureParams mix;
  mix.loss = MixtureParams::Loss::linear;
  mix.gradients = losses;
  mix.weight = plan.k;
  mix.lipschitz = inst.G;
  mix.p = inst.p;
  Domain dom;
  dom.kind = Domain::Kind::lp_ball;
  dom.p = inst.p;
  dom.radius = 1.0;
  Potential base = make_mixture(std::move(mix), inst.d).with_domain(dom);
  auto psi = std::make_shared<const LltView>(make_lq_squared(inst.p, plan.a, inst.d));
  return Target{std::move(base), plan.alpha, std::move(psi)};
}

void check_toy(const ToyConfig& cfg, const std::vector<Vec>& losses) {
  cfg.inst.validate();
  require(cfg.inst.d <= 3, "the toy run supports d <= 3 only");
  require(cfg.iterations >= 1 && cfg.tau >= 1, "toy iterations and tau must be >= 1");
  require(cfg.grid_nodes >= 8, "toy grid needs at least 8 nodes per axis");
  require(std::pow(double(cfg.grid_nodes), cfg.inst.d) <= double(1 << 24), "toy grid exceeds 2^24 cells");
  require(!losses.empty(), "toy run needs at least one loss");
  const double q = dual_order(cfg.inst.p);
  for (const auto& g : losses) {
    require(g.size() == cfg.inst.d, "loss gradient has the wrong dimension");
    require(lp_norm(g, q) <= cfg.inst.G * (1.0 + 1e-12), "loss gradient exceeds the Lipschitz bound G");
  }
}

Vec mean_gradient(const std::vector<Vec>& losses) {
  Vec m = Vec::Zero(losses.front().size());
  for (const auto& g : losses) m += g;
  return m / double(losses.size());
}

double plan_range(const DpInstance& inst, const DpConstants& c) {
  if (c.theta_value) return *c.theta_value;
  return regularizer_range(inst.p, c.a ? *c.a : default_lq_a(inst.d), inst.d, c.theta);
}

}  // namespace

void DpInstance::validate() const {
  require(std::isfinite(n) && n >= 1.0, "n must be >= 1");
  require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(finite_positive(G), "G must be positive");
  require(finite_positive(D), "D must be positive");
  require(p >= 1.0 && p < 2.0, "p must lie in [1, 2)");
  require(d >= 1, "d must be >= 1");
  if (beta) require(std::isfinite(*beta) && *beta >= 1.0, "beta must be >= 1");
}

Json DpInstance::to_json() const {
  Json j;
  j["n"] = n;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["G"] = G;
  j["D"] = D;
  j["p"] = p;
  j["d"] = d;
  if (beta) j["beta"] = *beta;
  return j;
}

namespace {

void check_fields(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw InputError(std::string(what) + ": unknown field '" + key + "'");
  }
}

double number(const Json& j, const char* key, double fallback, const char* what) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InputError(std::string(what) + ": field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

DpInstance DpInstance::from_json(const Json& j) {
  check_fields(j, {"n", "epsilon", "delta", "G", "D", "p", "d", "beta"}, "dp instance");
  for (const char* key : {"n", "epsilon", "delta", "d"})
    if (!j.contains(key)) throw InputError(std::string("dp instance: missing field '") + key + "'");
  DpInstance inst;
  inst.n = number(j, "n", inst.n, "dp instance");
  inst.epsilon = number(j, "epsilon", inst.epsilon, "dp instance");
  inst.delta = number(j, "delta", inst.delta, "dp instance");
  inst.G = number(j, "G", inst.G, "dp instance");
  inst.D = number(j, "D", inst.D, "dp instance");
  inst.p = number(j, "p", inst.p, "dp instance");
  if (!j.at("d").is_number_integer()) throw InputError("dp instance: field 'd' must be an integer");
  inst.d = j.at("d").get<int>();
  if (j.contains("beta")) inst.beta = number(j, "beta", 1.0, "dp instance");
  inst.validate();
  return inst;
}

void DpConstants::validate() const {
  for (double v : {theta, c_tau, c_T, c_beta, c_reject}) require(finite_positive(v), "constants must be positive");
  if (a) require(finite_positive(*a), "constant a must be positive");
  if (theta_value) require(finite_positive(*theta_value), "fixed range must be positive");
}

Json DpConstants::to_json() const {
  Json j;
  j["theta"] = theta;
  j["c_tau"] = c_tau;
  j["c_T"] = c_T;
  j["c_beta"] = c_beta;
  j["c_reject"] = c_reject;
  if (a) j["a"] = *a;
  if (theta_value) j["theta_value"] = *theta_value;
  return j;
}

DpConstants DpConstants::from_json(const Json& j) {
  check_fields(j, {"theta", "c_tau", "c_T", "c_beta", "c_reject", "a", "theta_value"}, "dp constants");
  DpConstants c;
  c.theta = number(j, "theta", c.theta, "dp constants");
  c.c_tau = number(j, "c_tau", c.c_tau, "dp constants");
  c.c_T = number(j, "c_T", c.c_T, "dp constants");
  c.c_beta = number(j, "c_beta", c.c_beta, "dp constants");
  c.c_reject = number(j, "c_reject", c.c_reject, "dp constants");
  if (j.contains("a")) c.a = number(j, "a", 1.0, "dp constants");
  if (j.contains("theta_value")) c.theta_value = number(j, "theta_value", 1.0, "dp constants");
  c.validate();
  return c;
}

Json DpPlan::to_json(const DpInstance& inst) const {
  Json j;
  j["problem"] = problem == DpProblem::erm ? "erm" : "sco";
  j["instance"] = inst.to_json();
  j["k"] = k;
  j["mu"] = mu;
  j["theta"] = theta;
  j["a"] = a;
  j["alpha"] = alpha;
  j["tau"] = tau;
  j["T"] = T;
  j["beta"] = beta;
  j["target"] = "k*F + alpha*psi_{p,a}";
  j["rejection_threshold"] = {{"lhs", threshold_lhs}, {"rhs", threshold_rhs}, {"holds", threshold_holds()}};
  j["constants"] = constants.to_json();
  j["surrogate"] = Json::array({"theta", "tau", "T", "beta", "rejection_threshold"});
  return j;
}

double default_lq_a(int d) {
  if (d < 1) throw InputError("dp: d must be >= 1");
  return d == 1 ? 1.0 : 1.0 / (d * std::log(double(d)));
}

double regularizer_range(double p, double a, int d, double scale) {
  require(p >= 1.0 && p < 2.0, "p must lie in [1, 2)");
  require(finite_positive(a), "a must be positive");
  require(d >= 1, "d must be >= 1");
  require(finite_positive(scale), "range scale must be positive");
  const double da = d / a;
  return scale * (1.0 + 1.0 / a + std::sqrt(da * std::log(a + da)));
}

double regularizer_range_grid(double p, double a, int nodes, int sphere) {
  require(nodes >= 2, "range grid needs >= 2 nodes");
  const LqRadial psi(p, a, 2);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto visit = [&](const Vec& x) {
    const double v = psi.value(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& x : ball_grid(2, nodes, p)) visit(x);
  for (int i = 0; i < sphere; ++i) {
    const double t = 2.0 * kPi * i / sphere;
    Vec x(2);
    x << std::cos(t), std::sin(t);
    visit(x / lp_norm(x, p));
  }
  return hi - lo;
}

double warm_start_beta(const DpInstance& inst, const DpConstants& c) {
  return inst.beta ? *inst.beta : std::exp(c.c_beta * inst.G * inst.D);
}

DpPlan plan_erm(const DpInstance& inst, const DpConstants& c) {
  inst.validate();
  c.validate();
  DpPlan plan;
  plan.problem = DpProblem::erm;
  plan.theta = plan_range(inst, c);
  const double L = log_checked(1.0 / (2.0 * inst.delta), "log(1/(2 delta))");
  const double ne = inst.n * inst.epsilon;
  plan.k = std::sqrt(double(inst.d)) * ne / (inst.G * std::sqrt(2.0 * plan.theta * L));
  plan.mu = 2.0 * inst.G * inst.G * plan.k * L / (ne * ne);
  finish_plan(plan, inst, c, ne * ne);
  return plan;
}

DpPlan plan_sco(const DpInstance& inst, const DpConstants& c) {
  inst.validate();
  c.validate();
  DpPlan plan;
  plan.problem = DpProblem::sco;
  plan.theta = plan_range(inst, c);
  const double L = log_checked(1.0 / (2.0 * inst.delta), "log(1/(2 delta))");
  const double ne2 = inst.n * inst.n * inst.epsilon * inst.epsilon;
  const double nd = inst.n * inst.d;
  plan.k = std::sqrt(inst.d * L / ne2 + 1.0 / inst.n) * std::min(ne2 / L, nd) / (inst.G * std::sqrt(plan.theta));
  plan.mu = inst.G * inst.G * plan.k * std::max(L / ne2, 1.0 / nd);
  finish_plan(plan, inst, c, std::min(ne2, nd));
  return plan;
}

double excess_risk_scale(const DpInstance& inst) {
  return inst.G * inst.D * std::sqrt(inst.d * std::log(1.0 / inst.delta)) / (inst.n * inst.epsilon);
}

ConvexityReport strong_convexity_check(const DpPlan& plan, double p, int d, int probes, Rng& rng) {
  require(probes >= 1, "need at least one probe");
  const LltView psi(make_lq_squared(p, plan.a, d));
  ConvexityReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    Vec x(d), v(d);
    do {
      for (int j = 0; j < d; ++j) x(j) = 2.0 * rng.uniform() - 1.0;
    } while (lp_norm(x, p) > 1.0);
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    const double vp = lp_norm(v, p);
    const double ratio = plan.alpha * v.dot(psi.hess(x) * v) / (plan.k * plan.mu * vp * vp);
    if (ratio < rep.min_ratio) {
      rep.min_ratio = ratio;
      rep.worst_x = x;
      rep.worst_v = v;
    }
  }
  return rep;
}

std::vector<Vec> synthetic_losses(int n, int d, double G, double p, Rng& rng) {
  require(n >= 1 && d >= 1, "loss count and dimension must be >= 1");
  Vec c = Vec::Zero(d);
  for (int j = 0; j < d; ++j) c(j) = std::pow(-0.5, j);
  const double q = dual_order(p);
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec g = c;
    for (int j = 0; j < d; ++j) g(j) += rng.normal();
    out.push_back(G * g / lp_norm(g, q));
  }
  return out;
}

ToyResult run_toy_erm(const ToyConfig& cfg, const std::vector<Vec>& losses, Rng& rng) {
  check_toy(cfg, losses);
  const DpInstance& inst = cfg.inst;
  ToyResult res;
  res.plan = plan_erm(inst, cfg.constants);

  BackwardOptions bo;
  bo.grid_nodes = cfg.grid_nodes;
  ProxChain chain(ProxConfig{make_joint(toy_target(res.plan, inst, losses), make_lq_squared(inst.p, res.plan.a, inst.d), cfg.tau),
                             cfg.iterations, Vec::Zero(inst.d), std::nullopt, BackwardKind::grid, bo, res.plan.alpha});
  const ChainStats st = chain.run(rng);

  const Vec gbar = mean_gradient(losses);
  res.x = st.xs.back();
  res.grid_min = std::numeric_limits<double>::infinity();
  for (const auto& c : ball_grid(inst.d, cfg.grid_nodes, inst.p)) res.grid_min = std::min(res.grid_min, gbar.dot(c));
  res.excess_risk = gbar.dot(res.x) - res.grid_min;
  res.accept_rate = st.backward.accept_rate();
  res.oracle_calls = st.backward.oracle_calls;
  return res;
}

double toy_target_identity(const ToyConfig& cfg, const std::vector<Vec>& losses, const std::vector<Vec>& points) {
  check_toy(cfg, losses);
  const DpPlan plan = plan_erm(cfg.inst, cfg.constants);
  const Target t = toy_target(plan, cfg.inst, losses);
  const LqRadial psi(cfg.inst.p, plan.a, cfg.inst.d);
  const Vec gbar = mean_gradient(losses);
  double worst = 0.0;
  for (const auto& x : points) {
    const double expected = -(plan.k * gbar.dot(x) + plan.alpha * psi.value(x));
    worst = std::max(worst, std::abs(t.log_density(x) - expected));
  }
  return worst;
}

}  // namespace llt
