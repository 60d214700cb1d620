#pragma once

// Proximal sampler on the joint exp(<x, y> - phi^{*tau}(y) - tau psi(x)) pi(x).
// One iteration draws y ~ T_x exp(-phi^{*tau}) as a sum of tau tilted noise
// draws and then x ~ T_y exp(-tau psi) pi with a backward sampler.

#include <optional>
#include <vector>

#include "llt/common.hpp"
#include "llt/diagnostics.hpp"
#include "llt/localization.hpp"
#include "llt/tilted_sampler.hpp"

namespace llt {

class Rng;

struct ProxConfig {
  JointModel model;                   // tau is model.tau
  int iterations = 1;
  Vec x0;                             // start point when init is empty
  std::optional<GaussianLaw> init;    // initial law; x0 is drawn from it when set
  std::optional<BackwardKind> backend;  // default: BackwardSampler::choose
  BackwardOptions backward;
  double alpha = 0.0;  // declared relative convexity of pi, reported only

  // Throws InputError on bad shapes, tau < 1, K < 1, or a rejection backend
  // whose strong-convexity threshold fails.
  void validate() const;
};

struct ChainStats {
  BackwardKind backend = BackwardKind::exact_gaussian;
  std::vector<Vec> xs;  // x_0 .. x_K
  std::vector<Vec> ys;  // y_0 .. y_{K-1}
  std::vector<double> accept_rate;  // cumulative backward acceptance after iteration k = 1..K
  // Exact law of x_k for gaussian configs (k = 0..K) and its divergences to pi.
  std::vector<GaussianLaw> laws;
  std::vector<double> chi2, kl;
  BackwardStats backward;
};

// y = a_1 + ... + a_tau with a_i iid ~ T_x exp(-phi).
Vec forward_step(const JointModel& model, const Vec& x, Rng& rng);

class ProxChain {
 public:
  explicit ProxChain(ProxConfig cfg);
  const ProxConfig& config() const { return cfg_; }
  Vec forward(const Vec& x, Rng& rng) const { return forward_step(cfg_.model, x, rng); }
  Vec backward(const Vec& y, Rng& rng) { return sampler_.draw(y, rng); }
  const BackwardSampler& sampler() const { return sampler_; }
  ChainStats run(Rng& rng);

 private:
  ProxConfig cfg_;
  BackwardSampler sampler_;
};

ChainStats run_chain(const ProxConfig& cfg, Rng& rng);

// One iteration of the exact chain on a gaussian model: x' = A x + b + N(0, Q).
struct GaussianProxKernel {
  Mat A, Q;
  Vec b;
  GaussianLaw pi;
  GaussianLaw step(const GaussianLaw& law) const;
};
GaussianProxKernel gaussian_prox_kernel(const JointModel& model);

// Divergence series of the exact chain started from init, k = 0..K. The
// deviation from pi is propagated directly (dm' = A dm, E' = A E A^T).
struct GaussianSeries {
  std::vector<double> chi2, kl;
};
GaussianSeries gaussian_prox_series(const JointModel& model, const GaussianLaw& init, int iterations);

// PI constants of a gaussian model: alpha for pi in the metric of psi and
// the constant of the y-marginal in the metric of phi.
struct GaussianPiConstants {
  double alpha = 0.0;
  double dual = 0.0;
  double halfway_sup = 0.0;  // sup over linear g of Var[E(g | y)] / Var[g]
};
GaussianPiConstants gaussian_pi_constants(const JointModel& model);

// Rejection threshold: tau * (regularizer modulus) >= 1e4 G^2 log(1/delta),
// with G the Lipschitz constant of the mixture part of the target.
struct ThresholdCheck {
  double lhs = 0.0, rhs = 0.0;
  bool holds() const { return lhs >= rhs; }
};
ThresholdCheck rejection_threshold(const BackwardSampler& sampler, const Target& target, double delta);

// One-step kernel p(x' | x) of the chain in d = 1 by quadrature over y, and
// its CDF in x'.
double gibbs_kernel_density(const JointModel& model, double x, double x_prime);
double gibbs_kernel_cdf(const JointModel& model, double x, double x_prime);

struct GibbsEquivalenceReport {
  double max_deviation = 0.0;  // empirical vs quadrature CDF of x'
  double worst_x = 0.0, worst_x_prime = 0.0;
  double detailed_balance = 0.0;  // max |pi(x) p(x'|x) - pi(x') p(x|x')| on the grid
};
GibbsEquivalenceReport gibbs_equivalence_check(const JointModel& model, const std::vector<double>& x_grid,
                                               const std::vector<double>& x_prime_grid, int n, Rng& rng);

}  // namespace llt
