#pragma once

// Parameter schedules for private empirical and population risk
// minimization by sampling from exp(-k F(x) - alpha psi_{p,a}(x)) on the
// unit lp ball, and a small end-to-end run in d <= 3.
//
// The asymptotic statements behind the schedules leave their constants open.
// Every such constant is a field of DpConstants (default 1) and the plan JSON
// lists them under "surrogate".

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "llt/common.hpp"

namespace llt {

class Rng;
using Json = nlohmann::ordered_json;

struct DpInstance {
  double n = 1000;   // sample count
  double epsilon = 1.0;
  double delta = 1e-6;
  double G = 1.0;    // Lipschitz bound in the dual norm
  double D = 2.0;    // diameter of the domain
  double p = 1.5;    // norm order, in [1, 2)
  int d = 2;
  std::optional<double> beta;  // warm-start chi^2 bound; default exp(c_beta G D)

  void validate() const;
  Json to_json() const;
  static DpInstance from_json(const Json& j);
};

struct DpConstants {
  double theta = 1.0;      // multiplies the regularizer-range bound
  double c_tau = 1.0;
  double c_T = 1.0;
  double c_beta = 1.0;     // warm start beta = exp(c_beta G D)
  double c_reject = 1.0;   // multiplies the 1e4 of the rejection threshold
  std::optional<double> a; // overrides the default lq parameter
  std::optional<double> theta_value;  // fixed range, replacing regularizer_range

  void validate() const;
  Json to_json() const;
  static DpConstants from_json(const Json& j);
};

enum class DpProblem { erm, sco };

struct DpPlan {
  DpProblem problem = DpProblem::erm;
  double k = 0.0;      // inverse temperature
  double mu = 0.0;     // regularization weight
  double theta = 0.0;  // regularizer range
  double a = 0.0;
  double alpha = 0.0;  // weight of psi_{p,a} in the target
  double tau = 0.0;
  double T = 0.0;
  double beta = 0.0;
  // tau k mu >= c_reject 1e4 (k G)^2 log(T / delta)
  double threshold_lhs = 0.0, threshold_rhs = 0.0;
  DpConstants constants;

  bool threshold_holds() const { return threshold_lhs >= threshold_rhs; }
  Json to_json(const DpInstance& inst) const;
};

// 1/(d log d) for d >= 2 and 1 for d = 1.
double default_lq_a(int d);

// Upper-bound surrogate for the additive range of psi_{p,a} over the unit lp
// ball: scale (1 + 1/a + sqrt((d/a) log(a + d/a))).
double regularizer_range(double p, double a, int d, double scale = 1.0);

// max - min of psi_{p,a} over the centres of a nodes x nodes grid on [-1,1]^2
// inside the unit lp ball, plus `sphere` points on its boundary (d = 2).
double regularizer_range_grid(double p, double a, int nodes = 41, int sphere = 400);

double warm_start_beta(const DpInstance& inst, const DpConstants& c);

DpPlan plan_erm(const DpInstance& inst, const DpConstants& c = {});
DpPlan plan_sco(const DpInstance& inst, const DpConstants& c = {});

// G D sqrt(d log(1/delta)) / (n epsilon).
double excess_risk_scale(const DpInstance& inst);

// min over probes of alpha v^T Hess psi(x) v / (k mu ||v||_p^2), x uniform in
// the box intersected with the unit lp ball, v Gaussian.
struct ConvexityReport {
  double min_ratio = 0.0;
  Vec worst_x, worst_v;
};
ConvexityReport strong_convexity_check(const DpPlan& plan, double p, int d, int probes, Rng& rng);

// n linear losses g_i with ||g_i||_q = G: g_i is N(c, I) normalized, where
// c = (1, -1/2, 1/4)[:d] gives the losses a common direction.
std::vector<Vec> synthetic_losses(int n, int d, double G, double p, Rng& rng);

struct ToyConfig {
  DpInstance inst;
  DpConstants constants;
  int iterations = 30;
  int tau = 1;  // prox step of the toy chain (the plan's tau is reported, not used)
  int grid_nodes = 256;
};

struct ToyResult {
  Vec x;
  double excess_risk = 0.0;
  double grid_min = 0.0;  // min of F over the grid centres in the ball
  double accept_rate = 1.0;
  long oracle_calls = 0;
  DpPlan plan;
};

// Samples from exp(-k F - alpha psi_{p,a}) on the unit lp ball with the prox
// sampler and a grid backward step. Throws InputError for d > 3, for losses
// of the wrong dimension or with ||g_i||_q > G, and for grids beyond 2^24 cells.
ToyResult run_toy_erm(const ToyConfig& cfg, const std::vector<Vec>& losses, Rng& rng);

// Largest |log density of the assembled toy target - (-(k F + alpha psi))|
// over the given points.
double toy_target_identity(const ToyConfig& cfg, const std::vector<Vec>& losses, const std::vector<Vec>& points);

}  // namespace llt
