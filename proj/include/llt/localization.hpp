#pragma once

// Functional stochastic localization driven by a noise potential phi with
// transform psi = phi^#.
//
// Sequential form: at time t draw z ~ T_{y_t} exp(-t psi) pi, then
// w ~ T_z exp(-phi) and set y_{t+1} = y_t + w. Direct form: x ~ pi and
// y_t = a_1 + ... + a_t with a_i iid ~ T_x exp(-phi). Both give the same law
// of (y_t). The renormalized potentials
//   V_t(a) = -log int exp(<a, z> - t psi(z)) pi(dz)
// drive the semigroup P_{t,s} and the increment densities.

#include <functional>
#include <memory>
#include <vector>

#include "llt/common.hpp"
#include "llt/diagnostics.hpp"
#include "llt/llt_engine.hpp"
#include "llt/quadrature.hpp"
#include "llt/tilted_sampler.hpp"

namespace llt {

class Rng;

struct JointModel {
  Target target;
  std::shared_ptr<const LltView> noise;
  int tau = 1;
  double log_z = 0.0;  // log of the integral of exp(-V); NaN for non-gaussian targets in d > 1

  int dim() const { return target.dim(); }
  bool gaussian() const;
  // log pi(x), normalized.
  double log_pi(const Vec& x) const;
};

// The law of pi when the model is gaussian.
GaussianLaw target_law(const JointModel& model);

// exp(<a, z> - t psi(z)) pi(z) in d = 1 as a quadrature object; its log mass is -V_t(a).
quad::Tilted1D backward_density1(const JointModel& model, int t, double a);

// Computes log_z (closed form when gaussian, quadrature in 1-D, otherwise left as NaN).
JointModel make_joint(Target target, Potential noise, int tau = 1);

// The Gaussian-noise, Gaussian-target model pi = N(0, sigma^2 I_d), phi = |y|^2/2 (normalized).
JointModel gaussian_model(int dim, double sigma, int tau = 1);
// pi proportional to exp(-x^2/2) (1 - x^2) on (-1, 1) with Laplace noise phi(y) = |y| + log 2.
JointModel laplace_noise_model(int tau = 1);

struct LocalizationState {
  int time = 0;
  Vec y;
};

inline constexpr int kMaxLocalizationTime = 1'000'000;

class Localizer {
 public:
  explicit Localizer(JointModel model, BackwardOptions opts = {});

  const JointModel& model() const { return model_; }
  LocalizationState initial() const { return {0, Vec::Zero(model_.dim())}; }

  // One transition; the intermediate z is returned through z_out when given.
  LocalizationState step(const LocalizationState& s, Rng& rng, Vec* z_out = nullptr);

  struct Run {
    Vec y;  // y at the final time
    Vec x;  // draw from pi_t^{y}
    std::vector<Vec> ys, zs;  // trajectory (when requested): y_t and z_t for t = 0..end-1
  };
  Run run(int t_end, Rng& rng, bool keep_trajectory = false);

 private:
  BackwardSampler& backward(int t);

  JointModel model_;
  BackwardOptions opts_;
  std::vector<std::unique_ptr<BackwardSampler>> samplers_;
};

// y_t from the direct construction.
Vec direct_tilt(const JointModel& model, int t, Rng& rng);
// n draws, one per column, from each construction. The sequential draws use
// independent chains split from rng.
Mat sequential_tilts(const JointModel& model, int t, int n, Rng& rng);
Mat direct_tilts(const JointModel& model, int t, int n, Rng& rng);

// Renormalized potential at time t.
struct RenormEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
};
RenormEval renorm_eval(const JointModel& model, int t, const Vec& a);
inline double renorm_value(const JointModel& m, int t, const Vec& a) { return renorm_eval(m, t, a).value; }

// log of exp(-phi^{*m})(y) in d = 1: closed form for gaussian noise, nested quadrature otherwise.
class NoisePower1D {
 public:
  NoisePower1D(const JointModel& model, int m, double rel_tol = 1e-12);
  double operator()(double y) const;
  std::pair<double, double> support() const;
  std::vector<double> kinks() const;

 private:
  int m_;
  double mean_ = 0.0, var_ = 0.0, const_ = 0.0;
  std::unique_ptr<ConvPower1D> conv_;
};

// log of the marginal density of y_t at y (d = 1): -V_t(y) - phi^{*t}(y).
double log_tilt_marginal(const JointModel& model, int t, double y);

// P_{t,s} f(a) in d = 1 (t <= s).
double semigroup_apply(const JointModel& model, int t, int s, const std::function<double(double)>& f, double a);

// nu_t^y(w) = exp(-phi(w) - V_{t+1}(y + w) + V_t(y)), d = 1.
double increment_density(const JointModel& model, int t, double y, double w);

struct MartingaleReport {
  double max_deviation = 0.0;
  double worst_x = 0.0;
  std::vector<double> expected, target;  // E[pi_t(x)] and pi(x) on the grid
};
// Exact algebra for gaussian models (any d, grid points along the first axis);
// nested quadrature in d = 1 otherwise, with one y-rule shared by the grid.
MartingaleReport martingale_check(const JointModel& model, int t, const std::vector<double>& x_grid);

}  // namespace llt
