#include "llt/prox_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "llt/quadrature.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec draw_gaussian(const GaussianLaw& law, Rng& rng) {
  const Mat L = Eigen::LLT<Mat>(law.cov).matrixL();
  Vec z(law.dim());
  for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return law.mean + L * z;
}

BackwardKind pick_backend(const ProxConfig& cfg) {
  return cfg.backend ? *cfg.backend : BackwardSampler::choose(cfg.model.target, *cfg.model.noise);
}

Mat sym_sqrt(const Mat& m, bool inverse) {
  const Eigen::SelfAdjointEigenSolver<Mat> es(m);
  Vec ev = es.eigenvalues().array().sqrt();
  if (inverse) ev = ev.cwiseInverse();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double top_eigenvalue(const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues().maxCoeff(); }

quad::Settings outer_settings() {
  quad::Settings st;
  st.rel_tol = 1e-10;
  return st;
}

}  // namespace

void ProxConfig::validate() const {
  if (model.tau < 1) throw InputError("prox: tau must be >= 1");
  if (iterations < 1) throw InputError("prox: iteration count must be >= 1");
  if (init) {
    init->validate();
    if (init->dim() != model.dim()) throw InputError("prox: initial law has the wrong dimension");
  } else if (x0.size() != model.dim()) {
    throw InputError("prox: start point has the wrong dimension");
  }
}

Vec forward_step(const JointModel& model, const Vec& x, Rng& rng) {
  return model.noise->sample_tilted_n(x, rng, model.tau).rowwise().sum();
}

ProxChain::ProxChain(ProxConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      sampler_(cfg_.model.target, cfg_.model.noise, double(cfg_.model.tau), pick_backend(cfg_), cfg_.backward) {
  if (sampler_.kind() == BackwardKind::rejection) {
    const auto th = rejection_threshold(sampler_, cfg_.model.target, cfg_.backward.delta);
    if (!th.holds()) {
      std::ostringstream os;
      os << "prox: rejection threshold fails (modulus " << th.lhs << " < " << th.rhs << ")";
      throw InputError(os.str());
    }
  }
}

ChainStats ProxChain::run(Rng& rng) {
  ChainStats st;
  st.backend = sampler_.kind();
  Vec x = cfg_.init ? draw_gaussian(*cfg_.init, rng) : cfg_.x0;
  st.xs.push_back(x);
  for (int k = 0; k < cfg_.iterations; ++k) {
    try {
      const Vec y = forward(x, rng);
      x = backward(y, rng);
      st.ys.push_back(y);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "prox iteration " << k + 1 << ": " << e.what();
      if (dynamic_cast<const InputError*>(&e)) throw InputError(os.str());
      throw NumericalError(os.str());
    }
    st.xs.push_back(x);
    st.accept_rate.push_back(sampler_.stats().accept_rate());
  }
  st.backward = sampler_.stats();

  if (cfg_.model.gaussian()) {
    const auto kern = gaussian_prox_kernel(cfg_.model);
    GaussianLaw law = cfg_.init ? *cfg_.init : GaussianLaw{cfg_.x0, Mat::Zero(x.size(), x.size())};
    Vec dm = law.mean - kern.pi.mean;
    Mat e = law.cov - kern.pi.cov;
    for (int k = 0; k <= cfg_.iterations; ++k) {
      if (k > 0) {
        law = kern.step(law);
        dm = kern.A * dm;
        e = kern.A * e * kern.A.transpose();
      }
      st.laws.push_back(law);
      const bool degenerate = Eigen::LLT<Mat>(law.cov).info() != Eigen::Success;
      st.chi2.push_back(degenerate ? kInf : chi2_gaussian_offset(dm, e, kern.pi));
      st.kl.push_back(degenerate ? kInf : kl_gaussian_offset(dm, e, kern.pi));
    }
  }
  return st;
}

ChainStats run_chain(const ProxConfig& cfg, Rng& rng) { return ProxChain(cfg).run(rng); }

// ---------------------------------------------------------------------------

GaussianLaw GaussianProxKernel::step(const GaussianLaw& law) const {
  return {A * law.mean + b, A * law.cov * A.transpose() + Q};
}

GaussianProxKernel gaussian_prox_kernel(const JointModel& model) {
  if (!model.gaussian()) throw InputError("exact prox kernel needs a gaussian model");
  const auto& n = model.noise->potential().gaussian();
  GaussianProxKernel k;
  k.pi = target_law(model);
  const double t = model.tau;
  const Mat prec_pi = k.pi.cov.inverse();
  const Mat P = t * n.cov + prec_pi;
  const Mat Pi = P.inverse();
  // y | x ~ N(t mu + t S x, t S); x | y ~ N(P^{-1}(y - t mu + prec_pi m), P^{-1})
  k.A = t * Pi * n.cov;
  k.b = Pi * (prec_pi * k.pi.mean);
  k.Q = Pi + t * Pi * n.cov * Pi;
  k.Q = 0.5 * (k.Q + k.Q.transpose());
  return k;
}

GaussianSeries gaussian_prox_series(const JointModel& model, const GaussianLaw& init, int iterations) {
  const auto kern = gaussian_prox_kernel(model);
  GaussianSeries s;
  Vec dm = init.mean - kern.pi.mean;
  Mat e = init.cov - kern.pi.cov;
  for (int k = 0; k <= iterations; ++k) {
    if (k > 0) {
      dm = kern.A * dm;
      e = kern.A * e * kern.A.transpose();
      e = 0.5 * (e + e.transpose());
    }
    s.chi2.push_back(chi2_gaussian_offset(dm, e, kern.pi));
    s.kl.push_back(kl_gaussian_offset(dm, e, kern.pi));
  }
  return s;
}

GaussianPiConstants gaussian_pi_constants(const JointModel& model) {
  if (!model.gaussian()) throw InputError("PI constants in closed form need a gaussian model");
  const auto& n = model.noise->potential().gaussian();
  const auto pi = target_law(model);
  const double t = model.tau;
  const Mat s_half = sym_sqrt(n.cov, false), s_ihalf = sym_sqrt(n.cov, true);
  GaussianPiConstants c;
  c.alpha = 1.0 / top_eigenvalue(s_half * pi.cov * s_half);
  const Mat cov_y = t * t * n.cov * pi.cov * n.cov + t * n.cov;
  c.dual = 1.0 / top_eigenvalue(s_ihalf * cov_y * s_ihalf);
  const Mat P = t * n.cov + pi.cov.inverse();
  const Mat pi_ihalf = sym_sqrt(pi.cov, true);
  c.halfway_sup = top_eigenvalue(Mat::Identity(pi.dim(), pi.dim()) - pi_ihalf * P.inverse() * pi_ihalf);
  return c;
}

ThresholdCheck rejection_threshold(const BackwardSampler& sampler, const Target& target, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("rejection threshold needs delta in (0, 1)");
  if (target.base.kind() != PotentialKind::lipschitz_mixture)
    throw InputError("rejection threshold needs a Lipschitz mixture target");
  const auto& mix = target.base.mixture();
  const double g = mix.weight * mix.lipschitz;
  return {sampler.modulus(), 1e4 * g * g * std::log(1.0 / delta)};
}

// ---------------------------------------------------------------------------

namespace {

// Pieces of the one-step kernel in d = 1 for a fixed start x.
struct KernelPieces {
  const JointModel& model;
  NoisePower1D g;
  double x, psi_x;
  LltEval1 e;

  KernelPieces(const JointModel& m, double x0)
      : model(m), g(m, m.tau, 1e-11), x(x0), psi_x(m.noise->value1(x0)), e(m.noise->eval1(x0)) {}

  // log q(c | x) = c x - tau psi(x) - phi^{*tau}(c)
  double log_forward(double c) const {
    const double lg = g(c);
    return lg == -kInf ? lg : c * x - model.tau * psi_x + lg;
  }
  quad::LogDensity1D over_c(std::function<double(double)> extra) const {
    quad::LogDensity1D d;
    d.log_f = [this, extra = std::move(extra)](double c) {
      const double lf = log_forward(c);
      return lf == -kInf ? lf : lf + extra(c);
    };
    std::tie(d.lo, d.hi) = g.support();
    d.breaks = g.kinks();
    d.hint = model.tau * e.d1;
    d.scale = std::sqrt(model.tau * e.d2);
    return d;
  }
};

}  // namespace

double gibbs_kernel_density(const JointModel& model, double x, double x_prime) {
  if (model.dim() != 1) throw InputError("kernel quadrature needs d = 1");
  const double log_pi = model.log_pi(vec1(x_prime));
  if (log_pi == -kInf) return 0.0;
  const KernelPieces k(model, x);
  const double psi_p = model.noise->value1(x_prime);
  const int t = model.tau;
  auto log_back = [&](double c) { return c * x_prime - t * psi_p + log_pi + renorm_value(model, t, vec1(c)); };
  return std::exp(quad::Tilted1D(k.over_c(log_back), outer_settings()).log_mass());
}

double gibbs_kernel_cdf(const JointModel& model, double x, double x_prime) {
  if (model.dim() != 1) throw InputError("kernel quadrature needs d = 1");
  const KernelPieces k(model, x);
  const quad::Tilted1D q(k.over_c([](double) { return 0.0; }), outer_settings());
  return q.expect([&](double c) { return backward_density1(model, model.tau, c).cdf(x_prime); }) *
         std::exp(q.log_mass());
}

GibbsEquivalenceReport gibbs_equivalence_check(const JointModel& model, const std::vector<double>& x_grid,
                                               const std::vector<double>& x_prime_grid, int n, Rng& rng) {
  if (model.dim() != 1) throw InputError("Gibbs equivalence check needs d = 1");
  if (n < 1) throw InputError("Gibbs equivalence check needs n >= 1");
  BackwardSampler back(model.target, model.noise, double(model.tau),
                       BackwardSampler::choose(model.target, *model.noise));
  GibbsEquivalenceReport rep;
  for (double x : x_grid) {
    // Quadrature CDFs at every x', sharing the y-rule and the backward laws.
    const KernelPieces k(model, x);
    const quad::Tilted1D q(k.over_c([](double) { return 0.0; }), outer_settings());
    std::map<double, std::shared_ptr<const quad::Tilted1D>> cache;
    auto backward_at = [&](double c) -> const quad::Tilted1D& {
      auto& slot = cache[c];
      if (!slot) slot = std::make_shared<const quad::Tilted1D>(backward_density1(model, model.tau, c));
      return *slot;
    };
    const double mass = std::exp(q.log_mass());
    std::vector<double> exact;
    for (double xp : x_prime_grid)
      exact.push_back(mass * q.expect([&](double c) { return backward_at(c).cdf(xp); }));

    std::vector<double> draws(n);
    const Vec xv = vec1(x);
    for (int i = 0; i < n; ++i) draws[i] = back.draw(forward_step(model, xv, rng), rng)(0);
    std::sort(draws.begin(), draws.end());
    for (std::size_t j = 0; j < x_prime_grid.size(); ++j) {
      const double emp =
          double(std::upper_bound(draws.begin(), draws.end(), x_prime_grid[j]) - draws.begin()) / n;
      const double dev = std::abs(emp - exact[j]);
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.worst_x = x;
        rep.worst_x_prime = x_prime_grid[j];
      }
    }
    for (double xp : x_prime_grid) {
      const double lhs = std::exp(model.log_pi(xv)) * gibbs_kernel_density(model, x, xp);
      const double rhs = std::exp(model.log_pi(vec1(xp))) * gibbs_kernel_density(model, xp, x);
      rep.detailed_balance = std::max(rep.detailed_balance, std::abs(lhs - rhs));
    }
  }
  return rep;
}

}  // namespace llt
