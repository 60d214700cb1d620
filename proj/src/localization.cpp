#include "llt/localization.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <sstream>

#include "llt/quadrature.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussLaw {
  Vec mean;
  Mat cov, prec;
};

// pi as a Gaussian law when base and regularizer are both Gaussian.
GaussLaw pi_law(const JointModel& m) {
  if (!m.gaussian()) throw InputError("the target is not gaussian");
  const auto& b = m.target.base.gaussian();
  Mat P = b.precision;
  Vec lin = b.precision * b.mean;
  if (m.target.llt_weight != 0.0) {
    const auto& t = m.target.llt->potential().gaussian();
    P += m.target.llt_weight * t.cov;
    lin -= m.target.llt_weight * t.mean;
  }
  GaussLaw g;
  g.prec = P;
  g.cov = P.inverse();
  g.mean = g.cov * lin;
  return g;
}

double log_normal_pdf(const Vec& x, const Vec& m, const Mat& C) {
  Eigen::LLT<Mat> llt(C);
  const Vec r = llt.matrixL().solve(x - m);
  const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (r.squaredNorm() + x.size() * std::log(2.0 * M_PI) + logdet);
}

// Curvature scale of exp(<a, z> - t psi(z)) pi(z) in d = 1, evaluated near the centre of the support.
double backward_scale1(const JointModel& m, double t) {
  auto [lo, hi] = m.target.support1();
  const double x0 = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
  double c = t * m.noise->eval1(x0).d2 + m.target.base.d2(x0);
  if (m.target.llt_weight != 0.0) c += m.target.llt_weight * m.target.llt->eval1(x0).d2;
  double s = c > 0 ? 1.0 / std::sqrt(c) : 1.0;
  if (std::isfinite(lo) && std::isfinite(hi)) s = std::min(s, 0.25 * (hi - lo));
  return s;
}

// exp(a z - t psi(z)) pi(z) with pi normalized; log_mass() = -V_t(a).
quad::Tilted1D backward_tilted1(const JointModel& m, int t, double a, double rel_tol = 1e-11) {
  quad::LogDensity1D d;
  const double lz = m.log_z;
  d.log_f = [&m, t, a, lz](double z) {
    const double v = m.target.log_density1(z);
    if (v == -kInf) return v;
    return a * z - t * m.noise->value1(z) + v - lz;
  };
  std::tie(d.lo, d.hi) = m.target.support1();
  auto [nlo, nhi] = m.noise->domain1();
  d.lo = std::max(d.lo, nlo);
  d.hi = std::min(d.hi, nhi);
  d.breaks = m.target.base.kinks1();
  d.scale = backward_scale1(m, t);
  d.hint = a * d.scale * d.scale;
  if (!(d.hint > d.lo && d.hint < d.hi)) d.hint = 0.0;
  quad::Settings st;
  st.rel_tol = rel_tol;
  const bool bounded = std::isfinite(d.lo) || std::isfinite(d.hi);
  try {
    return quad::Tilted1D(d, st);
  } catch (const NumericalError&) {
    // A large tilt squeezes the mass against a finite end, and the density
    // there is only known to the roundoff in the distance to that end.
    if (!bounded) throw;
    st.rel_tol = 1e-8;
    return quad::Tilted1D(std::move(d), st);
  }
}

constexpr double kSemigroupReach = 1e4;

// Integrands that call inner quadratures carry their roundoff.
quad::Settings outer_settings() {
  quad::Settings st;
  st.rel_tol = 1e-10;
  return st;
}

void require_1d(const JointModel& m, const char* what) {
  if (m.dim() != 1) throw InputError(std::string(what) + " is implemented for d = 1");
}

}  // namespace

double JointModel::log_pi(const Vec& x) const {
  if (std::isnan(log_z)) throw InputError("the normalizing constant of a non-gaussian target is only computed in d = 1");
  return target.log_density(x) - log_z;
}

GaussianLaw target_law(const JointModel& model) {
  const auto g = pi_law(model);
  return {g.mean, g.cov};
}

quad::Tilted1D backward_density1(const JointModel& model, int t, double a) {
  require_1d(model, "the backward density");
  return backward_tilted1(model, t, a);
}

bool JointModel::gaussian() const {
  return BackwardSampler::choose(target, *noise) == BackwardKind::exact_gaussian;
}

JointModel make_joint(Target target, Potential noise, int tau) {
  if (tau < 1) throw InputError("localization step count tau must be >= 1");
  JointModel m{std::move(target), std::make_shared<const LltView>(std::move(noise)), tau, 0.0};
  if (m.noise->dim() != m.target.dim()) throw InputError("noise and target dimensions differ");
  if (m.gaussian()) {
    const auto g = pi_law(m);
    // exp(-V) = exp(-V(mean)) * exp(-(x - mean)^T P (x - mean) / 2)
    m.log_z = m.target.log_density(g.mean) + 0.5 * m.dim() * std::log(2.0 * M_PI) -
              0.5 * std::log(g.prec.determinant());
  } else if (m.dim() == 1) {
    m.log_z = 0.0;
    m.log_z = backward_tilted1(m, 0, 0.0).log_mass();
  } else {
    m.log_z = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

JointModel gaussian_model(int dim, double sigma, int tau) {
  return make_joint(plain_target(make_gaussian(Vec::Zero(dim), sigma * sigma * Mat::Identity(dim, dim))),
                    make_gaussian(Vec::Zero(dim), Mat::Identity(dim, dim)), tau);
}

JointModel laplace_noise_model(int tau) {
  const auto noise = make_separable({{Scalar1D::Kind::abs, 1.0, 0.0, 2.0}});
  Target t{make_gaussian(Vec::Zero(1), Mat::Identity(1, 1)), 1.0, std::make_shared<const LltView>(noise)};
  return make_joint(std::move(t), noise, tau);
}

// ---------------------------------------------------------------------------

Localizer::Localizer(JointModel model, BackwardOptions opts) : model_(std::move(model)), opts_(std::move(opts)) {}

BackwardSampler& Localizer::backward(int t) {
  if (t >= static_cast<int>(samplers_.size())) samplers_.resize(t + 1);
  if (!samplers_[t]) {
    const auto kind = BackwardSampler::choose(model_.target, *model_.noise);
    samplers_[t] = std::make_unique<BackwardSampler>(model_.target, model_.noise, double(t), kind, opts_);
  }
  return *samplers_[t];
}

LocalizationState Localizer::step(const LocalizationState& s, Rng& rng, Vec* z_out) {
  if (s.time >= kMaxLocalizationTime) throw InputError("localization time exceeds the cap of 1e6 steps");
  Vec z;
  try {
    z = backward(s.time).draw(s.y, rng);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "backward draw failed at step " << s.time << ": " << e.what();
    throw NumericalError(os.str());
  }
  const Vec w = model_.noise->sample_tilted(z, rng);
  LocalizationState next{s.time + 1, s.y + w};
  if (!next.y.allFinite()) throw NumericalError("localization tilt overflowed at step " + std::to_string(s.time));
  if (z_out) *z_out = std::move(z);
  return next;
}

Localizer::Run Localizer::run(int t_end, Rng& rng, bool keep_trajectory) {
  if (t_end < 0) throw InputError("localization end time must be >= 0");
  LocalizationState s = initial();
  Run out;
  Vec z;
  for (int t = 0; t < t_end; ++t) {
    LocalizationState n = step(s, rng, &z);
    if (keep_trajectory) {
      out.ys.push_back(s.y);
      out.zs.push_back(z);
    }
    s = std::move(n);
  }
  out.y = s.y;
  out.x = backward(t_end).draw(s.y, rng);
  return out;
}

Vec direct_tilt(const JointModel& model, int t, Rng& rng) { return direct_tilts(model, t, 1, rng).col(0); }

Mat direct_tilts(const JointModel& model, int t, int n, Rng& rng) {
  BackwardSampler pi(model.target, model.noise, 0.0, BackwardSampler::choose(model.target, *model.noise));
  const Mat xs = pi.draw_n(Vec::Zero(model.dim()), rng, n);
  Mat ys = Mat::Zero(model.dim(), n);
  if (t == 0) return ys;
  for (int j = 0; j < n; ++j) ys.col(j) = model.noise->sample_tilted_n(xs.col(j), rng, t).rowwise().sum();
  return ys;
}

Mat sequential_tilts(const JointModel& model, int t, int n, Rng& rng) {
  Localizer loc(model);
  Mat ys(model.dim(), n);
  for (int j = 0; j < n; ++j) {
    Rng r = rng.split(j);
    LocalizationState s = loc.initial();
    for (int k = 0; k < t; ++k) s = loc.step(s, r);
    ys.col(j) = s.y;
  }
  return ys;
}

// ---------------------------------------------------------------------------

RenormEval renorm_eval(const JointModel& model, int t, const Vec& a) {
  if (t < 0) throw InputError("renormalized potential needs t >= 0");
  if (a.size() != model.dim()) throw DomainError("renormalized potential: point has wrong dimension");
  RenormEval out;
  if (model.gaussian()) {
    const auto g = pi_law(model);
    const auto& n = model.noise->potential().gaussian();
    const double c = model.noise->value(Vec::Zero(model.dim()));
    const Mat P = g.prec + t * n.cov;
    const Vec b = a - t * n.mean + g.prec * g.mean;
    const Eigen::LLT<Mat> llt(P);
    const Vec sol = llt.solve(b);
    const double log_i = -t * c + 0.5 * b.dot(sol) - 0.5 * g.mean.dot(g.prec * g.mean) -
                         0.5 * std::log((g.cov * P).determinant());
    out.value = -log_i;
    out.grad = -sol;
    out.hess = -llt.solve(Mat::Identity(model.dim(), model.dim()));
    return out;
  }
  require_1d(model, "the renormalized potential");
  const auto q = backward_tilted1(model, t, a(0));
  out.value = -q.log_mass();
  out.grad = vec1(-q.mean());
  out.hess = Mat::Constant(1, 1, -q.var());
  return out;
}

NoisePower1D::NoisePower1D(const JointModel& model, int m, double rel_tol) : m_(m) {
  require_1d(model, "the convolution power");
  if (m < 1) throw InputError("convolution power must be >= 1");
  if (model.noise->backend() == LltBackend::closed_form_gaussian) {
    const auto& g = model.noise->potential().gaussian();
    mean_ = m * g.mean(0);
    var_ = m * g.cov(0, 0);
    const_ = m * model.noise->value1(0.0);
  } else {
    conv_ = std::make_unique<ConvPower1D>(model.noise->potential(), m, rel_tol);
  }
}

double NoisePower1D::operator()(double y) const {
  if (conv_) return conv_->log_density(y);
  const double r = y - mean_;
  return const_ - 0.5 * std::log(2.0 * M_PI * var_) - 0.5 * r * r / var_;
}

std::pair<double, double> NoisePower1D::support() const {
  return conv_ ? conv_->support() : std::pair{-kInf, kInf};
}

std::vector<double> NoisePower1D::kinks() const { return conv_ ? conv_->kinks() : std::vector<double>{}; }

double log_tilt_marginal(const JointModel& model, int t, double y) {
  if (t < 1) throw InputError("the marginal of y_t is a point mass at t = 0");
  const NoisePower1D g(model, t);
  return -renorm_value(model, t, vec1(y)) + g(y);
}

double semigroup_apply(const JointModel& model, int t, int s, const std::function<double(double)>& f, double a) {
  require_1d(model, "the semigroup");
  if (t < 0 || s < t) throw InputError("semigroup needs 0 <= t <= s");
  if (s == t) return f(a);
  const NoisePower1D g(model, s - t);
  const double vt = renorm_value(model, t, vec1(a));
  auto log_nu = [&](double w) {
    const double lg = g(w);
    if (lg == -kInf) return lg;
    return lg - renorm_value(model, s, vec1(a + w)) + vt;
  };
  const auto [lo, hi] = g.support();
  quad::LogDensity1D d;
  std::function<double(double)> to_w = [](double w) { return w; };
  if (std::isfinite(lo) && std::isfinite(hi)) {
    d.log_f = log_nu;
    d.lo = lo;
    d.hi = hi;
    d.breaks = g.kinks();
    d.scale = 0.25 * (hi - lo);
  } else {
    // The increments can have polynomial tails (Laplace noise on a bounded
    // target), so integrate over u with w = c u / (1 - u^2), cut at
    // |w| = kSemigroupReach * c. The dropped tail is not estimated.
    const double c = std::sqrt(double(s - t));
    to_w = [c](double u) { return c * u / (1.0 - u * u); };
    d.log_f = [&, c](double u) {
      const double q = 1.0 - u * u;
      if (q <= 0.0) return -kInf;
      return log_nu(c * u / q) + std::log(c * (1.0 + u * u) / (q * q));
    };
    auto u_of = [](double r) { return r == 0.0 ? 0.0 : (-1.0 + std::sqrt(1.0 + 4.0 * r * r)) / (2.0 * r); };
    d.hi = u_of(kSemigroupReach);
    d.lo = -d.hi;
    for (double k : g.kinks()) d.breaks.push_back(u_of(k / c));
    d.scale = 0.25;
  }
  const quad::Tilted1D q(std::move(d), outer_settings());
  // The density integrates to one in exact arithmetic; keep its computed mass.
  return q.expect([&](double u) { return f(a + to_w(u)); }) * std::exp(q.log_mass());
}

double increment_density(const JointModel& model, int t, double y, double w) {
  require_1d(model, "the increment density");
  const double phi = model.noise->potential().value1(w);
  if (!std::isfinite(phi)) return 0.0;
  return std::exp(-phi - renorm_value(model, t + 1, vec1(y + w)) + renorm_value(model, t, vec1(y)));
}

MartingaleReport martingale_check(const JointModel& model, int t, const std::vector<double>& x_grid) {
  if (t < 0) throw InputError("martingale check needs t >= 0");
  const int d = model.dim();
  MartingaleReport rep;
  rep.expected.resize(x_grid.size());
  rep.target.resize(x_grid.size());
  auto point = [d](double g) {
    Vec x = Vec::Zero(d);
    x(0) = g;
    return x;
  };
  for (std::size_t i = 0; i < x_grid.size(); ++i) rep.target[i] = std::exp(model.log_pi(point(x_grid[i])));

  if (t == 0) {
    rep.expected = rep.target;
  } else if (model.gaussian()) {
    // y_t ~ N(t mu + t S m, t^2 S C S + t S); pi_t^y = N(P^{-1}(y + lin), P^{-1}).
    const auto g = pi_law(model);
    const auto& n = model.noise->potential().gaussian();
    const Mat P = g.prec + t * n.cov;
    const Mat Pi = P.inverse();
    const Vec lin = -t * n.mean + g.prec * g.mean;
    const Vec ey = t * n.mean + t * n.cov * g.mean;
    const Mat cy = t * t * n.cov * g.cov * n.cov + t * n.cov;
    const Vec m = Pi * (ey + lin);
    const Mat C = Pi + Pi * cy * Pi.transpose();
    for (std::size_t i = 0; i < x_grid.size(); ++i) rep.expected[i] = std::exp(log_normal_pdf(point(x_grid[i]), m, C));
  } else {
    require_1d(model, "the quadrature martingale check");
    // One y-rule serves every grid point: integrate
    //   h(y) = pi~Y(y) exp(V_t(y)) exp(c y) cosh(r y)
    // and take expectations of pi_t^y(x) exp(-V_t(y)) / (exp(c y) cosh(r y)),
    // where [c - r, c + r] covers the grid.
    const NoisePower1D g(model, t, 1e-10);
    const auto [xlo, xhi] = std::minmax_element(x_grid.begin(), x_grid.end());
    const double c = 0.5 * (*xlo + *xhi), r = 0.5 * (*xhi - *xlo);
    auto log_cosh = [](double v) { return std::abs(v) + std::log1p(std::exp(-2.0 * std::abs(v))) - std::log(2.0); };
    struct Node {
      double log_marginal, v;
    };
    auto cache = std::make_shared<std::unordered_map<double, Node>>();
    auto node = [&model, &g, t, cache](double y) -> const Node& {
      auto it = cache->find(y);
      if (it != cache->end()) return it->second;
      Node n{-kInf, 0.0};
      const double lg = g(y);
      if (lg != -kInf) {
        n.v = renorm_value(model, t, vec1(y));
        n.log_marginal = -n.v + lg;
      }
      return cache->emplace(y, n).first->second;
    };
    quad::LogDensity1D dens;
    dens.log_f = [&, c, r](double y) {
      const Node& n = node(y);
      if (n.log_marginal == -kInf) return -kInf;
      return n.log_marginal + n.v + c * y + log_cosh(r * y);
    };
    std::tie(dens.lo, dens.hi) = g.support();
    dens.breaks = g.kinks();
    const auto psi_c = model.noise->eval1(c);
    dens.hint = t * psi_c.d1;
    dens.scale = std::sqrt(t * psi_c.d2);
    const quad::Tilted1D h(std::move(dens), outer_settings());
    const double mass = std::exp(h.log_mass());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      const double x = x_grid[i];
      const double log_px = model.log_pi(vec1(x));
      if (log_px == -kInf) continue;
      const double psi = model.noise->value1(x);
      rep.expected[i] = mass * h.expect([&](double y) {
        const Node& n = node(y);
        const double conditional = y * x - t * psi + log_px + n.v;
        return std::exp(conditional - n.v - c * y - log_cosh(r * y));
      });
    }
  }
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const double dev = std::abs(rep.expected[i] - rep.target[i]);
    if (i == 0 || dev > rep.max_deviation) {
      rep.max_deviation = dev;
      rep.worst_x = x_grid[i];
    }
  }
  return rep;
}

}  // namespace llt
