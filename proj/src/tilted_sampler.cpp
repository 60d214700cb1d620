#include "llt/tilted_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool closed_gaussian(const LltView* v) { return v && v->backend() == LltBackend::closed_form_gaussian; }

// Strong-convexity modulus of psi_{p,a} with respect to the p-norm.
double lq_modulus(const LltView& v) {
  const auto& lq = v.potential().lq();
  if (lq.p <= 1.0) throw InputError("the rejection backend needs p > 1 (strongly convex regularizer)");
  return (lq.p - 1.0) / (2.0 * lq.a);
}

}  // namespace

double Target::log_density(const Vec& x) const {
  if (!base.in_domain(x)) return -kInf;
  double v = -base.value(x);
  if (llt_weight != 0.0) {
    if (!llt->in_domain(x)) return -kInf;
    try {
      v -= llt_weight * llt->value(x);
    } catch (const DivergenceError&) {
      return -kInf;
    }
  }
  return v;
}

double Target::log_density1(double x) const {
  double v = -base.value1(x);
  if (llt_weight != 0.0 && v > -kInf) v -= llt_weight * llt->value1(x);
  return v;
}

std::pair<double, double> Target::support1() const {
  auto [lo, hi] = base.support1();
  if (llt_weight != 0.0) {
    auto [a, b] = llt->domain1();
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  return {lo, hi};
}

Target plain_target(Potential base) { return Target{std::move(base), 0.0, nullptr}; }

std::string_view backward_name(BackwardKind k) {
  switch (k) {
    case BackwardKind::exact_gaussian: return "exact-gaussian";
    case BackwardKind::quadrature_1d: return "quadrature-1d";
    case BackwardKind::grid: return "grid";
    case BackwardKind::rejection: return "rejection";
  }
  return "?";
}

BackwardKind parse_backward(std::string_view s) {
  if (s == "exact-gaussian") return BackwardKind::exact_gaussian;
  if (s == "quadrature-1d") return BackwardKind::quadrature_1d;
  if (s == "grid") return BackwardKind::grid;
  if (s == "rejection") return BackwardKind::rejection;
  throw InputError("unknown backward sampler '" + std::string(s) + "'");
}

BackwardKind BackwardSampler::choose(const Target& target, const LltView& psi) {
  const bool gauss_base =
      target.base.kind() == PotentialKind::gaussian && target.base.domain().kind == Domain::Kind::none;
  if (gauss_base && closed_gaussian(&psi) && (target.llt_weight == 0.0 || closed_gaussian(target.llt.get())))
    return BackwardKind::exact_gaussian;
  if (target.dim() == 1) return BackwardKind::quadrature_1d;
  if (target.dim() <= 3) return BackwardKind::grid;
  throw InputError("no backward sampler for this target in dimension " + std::to_string(target.dim()));
}

BackwardSampler::BackwardSampler(Target target, std::shared_ptr<const LltView> psi, double tau,
                                 BackwardKind kind, BackwardOptions opts)
    : target_(std::move(target)), psi_(std::move(psi)), tau_(tau), kind_(kind), opts_(std::move(opts)) {
  const int d = target_.dim();
  if (!psi_ || psi_->dim() != d) throw InputError("noise transform does not match the target dimension");
  if (target_.llt_weight != 0.0 && (!target_.llt || target_.llt->dim() != d))
    throw InputError("target regularizer transform is missing or has the wrong dimension");
  if (tau_ < 0.0) throw InputError("backward weight tau must be >= 0");

  switch (kind_) {
    case BackwardKind::exact_gaussian: {
      if (choose(target_, *psi_) != BackwardKind::exact_gaussian)
        throw InputError("exact-gaussian backward sampler needs gaussian target and noise");
      const auto& b = target_.base.gaussian();
      const auto& n = psi_->potential().gaussian();
      prec_ = tau_ * n.cov + b.precision;
      lin_ = -tau_ * n.mean + b.precision * b.mean;
      if (target_.llt_weight != 0.0) {
        const auto& t = target_.llt->potential().gaussian();
        prec_ += target_.llt_weight * t.cov;
        lin_ -= target_.llt_weight * t.mean;
      }
      Eigen::LLT<Mat> llt(prec_);
      if (llt.info() != Eigen::Success) throw NumericalError("backward precision is not positive definite");
      cov_ = llt.solve(Mat::Identity(d, d));
      chol_ = Eigen::LLT<Mat>(cov_).matrixL();
      break;
    }
    case BackwardKind::quadrature_1d: {
      if (d != 1) throw InputError("quadrature-1d backward sampler needs d = 1");
      auto [lo, hi] = target_.support1();
      double x0 = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
      double curv = tau_ * psi_->eval1(x0).d2 + target_.base.d2(x0);
      if (target_.llt_weight != 0.0) curv += target_.llt_weight * target_.llt->eval1(x0).d2;
      scale1_ = curv > 0 ? 1.0 / std::sqrt(curv) : 1.0;
      if (std::isfinite(lo) && std::isfinite(hi)) scale1_ = std::min(scale1_, 0.25 * (hi - lo));
      break;
    }
    case BackwardKind::grid:
    case BackwardKind::rejection: {
      if (d > 3) throw InputError("grid-based backward samplers need d <= 3");
      GridSpec spec;
      if (target_.base.domain().kind != Domain::Kind::none) {
        auto [lo, hi] = target_.base.domain().bounding_box(d);
        spec.lo = lo;
        spec.hi = hi;
      } else if (opts_.box) {
        spec = *opts_.box;
      } else {
        throw InputError("grid backward sampler needs a bounded domain or an explicit box");
      }
      const int nodes = opts_.grid_nodes > 0 ? opts_.grid_nodes : default_grid_nodes(d);
      spec.nodes.assign(d, nodes);
      std::function<double(const Vec&)> log_f;
      if (kind_ == BackwardKind::grid) {
        log_f = [this](const Vec& x) {
          const double t = target_.log_density(x);
          return t == -kInf ? t : t - tau_ * psi_->value(x);
        };
      } else {
        if (target_.base.kind() != PotentialKind::lipschitz_mixture)
          throw InputError("rejection backward sampler needs a lipschitz-mixture target");
        if (psi_->backend() != LltBackend::lq_radial ||
            (target_.llt_weight != 0.0 && target_.llt->backend() != LltBackend::lq_radial))
          throw InputError("rejection backward sampler needs lq-squared regularizers");
        // Proposal: the regularizer part only, restricted to the domain.
        log_f = [this](const Vec& x) {
          if (!target_.base.in_domain(x)) return -kInf;
          double v = -tau_ * psi_->value(x);
          if (target_.llt_weight != 0.0) v -= target_.llt_weight * target_.llt->value(x);
          return v;
        };
        double m = tau_ * lq_modulus(*psi_);
        if (target_.llt_weight != 0.0) m += target_.llt_weight * lq_modulus(*target_.llt);
        modulus_ = m;
        norm_p_ = psi_->potential().lq().p;
        const double r2 = (std::sqrt(double(d)) + std::sqrt(2.0 * std::log(1.0 / opts_.delta))) / std::sqrt(m);
        radius_ = std::pow(double(d), std::max(0.0, 1.0 / norm_p_ - 0.5)) * r2;
      }
      grid_ = std::make_unique<GridDensity>(spec, log_f);
      break;
    }
  }
}

std::pair<Vec, Mat> BackwardSampler::gaussian_law(const Vec& y) const {
  if (kind_ != BackwardKind::exact_gaussian) throw InputError("gaussian_law needs the exact-gaussian backend");
  return {cov_ * (y + lin_), cov_};
}

double BackwardSampler::log_density(const Vec& y, const Vec& x) const {
  const double t = target_.log_density(x);
  if (t == -kInf || !psi_->in_domain(x)) return -kInf;
  return y.dot(x) - tau_ * psi_->value(x) + t;
}

quad::Tilted1D BackwardSampler::tilted1(double y) const {
  quad::LogDensity1D dens;
  dens.log_f = [this, y](double x) {
    const double t = target_.log_density1(x);
    if (t == -kInf) return t;
    return y * x - tau_ * psi_->value1(x) + t;
  };
  std::tie(dens.lo, dens.hi) = target_.support1();
  auto [a, b] = psi_->domain1();
  dens.lo = std::max(dens.lo, a);
  dens.hi = std::min(dens.hi, b);
  dens.breaks = target_.base.kinks1();
  dens.scale = scale1_;
  // Rough mode: one Newton step from 0 on the quadratic model.
  dens.hint = std::clamp(y * scale1_ * scale1_, -1e6, 1e6);
  if (!(dens.hint > dens.lo && dens.hint < dens.hi)) dens.hint = 0.0;
  return quad::Tilted1D(std::move(dens));
}

Vec BackwardSampler::draw(const Vec& y, Rng& rng) { return draw_n(y, rng, 1).col(0); }

Mat BackwardSampler::draw_n(const Vec& y, Rng& rng, int n) {
  const int d = target_.dim();
  if (y.size() != d) throw DomainError("backward tilt has wrong dimension");
  Mat out(d, n);
  switch (kind_) {
    case BackwardKind::exact_gaussian: {
      const Vec m = cov_ * (y + lin_);
      Vec z(d);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) z(i) = rng.normal();
        out.col(j) = m + chol_ * z;
      }
      break;
    }
    case BackwardKind::quadrature_1d: {
      const auto t = tilted1(y(0));
      for (int j = 0; j < n; ++j) out(0, j) = t.sample(rng);
      break;
    }
    case BackwardKind::grid: {
      const auto t = grid_->tilted(y);
      for (int j = 0; j < n; ++j) out.col(j) = t.draw(rng);
      break;
    }
    case BackwardKind::rejection:
      for (int j = 0; j < n; ++j) out.col(j) = draw_rejection(y, rng);
      return out;
  }
  stats_.draws += n;
  stats_.attempts += n;
  return out;
}

Vec BackwardSampler::draw_rejection(const Vec& y, Rng& rng) {
  const auto prop = grid_->tilted(y);
  const Vec xstar = grid_->center(prop.argmax());
  const auto& mix = target_.base.mixture();
  const double B = mix.weight * mix.lipschitz * radius_;
  const double lam = 2.0 * B;
  const std::size_t n = target_.base.component_count();
  const long cap = static_cast<long>(std::ceil(opts_.attempt_factor * std::exp(lam)));
  for (long a = 0; a < cap; ++a) {
    ++stats_.attempts;
    const Vec x = prop.draw(rng);
    if (lp_norm(x - xstar, norm_p_) > radius_) {
      ++stats_.radius_violations;
      continue;
    }
    // Accept with probability exp(-(mean_i Delta_i + B)), Delta_i = f_i(x) - f_i(x*):
    // J ~ Poisson(2B) coins, each passing with probability 1 - (Delta_i + B) / (2B).
    bool ok = true;
    if (lam > 0.0) {
      const auto J = rng.poisson(lam);
      for (std::uint64_t j = 0; j < J && ok; ++j) {
        const std::size_t i = rng.index(n);
        ++stats_.oracle_calls;
        const double delta = target_.base.component_value(i, x) - target_.base.component_value(i, xstar);
        ok = rng.uniform() < 1.0 - (delta + B) / lam;
      }
    }
    if (ok) {
      ++stats_.draws;
      return x;
    }
  }
  std::ostringstream os;
  os << "rejection sampler exceeded " << cap << " attempts (bound " << B << ", radius " << radius_
     << ", acceptance so far " << stats_.accept_rate() << ")";
  throw NumericalError(os.str());
}

}  // namespace llt
