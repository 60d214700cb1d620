#include "llt/llt_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "llt/grid_sampler.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double scalar_width(const Scalar1D& c) {
  switch (c.kind) {
    case Scalar1D::Kind::quadratic: return 1.0 / std::sqrt(c.scale);
    case Scalar1D::Kind::abs: return 1.0 / c.scale;
    case Scalar1D::Kind::quartic: return std::pow(c.scale, -0.25);
    case Scalar1D::Kind::power: return std::pow(c.scale, -1.0 / c.exponent);
  }
  return 1.0;
}

std::pair<double, double> box_axis(const Domain& d, int i) {
  if (d.kind == Domain::Kind::box) return {d.lo(i), d.hi(i)};
  if (d.kind == Domain::Kind::lp_ball) return {-d.radius, d.radius};
  return {-kInf, kInf};
}

LltEval1 from_tilted(const quad::Tilted1D& t) {
  LltEval1 e;
  e.value = t.log_mass();
  e.d1 = t.mean();
  e.d2 = t.var();
  e.d3 = t.third_central();
  e.err = t.error_bound();
  return e;
}

// Asymmetric Laplace draw for exp(x t - s|t - c|), |x| < s.
double draw_abs(double s, double c, double x, Rng& rng) {
  const bool right = rng.uniform() < (s + x) / (2.0 * s);
  const double e = rng.exponential();
  return right ? c + e / (s - x) : c - e / (s + x);
}

}  // namespace

std::string_view backend_name(LltBackend b) {
  switch (b) {
    case LltBackend::closed_form_gaussian: return "closed-form-gaussian";
    case LltBackend::quadrature_1d: return "quadrature-1d";
    case LltBackend::separable_product: return "separable-product";
    case LltBackend::lq_radial: return "lq-radial";
  }
  return "?";
}

LltView::LltView(Potential phi) : phi_(std::move(phi)) {
  const int d = phi_.dim();
  const auto dom = phi_.domain().kind;
  switch (phi_.kind()) {
    case PotentialKind::gaussian:
      if (dom == Domain::Kind::none) {
        backend_ = LltBackend::closed_form_gaussian;
        const auto& g = phi_.gaussian();
        const_ = 0.5 * (d * std::log(2.0 * M_PI) + g.log_det) - phi_.shift();
        return;
      }
      break;
    case PotentialKind::separable_1d:
      if (dom != Domain::Kind::lp_ball || d == 1) {
        backend_ = LltBackend::separable_product;
        const_ = -phi_.shift();
        return;
      }
      break;
    case PotentialKind::lq_squared:
      if (dom == Domain::Kind::none) {
        backend_ = LltBackend::lq_radial;
        const_ = -phi_.shift();
        lq_ = std::make_shared<LqRadial>(phi_.lq().p, phi_.lq().a, d);
        return;
      }
      break;
    case PotentialKind::tabulated_1d: break;
    case PotentialKind::lipschitz_mixture:
      throw InputError("the log-Laplace transform of a lipschitz-mixture potential is not supported");
  }
  if (d != 1)
    throw InputError("no LLT backend for a " + std::string(kind_name(phi_.kind())) +
                     " potential with this domain in dimension " + std::to_string(d));
  backend_ = LltBackend::quadrature_1d;
}

quad::Tilted1D LltView::tilted1(double x, int component) const {
  quad::LogDensity1D dens;
  if (backend_ == LltBackend::quadrature_1d) {
    const Potential& phi = phi_;
    dens.log_f = [&phi, x](double t) { return x * t - phi.value1(t); };
    std::tie(dens.lo, dens.hi) = phi.support1();
    dens.breaks = phi.kinks1();
    const bool bounded = std::isfinite(dens.lo) && std::isfinite(dens.hi);
    dens.hint = bounded ? 0.5 * (dens.lo + dens.hi) : 0.0;
    dens.scale = bounded ? 0.25 * (dens.hi - dens.lo) : 1.0;
  } else if (backend_ == LltBackend::separable_product) {
    const Scalar1D c = phi_.components().at(component);
    dens.log_f = [c, x](double t) { return x * t - c.value(t); };
    std::tie(dens.lo, dens.hi) = box_axis(phi_.domain(), component);
    if (auto k = c.kink()) dens.breaks = {*k};
    dens.hint = c.center;
    dens.scale = scalar_width(c);
  } else {
    throw InputError("tilted1 is only available for quadrature-based backends");
  }
  return quad::Tilted1D(std::move(dens));
}

LltEval1 LltView::component_eval(int i, double x, int order) const {
  if (backend_ == LltBackend::separable_product && phi_.domain().kind == Domain::Kind::none) {
    const Scalar1D& c = phi_.components()[i];
    const double s = c.scale;
    LltEval1 e;
    if (c.kind == Scalar1D::Kind::quadratic) {
      e.value = x * c.center + x * x / (2.0 * s) + 0.5 * std::log(2.0 * M_PI / s);
      e.d1 = c.center + x / s;
      e.d2 = 1.0 / s;
      return e;
    }
    if (c.kind == Scalar1D::Kind::abs) {
      if (std::abs(x) >= s) {
        std::ostringstream os;
        os << "tilt " << x << " outside the domain (-" << s << ", " << s << ") of the transform";
        throw DivergenceError(os.str());
      }
      const double den = s * s - x * x;
      e.value = x * c.center + std::log(2.0 * s / den);
      e.d1 = c.center + 2.0 * x / den;
      e.d2 = 2.0 * (s * s + x * x) / (den * den);
      e.d3 = 4.0 * x * (x * x + 3.0 * s * s) / (den * den * den);
      return e;
    }
  }
  (void)order;
  return from_tilted(tilted1(x, i));
}

LltEval LltView::eval(const Vec& x, int order) const {
  const int d = dim();
  if (x.size() != d) throw DomainError("tilt has wrong dimension");
  if (!x.allFinite()) throw DomainError("tilt is not finite");
  LltEval out;
  switch (backend_) {
    case LltBackend::closed_form_gaussian: {
      const auto& g = phi_.gaussian();
      out.value = x.dot(g.mean) + 0.5 * x.dot(g.cov * x) + const_;
      out.grad = g.mean + g.cov * x;
      out.hess = g.cov;
      out.third = Vec::Zero(d);
      return out;
    }
    case LltBackend::separable_product:
    case LltBackend::quadrature_1d: {
      out.value = const_;
      out.grad.resize(d);
      out.hess = Mat::Zero(d, d);
      out.third.resize(d);
      for (int i = 0; i < d; ++i) {
        const auto e = component_eval(i, x(i), order);
        out.value += e.value;
        out.grad(i) = e.d1;
        out.hess(i, i) = e.d2;
        out.third(i) = e.d3;
        out.err += e.err;
      }
      return out;
    }
    case LltBackend::lq_radial: {
      auto e = lq_->eval(x, std::min(order, 2));
      out.value = e.value + const_;
      out.grad = std::move(e.grad);
      out.hess = std::move(e.hess);
      if (d == 1) out.third = Vec::Zero(1);
      out.err = e.rel_err;
      return out;
    }
  }
  return out;
}

double LltView::value1(double x) const {
  if (dim() != 1) throw InputError("value1 needs a one-dimensional potential");
  auto [lo, hi] = domain1();
  if (!(x > lo && x < hi)) return kInf;
  try {
    return eval(vec1(x), 0).value;
  } catch (const DivergenceError&) {
    return kInf;
  }
}

LltEval1 LltView::eval1(double x) const {
  const auto e = eval(vec1(x), 3);
  LltEval1 o;
  o.value = e.value;
  o.d1 = e.grad(0);
  o.d2 = e.hess(0, 0);
  o.d3 = e.third.size() ? e.third(0) : 0.0;
  o.err = e.err;
  return o;
}

std::pair<double, double> LltView::domain1() const {
  if (backend_ == LltBackend::separable_product && phi_.domain().kind == Domain::Kind::none) {
    const auto& c = phi_.components()[0];
    if (c.kind == Scalar1D::Kind::abs) return {-c.scale, c.scale};
  }
  return {-kInf, kInf};
}

bool LltView::in_domain(const Vec& x) const {
  if (x.size() != dim() || !x.allFinite()) return false;
  if (backend_ == LltBackend::separable_product && phi_.domain().kind == Domain::Kind::none) {
    const auto& cs = phi_.components();
    for (int i = 0; i < dim(); ++i)
      if (cs[i].kind == Scalar1D::Kind::abs && std::abs(x(i)) >= cs[i].scale) return false;
  }
  return true;
}

Vec LltView::sample_tilted(const Vec& x, Rng& rng) const { return sample_tilted_n(x, rng, 1).col(0); }

Mat LltView::sample_tilted_n(const Vec& x, Rng& rng, int n) const {
  const int d = dim();
  if (x.size() != d) throw DomainError("tilt has wrong dimension");
  Mat out(d, n);
  switch (backend_) {
    case LltBackend::closed_form_gaussian: {
      const auto& g = phi_.gaussian();
      const Vec m = g.mean + g.cov * x;
      Vec z(d);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) z(i) = rng.normal();
        out.col(j) = m + g.chol * z;
      }
      return out;
    }
    case LltBackend::separable_product: {
      const bool free = phi_.domain().kind == Domain::Kind::none;
      for (int i = 0; i < d; ++i) {
        const Scalar1D& c = phi_.components()[i];
        if (free && c.kind == Scalar1D::Kind::quadratic) {
          for (int j = 0; j < n; ++j) out(i, j) = c.center + x(i) / c.scale + rng.normal() / std::sqrt(c.scale);
        } else if (free && c.kind == Scalar1D::Kind::abs) {
          if (std::abs(x(i)) >= c.scale) throw DivergenceError("tilt outside the domain of the transform");
          for (int j = 0; j < n; ++j) out(i, j) = draw_abs(c.scale, c.center, x(i), rng);
        } else {
          const auto t = tilted1(x(i), i);
          for (int j = 0; j < n; ++j) out(i, j) = t.sample(rng);
        }
      }
      return out;
    }
    case LltBackend::quadrature_1d: {
      const auto t = tilted1(x(0));
      for (int j = 0; j < n; ++j) out(0, j) = t.sample(rng);
      return out;
    }
    case LltBackend::lq_radial: return sample_lq(x, rng, n);
  }
  return out;
}

Mat LltView::sample_lq(const Vec& x, Rng& rng, int n) const {
  const int d = dim();
  const double a = phi_.lq().a;
  Mat out(d, n);
  if (d == 1) {
    for (int j = 0; j < n; ++j) out(0, j) = x(0) / (2.0 * a) + rng.normal() / std::sqrt(2.0 * a);
    return out;
  }
  if (d > 3) throw InputError("tilted lq sampling is implemented for d <= 3");
  const auto e = lq_->eval(x, 2);
  const double half = 12.0 * std::sqrt(e.hess.diagonal().maxCoeff());
  GridSpec spec{e.grad.array() - half, e.grad.array() + half, std::vector<int>(d, d == 2 ? 256 : 64)};
  const double q = phi_.lq().q();
  GridDensity grid(spec, [&](const Vec& y) {
    const double nq = lp_norm(y, q);
    return x.dot(y) - a * nq * nq;
  });
  const auto t = grid.tilted(Vec::Zero(d));
  for (int j = 0; j < n; ++j) out.col(j) = t.draw(rng);
  return out;
}

// ---------------------------------------------------------------------------

ConvPower1D::ConvPower1D(const Potential& phi, int tau, double rel_tol) : phi_(phi), tau_(tau), rel_tol_(rel_tol) {
  if (phi.dim() != 1) throw InputError("direct convolution needs a one-dimensional potential");
  if (tau < 1) throw InputError("convolution power must be >= 1");
  auto [lo, hi] = phi.support1();
  lo_ = tau * lo;
  hi_ = tau * hi;
  const auto base = phi.kinks1();
  level_kinks_.push_back({});
  level_kinks_.push_back(base);
  for (int m = 2; m <= tau; ++m) {
    std::set<double> next;
    for (double a : level_kinks_.back())
      for (double b : base) next.insert(a + b);
    level_kinks_.emplace_back(next.begin(), next.end());
  }
}

double ConvPower1D::log_density(double y) const { return level(tau_, y); }

double ConvPower1D::level(int m, double y) const {
  if (m == 1) return -phi_.value1(y);
  auto [lo1, hi1] = phi_.support1();
  const double lo = std::max(lo1, y - (m - 1) * hi1), hi = std::min(hi1, y - (m - 1) * lo1);
  if (!(hi > lo)) return -kInf;
  quad::LogDensity1D dens;
  dens.log_f = [this, m, y](double u) { return -phi_.value1(u) + level(m - 1, y - u); };
  dens.lo = lo;
  dens.hi = hi;
  dens.hint = y / m;
  if (std::isfinite(lo) && std::isfinite(hi)) dens.scale = 0.25 * (hi - lo);
  dens.breaks = level_kinks_[1];
  for (double k : level_kinks_[m - 1]) dens.breaks.push_back(y - k);
  quad::Settings st;
  st.rel_tol = rel_tol_;
  return quad::Tilted1D(std::move(dens), st).log_mass();
}

ConvolutionCheck convolved_llt_check(const LltView& view, int tau, const Vec& x) {
  if (tau < 1) throw InputError("convolution power must be >= 1");
  const Potential& phi = view.potential();
  ConvolutionCheck out;
  out.rhs = tau * view.value(x);
  if (view.backend() == LltBackend::closed_form_gaussian) {
    // exp(-phi)^{*tau} is a Gaussian with mean tau*mu, covariance tau*Sigma and mass exp(tau * psi(0)).
    const auto& g = phi.gaussian();
    const double psi0 = view.value(Vec::Zero(phi.dim()));
    out.lhs = tau * x.dot(g.mean) + 0.5 * tau * x.dot(g.cov * x) + tau * psi0;
    return out;
  }
  if (phi.dim() != 1) throw InputError("direct convolution check needs d = 1 or a gaussian potential");
  const ConvPower1D conv(phi, tau);
  const auto e = view.eval1(x(0));
  quad::LogDensity1D dens;
  const double xs = x(0);
  dens.log_f = [&conv, xs](double y) { return xs * y + conv.log_density(y); };
  std::tie(dens.lo, dens.hi) = conv.support();
  dens.hint = tau * e.d1;
  dens.scale = std::sqrt(tau * e.d2);
  dens.breaks = conv.kinks();
  out.lhs = quad::Tilted1D(std::move(dens)).log_mass();
  return out;
}

double lq_llt_value(double p, double a, const Vec& x) {
  return LqRadial(p, a, static_cast<int>(x.size())).value(x);
}

}  // namespace llt
