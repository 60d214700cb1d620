#include "llt/lq_radial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "llt/kernels.hpp"
#include "llt/quadrature.hpp"

namespace llt {
namespace {

constexpr double kPi = M_PI;

// log(2 sinh(x rho) / x) and its first two x-derivatives.
void log_sinh_ratio(double x, double rho, double& v, double& g, double& D) {
  const double z = std::abs(x) * rho;
  if (z < 1e-3) {
    const double z2 = z * z;
    v = std::log(2.0 * rho) + z2 / 6.0 - z2 * z2 / 180.0;
    g = x * rho * rho / 3.0 - x * x * x * std::pow(rho, 4) / 45.0;
    D = rho * rho / 3.0 - x * x * std::pow(rho, 4) / 15.0;
    return;
  }
  const double e = std::exp(-2.0 * z);
  v = z + std::log1p(-e) - std::log(std::abs(x));
  const double coth = (1.0 + e) / (1.0 - e);
  g = rho * coth * (x > 0 ? 1.0 : -1.0) - 1.0 / x;
  const double inv_sinh2 = 4.0 * e / ((1.0 - e) * (1.0 - e));
  D = 1.0 / (x * x) - rho * rho * inv_sinh2;
}

}  // namespace

double kanter_a(double beta, double u) {
  const double g = 1.0 / (1.0 - beta);
  return std::pow(std::sin(beta * u), beta * g) * std::sin((1.0 - beta) * u) /
         std::pow(std::sin(u), g);
}

double lq_llt_closed_1d(double a, double x) { return x * x / (4.0 * a) + 0.5 * std::log(kPi / a); }

LqRadial::LqRadial(double p, double a, int dim) : p_(p), a_(a), d_(dim) {
  if (!(p >= 1.0 && p < 2.0)) throw InputError("lq transform needs p in [1, 2)");
  if (!(a > 0)) throw InputError("lq transform needs a > 0");
  if (dim < 1) throw InputError("lq transform needs dimension >= 1");
  if (p == 1.0) {
    q_ = std::numeric_limits<double>::infinity();
    beta_ = 0.0;
    return;
  }
  q_ = p / (p - 1.0);
  beta_ = 2.0 / q_;
  build_table();

  rho_ = (1.0 - beta_) / (beta_ * q_);
  tau_a_ = std::pow(a_, -1.0 / (beta_ * q_));
  const double kappa1 = (1.0 - beta_) + d_ * rho_;
  ell0_ = std::clamp(-27.6 / (kappa1 + std::min(beta_, 1.0 - beta_)), -400.0, -8.0);
  const double a0 = std::pow(beta_, beta_ / (1.0 - beta_)) * (1.0 - beta_);
  const double ell_hi = std::log(120.0 / a0);
  tail_c_ = (1.0 - beta_) / std::tgamma(1.0 - beta_);

  const auto gl = quad::gauss_legendre(8);
  double l = ell0_;
  while (l < ell_hi) {
    const double w = std::min(1.0, 3.0 / (1.0 + a0 * std::exp(l)));
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double ell = l + 0.5 * w * (gl.nodes[k] + 1.0);
      const double lk = log_kernel(std::exp(ell));
      const double tau = tau_a_ * std::exp(rho_ * ell);
      nodes_.push_back({ell, tau, std::log(0.5 * w * gl.weights[k]) + lk + ell + d_ * std::log(tau)});
    }
    l += w;
  }
}

void LqRadial::build_table() {
  table_.h = 0.04;
  table_.smax = 48.0;
  const int n = static_cast<int>(std::round(table_.smax / table_.h));
  std::vector<double> f(n + 1), f1(n + 1), f2(n + 1);
  const double q = q_;
  for (int k = 0; k <= n; ++k) {
    const double s = k * table_.h;
    quad::LogDensity1D dens;
    dens.log_f = [s, q](double u) { return s * u - std::pow(std::abs(u), q); };
    dens.hint = std::pow(s / q, 1.0 / (q - 1.0));
    dens.scale = 0.5;
    quad::Tilted1D t(std::move(dens), {1e-13, 46.0, 4000});
    f[k] = t.log_mass();
    f1[k] = t.mean();
    f2[k] = t.var();
  }
  h0_ = f[0];
  h2_ = f2[0];
  const double h = table_.h;
  table_.coef.resize(6 * n);
  for (int k = 0; k < n; ++k) {
    const double c0 = f[k], c1 = h * f1[k], c2 = 0.5 * h * h * f2[k];
    const double D = f[k + 1] - (c0 + c1 + c2);
    const double E = h * f1[k + 1] - (c1 + 2.0 * c2);
    const double F = h * h * f2[k + 1] - 2.0 * c2;
    double* c = &table_.coef[6 * k];
    c[0] = c0;
    c[1] = c1;
    c[2] = c2;
    c[3] = 10.0 * D - 4.0 * E + 0.5 * F;
    c[4] = -15.0 * D + 7.0 * E - F;
    c[5] = 6.0 * D - 3.0 * E + 0.5 * F;
  }
}

void LqRadial::hq(double s, double& v, double& d1, double& d2) const {
  const double sign = s < 0 ? -1.0 : 1.0;
  const double as = std::abs(s);
  if (as >= table_.smax) {
    const double q = q_;
    quad::LogDensity1D dens;
    dens.log_f = [as, q](double u) { return as * u - std::pow(std::abs(u), q); };
    dens.hint = std::pow(as / q, 1.0 / (q - 1.0));
    dens.scale = 0.5;
    quad::Tilted1D t(std::move(dens));
    v = t.log_mass();
    d1 = sign * t.mean();
    d2 = t.var();
    return;
  }
  const double h = table_.h;
  const int k = std::min(static_cast<int>(as / h), static_cast<int>(table_.coef.size() / 6) - 1);
  const double t = as / h - k;
  const double* c = &table_.coef[6 * k];
  v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
  d1 = sign * (c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))) / h;
  d2 = (2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))) / (h * h);
}

double LqRadial::log_kernel(double v) const {
  const double b = beta_;
  const double g = 1.0 / (1.0 - b);
  const double a0 = std::pow(b, b * g) * (1.0 - b);
  auto log_a_u = [b, g](double u) {
    return b * g * std::log(std::sin(b * u)) + std::log(std::sin((1.0 - b) * u)) - g * std::log(std::sin(u));
  };
  // Same function parametrized by t = pi - u, accurate near u = pi.
  auto log_a_t = [b, g](double t) {
    return b * g * std::log(std::sin(b * (kPi - t))) + std::log(std::sin((1.0 - b) * (kPi - t))) -
           g * std::log(std::sin(t));
  };
  // Integrands scaled by exp(A0 v); A >= A0 on (0, pi).
  const auto i1 = quad::integrate(
      [&](double u) {
        const double la = log_a_u(u);
        return std::exp(la - (std::exp(la) - a0) * v);
      },
      0.0, 0.5 * kPi, 1e-12);
  double i2 = 0.0;
  const double c0 = std::pow(std::sin(b * kPi), g);
  const double t_lo = std::pow(c0 * v / (800.0 + a0 * v), 1.0 - b) * std::exp(-2.0);
  if (t_lo < 0.5 * kPi) {
    i2 = quad::integrate(
             [&](double s) {
               const double t = std::exp(s);
               const double la = log_a_t(t);
               return std::exp(la - (std::exp(la) - a0) * v + s);
             },
             std::log(t_lo), std::log(0.5 * kPi), 1e-12)
             .value;
  }
  return -a0 * v + std::log((i1.value + i2) / kPi);
}

LqEval LqRadial::eval(const Vec& x, int order) const {
  if (x.size() != d_) throw DomainError("lq transform: point has wrong dimension");
  if (!x.allFinite()) throw DomainError("lq transform: non-finite point");
  if (p_ == 1.0) return eval_p1(x, order);

  const int n = static_cast<int>(nodes_.size());
  const int d = d_;
  std::vector<double> lw(n), ew(n);
  std::vector<double> g(order >= 1 ? static_cast<std::size_t>(n) * d : 0);
  std::vector<double> D(order >= 2 ? static_cast<std::size_t>(n) * d : 0);
  for (int j = 0; j < n; ++j) {
    const double tau = nodes_[j].tau;
    double s = nodes_[j].base;
    for (int i = 0; i < d; ++i) {
      double v, d1, d2;
      hq(x(i) * tau, v, d1, d2);
      s += v;
      if (order >= 1) g[j * d + i] = tau * d1;
      if (order >= 2) D[j * d + i] = tau * tau * d2;
    }
    lw[j] = s;
  }
  // Power-law tail below ell0: k(v) ~ C v^{-beta}, H(s) ~ H(0) + H''(0) s^2 / 2.
  const double kappa1 = (1.0 - beta_) + d * rho_;
  const double kappa2 = kappa1 + 2.0 * rho_;
  const double log_t0 = std::log(tail_c_) + d * std::log(tau_a_) + d * h0_ + kappa1 * ell0_ - std::log(kappa1);
  const double log_t2 = std::log(tail_c_) + (d + 2) * std::log(tau_a_) + d * h0_ + kappa2 * ell0_ - std::log(kappa2);

  double m = std::max(*std::max_element(lw.begin(), lw.end()), log_t0);
  for (int j = 0; j < n; ++j) lw[j] -= m;
  kernels::vexp(lw, ew);
  double W = 0.0;
  for (double e : ew) W += e;
  const double T0 = std::exp(log_t0 - m), T2 = std::exp(log_t2 - m);
  const double xx = x.squaredNorm();
  const double T = T0 + 0.5 * h2_ * xx * T2;
  const double Z = W + T;

  const double trunc = ew.back() / Z;
  if (trunc > 1e-12) {
    std::ostringstream os;
    os << "lq transform: mixture quadrature truncated at the upper end (residual " << trunc
       << ") for |x| = " << std::sqrt(xx);
    throw NumericalError(os.str());
  }
  const double tau0 = tau_a_ * std::exp(rho_ * ell0_);
  LqEval out;
  out.value = m + std::log(Z);
  out.rel_err = trunc + T2 * 0.5 * h2_ * xx * h2_ * xx * tau0 * tau0 / Z + 1e-13;
  if (order >= 1) {
    Vec S = h2_ * T2 * x;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < d; ++i) S(i) += ew[j] * g[j * d + i];
    const Vec gbar = S / Z;
    out.grad = gbar;
    if (order >= 2) {
      Mat H = Mat::Zero(d, d);
      Vec c(d);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) {
          c(i) = g[j * d + i] - gbar(i);
          H(i, i) += ew[j] * D[j * d + i];
        }
        H.selfadjointView<Eigen::Lower>().rankUpdate(c, ew[j]);
      }
      H = H.selfadjointView<Eigen::Lower>();
      const Vec gradT = h2_ * T2 * x;
      H += h2_ * T2 * Mat::Identity(d, d) + T * gbar * gbar.transpose() - gbar * gradT.transpose() -
           gradT * gbar.transpose();
      out.hess = H / Z;
    }
  }
  return out;
}

LqEval LqRadial::eval_p1(const Vec& x, int order) const {
  const int d = d_;
  const double a = a_;
  auto log_f = [&x, a, d](double rho) {
    if (!(rho > 0)) return -quad::kInf;
    double s = std::log(2.0 * a * rho) - a * rho * rho;
    for (int i = 0; i < d; ++i) {
      double v, g, D;
      log_sinh_ratio(x(i), rho, v, g, D);
      s += v;
    }
    return s;
  };
  quad::LogDensity1D dens;
  dens.log_f = log_f;
  dens.lo = 0.0;
  dens.hint = std::max(x.cwiseAbs().sum() / (2.0 * a), 1.0 / std::sqrt(a));
  dens.scale = 0.5 / std::sqrt(a);
  const quad::Tilted1D win(dens);

  const auto gl = quad::gauss_legendre(8);
  const int panels = 48;
  const double lo = win.window_lo(), hi = win.window_hi();
  const double w = (hi - lo) / panels;
  std::vector<double> rho, lw;
  for (int k = 0; k < panels; ++k)
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
      const double r = lo + w * (k + 0.5 * (gl.nodes[j] + 1.0));
      rho.push_back(r);
      lw.push_back(std::log(0.5 * w * gl.weights[j]) + log_f(r));
    }
  const double m = *std::max_element(lw.begin(), lw.end());
  const int n = static_cast<int>(rho.size());
  std::vector<double> ew(n);
  for (int j = 0; j < n; ++j) ew[j] = std::exp(lw[j] - m);
  double Z = 0.0;
  for (double e : ew) Z += e;
  LqEval out;
  out.value = m + std::log(Z);
  out.rel_err = win.error_bound() + 1e-13;
  if (order >= 1) {
    std::vector<double> g(static_cast<std::size_t>(n) * d), D(static_cast<std::size_t>(n) * d);
    Vec gbar = Vec::Zero(d);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < d; ++i) {
        double v;
        log_sinh_ratio(x(i), rho[j], v, g[j * d + i], D[j * d + i]);
        gbar(i) += ew[j] * g[j * d + i];
      }
    gbar /= Z;
    out.grad = gbar;
    if (order >= 2) {
      Mat H = Mat::Zero(d, d);
      Vec c(d);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) {
          c(i) = g[j * d + i] - gbar(i);
          H(i, i) += ew[j] * D[j * d + i];
        }
        H.selfadjointView<Eigen::Lower>().rankUpdate(c, ew[j]);
      }
      out.hess = Mat(H.selfadjointView<Eigen::Lower>()) / Z;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// G_k(R) = log int exp(x_k t + G_{k+1}(R (+) |t|)) dt with G_d(R) = -a R^{2/q},
// where (+) is R + |t|^q for finite q and max(R, |t|) for q = inf.
double direct_level(int k, double R, const Vec& x, double a, double q, double tol) {
  const int d = static_cast<int>(x.size());
  const bool inf_q = std::isinf(q);
  auto combine = [inf_q, q](double r, double t) {
    return inf_q ? std::max(r, std::abs(t)) : r + std::pow(std::abs(t), q);
  };
  auto outer = [inf_q, q, a](double r) { return -a * (inf_q ? r * r : std::pow(r, 2.0 / q)); };
  const double xk = x(k);
  quad::LogDensity1D dens;
  if (k == d - 1) {
    dens.log_f = [=](double t) { return xk * t + outer(combine(R, t)); };
  } else {
    dens.log_f = [=, &x](double t) { return xk * t + direct_level(k + 1, combine(R, t), x, a, q, tol * 0.1); };
  }
  dens.hint = 0.0;
  dens.scale = 0.5 / std::sqrt(a);
  if (inf_q && R > 0) dens.breaks = {-R, R};
  quad::Settings st;
  st.rel_tol = tol;
  return quad::Tilted1D(std::move(dens), st).log_mass();
}

}  // namespace

double lq_llt_direct(double p, double a, const Vec& x, double rel_tol) {
  if (x.size() < 1 || x.size() > 3) throw InputError("direct lq quadrature supports 1 <= d <= 3");
  const double q = p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
  return direct_level(0, 0.0, x, a, q, std::max(rel_tol, 1e-13 * std::pow(10.0, x.size() - 1)));
}

}  // namespace llt
