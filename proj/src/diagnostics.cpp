#include "llt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llt/quadrature.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x - log(1 + x), accurate for small x.
double x_minus_log1p(double x) {
  if (std::abs(x) < 1e-3) {
    double term = x * x, s = 0.0;
    for (int k = 2; k < 12; ++k, term *= -x) s += term / k;
    return s;
  }
  return x - std::log1p(x);
}

double log_normal1(double x, double m, double v) {
  const double r = x - m;
  return -0.5 * (std::log(2.0 * M_PI * v) + r * r / v);
}

// Eigenvalues of F = L^{-1} E L^{-T} and the rotated mean offset, where
// Sigma_pi = L L^T and E = Sigma_mu - Sigma_pi.
struct Whitened {
  Vec f, v;
};

Whitened whiten_offset(const Vec& dmean, const Mat& dcov, const GaussianLaw& pi) {
  pi.validate();
  if (dmean.size() != pi.dim() || dcov.rows() != pi.dim() || dcov.cols() != pi.dim())
    throw InputError("gaussian laws of different dimension");
  const Eigen::LLT<Mat> llt(pi.cov);
  const Mat L = llt.matrixL();
  Mat f = L.triangularView<Eigen::Lower>().solve(dcov);
  f = L.triangularView<Eigen::Lower>().solve(f.transpose()).transpose();
  const Vec u = L.triangularView<Eigen::Lower>().solve(dmean);
  const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (f + f.transpose()));
  return {es.eigenvalues(), es.eigenvectors().transpose() * u};
}

Whitened whiten(const GaussianLaw& mu, const GaussianLaw& pi) {
  mu.validate();
  if (mu.dim() != pi.dim()) throw InputError("gaussian laws of different dimension");
  return whiten_offset(mu.mean - pi.mean, mu.cov - pi.cov, pi);
}

double chi2_whitened(const Whitened& w) {
  // 1 + chi^2 = prod_i exp(v_i^2 / (1 - f_i)) / sqrt(1 - f_i^2) in the eigenbasis of F.
  double s = 0.0;
  for (int i = 0; i < w.f.size(); ++i) {
    const double f = w.f(i);
    if (!(f < 1.0)) return kInf;
    s += -0.5 * std::log1p(-f * f) + w.v(i) * w.v(i) / (1.0 - f);
  }
  return std::expm1(s);
}

double kl_whitened(const Whitened& w) {
  double s = 0.0;
  for (int i = 0; i < w.f.size(); ++i) s += x_minus_log1p(w.f(i));
  return 0.5 * (s + w.v.squaredNorm());
}

quad::Tilted1D tilted(std::function<double(double)> log_f, double hint, double scale,
                      std::vector<double> breaks = {}, double lo = -kInf, double hi = kInf, double rel_tol = 1e-12) {
  quad::LogDensity1D d;
  d.log_f = std::move(log_f);
  d.hint = hint;
  d.scale = scale;
  d.breaks = std::move(breaks);
  d.lo = lo;
  d.hi = hi;
  quad::Settings st;
  st.rel_tol = rel_tol;
  return quad::Tilted1D(std::move(d), st);
}

}  // namespace

void GaussianLaw::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size() || mean.size() == 0)
    throw InputError("gaussian law: mean and covariance shapes disagree");
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw InputError("gaussian law: covariance is not symmetric");
  if (Eigen::LLT<Mat>(cov).info() != Eigen::Success) throw InputError("gaussian law: covariance is not positive definite");
}

double chi2_gaussian(const GaussianLaw& mu, const GaussianLaw& pi) { return chi2_whitened(whiten(mu, pi)); }
double kl_gaussian(const GaussianLaw& mu, const GaussianLaw& pi) { return kl_whitened(whiten(mu, pi)); }

double chi2_gaussian_offset(const Vec& dmean, const Mat& dcov, const GaussianLaw& pi) {
  return chi2_whitened(whiten_offset(dmean, dcov, pi));
}
double kl_gaussian_offset(const Vec& dmean, const Mat& dcov, const GaussianLaw& pi) {
  return kl_whitened(whiten_offset(dmean, dcov, pi));
}

double chi2_quadrature_1d(const GaussianLaw& mu, const GaussianLaw& pi) {
  if (mu.dim() != 1 || pi.dim() != 1) throw InputError("chi2 quadrature needs d = 1");
  const double m = mu.mean(0), s = mu.cov(0, 0), n = pi.mean(0), p = pi.cov(0, 0);
  if (!(2.0 / s - 1.0 / p > 0.0)) return kInf;
  auto log_f = [=](double x) { return 2.0 * log_normal1(x, m, s) - log_normal1(x, n, p); };
  return std::expm1(tilted(log_f, m, std::sqrt(s)).log_mass());
}

double kl_quadrature_1d(const GaussianLaw& mu, const GaussianLaw& pi) {
  if (mu.dim() != 1 || pi.dim() != 1) throw InputError("kl quadrature needs d = 1");
  const double m = mu.mean(0), s = mu.cov(0, 0), n = pi.mean(0), p = pi.cov(0, 0);
  const auto q = tilted([=](double x) { return log_normal1(x, m, s); }, m, std::sqrt(s));
  return q.expect([=](double x) { return log_normal1(x, m, s) - log_normal1(x, n, p); });
}

// ---------------------------------------------------------------------------

std::string_view status_name(CheckReport::Status s) {
  switch (s) {
    case CheckReport::Status::pass: return "pass";
    case CheckReport::Status::fail: return "fail";
    case CheckReport::Status::report: return "report";
  }
  return "?";
}

Json CheckReport::to_json() const {
  Json j;
  j["name"] = name;
  j["status"] = std::string(status_name(status));
  j["margin"] = std::isfinite(margin) ? Json(margin) : Json(margin > 0 ? "inf" : "-inf");
  j["witnesses"] = witnesses;
  return j;
}

// ---------------------------------------------------------------------------

IdentityReport gaussian_llt_identity(const Vec& mu, const Mat& sigma, int probes, std::uint64_t seed) {
  const int d = static_cast<int>(mu.size());
  if (d < 1 || d > 3) throw InputError("gaussian LLT identity check needs 1 <= d <= 3");
  const Potential phi = make_gaussian(mu, sigma);

  struct Moments {
    double log_mass;
    Vec mean;
    Mat cov;
  };
  // Quadrature of exp(<x, y> - phi(y)) from the potential's value oracle.
  auto integrate = [&](const Vec& x) -> Moments {
    if (d == 1) {
      const auto q = tilted([&](double y) { return x(0) * y - phi.value1(y); }, mu(0) + sigma(0, 0) * x(0),
                            std::sqrt(sigma(0, 0)));
      return {q.log_mass(), vec1(q.mean()), Mat::Constant(1, 1, q.var())};
    }
    // Newton for the mode, then a whitened tensor Gauss-Hermite rule.
    Vec y = Vec::Zero(d);
    for (int it = 0; it < 50; ++it) {
      const Vec g = x - phi.gradient(y);
      const Vec step = phi.hessian(y).llt().solve(g);
      y += step;
      if (step.norm() < 1e-14 * (1.0 + y.norm())) break;
    }
    const Mat L = Eigen::LLT<Mat>(phi.hessian(y).inverse()).matrixL();
    const auto rule = quad::gauss_hermite(d == 2 ? 40 : 24);
    const int k = static_cast<int>(rule.nodes.size());
    const double peak = x.dot(y) - phi.value(y);
    double m0 = 0.0;
    Vec m1 = Vec::Zero(d);
    Mat m2 = Mat::Zero(d, d);
    std::vector<int> idx(d, 0);
    Vec z(d);
    for (;;) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        z(i) = rule.nodes[idx[i]];
        w *= rule.weights[idx[i]];
      }
      const Vec pt = y + L * z;
      const double e = std::exp(x.dot(pt) - phi.value(pt) - peak + 0.5 * z.squaredNorm()) * w;
      m0 += e;
      m1 += e * pt;
      m2 += e * pt * pt.transpose();
      int i = 0;
      while (i < d && ++idx[i] == k) idx[i++] = 0;
      if (i == d) break;
    }
    const double logdet = 2.0 * Mat(L).diagonal().array().log().sum();
    Moments out;
    out.log_mass = peak + std::log(m0) + 0.5 * logdet;
    out.mean = m1 / m0;
    out.cov = m2 / m0 - out.mean * out.mean.transpose();
    return out;
  };

  IdentityReport rep;
  const auto at0 = integrate(Vec::Zero(d));
  rep.constant = at0.log_mass;
  rep.grad_deviation = (at0.mean - mu).cwiseAbs().maxCoeff();
  Rng rng(seed, 0x1d);
  for (int p = 0; p < probes; ++p) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = rng.normal();
    const auto m = integrate(x);
    const double model = x.dot(mu) + 0.5 * x.dot(sigma * x) + rep.constant;
    rep.max_deviation = std::max(rep.max_deviation, std::abs(m.log_mass - model));
    rep.hess_deviation = std::max(rep.hess_deviation, (m.cov - sigma).cwiseAbs().maxCoeff());
  }
  return rep;
}

Assumption1Report assumption1_check(const Potential& v, const Potential& phi, double alpha,
                                    const std::vector<double>& grid) {
  if (v.dim() != 1 || phi.dim() != 1) throw InputError("assumption check needs one-dimensional potentials");
  if (alpha < 0.0) throw InputError("assumption check needs alpha >= 0");
  const LltView psi(phi), vsharp(v);
  Assumption1Report rep;
  for (double x : grid) {
    if (alpha > 0.0 && v.d2(x) < alpha * psi.eval1(x).d2 - 1e-9) rep.premise = false;
    const double margin = phi.d2(x) - (alpha > 0.0 ? alpha * vsharp.eval1(x).d2 : 0.0);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_point = x;
    }
  }
  rep.holds = rep.worst_margin >= -1e-6;
  return rep;
}

double quartic_block_value(double x, double y, double gamma) {
  const double u = x - y;
  return 12.0 * u * u - gamma * 12.0 * x * x;
}

double conv2_hessian(const Potential& phi, double w) {
  if (phi.dim() != 1) throw InputError("convolution Hessian needs a one-dimensional potential");
  std::vector<double> breaks;
  for (double k : phi.kinks1()) {
    breaks.push_back(k);
    breaks.push_back(w - k);
  }
  const auto q = tilted([&](double u) { return -phi.value1(u) - phi.value1(w - u); }, 0.5 * w, 0.5, breaks);
  const double e2 = q.expect([&](double u) { return phi.d2(w - u); });
  const double m1 = q.expect([&](double u) { return phi.d1(w - u); });
  const double m2 = q.expect([&](double u) {
    const double g = phi.d1(w - u) - m1;
    return g * g;
  });
  return e2 - m2;
}

QuarticReport x4_counterexample_check(double w_max, int points) {
  QuarticReport rep;
  rep.block_value = quartic_block_value(1.0, 1.0, 0.5);
  const Potential phi = make_separable({{Scalar1D::Kind::quartic, 1.0, 0.0, 4.0}});
  double worst = -kInf;
  for (int i = 0; i < points; ++i) {
    const double w = points == 1 ? w_max : w_max * i / (points - 1);
    const double conv = conv2_hessian(phi, w), half = 0.5 * phi.d2(w);
    if (half - conv > worst) {
      worst = half - conv;
      rep.witness = w;
      rep.conv_hess = conv;
      rep.half_hess = half;
    }
  }
  rep.found = worst > 1e-6;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Sum over unordered pairs within each group of |z_i - z_j| for sorted z.
void within_sums(const std::vector<double>& z, const std::vector<char>& in_a, double& sa, double& sb) {
  double ca = 0, cb = 0, suma = 0, sumb = 0;
  sa = sb = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (in_a[i]) {
      sa += z[i] * ca - suma;
      ++ca;
      suma += z[i];
    } else {
      sb += z[i] * cb - sumb;
      ++cb;
      sumb += z[i];
    }
  }
}

}  // namespace

TwoSampleResult two_sample_test(const Mat& a, const Mat& b, int permutations, std::uint64_t seed) {
  if (a.rows() != b.rows()) throw InputError("two-sample test: samples of different dimension");
  if (a.cols() < 100 || b.cols() < 100) throw InputError("two-sample test needs at least 100 samples per group");
  if (permutations < 1) throw InputError("two-sample test needs at least one permutation");
  const int n = static_cast<int>(a.cols()), m = static_cast<int>(b.cols()), N = n + m;
  Mat pooled(a.rows(), N);
  pooled << a, b;
  if ((pooled.colwise() - pooled.col(0)).cwiseAbs().maxCoeff() == 0.0)
    throw InputError("two-sample test: samples are constant");

  TwoSampleResult res;
  res.permutations = permutations;
  res.seed = seed;
  std::vector<char> labels(N, 0);
  std::fill(labels.begin(), labels.begin() + n, 1);
  Rng rng(seed, 0xe5);
  auto shuffle = [&] { std::shuffle(labels.begin(), labels.end(), rng.engine()); };

  std::function<double()> stat;
  std::vector<double> z;
  std::vector<char> sorted_labels(N);
  std::vector<int> order(N);
  Mat dist;
  double total = 0.0;
  if (pooled.rows() == 1) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return pooled(0, i) < pooled(0, j); });
    for (int i : order) z.push_back(pooled(0, i));
    double c = 0, s = 0;
    for (double v : z) {
      total += v * c - s;
      ++c;
      s += v;
    }
    stat = [&] {
      for (int i = 0; i < N; ++i) sorted_labels[i] = labels[order[i]];
      double sa, sb;
      within_sums(z, sorted_labels, sa, sb);
      const double sab = total - sa - sb;
      return 2.0 * sab / (double(n) * m) - 2.0 * sa / (double(n) * n) - 2.0 * sb / (double(m) * m);
    };
  } else {
    if (N > 6000) throw InputError("two-sample test in d > 1 is limited to 6000 pooled samples");
    dist.resize(N, N);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) dist(i, j) = (pooled.col(i) - pooled.col(j)).norm();
    stat = [&] {
      double sa = 0, sb = 0, sab = 0;
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < j; ++i) {
          if (labels[i] && labels[j]) sa += dist(i, j);
          else if (!labels[i] && !labels[j]) sb += dist(i, j);
          else sab += dist(i, j);
        }
      return 2.0 * sab / (double(n) * m) - 2.0 * sa / (double(n) * n) - 2.0 * sb / (double(m) * m);
    };
  }
  res.statistic = stat();
  const double tol = 1e-12 * std::max(1.0, std::abs(res.statistic));
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    shuffle();
    if (stat() >= res.statistic - tol) ++exceed;
  }
  res.p_value = (1.0 + exceed) / (1.0 + permutations);
  return res;
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 100) throw InputError("KS test needs at least 100 samples");
  std::sort(samples.begin(), samples.end());
  if (samples.front() == samples.back()) throw InputError("KS test: samples are constant");
  const double n = static_cast<double>(samples.size());
  KsResult r;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    r.statistic = std::max({r.statistic, f - i / n, (i + 1) / n - f});
  }
  const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * r.statistic;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  r.p_value = std::clamp(p, 0.0, 1.0);
  if (lam < 0.2) r.p_value = 1.0;
  return r;
}

double bregman_divergence(const Potential& phi, const Vec& x_prime, const Vec& x) {
  return phi.value(x_prime) - phi.value(x) - phi.gradient(x).dot(x_prime - x);
}

RayleighReport brascamp_lieb_check(const Potential& v, const LltView& psi, double alpha, int functions,
                                   std::uint64_t seed) {
  if (v.dim() != 1 || psi.dim() != 1) throw InputError("Rayleigh check needs d = 1");
  auto [lo, hi] = psi.domain1();
  auto [vlo, vhi] = v.support1();
  lo = std::max(lo, vlo);
  hi = std::min(hi, vhi);
  const double hint = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
  const auto q = tilted([&](double x) { return -alpha * psi.value1(x) - v.value1(x); }, hint, 0.5, v.kinks1(), lo, hi,
                        1e-11);
  const double mean = q.mean();
  Rng rng(seed, 0xb1);
  RayleighReport rep;
  for (int j = 0; j < functions; ++j) {
    double c[5] = {0, 1, 0, 0, 0};
    if (j > 0)
      for (int k = 1; k <= 4; ++k) c[k] = rng.normal();
    auto f = [&](double x) {
      const double t = x - mean;
      return ((c[4] * t + c[3]) * t + c[2]) * t * t + c[1] * t;
    };
    auto df = [&](double x) {
      const double t = x - mean;
      return ((4 * c[4] * t + 3 * c[3]) * t + 2 * c[2]) * t + c[1];
    };
    const double m1 = q.expect(f);
    const double var = q.expect([&](double x) { return (f(x) - m1) * (f(x) - m1); });
    const double energy = q.expect([&](double x) { return df(x) * df(x) / psi.eval1(x).d2; });
    const double ratio = energy / var;
    if (ratio < rep.infimum) {
      rep.infimum = ratio;
      rep.worst_function = j;
    }
  }
  return rep;
}

PiConvolutionReport pi_convolution_check(double alpha1, double alpha2) {
  if (!(alpha1 > 0.0 && alpha2 > 0.0)) throw InputError("PI constants must be positive");
  const double v1 = 1.0 / alpha1, v2 = 1.0 / alpha2;
  auto log_conv = [=](double y) {
    return tilted([=](double u) { return log_normal1(u, 0.0, v1) + log_normal1(y - u, 0.0, v2); }, y * v1 / (v1 + v2),
                  std::sqrt(v1 * v2 / (v1 + v2)), {}, -kInf, kInf, 1e-13)
        .log_mass();
  };
  quad::Settings st;
  st.rel_tol = 1e-11;
  quad::LogDensity1D d;
  d.log_f = log_conv;
  d.scale = std::sqrt(v1 + v2);
  const quad::Tilted1D q(std::move(d), st);
  PiConvolutionReport r;
  r.computed = 1.0 / q.var();
  r.exact = 1.0 / (v1 + v2);
  return r;
}

}  // namespace llt
