#pragma once

// Gaussian divergences and LLT identity checks, including the quartic block
// whose Hessian fails to be convex. Also holds the two-sample and KS tests
// behind the statistical acceptance checks.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "llt/common.hpp"
#include "llt/llt_engine.hpp"
#include "llt/potentials.hpp"

namespace llt {

struct GaussianLaw {
  Vec mean;
  Mat cov;

  int dim() const { return static_cast<int>(mean.size()); }
  // Throws InputError unless cov is symmetric positive definite and shapes agree.
  void validate() const;
};

// chi^2(mu || pi); +inf when 2 Sigma_mu^{-1} - Sigma_pi^{-1} is not positive definite.
double chi2_gaussian(const GaussianLaw& mu, const GaussianLaw& pi);
double kl_gaussian(const GaussianLaw& mu, const GaussianLaw& pi);
// Same, with mu given by its offsets mean_mu - mean_pi and Sigma_mu - Sigma_pi.
double chi2_gaussian_offset(const Vec& dmean, const Mat& dcov, const GaussianLaw& pi);
double kl_gaussian_offset(const Vec& dmean, const Mat& dcov, const GaussianLaw& pi);
// The integral definitions evaluated by 1-D quadrature.
double chi2_quadrature_1d(const GaussianLaw& mu, const GaussianLaw& pi);
double kl_quadrature_1d(const GaussianLaw& mu, const GaussianLaw& pi);

// One entry of a verification report.
struct CheckReport {
  enum class Status { pass, fail, report };
  std::string name;
  Status status = Status::pass;
  double margin = 0.0;  // positive when the check holds with room
  Json witnesses = Json::object();

  bool ok() const { return status != Status::fail; }
  Json to_json() const;
};
std::string_view status_name(CheckReport::Status s);

// psi of N(mu, Sigma) by numerical quadrature (d <= 3) against
// <x, mu> + x^T Sigma x / 2 + C at `probes` points, with C fitted at x = 0.
struct IdentityReport {
  double max_deviation = 0.0;
  double constant = 0.0;
  double grad_deviation = 0.0;  // |grad psi(0) - mu|_inf
  double hess_deviation = 0.0;  // |hess psi(x) - Sigma|_inf at the probes
};
IdentityReport gaussian_llt_identity(const Vec& mu, const Mat& sigma, int probes = 50, std::uint64_t seed = 0);

// Tests phi'' - alpha (V^#)'' >= -1e-6 on the grid after checking
// V'' >= alpha psi'' (psi = phi^#) on the same grid.
struct Assumption1Report {
  bool premise = true;   // V'' >= alpha psi'' held on the grid
  bool holds = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_point = 0.0;
};
Assumption1Report assumption1_check(const Potential& v, const Potential& phi, double alpha,
                                    const std::vector<double>& grid);

// Quartic counterexample: the block condition phi''(x - y) - gamma phi''(x)
// at x = y = 1 and a scan for (phi^{*2})''(w) < phi''(w) / 2 - 1e-6 with phi
// the normalized quartic.
struct QuarticReport {
  double block_value = 0.0;  // 12 (x - y)^2 - gamma * 12 x^2
  double witness = 0.0;       // w with the largest violation
  double conv_hess = 0.0;     // (phi^{*2})''(witness)
  double half_hess = 0.0;     // phi''(witness) / 2
  bool found = false;
};
double quartic_block_value(double x, double y, double gamma);
// (phi^{*2})''(w) = E[phi''(w - u)] - Var[phi'(w - u)], u ~ exp(-phi(u) - phi(w - u)).
double conv2_hessian(const Potential& phi, double w);
QuarticReport x4_counterexample_check(double w_max = 6.0, int points = 121);

// Energy-distance permutation test. Samples are stored one per column.
struct TwoSampleResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
  std::uint64_t seed = 0;
};
TwoSampleResult two_sample_test(const Mat& a, const Mat& b, int permutations = 500, std::uint64_t seed = 0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov distribution
};
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

// D^phi(x' || x) = phi(x') - phi(x) - <grad phi(x), x' - x>.
double bregman_divergence(const Potential& phi, const Vec& x_prime, const Vec& x);

// inf over polynomial test functions of E[f'^2 / psi''] / Var f for
// pi proportional to exp(-alpha psi - V), d = 1.
struct RayleighReport {
  double infimum = std::numeric_limits<double>::infinity();
  int worst_function = -1;
};
RayleighReport brascamp_lieb_check(const Potential& v, const LltView& psi, double alpha, int functions = 20,
                                   std::uint64_t seed = 0);

// PI constant of N(0, 1/a1) * N(0, 1/a2) computed from the quadrature variance
// of the convolved density, with the exact value 1 / (1/a1 + 1/a2).
struct PiConvolutionReport {
  double computed = 0.0;
  double exact = 0.0;
};
PiConvolutionReport pi_convolution_check(double alpha1, double alpha2);

}  // namespace llt
