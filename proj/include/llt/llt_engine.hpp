#pragma once

// psi = phi^#, the log-Laplace transform
//   psi(x) = log int exp(<x, y> - phi(y)) dy,
// its derivatives (mean, covariance and third cumulant of the tilted density
// T_x exp(-phi)) and exact draws from that tilted density.

#include <memory>
#include <optional>
#include <string_view>

#include "llt/common.hpp"
#include "llt/lq_radial.hpp"
#include "llt/potentials.hpp"
#include "llt/quadrature.hpp"

namespace llt {

class Rng;

enum class LltBackend { closed_form_gaussian, quadrature_1d, separable_product, lq_radial };
std::string_view backend_name(LltBackend b);

struct LltEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
  Vec third;         // d^3 psi / dx_i^3 (diagonal of the third cumulant)
  double err = 0.0;  // relative error bound on exp(value)
};

// One-dimensional results with scalar fields, used by the 1-D quadrature code.
struct LltEval1 {
  double value = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0, err = 0.0;
};

class LltView {
 public:
  explicit LltView(Potential phi);

  const Potential& potential() const { return phi_; }
  LltBackend backend() const { return backend_; }
  int dim() const { return phi_.dim(); }

  double value(const Vec& x) const { return eval(x, 0).value; }
  Vec grad(const Vec& x) const { return eval(x, 1).grad; }
  Mat hess(const Vec& x) const { return eval(x, 2).hess; }
  LltEval eval(const Vec& x, int order = 3) const;

  // d = 1 only. Outside the domain of psi the value is +inf and no error is thrown.
  double value1(double x) const;
  LltEval1 eval1(double x) const;
  // Open interval on which psi is finite (d = 1).
  std::pair<double, double> domain1() const;
  bool in_domain(const Vec& x) const;

  Vec sample_tilted(const Vec& x, Rng& rng) const;
  // n draws as the columns of a d x n matrix; shares the set-up cost.
  Mat sample_tilted_n(const Vec& x, Rng& rng, int n) const;

  // The tilted density of component i (whole potential when d = 1) as a
  // Tilted1D object. Not available for the closed-form and lq backends.
  quad::Tilted1D tilted1(double x, int component = 0) const;

 private:
  LltEval1 component_eval(int i, double x, int order) const;
  Mat sample_lq(const Vec& x, Rng& rng, int n) const;

  Potential phi_;
  LltBackend backend_;
  double const_ = 0.0;  // additive constant of the closed forms
  std::shared_ptr<const LqRadial> lq_;
};

// log of the tau-fold convolution exp(-phi^{*tau}) evaluated at y, d = 1,
// by nested quadrature (exp(-phi^{*1}) = exp(-phi)).
class ConvPower1D {
 public:
  // rel_tol applies to each level of the nesting.
  ConvPower1D(const Potential& phi, int tau, double rel_tol = 1e-12);
  int tau() const { return tau_; }
  // log of exp(-phi)^{*tau}(y); -inf outside the support.
  double log_density(double y) const;
  // Kinks of the convolved density (for quadrature breaks).
  const std::vector<double>& kinks() const { return level_kinks_[tau_]; }
  // Support of exp(-phi^{*tau}).
  std::pair<double, double> support() const { return {lo_, hi_}; }

 private:
  double level(int m, double y) const;
  Potential phi_;
  int tau_;
  double rel_tol_;
  double lo_, hi_;
  std::vector<std::vector<double>> level_kinks_;  // kinks of exp(-phi)^{*m}, m = 0..tau
};

struct ConvolutionCheck {
  double lhs = 0.0;  // (phi^{*tau})^#(x) from the convolved density
  double rhs = 0.0;  // tau * psi(x)
};

ConvolutionCheck convolved_llt_check(const LltView& view, int tau, const Vec& x);

// psi_{p,a}(x) through the radial mixture, for callers without a Potential.
double lq_llt_value(double p, double a, const Vec& x);

}  // namespace llt
