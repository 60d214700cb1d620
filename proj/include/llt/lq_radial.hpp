#pragma once

// Log-Laplace transform of phi_{p,a}(y) = a ||y||_q^2 (1/p + 1/q = 1) in any
// dimension, at O(d) cost per mixture node.
//
// For p in (1, 2) write exp(-a r^beta), r = sum |y_i|^q, beta = 2/q, as the
// Laplace transform of a positive beta-stable law. With Kanter's
// representation S = (A(U)/E)^{(1-beta)/beta} and the substitution v = E/A(U),
//
//   psi(x) = log int_0^inf k(v) prod_i T^{-1/q} exp(H(x_i T^{-1/q})) dv,
//   T(v) = a^{1/beta} v^{-(1-beta)/beta},  k(v) = (1/pi) int_0^pi A e^{-A v} du,
//
// where H is the 1-D transform of |u|^q. The v-integral is done in log v on
// Gauss-Legendre panels, with a two-term power-law tail below the first panel.
// For p = 1 (q = inf) the layer-cake identity
//   exp(-a N^2) = int_N^inf 2 a rho exp(-a rho^2) d rho
// gives a single integral over rho with factors 2 sinh(x_i rho)/x_i.

#include <vector>

#include "llt/common.hpp"

namespace llt {

struct LqEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
  double rel_err = 0.0;  // estimated relative error of exp(value)
};

class LqRadial {
 public:
  LqRadial(double p, double a, int dim);

  double p() const { return p_; }
  double a() const { return a_; }
  int dim() const { return d_; }

  double value(const Vec& x) const { return eval(x, 0).value; }
  // order 0: value only; 1: plus gradient; 2: plus Hessian.
  LqEval eval(const Vec& x, int order = 2) const;

  // log k(v) for the current index; exposed for the kernel identity test.
  double log_kernel(double v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    double ell;
    double tau;   // T^{-1/q}
    double base;  // log weight + log k + ell + d log tau
  };
  struct Table {
    double h = 0.05;
    std::vector<double> coef;  // 6 per interval
    double smax = 0.0;
  };

  void build_table();
  void hq(double s, double& v, double& d1, double& d2) const;
  LqEval eval_p1(const Vec& x, int order) const;

  double p_, a_, q_, beta_;
  int d_;
  std::vector<Node> nodes_;
  Table table_;
  double h0_ = 0.0, h2_ = 0.0;  // H(0), H''(0)
  double ell0_ = 0.0, tail_c_ = 0.0, rho_ = 0.0, tau_a_ = 0.0;
};

// Kanter's function A(u) for the positive stable law with index beta in (0, 1).
double kanter_a(double beta, double u);

// Closed form in d = 1: x^2/(4a) + log(pi/a)/2.
double lq_llt_closed_1d(double a, double x);

// Brute-force nested quadrature in d <= 3; independent oracle for LqRadial.
double lq_llt_direct(double p, double a, const Vec& x, double rel_tol = 1e-11);

}  // namespace llt
