#pragma once

// One-dimensional integration and sampling.
//
// `integrate` is a plain adaptive Gauss-Kronrod (7,15) integrator on a finite
// interval. `Tilted1D` handles the common case in this library: an
// unnormalized density exp(h(t)) with h concave (or at least unimodal with
// log-concave tails). It locates the mode, truncates where the tail bound
// drops below 1e-20 of the peak, integrates the first three moments in one
// pass, and keeps the accepted cells so that draws can be made by inverting
// the CDF cell by cell.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace llt {
class Rng;
}

namespace llt::quad {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

// Adaptive GK(7,15) on [a, b]; `breaks` are split points known in advance
// (kinks, discontinuities). Throws NumericalError if the interval budget is
// exhausted before the tolerance is met.
Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, double abs_tol = 0.0,
                   std::span<const double> breaks = {}, int max_intervals = 4000);

// Nodes and weights on [-1, 1] (Legendre) or for the weight exp(-t^2/2) on
// the real line (probabilists' Hermite). Golub-Welsch.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule gauss_legendre(int n);
Rule gauss_hermite(int n);

struct LogDensity1D {
  std::function<double(double)> log_f;  // may return -inf outside the support
  double lo = -kInf;                    // support
  double hi = kInf;
  double hint = 0.0;   // starting point of the mode search; must lie in (lo, hi)
  double scale = 1.0;  // rough width, first bracketing step
  std::vector<double> breaks;
};

struct Settings {
  double rel_tol = 1e-12;
  double tail_log_drop = 46.0;
  int max_cells = 4000;
};

class Tilted1D {
 public:
  explicit Tilted1D(LogDensity1D density, Settings settings = {});

  double log_mass() const { return shift_ + std::log(m0_); }
  double mean() const { return mean_; }
  double var() const { return var_; }
  double third_central() const { return m3_; }
  double mode() const { return mode_; }
  double window_lo() const { return cells_.front().a; }
  double window_hi() const { return cells_.back().b; }
  // Relative error bound on the mass: quadrature estimate plus both tails.
  double error_bound() const { return err_; }
  int evaluations() const { return evals_; }

  // E[f] under the normalized density, GK15 on every accepted cell.
  double expect(const std::function<double(double)>& f) const;

  double cdf(double x) const;
  double quantile(double u) const;
  double sample(Rng& rng) const;

  const LogDensity1D& density() const { return d_; }

 private:
  struct Cell {
    double a, b, mass;
  };

  double partial(double a, double x) const;
  double invert(double target) const;

  LogDensity1D d_;
  double mode_ = 0.0;
  double shift_ = 0.0;
  double m0_ = 0.0;
  double mean_ = 0.0;
  double var_ = 0.0;
  double m3_ = 0.0;
  double err_ = 0.0;
  int evals_ = 0;
  std::vector<Cell> cells_;
  std::vector<double> cum_;
};

}  // namespace llt::quad
