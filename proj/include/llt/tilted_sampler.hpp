#pragma once

// Targets pi proportional to exp(-V) with V = base + w * psi_T, and samplers for
// the backward (restricted) densities
//
//   exp(<y, x> - tau * psi(x)) pi(x),
//
// where psi is the transform of the noise potential. The extra psi_T term
// lets a target carry its own regularizer (for instance a Laplace-noise
// model where pi has density proportional to exp(-x^2/2) (1 - x^2) on (-1, 1), or
// the DP target k F + alpha psi_{p,a}).

#include <memory>
#include <optional>
#include <string_view>

#include "llt/common.hpp"
#include "llt/grid_sampler.hpp"
#include "llt/llt_engine.hpp"
#include "llt/potentials.hpp"

namespace llt {

class Rng;

struct Target {
  Potential base;
  double llt_weight = 0.0;
  std::shared_ptr<const LltView> llt;  // used when llt_weight != 0

  int dim() const { return base.dim(); }
  // -V(x); -inf outside the domain. Unnormalized.
  double log_density(const Vec& x) const;
  double log_density1(double x) const;
  // Open interval outside which the density vanishes (d = 1).
  std::pair<double, double> support1() const;
};

Target plain_target(Potential base);

// Draws from T_x exp(-phi) for a fixed tilt x.
class TiltedSampler {
 public:
  TiltedSampler(std::shared_ptr<const LltView> view, Vec x) : view_(std::move(view)), x_(std::move(x)) {}
  Vec draw(Rng& rng) const { return view_->sample_tilted(x_, rng); }
  const Vec& tilt() const { return x_; }

 private:
  std::shared_ptr<const LltView> view_;
  Vec x_;
};

enum class BackwardKind { exact_gaussian, quadrature_1d, grid, rejection };
std::string_view backward_name(BackwardKind k);
BackwardKind parse_backward(std::string_view s);

struct BackwardOptions {
  int grid_nodes = 0;          // per axis; 0 picks default_grid_nodes(d)
  std::optional<GridSpec> box;  // grid box when the target domain is unbounded
  double delta = 1e-6;         // failure budget per rejection step
  double attempt_factor = 64;  // cap on attempts, relative to the expectation
};

struct BackwardStats {
  long draws = 0;
  long attempts = 0;
  long oracle_calls = 0;      // component value queries in the rejection step
  long radius_violations = 0;  // proposals outside the concentration ball
  double accept_rate() const { return attempts ? double(draws) / attempts : 1.0; }
};

class BackwardSampler {
 public:
  // tau is the weight of psi in the backward density (a real number so the
  // same code serves the localization times and the prox step).
  BackwardSampler(Target target, std::shared_ptr<const LltView> psi, double tau, BackwardKind kind,
                  BackwardOptions opts = {});

  // The most specific backend that applies.
  static BackwardKind choose(const Target& target, const LltView& psi);

  BackwardKind kind() const { return kind_; }
  Vec draw(const Vec& y, Rng& rng);
  Mat draw_n(const Vec& y, Rng& rng, int n);
  const BackwardStats& stats() const { return stats_; }

  // Exact law for the Gaussian backend: mean and covariance given y.
  std::pair<Vec, Mat> gaussian_law(const Vec& y) const;
  // Log of the backward density (unnormalized), -inf outside.
  double log_density(const Vec& y, const Vec& x) const;
  // Rejection radius in the p-norm (rejection backend).
  double radius() const { return radius_; }
  // Strong-convexity modulus of tau psi + w psi_T in the p-norm (rejection backend).
  double modulus() const { return modulus_; }

 private:
  quad::Tilted1D tilted1(double y) const;
  Vec draw_rejection(const Vec& y, Rng& rng);

  Target target_;
  std::shared_ptr<const LltView> psi_;
  double tau_;
  BackwardKind kind_;
  BackwardOptions opts_;
  BackwardStats stats_;
  // Gaussian backend: x | y ~ N(prec^{-1}(y + lin), prec^{-1}).
  Mat prec_, cov_, chol_;
  Vec lin_;
  std::unique_ptr<GridDensity> grid_;
  double scale1_ = 1.0;
  double radius_ = 0.0;
  double modulus_ = 0.0;
  double norm_p_ = 2.0;
};

}  // namespace llt
