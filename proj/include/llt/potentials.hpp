#pragma once

// Convex potentials phi: R^d -> R U {+inf} with value, gradient and Hessian
// oracles. A Potential is an immutable value type (cheap to copy, shares its
// parameters) and every other module consumes potentials only through it.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "llt/common.hpp"

namespace llt {

using Json = nlohmann::ordered_json;

enum class PotentialKind { gaussian, separable_1d, lq_squared, tabulated_1d, lipschitz_mixture };

std::string_view kind_name(PotentialKind k);
PotentialKind parse_kind(std::string_view s);

// One-dimensional building block of a separable potential:
//   quadratic  scale/2 * (t-c)^2
//   abs        scale * |t-c|
//   quartic    scale * (t-c)^4
//   power      scale * |t-c|^exponent, exponent >= 1
struct Scalar1D {
  enum class Kind { quadratic, abs, quartic, power };
  Kind kind = Kind::quadratic;
  double scale = 1.0;
  double center = 0.0;
  double exponent = 2.0;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  // Point where the function is not twice differentiable, if any.
  std::optional<double> kink() const;
};

// Optional restriction of the domain. `box` is a product of intervals,
// `lp_ball` is {x : ||x||_p <= radius}.
struct Domain {
  enum class Kind { none, box, lp_ball };
  Kind kind = Kind::none;
  Vec lo, hi;
  double p = 2.0;
  double radius = 1.0;

  bool contains(const Vec& x) const;
  // Axis-aligned bounding box; both vectors empty for Kind::none.
  std::pair<Vec, Vec> bounding_box(int dim) const;
};

struct GaussianParams {
  Vec mean;
  Mat cov;
  Mat precision;
  Mat chol;  // lower Cholesky factor of cov
  double log_det = 0.0;
};

struct LqParams {
  double p = 1.5;
  double a = 1.0;
  double q() const;  // conjugate exponent, +inf for p = 1
};

struct TabulatedParams {
  std::vector<double> points;
  std::vector<double> values;
};

// F(x) = weight * mean_i l_i(x) with l_i(x) = <g_i, x> + b_i (linear) or
// |<g_i, x> - b_i| (absolute).
struct MixtureParams {
  enum class Loss { linear, absolute };
  Loss loss = Loss::linear;
  std::vector<Vec> gradients;
  std::vector<double> offsets;
  double weight = 1.0;
  double lipschitz = 1.0;  // bound on ||g_i||_q, q dual to p
  double p = 2.0;          // norm order of the domain geometry
};

class Potential {
 public:
  struct Bundle {
    double value;
    Vec gradient;
    Mat hessian;
  };

  PotentialKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double shift() const { return shift_; }
  const Domain& domain() const { return domain_; }

  // Domain-checked oracles; throw DomainError outside the domain.
  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;
  Mat hessian(const Vec& y) const;
  Bundle eval_bundle(const Vec& y) const;
  bool in_domain(const Vec& y) const;

  // Extended-value fast path for d = 1: +inf outside the support, no throw.
  double value1(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  // Closed support interval for d = 1 (infinite ends when unbounded).
  std::pair<double, double> support1() const;
  // Kinks of a 1-D potential (for quadrature split points).
  std::vector<double> kinks1() const;

  Potential with_shift(double shift) const;
  Potential with_domain(Domain d) const;

  const GaussianParams& gaussian() const;
  const std::vector<Scalar1D>& components() const;
  const LqParams& lq() const;
  const TabulatedParams& tabulated() const;
  const MixtureParams& mixture() const;

  // Value of mixture component i, including the weight.
  double component_value(std::size_t i, const Vec& x) const;
  std::size_t component_count() const;

  Json to_json() const;
  static Potential from_json(const Json& j);
  // Stable identifier: hash of the canonical JSON.
  std::string id() const;

  // Factories. Gaussian and separable potentials are returned normalized
  // (integral of exp(-phi) equal to one); lq-squared starts with shift 0.
  friend Potential make_gaussian(const Vec& mean, const Mat& cov);
  friend Potential make_separable(std::vector<Scalar1D> comps);
  friend Potential make_lq_squared(double p, double a, int dim);
  friend Potential make_tabulated(std::vector<double> points, std::vector<double> values);
  friend Potential make_mixture(MixtureParams params, int dim);

 private:
  struct Params;
  Potential(PotentialKind kind, int dim, std::shared_ptr<const Params> params, double shift)
      : kind_(kind), dim_(dim), params_(std::move(params)), shift_(shift) {}

  double raw_value(const Vec& y) const;

  PotentialKind kind_ = PotentialKind::gaussian;
  int dim_ = 1;
  std::shared_ptr<const Params> params_;
  double shift_ = 0.0;
  Domain domain_;
};

Potential make_gaussian(const Vec& mean, const Mat& cov);
Potential make_separable(std::vector<Scalar1D> comps);
Potential make_lq_squared(double p, double a, int dim);
Potential make_tabulated(std::vector<double> points, std::vector<double> values);
Potential make_mixture(MixtureParams params, int dim);

struct NormalizationCertificate {
  std::string potential_id;
  double shift = 0.0;        // additive constant applied
  double error_bound = 0.0;  // bound on |integral of exp(-phi') - 1|
};

// log of the integral of exp(-phi) over the domain, with an error bound on
// the integral relative to its value.
std::pair<double, double> log_partition(const Potential& phi);

std::pair<Potential, NormalizationCertificate> normalize(const Potential& phi);

// ||x||_p for p in [1, inf].
double lp_norm(const Vec& x, double p);

}  // namespace llt
