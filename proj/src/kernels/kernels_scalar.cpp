#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_impl.hpp"

namespace llt::kernels::scalar {
namespace {

constexpr double kExpFloor = -708.0;

inline double flushed_exp(double x) { return x < kExpFloor ? 0.0 : std::exp(x); }

inline double affine_at(std::span<const double> base, const AffineTilt& t, std::size_t i) {
  double v = base[i];
  for (int k = 0; k < t.dim; ++k) v += t.slopes[k] * t.coords[k][i];
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_affine(std::span<const double> base, const AffineTilt& t) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < base.size(); ++i) m = std::max(m, affine_at(base, t, i));
  return m;
}

double exp_affine(std::span<const double> base, const AffineTilt& t, double shift,
                  std::span<double> out) {
  double s = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = flushed_exp(affine_at(base, t, i) - shift);
    s += out[i];
  }
  return s;
}

Moments4 weighted_moments(std::span<const double> z, std::span<const double> logv,
                          std::span<const double> w, double center, double shift) {
  Moments4 m;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double e = w[i] * flushed_exp(logv[i] - shift);
    const double u = z[i] - center;
    m.m0 += e;
    m.m1 += e * u;
    m.m2 += e * u * u;
    m.m3 += e * u * u * u;
  }
  return m;
}

void vexp(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = flushed_exp(in[i]);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{&dot, &max_affine, &exp_affine, &weighted_moments, &vexp};
  return t;
}

}  // namespace llt::kernels::scalar
