#pragma once

// Data-parallel inner loops shared by the quadrature, grid-sampling and
// two-sample-test code. Every kernel has a scalar reference implementation
// and an AVX2+FMA variant; the variant is picked once at startup from the
// CPU feature flags and can be pinned for equivalence testing.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace llt::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();

// Pins the implementation used by every kernel. Throws std::invalid_argument
// when the CPU cannot run the requested ISA.
void force_isa(Isa isa);

// Restores the startup choice (best supported ISA).
void reset_isa();

// Up to three coordinate arrays with one slope each: the affine form
// base[i] + sum_k slopes[k] * coords[k][i].
struct AffineTilt {
  std::array<std::span<const double>, 3> coords{};
  std::array<double, 3> slopes{};
  int dim = 0;
};

struct Moments4 {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b);

// max_i base[i] + <slopes, coords[.][i]>.
double max_affine(std::span<const double> base, const AffineTilt& tilt);

// out[i] = exp(base[i] + <slopes, coords[.][i]> - shift); returns sum(out).
double exp_affine(std::span<const double> base, const AffineTilt& tilt, double shift,
                  std::span<double> out);

// Sums of w[i] * e[i] * (z[i]-center)^k for k = 0..3, e[i] = exp(logv[i] - shift).
Moments4 weighted_moments(std::span<const double> z, std::span<const double> logv,
                          std::span<const double> w, double center, double shift);

// out[i] = exp(in[i]); flushes to zero below -708.
void vexp(std::span<const double> in, std::span<double> out);

}  // namespace llt::kernels
