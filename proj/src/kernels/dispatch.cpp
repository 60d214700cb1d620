#include <atomic>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace llt::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{best_isa() == Isa::avx2 ? avx2::table()
                                                                    : &scalar::table()};
  return t;
}

const KernelTable& k() { return *current().load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool ok = avx2::table() != nullptr && cpu_has_avx2();
  return ok;
}

Isa active_isa() { return current().load() == &scalar::table() ? Isa::scalar : Isa::avx2; }

void force_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
  current().store(isa == Isa::avx2 ? avx2::table() : &scalar::table());
}

void reset_isa() { force_isa(best_isa()); }

double dot(std::span<const double> a, std::span<const double> b) { return k().dot(a, b); }

double max_affine(std::span<const double> base, const AffineTilt& tilt) {
  return k().max_affine(base, tilt);
}

double exp_affine(std::span<const double> base, const AffineTilt& tilt, double shift,
                  std::span<double> out) {
  return k().exp_affine(base, tilt, shift, out);
}

Moments4 weighted_moments(std::span<const double> z, std::span<const double> logv,
                          std::span<const double> w, double center, double shift) {
  return k().weighted_moments(z, logv, w, center, shift);
}

void vexp(std::span<const double> in, std::span<double> out) { k().vexp(in, out); }

}  // namespace llt::kernels
