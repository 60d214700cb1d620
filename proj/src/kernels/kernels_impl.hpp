#pragma once

#include "llt/kernels.hpp"

namespace llt::kernels {

struct KernelTable {
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*max_affine)(std::span<const double>, const AffineTilt&);
  double (*exp_affine)(std::span<const double>, const AffineTilt&, double, std::span<double>);
  Moments4 (*weighted_moments)(std::span<const double>, std::span<const double>,
                               std::span<const double>, double, double);
  void (*vexp)(std::span<const double>, std::span<double>);
};

namespace scalar {
const KernelTable& table();
}

namespace avx2 {
// nullptr when the translation unit was built without AVX2 support.
const KernelTable* table();
}

}  // namespace llt::kernels
