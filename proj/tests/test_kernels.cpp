#include <cmath>
#include <vector>

#include "doctest.h"
#include "llt/kernels.hpp"
#include "llt/rng.hpp"

using namespace llt;
namespace k = llt::kernels;

namespace {

struct Pinned {
  explicit Pinned(k::Isa isa) { k::force_isa(isa); }
  ~Pinned() { k::reset_isa(); }
};

std::vector<double> draws(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree") {
  if (!k::isa_supported(k::Isa::avx2)) {
    MESSAGE("avx2 unavailable on this CPU; only the scalar path is exercised");
    return;
  }
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
    auto a = draws(rng, n, 1.0), b = draws(rng, n, 1.0), c = draws(rng, n, 1.0);
    auto base = draws(rng, n, 30.0);
    if (n > 2) base[1] = -900.0, base[2] = 700.0;
    k::AffineTilt tilt;
    tilt.coords = {a, b, c};
    tilt.slopes = {0.3, -1.7, 2.0};
    tilt.dim = 3;

    double dot_s, max_s, sum_s;
    std::vector<double> out_s(n), out_v(n), e_s(n), e_v(n);
    k::Moments4 m_s;
    {
      Pinned p(k::Isa::scalar);
      dot_s = k::dot(a, b);
      max_s = k::max_affine(base, tilt);
      sum_s = k::exp_affine(base, tilt, max_s, out_s);
      m_s = k::weighted_moments(a, base, c, 0.25, 700.0);
      k::vexp(base, e_s);
    }
    Pinned p(k::Isa::avx2);
    CHECK(k::dot(a, b) == doctest::Approx(dot_s).epsilon(1e-13));
    CHECK(k::max_affine(base, tilt) == max_s);
    const double sum_v = k::exp_affine(base, tilt, max_s, out_v);
    CHECK(sum_v == doctest::Approx(sum_s).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i) CHECK(out_v[i] == doctest::Approx(out_s[i]).epsilon(1e-13));
    const auto m_v = k::weighted_moments(a, base, c, 0.25, 700.0);
    CHECK(m_v.m0 == doctest::Approx(m_s.m0).epsilon(1e-12));
    CHECK(m_v.m1 == doctest::Approx(m_s.m1).epsilon(1e-12));
    CHECK(m_v.m2 == doctest::Approx(m_s.m2).epsilon(1e-12));
    CHECK(m_v.m3 == doctest::Approx(m_s.m3).epsilon(1e-12));
    k::vexp(base, e_v);
    for (std::size_t i = 0; i < n; ++i) {
      if (e_s[i] == 0.0) {
        CHECK(e_v[i] == 0.0);
      } else {
        CHECK(std::abs(e_v[i] / e_s[i] - 1.0) < 1e-14);
      }
    }
  }
}

TEST_CASE("force_isa rejects unsupported requests and reset restores the default") {
  const auto start = k::active_isa();
  k::force_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  k::reset_isa();
  CHECK(k::active_isa() == start);
  if (!k::isa_supported(k::Isa::avx2)) CHECK_THROWS(k::force_isa(k::Isa::avx2));
}

TEST_CASE("vexp matches std::exp over the usable range") {
  std::vector<double> in, out;
  for (double x = -707.0; x < 709.0; x += 0.731) in.push_back(x);
  out.resize(in.size());
  k::vexp(in, out);
  double worst = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) worst = std::max(worst, std::abs(out[i] / std::exp(in[i]) - 1.0));
  CHECK(worst < 4e-16 * 8);
}
