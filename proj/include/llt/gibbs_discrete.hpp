#pragma once

// Two-block Gibbs sampling on a finite joint P (n x m): K = R^{-1} P maps
// functions of y to functions of x, K' = C^{-1} P^T goes back, and the
// x-chain is P_X = K K'.

#include <cstdint>
#include <string>
#include <utility>

#include "llt/common.hpp"
#include "llt/potentials.hpp"

namespace llt {

class Rng;

struct DiscreteJoint {
  Mat P;
  Vec r, c;  // row and column marginals

  // Validates entries >= 0, total mass 1 within 1e-12 and strictly positive marginals.
  static DiscreteJoint from_matrix(Mat P);
  int rows() const { return static_cast<int>(P.rows()); }
  int cols() const { return static_cast<int>(P.cols()); }
};

// Random joint with cubed uniform entries, normalized.
DiscreteJoint random_joint(int n, int m, Rng& rng);
DiscreteJoint read_joint_csv(const std::string& path);

struct GibbsOperators {
  Mat K, Kdag, PX, PY;
};
GibbsOperators build_operators(const DiscreteJoint& j);

struct SpectralGap {
  double lambda2 = 0.0;
  double gap = 1.0;
};
// From the eigenvalues of R^{1/2} P_X R^{-1/2}.
SpectralGap spectral_gap(const DiscreteJoint& j);

struct ChannelContraction {
  double forward_sup = 0.0;   // sup Var_r[K g] / Var_c[g]
  double backward_sup = 0.0;  // sup Var_c[K' f] / Var_r[f]
};
// Squared top singular values of the weighted operators on mean-zero functions.
ChannelContraction channel_contraction(const DiscreteJoint& j);

// Means of K g under r and K' f under c for mean-zero f (under r) and g (under c).
std::pair<double, double> mean_zero_check(const DiscreteJoint& j, const Vec& f, const Vec& g);

// Var_r(P_X f) / Var_r(f).
double variance_ratio(const DiscreteJoint& j, const Mat& PX, const Vec& f);

// Report {lambda2, gap, forward_sup, backward_sup, checks}; random test
// functions are drawn from `seed`.
Json gibbs_report(const DiscreteJoint& j, std::uint64_t seed = 0, int functions = 1000);

}  // namespace llt
