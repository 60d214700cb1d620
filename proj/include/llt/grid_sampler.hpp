#pragma once

// Tensor-grid sampler for log-densities in d <= 3.
//
// The log-density is evaluated once at the cell centres of a box. A tilt
// <y, x> is added on demand through the affine kernels, so one grid serves
// every backward step of a chain. Inside each cell the density is treated as
// log-linear, with slopes from central differences of the tabulated values.
// Cell masses carry the matching correction prod_k sinh(g_k h_k / 2) / (g_k h_k / 2)
// and draws within a cell are exact for that log-linear profile.

#include <functional>
#include <vector>

#include "llt/common.hpp"

namespace llt {

class Rng;

struct GridSpec {
  Vec lo, hi;
  std::vector<int> nodes;  // per axis
};

// Per-dimension default resolution: 2048 in 1-D, 512 per axis in 2-D, 96 in 3-D.
int default_grid_nodes(int dim);

class GridDensity {
 public:
  // log_f may return -inf (outside a domain).
  GridDensity(GridSpec spec, const std::function<double(const Vec&)>& log_f);

  int dim() const { return d_; }
  std::size_t size() const { return base_.size(); }
  const GridSpec& spec() const { return spec_; }
  double cell_width(int axis) const { return h_[axis]; }
  Vec center(std::size_t i) const;
  double log_value(std::size_t i) const { return base_[i]; }

  class Tilted {
   public:
    Vec draw(Rng& rng) const;
    double log_mass() const { return log_mass_; }
    Vec mean() const;
    Mat cov() const;
    // Index of the heaviest cell.
    std::size_t argmax() const { return argmax_; }

   private:
    friend class GridDensity;
    const GridDensity* g_ = nullptr;
    Vec tilt_;
    std::vector<double> cum_;  // cumulative, normalized to end at 1
    std::vector<double> mass_;
    double log_mass_ = 0.0;
    std::size_t argmax_ = 0;
  };

  Tilted tilted(const Vec& y) const;

 private:
  double slope(std::size_t i, int axis) const;

  GridSpec spec_;
  int d_;
  std::vector<double> h_;
  std::vector<std::vector<double>> coord_;  // per axis, flattened over all cells
  std::vector<double> base_;
  std::vector<std::size_t> stride_;
};

}  // namespace llt
