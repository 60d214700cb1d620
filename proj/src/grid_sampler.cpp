#include "llt/grid_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "llt/kernels.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of sinh(u/2)/(u/2): integral of exp(g t) over a unit-centred cell of width h, divided by h.
double log_sinhc(double gh) {
  const double u = 0.5 * std::abs(gh);
  if (u < 1e-4) return u * u / 6.0;
  return u + std::log1p(-std::exp(-2.0 * u)) - std::log(2.0 * u);
}

// Offset in [-h/2, h/2] drawn from the density proportional to exp(g t).
double draw_in_cell(double g, double h, double u) {
  const double gh = std::abs(g) * h;
  if (gh < 1e-10) return (u - 0.5) * h;
  const double s = std::log1p(u * std::expm1(-gh)) / -std::abs(g);  // in [0, h], heavy near 0
  return g > 0 ? 0.5 * h - s : -0.5 * h + s;
}

}  // namespace

int default_grid_nodes(int dim) {
  switch (dim) {
    case 1: return 2048;
    case 2: return 512;
    case 3: return 96;
    default: throw InputError("grid sampler supports dimensions 1 to 3");
  }
}

GridDensity::GridDensity(GridSpec spec, const std::function<double(const Vec&)>& log_f)
    : spec_(std::move(spec)), d_(static_cast<int>(spec_.lo.size())) {
  if (d_ < 1 || d_ > 3) throw InputError("grid sampler supports dimensions 1 to 3");
  if (spec_.hi.size() != d_ || static_cast<int>(spec_.nodes.size()) != d_)
    throw InputError("grid specification has inconsistent dimensions");
  std::size_t total = 1;
  stride_.assign(d_, 1);
  for (int k = d_ - 1; k >= 0; --k) {
    if (spec_.nodes[k] < 2) throw InputError("grid needs at least 2 nodes per axis");
    if (!(spec_.hi(k) > spec_.lo(k))) throw InputError("grid box is empty");
    stride_[k] = total;
    total *= spec_.nodes[k];
  }
  h_.resize(d_);
  for (int k = 0; k < d_; ++k) h_[k] = (spec_.hi(k) - spec_.lo(k)) / spec_.nodes[k];
  coord_.assign(d_, std::vector<double>(total));
  base_.resize(total);
  Vec x(d_);
  for (std::size_t i = 0; i < total; ++i) {
    for (int k = 0; k < d_; ++k) {
      const std::size_t j = (i / stride_[k]) % spec_.nodes[k];
      x(k) = spec_.lo(k) + (j + 0.5) * h_[k];
      coord_[k][i] = x(k);
    }
    const double v = log_f(x);
    base_[i] = std::isnan(v) ? kNegInf : v;
  }
}

Vec GridDensity::center(std::size_t i) const {
  Vec x(d_);
  for (int k = 0; k < d_; ++k) x(k) = coord_[k][i];
  return x;
}

double GridDensity::slope(std::size_t i, int axis) const {
  const std::size_t j = (i / stride_[axis]) % spec_.nodes[axis];
  const std::size_t s = stride_[axis];
  const double f0 = base_[i];
  const bool has_lo = j > 0 && std::isfinite(base_[i - s]);
  const bool has_hi = j + 1 < static_cast<std::size_t>(spec_.nodes[axis]) && std::isfinite(base_[i + s]);
  if (has_lo && has_hi) return (base_[i + s] - base_[i - s]) / (2.0 * h_[axis]);
  if (has_hi) return (base_[i + s] - f0) / h_[axis];
  if (has_lo) return (f0 - base_[i - s]) / h_[axis];
  return 0.0;
}

GridDensity::Tilted GridDensity::tilted(const Vec& y) const {
  if (y.size() != d_) throw InputError("grid tilt has wrong dimension");
  kernels::AffineTilt tilt;
  tilt.dim = d_;
  for (int k = 0; k < d_; ++k) {
    tilt.coords[k] = coord_[k];
    tilt.slopes[k] = y(k);
  }
  Tilted t;
  t.g_ = this;
  t.tilt_ = y;
  const double m = kernels::max_affine(base_, tilt);
  if (!std::isfinite(m)) throw NumericalError("grid density has no finite cell");
  t.mass_.resize(base_.size());
  kernels::exp_affine(base_, tilt, m, t.mass_);
  double log_cell = 0.0;
  for (int k = 0; k < d_; ++k) log_cell += std::log(h_[k]);
  double total = 0.0, best = -1.0;
  t.cum_.resize(base_.size());
  for (std::size_t i = 0; i < base_.size(); ++i) {
    double w = t.mass_[i];
    if (w > 0.0) {
      double c = 0.0;
      for (int k = 0; k < d_; ++k) c += log_sinhc((slope(i, k) + y(k)) * h_[k]);
      w *= std::exp(c);
    }
    t.mass_[i] = w;
    if (w > best) {
      best = w;
      t.argmax_ = i;
    }
    total += w;
    t.cum_[i] = total;
  }
  for (double& c : t.cum_) c /= total;
  for (double& w : t.mass_) w /= total;
  t.log_mass_ = m + std::log(total) + log_cell;
  return t;
}

Vec GridDensity::Tilted::draw(Rng& rng) const {
  const double u = rng.uniform();
  std::size_t i = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
  i = std::min(i, cum_.size() - 1);
  while (mass_[i] == 0.0 && i > 0) --i;
  Vec x = g_->center(i);
  for (int k = 0; k < g_->d_; ++k)
    x(k) += draw_in_cell(g_->slope(i, k) + tilt_(k), g_->h_[k], rng.uniform());
  return x;
}

Vec GridDensity::Tilted::mean() const {
  Vec m = Vec::Zero(g_->d_);
  for (std::size_t i = 0; i < mass_.size(); ++i)
    if (mass_[i] > 0)
      for (int k = 0; k < g_->d_; ++k) m(k) += mass_[i] * g_->coord_[k][i];
  return m;
}

Mat GridDensity::Tilted::cov() const {
  const Vec m = mean();
  Mat c = Mat::Zero(g_->d_, g_->d_);
  Vec r(g_->d_);
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if (mass_[i] == 0) continue;
    for (int k = 0; k < g_->d_; ++k) r(k) = g_->coord_[k][i] - m(k);
    c.noalias() += mass_[i] * r * r.transpose();
  }
  for (int k = 0; k < g_->d_; ++k) c(k, k) += g_->h_[k] * g_->h_[k] / 12.0;
  return c;
}

}  // namespace llt
