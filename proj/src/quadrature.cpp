#include "llt/quadrature.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <sstream>

#include "llt/common.hpp"
#include "llt/kernels.hpp"
#include "llt/rng.hpp"

namespace llt::quad {
namespace {

// QUADPACK GK(7,15) abscissae on [0, 1]; odd indices are the Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Rule15 {
  std::array<double, 15> x{};   // on [-1, 1]
  std::array<double, 15> wk{};  // Kronrod weights
  std::array<double, 15> wg{};  // Gauss weights, zero on Kronrod-only nodes
};

const Rule15& rule15() {
  static const Rule15 r = [] {
    Rule15 out;
    for (int j = 0; j < 7; ++j) {
      out.x[2 * j] = -kXgk[j];
      out.x[2 * j + 1] = kXgk[j];
      out.wk[2 * j] = out.wk[2 * j + 1] = kWgk[j];
      if (j % 2 == 1) out.wg[2 * j] = out.wg[2 * j + 1] = kWg[j / 2];
    }
    out.x[14] = 0.0;
    out.wk[14] = kWgk[7];
    out.wg[14] = kWg[3];
    return out;
  }();
  return r;
}

struct Piece {
  double a, b, k, err;
  bool operator<(const Piece& o) const { return err < o.err; }
};

Piece gk_plain(const std::function<double(double)>& f, double a, double b) {
  const Rule15& r = rule15();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + h * r.x[i]);
    k += r.wk[i] * v;
    g += r.wg[i] * v;
  }
  return {a, b, h * k, std::abs(h * (k - g))};
}

// Sorted, de-duplicated split points strictly inside (a, b) plus the ends.
std::vector<double> split_points(double a, double b, std::span<const double> breaks) {
  std::vector<double> pts{a, b};
  for (double t : breaks)
    if (t > a && t < b) pts.push_back(t);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

Eigen::SelfAdjointEigenSolver<Mat> jacobi(const Vec& off, int n) {
  Mat J = Mat::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) J(k, k + 1) = J(k + 1, k) = off(k);
  return Eigen::SelfAdjointEigenSolver<Mat>(J);
}

}  // namespace

Estimate integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                   double abs_tol, std::span<const double> breaks, int max_intervals) {
  if (!(a < b)) return {};
  std::priority_queue<Piece> heap;
  double total = 0.0, err = 0.0;
  int evals = 0;
  const auto pts = split_points(a, b, breaks);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Piece p = gk_plain(f, pts[i], pts[i + 1]);
    evals += 15;
    total += p.k;
    err += p.err;
    heap.push(p);
  }
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= max_intervals) {
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b << "] did not converge: estimate "
         << total << ", error " << err;
      throw NumericalError(os.str());
    }
    const Piece p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    const Piece l = gk_plain(f, p.a, m), r = gk_plain(f, m, p.b);
    evals += 30;
    total += l.k + r.k - p.k;
    err += l.err + r.err - p.err;
    heap.push(l);
    heap.push(r);
  }
  return {total, err, evals};
}

Rule gauss_legendre(int n) {
  Vec off(std::max(n - 1, 1));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  const auto es = jacobi(off, n);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

Rule gauss_hermite(int n) {
  Vec off(std::max(n - 1, 1));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  const auto es = jacobi(off, n);
  Rule r;
  const double norm = std::sqrt(2.0 * M_PI);
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(norm * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct MomentPiece {
  double a, b;
  kernels::Moments4 k;
  double err0;  // Kronrod-Gauss difference of the mass
  double err;   // mass and centred moments combined, drives refinement
  bool operator<(const MomentPiece& o) const { return err < o.err; }
};

class MomentRule {
 public:
  MomentRule(const LogDensity1D& d, double center, double shift)
      : d_(d), center_(center), shift_(shift) {}

  MomentPiece eval(double a, double b) {
    const Rule15& r = rule15();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < 15; ++i) {
      z_[i] = c + h * r.x[i];
      lv_[i] = d_.log_f(z_[i]);
      wk_[i] = h * r.wk[i];
      wg_[i] = h * r.wg[i];
    }
    evals += 15;
    const auto k = kernels::weighted_moments(z_, lv_, wk_, center_, shift_);
    const auto g = kernels::weighted_moments(z_, lv_, wg_, center_, shift_);
    MomentPiece p{a, b, k, std::abs(k.m0 - g.m0), 0.0};
    dm_ = {std::abs(k.m1 - g.m1), std::abs(k.m2 - g.m2), std::abs(k.m3 - g.m3)};
    p.err = p.err0 + dm_[0] / width_ + dm_[1] / (width_ * width_) + dm_[2] / (width_ * width_ * width_);
    return p;
  }

  // Length scale used to put the moment errors on the scale of the mass.
  void set_width(double w) { width_ = w; }

  int evals = 0;

 private:
  const LogDensity1D& d_;
  double center_, shift_;
  double width_ = 1.0;
  std::array<double, 3> dm_{};
  std::array<double, 15> z_{}, lv_{}, wk_{}, wg_{};
};

double clamp_inside(double x, double lo, double hi) {
  if (x > lo && x < hi) return x;
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  if (std::isfinite(lo)) return lo + 1.0;
  return hi - 1.0;
}

// Step of size s from x towards +inf (dir = 1) or -inf (dir = -1), never
// reaching a finite support end.
double step(double x, double s, int dir, double lo, double hi) {
  if (dir > 0) return std::isfinite(hi) ? std::min(x + s, x + 0.5 * (hi - x)) : x + s;
  return std::isfinite(lo) ? std::max(x - s, x - 0.5 * (x - lo)) : x - s;
}

bool near_end(double x, double end) {
  return std::isfinite(end) && std::abs(end - x) <= 1e-13 * (1.0 + std::abs(end));
}

double find_mode(const LogDensity1D& d, int& evals) {
  const auto& h = d.log_f;
  double x = clamp_inside(d.hint, d.lo, d.hi);
  double fx = h(x);
  ++evals;
  if (!std::isfinite(fx)) {
    std::ostringstream os;
    os << "log-density is not finite at the starting point " << x;
    throw NumericalError(os.str());
  }
  double s = d.scale > 0 ? d.scale : 1.0;
  double a = x, b = x;
  int dir = 0;
  for (int sgn : {1, -1}) {
    const double xn = step(x, s, sgn, d.lo, d.hi);
    const double fn = h(xn);
    ++evals;
    if (fn > fx) {
      dir = sgn;
      a = x;
      x = xn;
      fx = fn;
      break;
    }
  }
  if (dir == 0) {
    a = step(x, s, -1, d.lo, d.hi);
    b = step(x, s, 1, d.lo, d.hi);
  } else {
    for (int it = 0;; ++it) {
      s *= 2.0;
      const double xn = step(x, s, dir, d.lo, d.hi);
      const double fn = h(xn);
      ++evals;
      if (!(fn > fx)) {
        b = xn;
        break;
      }
      a = x;
      x = xn;
      fx = fn;
      if (near_end(x, dir > 0 ? d.hi : d.lo) || it > 400) return x;
    }
    if (a > b) std::swap(a, b);
  }
  // Golden section on [a, b].
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), e = a + g * (b - a);
  double fc = h(c), fe = h(e);
  evals += 2;
  for (int it = 0; it < 200 && (b - a) > 1e-11 * (1.0 + std::abs(c)); ++it) {
    if (fc >= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = h(e);
    }
    ++evals;
  }
  if (fx > std::max(fc, fe)) return x;
  return fc >= fe ? c : e;
}

struct TailEnd {
  double at;
  double bound;  // tail mass beyond `at`, relative to exp(h(mode))
};

TailEnd walk_tail(const LogDensity1D& d, double m, double hm, double drop, int dir, int& evals) {
  const double end = dir > 0 ? d.hi : d.lo;
  double t = m, s = d.scale > 0 ? d.scale : 1.0;
  for (int it = 0; it < 4000; ++it) {
    const double tn = step(t, s, dir, d.lo, d.hi);
    if (near_end(tn, end)) return {end, 0.0};
    const double fn = d.log_f(tn);
    ++evals;
    if (fn - hm < -drop) {
      const double delta = 1e-3 * std::abs(tn - t) + 1e-12;
      const double fb = d.log_f(tn - dir * delta);
      ++evals;
      const double slope = (fn - fb) / delta;  // outward slope, negative for a decaying tail
      if (!(slope < 0.0)) {
        if (fn == -kInf) return {tn, 0.0};
        throw DivergenceError("log-density does not decay in the tail; integral may diverge");
      }
      return {tn, std::exp(fn - hm) / -slope};
    }
    t = tn;
    s *= 2.0;
    if (!std::isfinite(t) || std::abs(t) > 1e300) break;
  }
  throw DivergenceError("tail walk did not terminate; integral diverges");
}

}  // namespace

Tilted1D::Tilted1D(LogDensity1D density, Settings settings) : d_(std::move(density)) {
  mode_ = find_mode(d_, evals_);
  shift_ = d_.log_f(mode_);
  ++evals_;
  if (!std::isfinite(shift_)) throw NumericalError("log-density is not finite at its mode");

  const TailEnd left = walk_tail(d_, mode_, shift_, settings.tail_log_drop, -1, evals_);
  const TailEnd right = walk_tail(d_, mode_, shift_, settings.tail_log_drop, 1, evals_);

  std::vector<double> brk = d_.breaks;
  brk.push_back(mode_);
  auto pts = split_points(left.at, right.at, brk);
  // Four equal pieces per segment so that adaptivity starts from a sane mesh.
  std::vector<double> mesh;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    for (int j = 0; j < 4; ++j) mesh.push_back(pts[i] + (pts[i + 1] - pts[i]) * j / 4.0);
  mesh.push_back(pts.back());

  MomentRule rule(d_, mode_, shift_);
  rule.set_width(0.25 * (right.at - left.at));
  std::priority_queue<MomentPiece> heap;
  kernels::Moments4 tot;
  double err = 0.0, err0 = 0.0;
  auto add = [&](const MomentPiece& p, double sgn) {
    tot.m0 += sgn * p.k.m0;
    tot.m1 += sgn * p.k.m1;
    tot.m2 += sgn * p.k.m2;
    tot.m3 += sgn * p.k.m3;
    err += sgn * p.err;
    err0 += sgn * p.err0;
  };
  std::vector<MomentPiece> first;
  for (std::size_t i = 0; i + 1 < mesh.size(); ++i)
    if (mesh[i] < mesh[i + 1]) first.push_back(rule.eval(mesh[i], mesh[i + 1]));
  {
    // Re-weigh the first pass with the width of the density itself.
    kernels::Moments4 t;
    for (const auto& p : first) t.m0 += p.k.m0, t.m1 += p.k.m1, t.m2 += p.k.m2;
    const double e1 = t.m1 / t.m0;
    const double sd = std::sqrt(std::max(t.m2 / t.m0 - e1 * e1, 0.0));
    if (sd > 0 && std::isfinite(sd)) {
      rule.set_width(sd);
      for (auto& p : first) p = rule.eval(p.a, p.b);
    }
  }
  for (const auto& p : first) {
    add(p, 1.0);
    heap.push(p);
  }
  while (err > settings.rel_tol * tot.m0) {
    if (static_cast<int>(heap.size()) >= settings.max_cells) {
      std::ostringstream os;
      os << "tilted integral did not reach relative tolerance " << settings.rel_tol
         << " (estimated " << err / tot.m0 << ")";
      throw NumericalError(os.str());
    }
    const MomentPiece p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) break;  // interval at machine resolution
    const MomentPiece l = rule.eval(p.a, mid), r = rule.eval(mid, p.b);
    add(p, -1.0);
    add(l, 1.0);
    add(r, 1.0);
    heap.push(l);
    heap.push(r);
  }
  evals_ += rule.evals;
  if (!(tot.m0 > 0.0) || !std::isfinite(tot.m0)) throw NumericalError("tilted integral has zero mass");

  m0_ = tot.m0;
  const double e1 = tot.m1 / m0_, e2 = tot.m2 / m0_, e3 = tot.m3 / m0_;
  mean_ = mode_ + e1;
  var_ = std::max(0.0, e2 - e1 * e1);
  m3_ = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
  err_ = (err0 + left.bound + right.bound) / m0_;

  while (!heap.empty()) {
    const auto& p = heap.top();
    cells_.push_back({p.a, p.b, p.k.m0});
    heap.pop();
  }
  std::sort(cells_.begin(), cells_.end(), [](const Cell& x, const Cell& y) { return x.a < y.a; });
  cum_.resize(cells_.size() + 1, 0.0);
  for (std::size_t i = 0; i < cells_.size(); ++i) cum_[i + 1] = cum_[i] + cells_[i].mass;
}

double Tilted1D::partial(double a, double x) const {
  if (!(x > a)) return 0.0;
  const Rule15& r = rule15();
  const double c = 0.5 * (a + x), h = 0.5 * (x - a);
  double s = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = d_.log_f(c + h * r.x[i]) - shift_;
    if (v > -708.0) s += r.wk[i] * std::exp(v);
  }
  return h * s;
}

double Tilted1D::invert(double target) const {
  const double total = cum_.back();
  target = std::clamp(target, 0.0, total);
  auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), target);
  std::size_t i = std::min<std::size_t>(it - cum_.begin() - 1, cells_.size() - 1);
  const Cell& c = cells_[i];
  const double t = std::clamp(target - cum_[i], 0.0, c.mass);
  if (c.mass <= 0.0) return 0.5 * (c.a + c.b);
  double lo = c.a, hi = c.b;
  double x = c.a + (c.b - c.a) * (t / c.mass);
  const double tol = 1e-10 * total;
  for (int iter = 0; iter < 100; ++iter) {
    const double r = partial(c.a, x) - t;
    if (std::abs(r) <= tol) break;
    if (r > 0)
      hi = x;
    else
      lo = x;
    const double dens = std::exp(d_.log_f(x) - shift_);
    double xn = dens > 0 ? x - r / dens : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * (1.0 + std::abs(x))) break;
    x = xn;
  }
  return x;
}

double Tilted1D::expect(const std::function<double(double)>& f) const {
  const Rule15& r = rule15();
  double s = 0.0;
  for (const Cell& c : cells_) {
    const double m = 0.5 * (c.a + c.b), h = 0.5 * (c.b - c.a);
    double acc = 0.0;
    for (int i = 0; i < 15; ++i) {
      const double x = m + h * r.x[i];
      const double v = d_.log_f(x) - shift_;
      if (v > -708.0) acc += r.wk[i] * std::exp(v) * f(x);
    }
    s += h * acc;
  }
  return s / cum_.back();
}

double Tilted1D::cdf(double x) const {
  if (x <= cells_.front().a) return 0.0;
  if (x >= cells_.back().b) return 1.0;
  auto it = std::upper_bound(cells_.begin(), cells_.end(), x,
                             [](double v, const Cell& c) { return v < c.a; });
  const std::size_t i = (it - cells_.begin()) - 1;
  return (cum_[i] + partial(cells_[i].a, std::min(x, cells_[i].b))) / cum_.back();
}

double Tilted1D::quantile(double u) const { return invert(u * cum_.back()); }

double Tilted1D::sample(Rng& rng) const { return invert(rng.uniform() * cum_.back()); }

}  // namespace llt::quad
