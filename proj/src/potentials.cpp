#include "llt/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "llt/quadrature.hpp"

namespace llt {

struct Potential::Params {
  GaussianParams gauss;
  std::vector<Scalar1D> comps;
  LqParams lq;
  TabulatedParams tab;
  MixtureParams mix;
};

namespace {

double sgn(double x) { return (x > 0) - (x < 0); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

const char* scalar_name(Scalar1D::Kind k) {
  switch (k) {
    case Scalar1D::Kind::quadratic: return "quadratic";
    case Scalar1D::Kind::abs: return "abs";
    case Scalar1D::Kind::quartic: return "quartic";
    case Scalar1D::Kind::power: return "power";
  }
  return "?";
}

Scalar1D::Kind parse_scalar(const std::string& s) {
  if (s == "quadratic") return Scalar1D::Kind::quadratic;
  if (s == "abs") return Scalar1D::Kind::abs;
  if (s == "quartic") return Scalar1D::Kind::quartic;
  if (s == "power") return Scalar1D::Kind::power;
  throw InputError("unknown separable component type '" + s + "'");
}

// log of the integral of exp(-c(t)) over the real line.
double scalar_log_mass(const Scalar1D& c) {
  switch (c.kind) {
    case Scalar1D::Kind::quadratic: return 0.5 * std::log(2.0 * M_PI / c.scale);
    case Scalar1D::Kind::abs: return std::log(2.0 / c.scale);
    case Scalar1D::Kind::quartic: return std::log(2.0 * std::tgamma(1.25)) - 0.25 * std::log(c.scale);
    case Scalar1D::Kind::power:
      return std::log(2.0 * std::tgamma(1.0 + 1.0 / c.exponent)) - std::log(c.scale) / c.exponent;
  }
  return 0.0;
}

void validate_scalar(const Scalar1D& c) {
  require(c.scale > 0 && std::isfinite(c.scale), "separable component scale must be positive");
  require(std::isfinite(c.center), "separable component center must be finite");
  if (c.kind == Scalar1D::Kind::power)
    require(c.exponent >= 1.0 && std::isfinite(c.exponent), "power exponent must be >= 1");
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      throw InputError(std::string("unknown field '") + it.key() + "' in " + where);
}

template <class T>
T get(const Json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad field '") + key + "' in " + where + ": " + e.what());
  }
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); }
std::vector<double> from_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Json domain_json(const Domain& d) {
  Json j;
  if (d.kind == Domain::Kind::box) {
    j["type"] = "box";
    j["lo"] = from_vec(d.lo);
    j["hi"] = from_vec(d.hi);
  } else {
    j["type"] = "lp_ball";
    j["p"] = d.p;
    j["radius"] = d.radius;
  }
  return j;
}

Domain parse_domain(const Json& j, int dim) {
  check_keys(j, {"type", "lo", "hi", "p", "radius"}, "domain");
  Domain d;
  const auto type = get<std::string>(j, "type", "domain");
  if (type == "box") {
    d.kind = Domain::Kind::box;
    d.lo = to_vec(get<std::vector<double>>(j, "lo", "domain"));
    d.hi = to_vec(get<std::vector<double>>(j, "hi", "domain"));
    require(d.lo.size() == dim && d.hi.size() == dim, "box domain has wrong dimension");
    require((d.lo.array() < d.hi.array()).all(), "box domain needs lo < hi");
  } else if (type == "lp_ball") {
    d.kind = Domain::Kind::lp_ball;
    d.p = get<double>(j, "p", "domain");
    d.radius = get<double>(j, "radius", "domain");
    require(d.p >= 1.0 && d.radius > 0, "lp_ball domain needs p >= 1 and radius > 0");
  } else if (type != "none") {
    throw InputError("unknown domain type '" + type + "'");
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::separable_1d: return "separable-1d";
    case PotentialKind::lq_squared: return "lq-squared";
    case PotentialKind::tabulated_1d: return "tabulated-1d";
    case PotentialKind::lipschitz_mixture: return "lipschitz-mixture";
  }
  return "?";
}

PotentialKind parse_kind(std::string_view s) {
  for (auto k : {PotentialKind::gaussian, PotentialKind::separable_1d, PotentialKind::lq_squared,
                 PotentialKind::tabulated_1d, PotentialKind::lipschitz_mixture})
    if (kind_name(k) == s) return k;
  throw InputError("unknown potential kind '" + std::string(s) + "'");
}

double lp_norm(const Vec& x, double p) {
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return m * std::pow((x.cwiseAbs() / m).array().pow(p).sum(), 1.0 / p);
}

double LqParams::q() const { return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0); }

double Scalar1D::value(double t) const {
  const double u = t - center;
  switch (kind) {
    case Kind::quadratic: return 0.5 * scale * u * u;
    case Kind::abs: return scale * std::abs(u);
    case Kind::quartic: return scale * (u * u) * (u * u);
    case Kind::power: return scale * std::pow(std::abs(u), exponent);
  }
  return 0.0;
}

double Scalar1D::d1(double t) const {
  const double u = t - center;
  switch (kind) {
    case Kind::quadratic: return scale * u;
    case Kind::abs: return scale * sgn(u);
    case Kind::quartic: return 4.0 * scale * u * u * u;
    case Kind::power:
      return u == 0.0 ? 0.0 : scale * exponent * std::pow(std::abs(u), exponent - 1.0) * sgn(u);
  }
  return 0.0;
}

double Scalar1D::d2(double t) const {
  const double u = t - center;
  switch (kind) {
    case Kind::quadratic: return scale;
    case Kind::abs: return 0.0;
    case Kind::quartic: return 12.0 * scale * u * u;
    case Kind::power:
      if (u == 0.0) return exponent == 2.0 ? 2.0 * scale : 0.0;
      return scale * exponent * (exponent - 1.0) * std::pow(std::abs(u), exponent - 2.0);
  }
  return 0.0;
}

std::optional<double> Scalar1D::kink() const {
  if (kind == Kind::abs || (kind == Kind::power && exponent < 2.0)) return center;
  return std::nullopt;
}

bool Domain::contains(const Vec& x) const {
  switch (kind) {
    case Kind::none: return true;
    case Kind::box: return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    case Kind::lp_ball: return lp_norm(x, p) <= radius * (1.0 + 1e-12);
  }
  return true;
}

std::pair<Vec, Vec> Domain::bounding_box(int dim) const {
  switch (kind) {
    case Kind::none: return {Vec(), Vec()};
    case Kind::box: return {lo, hi};
    case Kind::lp_ball: return {Vec::Constant(dim, -radius), Vec::Constant(dim, radius)};
  }
  return {Vec(), Vec()};
}

// ---------------------------------------------------------------------------
// Factories

Potential make_gaussian(const Vec& mean, const Mat& cov) {
  const int d = static_cast<int>(mean.size());
  require(d >= 1, "gaussian potential needs dimension >= 1");
  require(cov.rows() == d && cov.cols() == d, "gaussian covariance has wrong shape");
  require(mean.allFinite() && cov.allFinite(), "gaussian parameters must be finite");
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
          "gaussian covariance is not symmetric");
  Eigen::LLT<Mat> llt(cov);
  require(llt.info() == Eigen::Success, "gaussian covariance is not positive definite");
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(cov).eigenvalues().minCoeff();
  require(min_eig > 0.0, "gaussian covariance is singular");

  auto prm = std::make_shared<Potential::Params>();
  prm->gauss.mean = mean;
  prm->gauss.cov = 0.5 * (cov + cov.transpose());
  prm->gauss.chol = llt.matrixL();
  prm->gauss.precision = llt.solve(Mat::Identity(d, d));
  prm->gauss.log_det = 2.0 * prm->gauss.chol.diagonal().array().log().sum();
  const double shift = 0.5 * (d * std::log(2.0 * M_PI) + prm->gauss.log_det);
  return Potential(PotentialKind::gaussian, d, prm, shift);
}

Potential make_separable(std::vector<Scalar1D> comps) {
  require(!comps.empty(), "separable potential needs at least one component");
  double shift = 0.0;
  for (const auto& c : comps) {
    validate_scalar(c);
    shift += scalar_log_mass(c);
  }
  auto prm = std::make_shared<Potential::Params>();
  prm->comps = std::move(comps);
  const int d = static_cast<int>(prm->comps.size());
  return Potential(PotentialKind::separable_1d, d, prm, shift);
}

Potential make_lq_squared(double p, double a, int dim) {
  require(p >= 1.0 && p < 2.0, "lq-squared needs p in [1, 2)");
  require(a > 0 && std::isfinite(a), "lq-squared needs a > 0");
  require(dim >= 1, "lq-squared needs dimension >= 1");
  auto prm = std::make_shared<Potential::Params>();
  prm->lq = {p, a};
  return Potential(PotentialKind::lq_squared, dim, prm, 0.0);
}

Potential make_tabulated(std::vector<double> points, std::vector<double> values) {
  require(points.size() >= 2 && points.size() == values.size(),
          "tabulated potential needs >= 2 matching (point, value) pairs");
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    require(points[i] < points[i + 1], "tabulated points must be strictly increasing");
  for (double v : values) require(std::isfinite(v), "tabulated values must be finite");
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const double s0 = (values[i] - values[i - 1]) / (points[i] - points[i - 1]);
    const double s1 = (values[i + 1] - values[i]) / (points[i + 1] - points[i]);
    require(s1 >= s0 - 1e-12 * (1.0 + std::abs(s0)), "tabulated potential is not convex");
  }
  auto prm = std::make_shared<Potential::Params>();
  prm->tab = {std::move(points), std::move(values)};
  return Potential(PotentialKind::tabulated_1d, 1, prm, 0.0);
}

Potential make_mixture(MixtureParams params, int dim) {
  require(!params.gradients.empty(), "lipschitz-mixture needs at least one component");
  require(params.offsets.empty() || params.offsets.size() == params.gradients.size(),
          "lipschitz-mixture offsets do not match gradients");
  if (params.offsets.empty()) params.offsets.assign(params.gradients.size(), 0.0);
  require(params.weight > 0, "lipschitz-mixture weight must be positive");
  require(params.p >= 1.0, "lipschitz-mixture norm order must be >= 1");
  const double q = params.p == 1.0 ? std::numeric_limits<double>::infinity() : params.p / (params.p - 1.0);
  double gmax = 0.0;
  for (const auto& g : params.gradients) {
    require(g.size() == dim, "lipschitz-mixture gradient has wrong dimension");
    gmax = std::max(gmax, lp_norm(g, q));
  }
  require(gmax <= params.lipschitz * (1.0 + 1e-12),
          "lipschitz-mixture component exceeds the declared Lipschitz bound");
  auto prm = std::make_shared<Potential::Params>();
  prm->mix = std::move(params);
  return Potential(PotentialKind::lipschitz_mixture, dim, prm, 0.0);
}

// ---------------------------------------------------------------------------
// Oracles

const GaussianParams& Potential::gaussian() const {
  if (kind_ != PotentialKind::gaussian) throw InputError("potential is not gaussian");
  return params_->gauss;
}
const std::vector<Scalar1D>& Potential::components() const {
  if (kind_ != PotentialKind::separable_1d) throw InputError("potential is not separable-1d");
  return params_->comps;
}
const LqParams& Potential::lq() const {
  if (kind_ != PotentialKind::lq_squared) throw InputError("potential is not lq-squared");
  return params_->lq;
}
const TabulatedParams& Potential::tabulated() const {
  if (kind_ != PotentialKind::tabulated_1d) throw InputError("potential is not tabulated-1d");
  return params_->tab;
}
const MixtureParams& Potential::mixture() const {
  if (kind_ != PotentialKind::lipschitz_mixture) throw InputError("potential is not lipschitz-mixture");
  return params_->mix;
}

bool Potential::in_domain(const Vec& y) const {
  if (y.size() != dim_ || !y.allFinite()) return false;
  if (!domain_.contains(y)) return false;
  if (kind_ == PotentialKind::tabulated_1d)
    return y(0) >= params_->tab.points.front() && y(0) <= params_->tab.points.back();
  return true;
}

namespace {
void check_domain(const Potential& phi, const Vec& y) {
  if (y.size() != phi.dim()) {
    std::ostringstream os;
    os << "point has dimension " << y.size() << ", potential has dimension " << phi.dim();
    throw DomainError(os.str());
  }
  if (!phi.in_domain(y)) throw DomainError("point outside the domain of the potential");
}

double tab_value(const TabulatedParams& t, double x) {
  const auto& p = t.points;
  if (x < p.front() || x > p.back()) return std::numeric_limits<double>::infinity();
  std::size_t i = std::upper_bound(p.begin(), p.end(), x) - p.begin();
  i = std::clamp<std::size_t>(i, 1, p.size() - 1);
  const double w = (x - p[i - 1]) / (p[i] - p[i - 1]);
  return (1.0 - w) * t.values[i - 1] + w * t.values[i];
}

double tab_slope(const TabulatedParams& t, double x) {
  const auto& p = t.points;
  std::size_t i = std::upper_bound(p.begin(), p.end(), x) - p.begin();
  i = std::clamp<std::size_t>(i, 1, p.size() - 1);
  return (t.values[i] - t.values[i - 1]) / (p[i] - p[i - 1]);
}

double loss(const MixtureParams& m, std::size_t i, const Vec& x) {
  const double s = m.gradients[i].dot(x);
  return m.loss == MixtureParams::Loss::linear ? s + m.offsets[i] : std::abs(s - m.offsets[i]);
}
}  // namespace

double Potential::raw_value(const Vec& y) const {
  const Params& P = *params_;
  switch (kind_) {
    case PotentialKind::gaussian: {
      const Vec r = y - P.gauss.mean;
      return 0.5 * r.dot(P.gauss.precision * r);
    }
    case PotentialKind::separable_1d: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += P.comps[i].value(y(i));
      return s;
    }
    case PotentialKind::lq_squared: {
      const double n = lp_norm(y, P.lq.q());
      return P.lq.a * n * n;
    }
    case PotentialKind::tabulated_1d: return tab_value(P.tab, y(0));
    case PotentialKind::lipschitz_mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < P.mix.gradients.size(); ++i) s += loss(P.mix, i, y);
      return P.mix.weight * s / P.mix.gradients.size();
    }
  }
  return 0.0;
}

double Potential::value(const Vec& y) const {
  check_domain(*this, y);
  return raw_value(y) + shift_;
}

Vec Potential::gradient(const Vec& y) const {
  check_domain(*this, y);
  const Params& P = *params_;
  Vec g = Vec::Zero(dim_);
  switch (kind_) {
    case PotentialKind::gaussian: g = P.gauss.precision * (y - P.gauss.mean); break;
    case PotentialKind::separable_1d:
      for (int i = 0; i < dim_; ++i) g(i) = P.comps[i].d1(y(i));
      break;
    case PotentialKind::lq_squared: {
      const double q = P.lq.q();
      const double n = lp_norm(y, q);
      if (n == 0.0) break;
      if (std::isinf(q)) {
        int k;
        y.cwiseAbs().maxCoeff(&k);
        g(k) = 2.0 * P.lq.a * n * sgn(y(k));
      } else {
        for (int i = 0; i < dim_; ++i)
          g(i) = 2.0 * P.lq.a * sgn(y(i)) * std::pow(std::abs(y(i)) / n, q - 1.0) * n;
      }
      break;
    }
    case PotentialKind::tabulated_1d: g(0) = tab_slope(P.tab, y(0)); break;
    case PotentialKind::lipschitz_mixture: {
      const auto& m = P.mix;
      for (std::size_t i = 0; i < m.gradients.size(); ++i) {
        const double s = m.loss == MixtureParams::Loss::linear
                             ? 1.0
                             : sgn(m.gradients[i].dot(y) - m.offsets[i]);
        g += s * m.gradients[i];
      }
      g *= m.weight / m.gradients.size();
      break;
    }
  }
  return g;
}

Mat Potential::hessian(const Vec& y) const {
  check_domain(*this, y);
  const Params& P = *params_;
  Mat H = Mat::Zero(dim_, dim_);
  switch (kind_) {
    case PotentialKind::gaussian: H = P.gauss.precision; break;
    case PotentialKind::separable_1d:
      for (int i = 0; i < dim_; ++i) H(i, i) = P.comps[i].d2(y(i));
      break;
    case PotentialKind::lq_squared: {
      const double q = P.lq.q(), a = P.lq.a;
      const double n = lp_norm(y, q);
      if (n == 0.0) break;
      if (std::isinf(q)) {
        int k;
        y.cwiseAbs().maxCoeff(&k);
        H(k, k) = 2.0 * a;
        break;
      }
      // a N^2 with N = ||y||_q:  2a [ (2-q) dN dN^T + (q-1) N^{2-q} diag |y_i|^{q-2} ].
      Vec dn(dim_);
      for (int i = 0; i < dim_; ++i) dn(i) = sgn(y(i)) * std::pow(std::abs(y(i)) / n, q - 1.0);
      H = (2.0 - q) * dn * dn.transpose();
      for (int i = 0; i < dim_; ++i) H(i, i) += (q - 1.0) * std::pow(std::abs(y(i)) / n, q - 2.0);
      H *= 2.0 * a;
      break;
    }
    case PotentialKind::tabulated_1d:
    case PotentialKind::lipschitz_mixture: break;
  }
  return H;
}

Potential::Bundle Potential::eval_bundle(const Vec& y) const {
  return {value(y), gradient(y), hessian(y)};
}

double Potential::value1(double t) const {
  const Params& P = *params_;
  if (domain_.kind == Domain::Kind::box && (t < domain_.lo(0) || t > domain_.hi(0)))
    return std::numeric_limits<double>::infinity();
  if (domain_.kind == Domain::Kind::lp_ball && std::abs(t) > domain_.radius)
    return std::numeric_limits<double>::infinity();
  switch (kind_) {
    case PotentialKind::gaussian: {
      const double r = t - P.gauss.mean(0);
      return 0.5 * r * r * P.gauss.precision(0, 0) + shift_;
    }
    case PotentialKind::separable_1d: return P.comps[0].value(t) + shift_;
    case PotentialKind::lq_squared: return P.lq.a * t * t + shift_;
    case PotentialKind::tabulated_1d: return tab_value(P.tab, t) + shift_;
    case PotentialKind::lipschitz_mixture: return raw_value(vec1(t)) + shift_;
  }
  return 0.0;
}

double Potential::d1(double t) const {
  const Params& P = *params_;
  switch (kind_) {
    case PotentialKind::gaussian: return (t - P.gauss.mean(0)) * P.gauss.precision(0, 0);
    case PotentialKind::separable_1d: return P.comps[0].d1(t);
    case PotentialKind::lq_squared: return 2.0 * P.lq.a * t;
    case PotentialKind::tabulated_1d: return tab_slope(P.tab, t);
    case PotentialKind::lipschitz_mixture: return gradient(vec1(t))(0);
  }
  return 0.0;
}

double Potential::d2(double t) const {
  const Params& P = *params_;
  switch (kind_) {
    case PotentialKind::gaussian: return P.gauss.precision(0, 0);
    case PotentialKind::separable_1d: return P.comps[0].d2(t);
    case PotentialKind::lq_squared: return 2.0 * P.lq.a;
    default: return 0.0;
  }
}

std::pair<double, double> Potential::support1() const {
  double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  if (kind_ == PotentialKind::tabulated_1d) {
    lo = params_->tab.points.front();
    hi = params_->tab.points.back();
  }
  if (domain_.kind == Domain::Kind::box) {
    lo = std::max(lo, domain_.lo(0));
    hi = std::min(hi, domain_.hi(0));
  } else if (domain_.kind == Domain::Kind::lp_ball) {
    lo = std::max(lo, -domain_.radius);
    hi = std::min(hi, domain_.radius);
  }
  return {lo, hi};
}

std::vector<double> Potential::kinks1() const {
  std::vector<double> k;
  if (kind_ == PotentialKind::separable_1d) {
    if (auto c = params_->comps[0].kink()) k.push_back(*c);
  } else if (kind_ == PotentialKind::tabulated_1d) {
    k = params_->tab.points;
  }
  return k;
}

Potential Potential::with_shift(double shift) const {
  Potential out = *this;
  out.shift_ = shift;
  return out;
}

Potential Potential::with_domain(Domain d) const {
  if (d.kind == Domain::Kind::box)
    require(d.lo.size() == dim_ && d.hi.size() == dim_, "box domain has wrong dimension");
  Potential out = *this;
  out.domain_ = std::move(d);
  return out;
}

std::size_t Potential::component_count() const { return mixture().gradients.size(); }

double Potential::component_value(std::size_t i, const Vec& x) const {
  const auto& m = mixture();
  return m.weight * loss(m, i, x);
}

// ---------------------------------------------------------------------------
// Serialization

Json Potential::to_json() const {
  Json j;
  j["kind"] = std::string(kind_name(kind_));
  j["dim"] = dim_;
  Json p = Json::object();
  const Params& P = *params_;
  switch (kind_) {
    case PotentialKind::gaussian: {
      p["mean"] = from_vec(P.gauss.mean);
      Json rows = Json::array();
      for (int i = 0; i < dim_; ++i) rows.push_back(from_vec(P.gauss.cov.row(i).transpose()));
      p["cov"] = rows;
      break;
    }
    case PotentialKind::separable_1d: {
      Json comps = Json::array();
      for (const auto& c : P.comps) {
        Json jc;
        jc["type"] = scalar_name(c.kind);
        jc["scale"] = c.scale;
        jc["center"] = c.center;
        if (c.kind == Scalar1D::Kind::power) jc["exponent"] = c.exponent;
        comps.push_back(jc);
      }
      p["components"] = comps;
      break;
    }
    case PotentialKind::lq_squared:
      p["p"] = P.lq.p;
      p["a"] = P.lq.a;
      break;
    case PotentialKind::tabulated_1d:
      p["points"] = P.tab.points;
      p["values"] = P.tab.values;
      break;
    case PotentialKind::lipschitz_mixture: {
      Json g = Json::array();
      for (const auto& v : P.mix.gradients) g.push_back(from_vec(v));
      p["loss"] = P.mix.loss == MixtureParams::Loss::linear ? "linear" : "absolute";
      p["gradients"] = g;
      p["offsets"] = P.mix.offsets;
      p["weight"] = P.mix.weight;
      p["lipschitz"] = P.mix.lipschitz;
      p["p"] = P.mix.p;
      break;
    }
  }
  j["params"] = p;
  j["shift"] = shift_;
  if (domain_.kind != Domain::Kind::none) j["domain"] = domain_json(domain_);
  return j;
}

Potential Potential::from_json(const Json& j) {
  check_keys(j, {"kind", "dim", "params", "shift", "domain"}, "potential");
  const auto kind = parse_kind(get<std::string>(j, "kind", "potential"));
  const int dim = get<int>(j, "dim", "potential");
  require(dim >= 1, "potential dim must be >= 1");
  const Json& p = j.contains("params") ? j.at("params") : Json::object();
  std::optional<Potential> out;
  switch (kind) {
    case PotentialKind::gaussian: {
      check_keys(p, {"mean", "cov"}, "gaussian params");
      const auto mean = get<std::vector<double>>(p, "mean", "gaussian params");
      const auto rows = get<std::vector<std::vector<double>>>(p, "cov", "gaussian params");
      require(static_cast<int>(mean.size()) == dim && static_cast<int>(rows.size()) == dim,
              "gaussian params do not match dim");
      Mat cov(dim, dim);
      for (int r = 0; r < dim; ++r) {
        require(static_cast<int>(rows[r].size()) == dim, "gaussian cov row has wrong length");
        for (int c = 0; c < dim; ++c) cov(r, c) = rows[r][c];
      }
      out = make_gaussian(to_vec(mean), cov);
      break;
    }
    case PotentialKind::separable_1d: {
      check_keys(p, {"components"}, "separable-1d params");
      const Json& comps = p.at("components");
      require(comps.is_array() && static_cast<int>(comps.size()) == dim,
              "separable-1d needs one component per dimension");
      std::vector<Scalar1D> cs;
      for (const auto& jc : comps) {
        check_keys(jc, {"type", "scale", "center", "exponent"}, "separable component");
        Scalar1D c;
        c.kind = parse_scalar(get<std::string>(jc, "type", "separable component"));
        c.scale = jc.value("scale", 1.0);
        c.center = jc.value("center", 0.0);
        c.exponent = jc.value("exponent", 2.0);
        cs.push_back(c);
      }
      out = make_separable(std::move(cs));
      break;
    }
    case PotentialKind::lq_squared:
      check_keys(p, {"p", "a"}, "lq-squared params");
      out = make_lq_squared(get<double>(p, "p", "lq-squared params"), get<double>(p, "a", "lq-squared params"), dim);
      break;
    case PotentialKind::tabulated_1d:
      check_keys(p, {"points", "values"}, "tabulated-1d params");
      require(dim == 1, "tabulated-1d requires dim 1");
      out = make_tabulated(get<std::vector<double>>(p, "points", "tabulated-1d params"),
                           get<std::vector<double>>(p, "values", "tabulated-1d params"));
      break;
    case PotentialKind::lipschitz_mixture: {
      check_keys(p, {"loss", "gradients", "offsets", "weight", "lipschitz", "p"}, "lipschitz-mixture params");
      MixtureParams m;
      const auto loss_name = p.value("loss", std::string("linear"));
      if (loss_name == "linear")
        m.loss = MixtureParams::Loss::linear;
      else if (loss_name == "absolute")
        m.loss = MixtureParams::Loss::absolute;
      else
        throw InputError("unknown mixture loss '" + loss_name + "'");
      for (const auto& g : get<std::vector<std::vector<double>>>(p, "gradients", "lipschitz-mixture params"))
        m.gradients.push_back(to_vec(g));
      if (p.contains("offsets")) m.offsets = get<std::vector<double>>(p, "offsets", "lipschitz-mixture params");
      m.weight = p.value("weight", 1.0);
      m.lipschitz = get<double>(p, "lipschitz", "lipschitz-mixture params");
      m.p = p.value("p", 2.0);
      out = make_mixture(std::move(m), dim);
      break;
    }
  }
  require(out->dim() == dim, "potential params do not match dim");
  if (j.contains("shift")) *out = out->with_shift(get<double>(j, "shift", "potential"));
  if (j.contains("domain")) *out = out->with_domain(parse_domain(j.at("domain"), dim));
  return *out;
}

std::string Potential::id() const {
  const auto h = std::hash<std::string>{}(to_json().dump());
  std::ostringstream os;
  os << kind_name(kind_) << '-' << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Normalization

std::pair<double, double> log_partition(const Potential& phi) {
  const int d = phi.dim();
  if (phi.domain().kind == Domain::Kind::none) {
    switch (phi.kind()) {
      case PotentialKind::gaussian:
        return {0.5 * (d * std::log(2.0 * M_PI) + phi.gaussian().log_det) - phi.shift(), 0.0};
      case PotentialKind::separable_1d: {
        double s = 0.0;
        for (const auto& c : phi.components()) s += scalar_log_mass(c);
        return {s - phi.shift(), 0.0};
      }
      case PotentialKind::lq_squared: {
        const auto& lq = phi.lq();
        const double q = lq.q();
        const double log_vol = std::isinf(q) ? d * std::log(2.0)
                                             : d * std::log(2.0 * std::tgamma(1.0 + 1.0 / q)) -
                                                   std::lgamma(1.0 + d / q);
        return {log_vol + std::lgamma(0.5 * d + 1.0) - 0.5 * d * std::log(lq.a) - phi.shift(), 0.0};
      }
      case PotentialKind::tabulated_1d: {
        const auto& t = phi.tabulated();
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> logs;
        for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
          const double h = t.points[i + 1] - t.points[i];
          const double m = (t.values[i + 1] - t.values[i]) / h;
          // log of integral of exp(-(v_i + m s)) over s in [0, h]
          double l;
          if (std::abs(m * h) < 1e-12)
            l = -t.values[i] + std::log(h);
          else if (m > 0)
            l = -t.values[i] + std::log(-std::expm1(-m * h) / m);
          else
            l = -t.values[i + 1] + std::log(-std::expm1(m * h) / -m);
          logs.push_back(l);
          mx = std::max(mx, l);
        }
        double s = 0.0;
        for (double l : logs) s += std::exp(l - mx);
        return {mx + std::log(s) - phi.shift(), 1e-15};
      }
      case PotentialKind::lipschitz_mixture: break;
    }
  }
  if (d == 1) {
    auto [lo, hi] = phi.support1();
    quad::LogDensity1D dens;
    dens.log_f = [&phi](double t) { return -phi.value1(t); };
    dens.lo = lo;
    dens.hi = hi;
    dens.breaks = phi.kinks1();
    dens.hint = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : 0.0;
    dens.scale = std::isfinite(lo) && std::isfinite(hi) ? 0.25 * (hi - lo) : 1.0;
    quad::Tilted1D t(std::move(dens));
    return {t.log_mass(), t.error_bound()};
  }
  throw DivergenceError("cannot certify integrability of exp(-phi) for " +
                        std::string(kind_name(phi.kind())) + " potential in dimension " +
                        std::to_string(d));
}

std::pair<Potential, NormalizationCertificate> normalize(const Potential& phi) {
  const auto [log_z, err] = log_partition(phi);
  if (!std::isfinite(log_z)) throw DivergenceError("integral of exp(-phi) is not finite");
  NormalizationCertificate cert{phi.id(), log_z, err};
  return {phi.with_shift(phi.shift() + log_z), cert};
}

}  // namespace llt
