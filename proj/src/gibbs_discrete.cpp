#include "llt/gibbs_discrete.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "llt/rng.hpp"

namespace llt {
namespace {

double weighted_mean(const Vec& f, const Vec& w) { return w.dot(f); }

double weighted_var(const Vec& f, const Vec& w) {
  const double m = weighted_mean(f, w);
  return w.dot((f.array() - m).square().matrix());
}

// Squared second singular value of W restricted to the complement of the unit vector u.
double restricted_sup(const Mat& W, const Vec& u) {
  const Mat proj = Mat::Identity(u.size(), u.size()) - u * u.transpose();
  const Eigen::JacobiSVD<Mat> svd(W * proj);
  const double s = svd.singularValues()(0);
  return s * s;
}

Json check(double value, double tol) {
  Json j;
  j["value"] = value;
  j["tolerance"] = tol;
  j["pass"] = value <= tol;
  return j;
}

}  // namespace

DiscreteJoint DiscreteJoint::from_matrix(Mat P) {
  if (P.size() == 0) throw InputError("joint matrix is empty");
  if (!P.allFinite() || P.minCoeff() < 0.0) throw InputError("joint matrix has negative or non-finite entries");
  if (std::abs(P.sum() - 1.0) > 1e-12) throw InputError("joint matrix does not sum to one");
  DiscreteJoint j;
  j.r = P.rowwise().sum();
  j.c = P.colwise().sum().transpose();
  if (j.r.minCoeff() <= 0.0 || j.c.minCoeff() <= 0.0) throw InputError("joint matrix has a zero marginal");
  j.P = std::move(P);
  return j;
}

DiscreteJoint random_joint(int n, int m, Rng& rng) {
  if (n < 1 || m < 1) throw InputError("random joint needs positive sizes");
  Mat P(n, m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) P(i, k) = std::pow(rng.uniform(), 3);
  P /= P.sum();
  // Renormalizing once more puts the total within an ulp or two of one.
  P /= P.sum();
  return DiscreteJoint::from_matrix(std::move(P));
}

DiscreteJoint read_joint_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read joint CSV " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError("joint CSV " + path + ": not a number: '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw InputError("joint CSV " + path + ": not a number: '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InputError("joint CSV " + path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("joint CSV " + path + " is empty");
  Mat P(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) P(i, k) = rows[i][k];
  return DiscreteJoint::from_matrix(std::move(P));
}

GibbsOperators build_operators(const DiscreteJoint& j) {
  GibbsOperators o;
  o.K = j.r.cwiseInverse().asDiagonal() * j.P;
  o.Kdag = j.c.cwiseInverse().asDiagonal() * j.P.transpose();
  o.PX = o.K * o.Kdag;
  o.PY = o.Kdag * o.K;
  return o;
}

SpectralGap spectral_gap(const DiscreteJoint& j) {
  const auto o = build_operators(j);
  const Vec rs = j.r.cwiseSqrt();
  Mat S = rs.asDiagonal() * o.PX * rs.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on the Gibbs operator");
  SpectralGap g;
  const Vec ev = es.eigenvalues();  // ascending; the top one is 1
  g.lambda2 = ev.size() > 1 ? ev(ev.size() - 2) : 0.0;
  if (std::abs(ev(ev.size() - 1) - 1.0) > 1e-9) throw NumericalError("Gibbs operator top eigenvalue is not one");
  g.gap = 1.0 - g.lambda2;
  return g;
}

ChannelContraction channel_contraction(const DiscreteJoint& j) {
  const auto o = build_operators(j);
  const Vec rs = j.r.cwiseSqrt(), cs = j.c.cwiseSqrt();
  // g in L2(c) -> Kg in L2(r): R^{1/2} K C^{-1/2}; f in L2(r) -> K'f in L2(c): C^{1/2} K' R^{-1/2}.
  const Mat fwd = rs.asDiagonal() * o.K * cs.cwiseInverse().asDiagonal();
  const Mat bwd = cs.asDiagonal() * o.Kdag * rs.cwiseInverse().asDiagonal();
  return {restricted_sup(fwd, cs), restricted_sup(bwd, rs)};
}

std::pair<double, double> mean_zero_check(const DiscreteJoint& j, const Vec& f, const Vec& g) {
  if (f.size() != j.rows() || g.size() != j.cols()) throw InputError("mean-zero check: function sizes do not match");
  const double scale_f = 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff());
  const double scale_g = 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff());
  if (std::abs(weighted_mean(f, j.r)) > scale_f) throw InputError("mean-zero check: f is not centred under r");
  if (std::abs(weighted_mean(g, j.c)) > scale_g) throw InputError("mean-zero check: g is not centred under c");
  const auto o = build_operators(j);
  return {weighted_mean(o.K * g, j.r), weighted_mean(o.Kdag * f, j.c)};
}

double variance_ratio(const DiscreteJoint& j, const Mat& PX, const Vec& f) {
  return weighted_var(PX * f, j.r) / weighted_var(f, j.r);
}

Json gibbs_report(const DiscreteJoint& j, std::uint64_t seed, int functions) {
  const auto o = build_operators(j);
  const auto gap = spectral_gap(j);
  const auto ch = channel_contraction(j);
  Rng rng(seed, 0x9b);

  const Mat RPX = j.r.asDiagonal() * o.PX;
  const double balance = (RPX - RPX.transpose()).cwiseAbs().maxCoeff();
  const double stationarity = (j.r.transpose() * o.PX - j.r.transpose()).cwiseAbs().maxCoeff();
  const double row_sums = (o.PX.rowwise().sum().array() - 1.0).abs().maxCoeff();

  double adjoint = 0.0, contraction = -std::numeric_limits<double>::infinity(), mean_zero = 0.0;
  for (int t = 0; t < functions; ++t) {
    Vec f(j.rows()), g(j.cols());
    for (int i = 0; i < f.size(); ++i) f(i) = rng.normal();
    for (int i = 0; i < g.size(); ++i) g(i) = rng.normal();
    const double lhs = (o.K * g).cwiseProduct(j.r).dot(f);
    const double rhs = g.cwiseProduct(j.c).dot(o.Kdag * f);
    adjoint = std::max(adjoint, std::abs(lhs - rhs));
    if (j.rows() > 1) contraction = std::max(contraction, variance_ratio(j, o.PX, f) - gap.lambda2 * gap.lambda2);
    const Vec fc = f.array() - weighted_mean(f, j.r), gc = g.array() - weighted_mean(g, j.c);
    const auto [a, b] = mean_zero_check(j, fc, gc);
    mean_zero = std::max({mean_zero, std::abs(a), std::abs(b)});
  }

  Json rep;
  rep["lambda2"] = gap.lambda2;
  rep["gap"] = gap.gap;
  rep["forward_sup"] = ch.forward_sup;
  rep["backward_sup"] = ch.backward_sup;
  Json checks;
  checks["detailed_balance"] = check(balance, 1e-12);
  checks["stationarity"] = check(stationarity, 1e-12);
  checks["row_sums"] = check(row_sums, 1e-12);
  checks["adjointness"] = check(adjoint, 1e-12);
  checks["sup_equality"] = check(std::abs(ch.forward_sup - ch.backward_sup), 1e-10);
  checks["sup_equals_lambda2"] =
      check(std::max(std::abs(ch.forward_sup - gap.lambda2), std::abs(ch.backward_sup - gap.lambda2)), 1e-10);
  checks["gap_formula"] = check(std::abs(gap.gap - (1.0 - ch.backward_sup)), 1e-10);
  checks["variance_contraction"] = check(j.rows() > 1 ? contraction : 0.0, 1e-9);
  checks["mean_zero"] = check(mean_zero, 1e-12);
  rep["checks"] = checks;
  return rep;
}

}  // namespace llt
