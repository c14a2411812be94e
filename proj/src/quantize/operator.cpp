#include "thermoquant/quantize/operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "thermoquant/errors.hpp"
#include "thermoquant/parallel.hpp"

namespace thermoquant::quantize {

using symcore::simplify;
using symcore::sym;

CExpr CExpr::simplified() const { return {simplify(re), simplify(im)}; }

CExpr CExpr::derivative(std::string_view var) const {
  return {symcore::differentiate(re, var), symcore::differentiate(im, var)};
}

Complex CExpr::evaluate(const RealBinding& b) const {
  return {symcore::evaluate_real(re, b), symcore::evaluate_real(im, b)};
}

std::string CExpr::str() const {
  if (im.is_zero()) return to_string(re);
  if (re.is_zero()) return "i*(" + to_string(im) + ")";
  return "(" + to_string(re) + ") + i*(" + to_string(im) + ")";
}

namespace {

bool term_order(const Term& a, const Term& b) {
  if (a.dtau != b.dtau) return a.dtau > b.dtau;
  return a.dq > b.dq;
}

std::vector<Term> canonical(std::vector<Term> in) {
  std::map<std::pair<int, int>, CExpr> acc;
  for (auto& t : in) {
    if (t.dtau < 0 || t.dq < 0) throw DomainError("negative derivative order");
    auto key = std::make_pair(t.dtau, t.dq);
    auto it = acc.find(key);
    if (it == acc.end()) {
      acc.emplace(key, std::move(t.coeff));
    } else {
      it->second = it->second + t.coeff;
    }
  }
  std::vector<Term> out;
  for (auto& [k, c] : acc) {
    CExpr s = c.simplified();
    if (!s.is_zero()) out.push_back({std::move(s), k.first, k.second});
  }
  std::sort(out.begin(), out.end(), term_order);
  return out;
}

/// (-i)^n
CExpr minus_i_pow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return CExpr(Expr(1));
    case 1: return CExpr::imag(Expr(-1));
    case 2: return CExpr(Expr(-1));
    default: return CExpr::imag(Expr(1));
  }
}

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

CExpr nth_derivative(const CExpr& c, int a, int b) {
  CExpr r = c;
  for (int i = 0; i < a; ++i) r = r.derivative("tau");
  for (int j = 0; j < b; ++j) r = r.derivative("q");
  return r;
}

}  // namespace

DifferentialOperator::DifferentialOperator(std::vector<Term> terms) : terms_(canonical(std::move(terms))) {}

DifferentialOperator DifferentialOperator::identity() { return multiply(CExpr(Expr(1))); }
DifferentialOperator DifferentialOperator::multiply(CExpr c) { return DifferentialOperator({{std::move(c), 0, 0}}); }
DifferentialOperator DifferentialOperator::d_tau(int order) { return DifferentialOperator({{CExpr(Expr(1)), order, 0}}); }
DifferentialOperator DifferentialOperator::d_q(int order) { return DifferentialOperator({{CExpr(Expr(1)), 0, order}}); }
DifferentialOperator DifferentialOperator::tau_hat() { return multiply(CExpr(sym("tau"))); }
DifferentialOperator DifferentialOperator::q_hat() { return multiply(CExpr(sym("q"))); }
DifferentialOperator DifferentialOperator::p_hat() {
  return DifferentialOperator({{CExpr::imag(-sym("bbar")), 0, 1}});
}
DifferentialOperator DifferentialOperator::pi_hat() {
  return DifferentialOperator({{CExpr::imag(-sym("bbar")), 1, 0}});
}

CExpr DifferentialOperator::coefficient(int dtau, int dq) const {
  for (const auto& t : terms_) {
    if (t.dtau == dtau && t.dq == dq) return t.coeff;
  }
  return CExpr();
}

int DifferentialOperator::max_dtau() const {
  int m = 0;
  for (const auto& t : terms_) m = std::max(m, t.dtau);
  return m;
}

int DifferentialOperator::max_dq() const {
  int m = 0;
  for (const auto& t : terms_) m = std::max(m, t.dq);
  return m;
}

DifferentialOperator operator+(const DifferentialOperator& a, const DifferentialOperator& b) {
  std::vector<Term> t = a.terms_;
  t.insert(t.end(), b.terms_.begin(), b.terms_.end());
  return DifferentialOperator(std::move(t));
}

DifferentialOperator DifferentialOperator::operator-() const {
  std::vector<Term> t = terms_;
  for (auto& x : t) x.coeff = -x.coeff;
  return DifferentialOperator(std::move(t));
}

DifferentialOperator operator-(const DifferentialOperator& a, const DifferentialOperator& b) { return a + (-b); }

DifferentialOperator operator*(const CExpr& c, const DifferentialOperator& a) {
  std::vector<Term> t = a.terms_;
  for (auto& x : t) x.coeff = c * x.coeff;
  return DifferentialOperator(std::move(t));
}

bool operator==(const DifferentialOperator& a, const DifferentialOperator& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    const auto &x = a.terms_[i], &y = b.terms_[i];
    if (x.dtau != y.dtau || x.dq != y.dq || !(x.coeff == y.coeff)) return false;
  }
  return true;
}

DifferentialOperator DifferentialOperator::substituted(const std::map<std::string, Expr, std::less<>>& subs) const {
  std::vector<Term> t = terms_;
  for (auto& x : t) x.coeff = {symcore::substitute(x.coeff.re, subs), symcore::substitute(x.coeff.im, subs)};
  return DifferentialOperator(std::move(t));
}

std::string DifferentialOperator::str() const {
  if (terms_.empty()) return "0";
  std::string s;
  for (const auto& t : terms_) {
    if (!s.empty()) s += " + ";
    s += "(" + t.coeff.str() + ")";
    if (t.dtau > 0) s += "*d_tau" + (t.dtau > 1 ? "^" + std::to_string(t.dtau) : std::string());
    if (t.dq > 0) s += "*d_q" + (t.dq > 1 ? "^" + std::to_string(t.dq) : std::string());
  }
  return s;
}

nlohmann::json DifferentialOperator::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : terms_) {
    j.push_back({{"re", to_string(t.coeff.re)}, {"im", to_string(t.coeff.im)}, {"dtau", t.dtau}, {"dq", t.dq}});
  }
  return j;
}

DifferentialOperator compose(const DifferentialOperator& a, const DifferentialOperator& b) {
  std::vector<Term> out;
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      for (int i = 0; i <= ta.dtau; ++i) {
        for (int j = 0; j <= ta.dq; ++j) {
          CExpr d = nth_derivative(tb.coeff, ta.dtau - i, ta.dq - j);
          if (d.simplified().is_zero()) continue;
          const long long c = binomial(ta.dtau, i) * binomial(ta.dq, j);
          out.push_back({CExpr(Expr(static_cast<int>(c))) * ta.coeff * d, i + tb.dtau, j + tb.dq});
        }
      }
    }
  }
  return DifferentialOperator(std::move(out));
}

DifferentialOperator commutator(const DifferentialOperator& a, const DifferentialOperator& b) {
  return compose(a, b) - compose(b, a);
}

bool equivalent(const DifferentialOperator& a, const DifferentialOperator& b, const RealBinding& params,
                const models::DomainBox& box, double tol) {
  DifferentialOperator d = a - b;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(box.tau_min, box.tau_max), uq(box.q_min, box.q_max);
  for (int s = 0; s < 50; ++s) {
    RealBinding bind = params;
    bind["tau"] = ut(rng);
    bind["q"] = uq(rng);
    for (const auto& t : d.terms()) {
      if (std::abs(t.coeff.evaluate(bind)) > tol) return false;
    }
  }
  return true;
}

DifferentialOperator promote(const Expr& e, Ordering ord) {
  static const std::vector<std::string> momenta = {"pi", "p"};
  std::map<symcore::Monomial, Expr> poly;
  try {
    poly = symcore::collect(symcore::expand(e), momenta);
  } catch (const NonPolynomial& ex) {
    throw NonPolynomialMomentum(std::string("constraint is not polynomial in the momenta: ") + ex.what());
  }
  std::vector<Term> qp, pq;
  for (const auto& [mono, coeff] : poly) {
    if (symcore::depends_on(coeff, "pi") || symcore::depends_on(coeff, "p")) {
      throw NonPolynomialMomentum("momentum left inside a coefficient: " + to_string(coeff));
    }
    const int a = mono[0], b = mono[1];
    CExpr f(coeff);
    // P = (-i bbar)^(a+b) d_tau^a d_q^b
    CExpr pref = minus_i_pow(a + b) * CExpr(symcore::pow(sym("bbar"), symcore::Rational(a + b)));
    DifferentialOperator P({{pref, a, b}});
    qp.push_back({f * pref, a, b});
    DifferentialOperator pf = compose(P, DifferentialOperator::multiply(f));
    pq.insert(pq.end(), pf.terms().begin(), pf.terms().end());
  }
  switch (ord) {
    case Ordering::qp_first: return DifferentialOperator(qp);
    case Ordering::pq_first: return DifferentialOperator(pq);
    case Ordering::symmetric: {
      DifferentialOperator sum = DifferentialOperator(qp) + DifferentialOperator(pq);
      return CExpr(Expr(symcore::Rational(1, 2))) * sum;
    }
  }
  throw OrderingUnsupported("unknown ordering");
}

DifferentialOperator promote(const constraints::Constraint& c, Ordering ord) { return promote(c.expr, ord); }

CExpr log_derivative_action(const DifferentialOperator& op, const Expr& log_modulus, const Expr& phase) {
  const CExpr L_tau = CExpr(symcore::differentiate(log_modulus, "tau"), symcore::differentiate(phase, "tau"));
  const CExpr L_q = CExpr(symcore::differentiate(log_modulus, "q"), symcore::differentiate(phase, "q"));
  std::map<std::pair<int, int>, CExpr> D;
  D[{0, 0}] = CExpr(Expr(1));
  auto get = [&](auto&& self, int a, int b) -> CExpr {
    auto it = D.find({a, b});
    if (it != D.end()) return it->second;
    CExpr r;
    if (a > 0) {
      CExpr prev = self(self, a - 1, b);
      r = (prev.derivative("tau") + L_tau * prev).simplified();
    } else {
      CExpr prev = self(self, a, b - 1);
      r = (prev.derivative("q") + L_q * prev).simplified();
    }
    D[{a, b}] = r;
    return r;
  };
  CExpr total;
  for (const auto& t : op.terms()) total = total + t.coeff * get(get, t.dtau, t.dq);
  return total.simplified();
}

std::array<double, 5> fd_weights(std::span<const double> x, double z, int order) {
  if (x.size() != 5) throw GridTooCoarse("stencil needs 5 nodes");
  if (order < 0 || order > 4) throw DomainError("derivative order must be in [0, 4]");
  // Fornberg's recursion; c[j][k] is the weight of node j for derivative k at z.
  double c[5][5] = {};
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int k = 1; k < 5; ++k) {
    const int mn = std::min(k, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[static_cast<std::size_t>(k)] - z;
    for (int j = 0; j < k; ++j) {
      const double c3 = x[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == k - 1) {
        for (int m = mn; m >= 1; --m) c[k][m] = c1 * (m * c[k - 1][m - 1] - c5 * c[k - 1][m]) / c2;
        c[k][0] = -c1 * c5 * c[k - 1][0] / c2;
      }
      for (int m = mn; m >= 1; --m) c[j][m] = (c4 * c[j][m] - m * c[j][m - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::array<double, 5> w{};
  for (int j = 0; j < 5; ++j) w[static_cast<std::size_t>(j)] = c[j][order];
  return w;
}

std::size_t stencil_start(const std::vector<double>& x, double z) {
  if (x.size() < 5) throw GridTooCoarse("finite differences need at least 5 nodes");
  const auto it = std::lower_bound(x.begin(), x.end(), z);
  const auto i = static_cast<std::size_t>(it - x.begin());
  return std::min(x.size() - 5, i >= 2 ? i - 2 : 0);
}

Eigen::MatrixXd fd_matrix(const std::vector<double>& x, int order) {
  const std::size_t n = x.size();
  if (n < 5) throw GridTooCoarse("finite differences need at least 5 nodes");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = std::min(n - 5, i >= 2 ? i - 2 : 0);
    auto w = fd_weights(std::span<const double>(x.data() + s, 5), x[i], order);
    for (std::size_t j = 0; j < 5; ++j) D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s + j)) = w[j];
  }
  return D;
}

namespace {

RealBinding merged_params(const WaveField& psi, const RealBinding& params) {
  RealBinding b = psi.closed ? psi.closed->params : RealBinding{};
  for (const auto& [k, v] : params) b[k] = v;
  return b;
}

Eigen::MatrixXcd pointwise(const CExpr& c, const wavefield::Grid2D& g, const RealBinding& params) {
  CompiledCExpr f(c, params);
  const auto nt = static_cast<Eigen::Index>(g.tau.size()), nq = static_cast<Eigen::Index>(g.q.size());
  Eigen::MatrixXcd out(nt, nq);
  parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < nq; ++j) {
      out(static_cast<Eigen::Index>(i), j) = f(g.tau.nodes[i], g.q.nodes[static_cast<std::size_t>(j)]);
    }
  });
  return out;
}

}  // namespace

Eigen::MatrixXcd apply(const DifferentialOperator& op, const WaveField& psi, const RealBinding& params) {
  if (!psi.grid) throw GridMismatch("field without grid");
  if (psi.grid->tau.size() < 5 || psi.grid->q.size() < 5) throw GridTooCoarse("need at least 5 nodes per axis");
  if (!psi.closed) return apply_fd(op, psi, params);
  const RealBinding b = merged_params(psi, params);
  CExpr R = log_derivative_action(op, psi.closed->log_modulus, psi.closed->phase);
  return pointwise(R, *psi.grid, b).cwiseProduct(psi.values);
}

Eigen::MatrixXcd apply_fd(const DifferentialOperator& op, const WaveField& psi, const RealBinding& params) {
  if (!psi.grid) throw GridMismatch("field without grid");
  const auto& g = *psi.grid;
  if (g.tau.size() < 5 || g.q.size() < 5) throw GridTooCoarse("need at least 5 nodes per axis");
  const RealBinding b = merged_params(psi, params);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(psi.values.rows(), psi.values.cols());
  std::map<int, Eigen::MatrixXd> Dt, Dq;
  for (const auto& t : op.terms()) {
    if (!Dt.count(t.dtau)) Dt[t.dtau] = fd_matrix(g.tau.nodes, t.dtau);
    if (!Dq.count(t.dq)) Dq[t.dq] = fd_matrix(g.q.nodes, t.dq);
    Eigen::MatrixXcd deriv = psi.values;
    if (t.dq > 0) deriv = deriv * Dq[t.dq].transpose().cast<Complex>();
    if (t.dtau > 0) deriv = Dt[t.dtau].cast<Complex>() * deriv;
    out += pointwise(t.coeff, g, b).cwiseProduct(deriv);
  }
  return out;
}

double l2_norm(const Eigen::MatrixXcd& f, const wavefield::Grid2D& g) {
  double s = 0;
  for (std::size_t i = 0; i < g.tau.size(); ++i) {
    for (std::size_t j = 0; j < g.q.size(); ++j) {
      s += g.tau.weights[i] * g.q.weights[j] *
           std::norm(f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return std::sqrt(s);
}

std::vector<WaveField> gaussian_probes(std::shared_ptr<const wavefield::Grid2D> grid, std::size_t count,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto box = grid->box();
  const double Lt = box.tau_max - box.tau_min, Lq = box.q_max - box.q_min;
  std::vector<WaveField> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double tc = box.tau_min + Lt * (0.4 + 0.2 * u(rng));
    const double qc = box.q_min + Lq * (0.4 + 0.2 * u(rng));
    const double dt = std::min(tc - box.tau_min, box.tau_max - tc);
    const double dq = std::min(qc - box.q_min, box.q_max - qc);
    const double st = dt / 8.0 * (0.6 + 0.4 * u(rng));
    const double sq = dq / 8.0 * (0.6 + 0.4 * u(rng));
    const double kt = -3.0 + 6.0 * u(rng), kq = -3.0 + 6.0 * u(rng);
    auto C = [](double v) { return Expr::constant(v); };
    Expr t = sym("tau"), q = sym("q");
    Expr M = C(-1.0 / (2 * st * st)) * symcore::pow(t - C(tc), 2) + C(-1.0 / (2 * sq * sq)) * symcore::pow(q - C(qc), 2);
    Expr ph = C(kt) * t + C(kq) * q;
    out.push_back(WaveField::from_closed_form(grid, {M, ph, {1.0, 0.0}, {}}));
  }
  return out;
}

double commutator_defect(const DifferentialOperator& a, const DifferentialOperator& b,
                         const DifferentialOperator& expected, const std::vector<WaveField>& probes,
                         const RealBinding& params) {
  DifferentialOperator diff = commutator(a, b) - expected;
  double worst = 0;
  if (diff.empty()) return 0.0;
  for (const auto& pr : probes) worst = std::max(worst, l2_norm(apply(diff, pr, params), *pr.grid));
  return worst;
}

}  // namespace thermoquant::quantize
