#include "thermoquant/quantize/reconstruct.hpp"

#include <cmath>

#include "thermoquant/errors.hpp"
#include "thermoquant/parallel.hpp"
#include "thermoquant/symcore/bracket.hpp"
#include "thermoquant/symcore/parse.hpp"

namespace thermoquant::quantize {

using symcore::simplify;
using symcore::sym;

ConstraintPair select_constraints(const models::ThermoModel& m) {
  const constraints::Constraint* phi1 = nullptr;
  for (const auto& c : m.constraints) {
    if (c.normal_form && c.leading_momentum == "pi") {
      phi1 = &c;
      break;
    }
  }
  if (!phi1) throw NotNormalForm(m.name + ": no constraint of the form pi + h(tau, q, p)");
  const constraints::Constraint* phi2 = nullptr;
  for (const auto& c : m.constraints) {
    if (&c != phi1) phi2 = &c;
  }
  if (!phi2) throw NotNormalForm(m.name + ": a second constraint is required");
  if (symcore::depends_on(phi2->expr, "pi")) throw NotNormalForm(m.name + ": " + phi2->name + " depends on pi");
  return {*phi1, *phi2};
}

namespace {

symcore::ZeroTestOptions box_zero_options(const models::ThermoModel& m) {
  symcore::ZeroTestOptions zo;
  zo.fixed = m.parameters;
  zo.ranges["tau"] = {m.domain.tau_min, m.domain.tau_max};
  zo.ranges["q"] = {m.domain.q_min, m.domain.q_max};
  return zo;
}

bool vanishes(const Expr& e, const models::ThermoModel& m) {
  return symcore::zero_test(e, box_zero_options(m)).status != symcore::ZeroStatus::nonzero;
}

/// a / b for complex symbolic values.
CExpr divide(const CExpr& a, const CExpr& b) {
  Expr den = b.re * b.re + b.im * b.im;
  return CExpr((a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den).simplified();
}

void require_terms(const DifferentialOperator& op, std::initializer_list<std::pair<int, int>> allowed, bool phi1,
                   Ordering ord) {
  for (const auto& t : op.terms()) {
    bool ok = false;
    for (auto [a, b] : allowed) ok = ok || (t.dtau == a && t.dq == b);
    if (ok) continue;
    if (phi1) {
      throw OrderingUnsupported(std::string("promoted phi1 is not first order under ordering ") +
                                models::to_string(ord));
    }
    throw NotNormalForm("promoted phi2 must be first order in d_q with no d_tau");
  }
}

}  // namespace

std::optional<Expr> derive_log_modulus(const models::ThermoModel& m, Ordering ord) {
  auto [c1, c2] = select_constraints(m);
  const Expr phase = m.internal_energy / sym("bbar");
  DifferentialOperator op1 = promote(c1, ord), op2 = promote(c2, ord);
  CExpr R2 = log_derivative_action(op2, Expr(0), phase);
  if (!vanishes(R2.re, m) || !vanishes(R2.im, m)) return std::nullopt;
  if (op1.max_dtau() != 1) return std::nullopt;
  for (const auto& t : op1.terms()) {
    if (t.dtau > 0 && !(t.dtau == 1 && t.dq == 0)) return std::nullopt;
  }
  CExpr R1 = log_derivative_action(op1, Expr(0), phase);
  // op1 (e^M psi0) = e^M (c_tau M' + R1) psi0 for M = M(tau)
  CExpr slope = divide(-R1, op1.coefficient(1, 0));
  if (!vanishes(slope.im, m)) return std::nullopt;
  if (!vanishes(symcore::differentiate(slope.re, "q"), m)) return std::nullopt;
  if (!vanishes(symcore::differentiate(slope.re, "tau"), m)) return std::nullopt;
  Expr c = simplify(slope.re);
  if (symcore::depends_on(c, "tau") || symcore::depends_on(c, "q")) {
    // constant numerically but not structurally: freeze at a box point
    RealBinding b = m.binding(m.domain.tau_min, m.domain.q_min);
    c = Expr::constant(symcore::evaluate_real(c, b));
  }
  return simplify(c * sym("tau"));
}

wavefield::ClosedForm analytic_wavefunction(const models::ThermoModel& m, Ordering ord) {
  std::optional<Expr> M;
  if (auto it = m.log_modulus.find(ord); it != m.log_modulus.end()) {
    M = it->second;
  } else {
    M = derive_log_modulus(m, ord);
  }
  if (!M) throw MissingField(m.name + ": no closed-form wave function for ordering " + models::to_string(ord));
  return {*M, simplify(m.internal_energy / sym("bbar")), {1.0, 0.0}, m.parameters};
}

RatioStats ratio_stats(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw GridMismatch("ratio of fields of different shape");
  Eigen::MatrixXcd r = a.cwiseQuotient(b);
  RatioStats s;
  s.mean = r.mean();
  const double scale = std::abs(s.mean);
  if (scale == 0) throw ZeroNorm("mean ratio is zero");
  s.relative_spread = (r.array() - s.mean).abs().maxCoeff() / scale;
  return s;
}

namespace {

/// Integrates y' = rate(x) y over the nodes with RK4, at most `hmax` per step.
template <class Rate>
std::vector<Complex> rk4_over_nodes(const std::vector<double>& x, double hmax, Rate&& rate) {
  std::vector<Complex> y(x.size());
  y[0] = 1.0;
  Complex cur = 1.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const double len = x[j + 1] - x[j];
    const int n = std::max(1, static_cast<int>(std::ceil(len / hmax - 1e-12)));
    const double h = len / n;
    double xx = x[j];
    for (int s = 0; s < n; ++s) {
      const Complex k1 = rate(xx) * cur;
      const Complex rm = rate(xx + 0.5 * h);
      const Complex k2 = rm * (cur + 0.5 * h * k1);
      const Complex k3 = rm * (cur + 0.5 * h * k2);
      const Complex k4 = rate(xx + h) * (cur + h * k3);
      cur += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      xx = x[j] + (s + 1) * h;
    }
    y[j + 1] = cur;
  }
  return y;
}

}  // namespace

Reconstruction reconstruct_wavefunction(const models::ThermoModel& m, Ordering ord,
                                        std::shared_ptr<const wavefield::Grid2D> grid) {
  auto [c1, c2] = select_constraints(m);
  DifferentialOperator op1 = promote(c1, ord), op2 = promote(c2, ord);
  require_terms(op2, {{0, 1}, {0, 0}}, false, ord);
  require_terms(op1, {{1, 0}, {0, 1}, {0, 0}}, true, ord);
  if (op2.coefficient(0, 1).is_zero()) throw NotNormalForm("phi2 has no d_q term");
  if (op1.coefficient(1, 0).is_zero()) throw NotNormalForm("phi1 has no d_tau term");

  const RealBinding& P = m.parameters;
  CompiledCExpr a1(op2.coefficient(0, 1), P), a0(op2.coefficient(0, 0), P);
  CompiledCExpr bt(op1.coefficient(1, 0), P), bq(op1.coefficient(0, 1), P), b0(op1.coefficient(0, 0), P);
  auto row_rate = [&](double tau, double q) { return -a0(tau, q) / a1(tau, q); };

  const auto& g = *grid;
  const std::size_t nt = g.tau.size(), nq = g.q.size();
  const double hq = (g.q.hi - g.q.lo) / 2000.0, ht = (g.tau.hi - g.tau.lo) / 2000.0;
  // The row seed sits at the first q node; integrate from q_min when it is not a node.
  std::vector<double> qn = g.q.nodes;
  const bool prepend = qn.front() > g.q.lo;
  if (prepend) qn.insert(qn.begin(), g.q.lo);

  Eigen::MatrixXcd R(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nq));
  parallel_for(0, nt, [&](std::size_t i) {
    const double tau = g.tau.nodes[i];
    auto row = rk4_over_nodes(qn, hq, [&](double q) { return row_rate(tau, q); });
    for (std::size_t j = 0; j < nq; ++j) R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j + prepend];
  });

  // psi = g(tau) R(tau, q) with R(tau, q_min) = 1: phi1 at q_min gives
  // c_tau g' + (c_q r + c_0) g = 0.
  const double q0 = g.q.lo;
  std::vector<double> tn = g.tau.nodes;
  const bool tprepend = tn.front() > g.tau.lo;
  if (tprepend) tn.insert(tn.begin(), g.tau.lo);
  auto gvals = rk4_over_nodes(tn, ht, [&](double tau) {
    return -(bq(tau, q0) * row_rate(tau, q0) + b0(tau, q0)) / bt(tau, q0);
  });
  for (std::size_t i = 0; i < nt; ++i) R.row(static_cast<Eigen::Index>(i)) *= gvals[i + tprepend];

  Reconstruction out{WaveField(grid, std::move(R)), std::nullopt};
  try {
    wavefield::ClosedForm cf = analytic_wavefunction(m, ord);
    WaveField analytic = WaveField::from_closed_form(grid, cf);
    out.ratio = ratio_stats(out.field.values, analytic.values);
    cf.scale = out.ratio->mean;
    out.field.closed = cf;
  } catch (const MissingField&) {
  }
  return out;
}

nlohmann::json ResidualReport::to_json() const {
  return {{"ordering", models::to_string(ordering)},
          {"grid", {{"n_tau", n_tau}, {"n_q", n_q}}},
          {"phi1_analytic", phi1_analytic},
          {"phi2_analytic", phi2_analytic},
          {"phi1_fd", phi1_fd},
          {"phi2_fd", phi2_fd}};
}

ResidualReport residual_norms(const models::ThermoModel& m, Ordering ord, const WaveField& psi) {
  auto [c1, c2] = select_constraints(m);
  DifferentialOperator op1 = promote(c1, ord), op2 = promote(c2, ord);
  const double n = l2_norm(psi.values, *psi.grid);
  if (!(n > 0)) throw ZeroNorm("residual of a zero field");
  WaveField u = psi.scaled(1.0 / n);
  ResidualReport r;
  r.ordering = ord;
  r.n_tau = psi.grid->tau.size();
  r.n_q = psi.grid->q.size();
  r.phi1_analytic = l2_norm(apply(op1, u, m.parameters), *u.grid);
  r.phi2_analytic = l2_norm(apply(op2, u, m.parameters), *u.grid);
  r.phi1_fd = l2_norm(apply_fd(op1, u, m.parameters), *u.grid);
  r.phi2_fd = l2_norm(apply_fd(op2, u, m.parameters), *u.grid);
  return r;
}

Expr SecondClassRealization::q_of_pi() const {
  return symcore::parse("(sigma_q*pi^4/(3*xi) + C)^(-3/4)");
}

Expr SecondClassRealization::p_of_pi() const { return symcore::parse("-sigma_p*pi^4/3"); }

bool RealizationReport::all_pass() const {
  if (!domain_ok) return false;
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

nlohmann::json RealizationReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : checks) {
    cs.push_back({{"commutator", c.name},
                  {"realized_over_i_bbar", to_string(c.realized)},
                  {"target_over_i_bbar", to_string(c.target)},
                  {"residual", to_string(c.residual)},
                  {"pass", c.pass}});
  }
  return {{"checks", cs},
          {"domain_ok", domain_ok},
          {"printed_bracket_tau_p", to_string(printed_bracket)},
          {"engine_bracket_tau_p", to_string(engine_bracket)},
          {"sign_discrepancy", sign_discrepancy},
          {"engine_agrees_with_commutator", engine_agrees}};
}

RealizationReport verify_second_class_realization(const SecondClassRealization& r) {
  using symcore::parse;
  const std::map<std::string, Expr, std::less<>> values = {{"sigma_q", Expr::constant(r.sigma_q)},
                                                           {"sigma_p", Expr::constant(r.sigma_p)},
                                                           {"xi", Expr::constant(r.xi)},
                                                           {"C", Expr::constant(r.C)}};
  RealizationReport rep;
  // [tau, f(pi)] = i bbar f'(pi); everything below is divided by i bbar.
  auto check = [&](std::string name, const Expr& f, const Expr& target) {
    CommutatorCheck c;
    c.name = std::move(name);
    c.realized = simplify(symcore::differentiate(f, "pi"));
    c.target = simplify(target);
    c.residual = simplify(c.realized - c.target);
    c.pass = c.residual.is_zero() || simplify(symcore::substitute(c.residual, values)).is_zero();
    rep.checks.push_back(std::move(c));
  };
  check("[tau,pi]", sym("pi"), Expr(1));
  check("[tau,q]", r.q_of_pi(), parse("-(sigma_q/xi)*pi^3*(sigma_q*pi^4/(3*xi) + C)^(-7/4)"));
  check("[tau,p]", r.p_of_pi(), parse("-(4/3)*sigma_p*pi^3"));

  rep.domain_ok = r.pi_min < r.pi_max;
  for (int k = 0; k <= 200 && rep.domain_ok; ++k) {
    const double pv = r.pi_min + (r.pi_max - r.pi_min) * k / 200.0;
    const double S = r.sigma_q * std::pow(pv, 4) / (3 * r.xi) + r.C;
    rep.domain_ok = S > 0 && std::isfinite(S);
  }

  rep.printed_bracket = parse("(4/3)*sigma_p*pi^3");
  const Expr realized_p = rep.checks.back().realized;
  rep.sign_discrepancy = !simplify(rep.printed_bracket - realized_p).is_zero();

  models::ThermoModel iso = models::builtin("photon_isentropic");
  constraints::ClassifyOptions opt;
  opt.parameters = iso.parameters;
  constraints::DiracBracket db(iso.constraints, symcore::standard_pairs(), opt);
  rep.engine_bracket = simplify(symcore::substitute(db(sym("tau"), sym("p")), "sigma", sym("sigma_p")));
  rep.engine_agrees = simplify(rep.engine_bracket - realized_p).is_zero();
  return rep;
}

}  // namespace thermoquant::quantize
