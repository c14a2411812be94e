#include "thermoquant/constraints/constraints.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "thermoquant/errors.hpp"

namespace thermoquant::constraints {

using namespace symcore;

namespace {

bool is_phase_symbol(std::string_view s, const std::vector<CanonicalPair>& pairs) {
  return std::any_of(pairs.begin(), pairs.end(), [&](const CanonicalPair& p) {
    return p.coordinate == s || p.momentum == s;
  });
}

std::vector<std::string> momenta_of(const std::vector<CanonicalPair>& pairs) {
  std::vector<std::string> m;
  for (const auto& p : pairs) m.push_back(p.momentum);
  return m;
}

// Nonzero numeric coefficient c of m when e is linear in m, else nullopt.
std::optional<Number> linear_coefficient(const Expr& e, const std::string& m) {
  std::map<Monomial, Expr> poly;
  try {
    std::vector<std::string> v{m};
    poly = collect(e, v);
  } catch (const NonPolynomial&) {
    return std::nullopt;
  }
  std::optional<Number> c;
  for (const auto& [mono, coeff] : poly) {
    if (mono[0] > 1) return std::nullopt;
    if (mono[0] == 1) {
      if (!coeff.is_constant() || coeff.is_zero()) return std::nullopt;
      c = coeff.value();
    }
  }
  return c;
}

}  // namespace

std::vector<std::string> normal_form_momenta(const Expr& e,
                                             const std::vector<CanonicalPair>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    if (linear_coefficient(e, p.momentum)) out.push_back(p.momentum);
  }
  return out;
}

Constraint Constraint::make(std::string name, Expr expr, const std::vector<CanonicalPair>& pairs) {
  auto syms = free_symbols(expr);
  if (std::none_of(syms.begin(), syms.end(),
                   [&](const std::string& s) { return is_phase_symbol(s, pairs); })) {
    throw DomainError("constraint '" + name + "' has no phase-space symbol");
  }
  Constraint c;
  c.name = std::move(name);
  c.expr = simplify(expr);
  auto cand = normal_form_momenta(c.expr, pairs);
  if (!cand.empty()) {
    c.normal_form = true;
    c.leading_momentum = cand.front();
    Number coeff = *linear_coefficient(c.expr, cand.front());
    Expr inv = coeff.is_exact() ? Expr(coeff.rational().reciprocal())
                                : Expr::constant(1.0 / coeff.to_double());
    c.h = simplify(c.expr * inv - sym(cand.front()));
  }
  return c;
}

const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::first:
      return "first";
    case PairClass::second:
      return "second";
    case PairClass::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

SurfaceRestriction restrict_to_surface(const Expr& e, const std::vector<Constraint>& cs) {
  // Deterministic, order-independent assignment of leading momenta: constraints
  // with fewer candidates first, ties broken by printed form.
  std::vector<std::string> all_momenta;
  std::vector<std::pair<std::vector<std::string>, std::size_t>> cand;
  std::vector<CanonicalPair> pairs = standard_pairs();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cand.emplace_back(normal_form_momenta(cs[i].expr, pairs), i);
  }
  std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return to_string(cs[a.second].expr) < to_string(cs[b.second].expr);
  });
  std::map<std::string, Expr, std::less<>> rep;
  std::vector<std::size_t> leftover;
  for (const auto& [moms, idx] : cand) {
    bool done = false;
    for (const auto& m : moms) {
      if (rep.count(m)) continue;
      Number coeff = *linear_coefficient(cs[idx].expr, m);
      Expr inv = coeff.is_exact() ? Expr(coeff.rational().reciprocal())
                                  : Expr::constant(1.0 / coeff.to_double());
      rep.emplace(m, simplify(sym(m) - cs[idx].expr * inv));
      done = true;
      break;
    }
    if (!done) leftover.push_back(idx);
  }
  auto apply = [&](Expr x) {
    for (std::size_t k = 0; k <= rep.size(); ++k) {
      bool touched = false;
      for (const auto& [m, r] : rep) {
        if (depends_on(x, m)) touched = true;
      }
      if (!touched) break;
      x = simplify(substitute(x, rep));
    }
    return x;
  };
  SurfaceRestriction out;
  out.restricted = apply(e);
  for (auto idx : leftover) out.residual_constraints.push_back(apply(cs[idx].expr));
  return out;
}

namespace {

std::pair<double, double> range_for(const std::string& s, const ClassifyOptions& opt,
                                    const std::vector<std::string>& momenta) {
  if (auto it = opt.ranges.find(s); it != opt.ranges.end()) return it->second;
  if (s == "tau") return {0.2, 3.0};
  if (s == "q") return {0.5, 2.0};
  if (std::find(momenta.begin(), momenta.end(), s) != momenta.end()) return {-2.0, 2.0};
  return {0.3, 1.7};
}

enum class SampleVerdict { all_zero, all_nonzero, mixed, none };

// Samples `target` on the surface defined by `equations` = 0 (solved for the
// momenta they contain by Newton iteration from random starts).
SampleVerdict sample_on_surface(const Expr& target, const std::vector<Expr>& equations,
                                const ClassifyOptions& opt) {
  auto momenta = momenta_of(standard_pairs());
  std::set<std::string, std::less<>> syms = free_symbols(target);
  for (const auto& eq : equations) {
    auto s = free_symbols(eq);
    syms.insert(s.begin(), s.end());
  }
  std::vector<std::string> unknowns;
  for (const auto& m : momenta) {
    bool in_eq = std::any_of(equations.begin(), equations.end(),
                             [&](const Expr& eq) { return depends_on(eq, m); });
    if (in_eq) unknowns.push_back(m);
  }
  // Extra unknowns beyond the number of equations are sampled freely.
  std::vector<std::string> solved(unknowns.begin(),
                                  unknowns.begin() + std::min(unknowns.size(), equations.size()));
  if (solved.size() < equations.size()) throw NotSolvableOnShell("overdetermined surface");

  std::vector<std::vector<Expr>> jac(equations.size());
  for (std::size_t i = 0; i < equations.size(); ++i) {
    for (const auto& u : solved) jac[i].push_back(simplify(differentiate(equations[i], u)));
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int zero = 0, nonzero = 0;
  for (int attempt = 0; attempt < 20 * opt.samples && zero + nonzero < opt.samples; ++attempt) {
    RealBinding b;
    for (const auto& s : syms) {
      if (auto p = opt.parameters.find(s); p != opt.parameters.end()) {
        b[s] = p->second;
        continue;
      }
      auto [lo, hi] = range_for(s, opt, momenta);
      b[s] = lo + (hi - lo) * unit(rng);
    }
    try {
      bool converged = solved.empty();
      for (int it = 0; it < 60 && !converged; ++it) {
        Eigen::VectorXd f(equations.size());
        Eigen::MatrixXd J(equations.size(), solved.size());
        for (std::size_t i = 0; i < equations.size(); ++i) {
          f(i) = evaluate_real(equations[i], b);
          for (std::size_t j = 0; j < solved.size(); ++j) J(i, j) = evaluate_real(jac[i][j], b);
        }
        if (f.norm() < 1e-14) {
          converged = true;
          break;
        }
        Eigen::VectorXd dx = J.fullPivLu().solve(-f);
        if (!dx.allFinite()) break;
        for (std::size_t j = 0; j < solved.size(); ++j) b[solved[j]] += dx(j);
        if (dx.norm() < 1e-15) converged = true;
      }
      if (!converged) continue;
      for (const auto& eq : equations) {
        if (std::abs(evaluate_real(eq, b)) > 1e-10) converged = false;
      }
      if (!converged) continue;
      double v = evaluate_real(target, b);
      if (std::abs(v) < opt.tolerance) {
        ++zero;
      } else {
        ++nonzero;
      }
    } catch (const DomainError&) {
      continue;
    }
  }
  if (zero + nonzero == 0) return SampleVerdict::none;
  if (nonzero == 0) return SampleVerdict::all_zero;
  if (zero == 0) return SampleVerdict::all_nonzero;
  return SampleVerdict::mixed;
}

std::optional<StructureFunction> proportional_to(const Expr& bracket,
                                                 const std::vector<Constraint>& cs,
                                                 const std::vector<CanonicalPair>& pairs,
                                                 const ClassifyOptions& opt) {
  auto mv = momenta_of(pairs);
  std::map<Monomial, Expr> bp;
  try {
    bp = collect(bracket, mv);
  } catch (const NonPolynomial&) {
    return std::nullopt;
  }
  for (std::size_t k = 0; k < cs.size(); ++k) {
    std::map<Monomial, Expr> cp;
    try {
      cp = collect(cs[k].expr, mv);
    } catch (const NonPolynomial&) {
      continue;
    }
    if (cp.empty()) continue;
    const auto& [lead, a] = *cp.rbegin();
    auto it = bp.find(lead);
    if (it == bp.end()) continue;
    Expr c = simplify(it->second / a);
    ZeroTestOptions zo;
    zo.seed = opt.seed;
    zo.tolerance = opt.tolerance;
    zo.fixed = opt.parameters;
    if (zero_test(bracket - c * cs[k].expr, zo).status != ZeroStatus::nonzero) {
      return StructureFunction{c, static_cast<int>(k)};
    }
  }
  return std::nullopt;
}

}  // namespace

ClassificationResult classify(const std::vector<Constraint>& cs,
                              const std::vector<CanonicalPair>& pairs,
                              const ClassifyOptions& opt) {
  if (cs.empty()) throw DomainError("classify needs at least one constraint");
  const std::size_t n = cs.size();
  ClassificationResult r;
  for (const auto& c : cs) r.names.push_back(c.name);
  r.brackets.assign(n, std::vector<Expr>(n));
  r.pair_class.assign(n, std::vector<PairClass>(n, PairClass::first));
  r.structure.assign(n, std::vector<std::optional<StructureFunction>>(n));
  r.method.assign(n, std::vector<std::string>(n, "exact_zero"));
  bool any_normal = std::any_of(cs.begin(), cs.end(), [](const Constraint& c) { return c.normal_form; });

  for (std::size_t i = 0; i < n; ++i) {
    r.structure[i][i] = StructureFunction{Expr(0), -1};
    for (std::size_t j = i + 1; j < n; ++j) {
      Expr b = poisson_bracket(cs[i].expr, cs[j].expr, pairs);
      r.brackets[i][j] = b;
      r.brackets[j][i] = simplify(-b);
      PairClass cls = PairClass::undetermined;
      std::optional<StructureFunction> sf;
      std::string how = "inconclusive";
      if (b.is_zero()) {
        cls = PairClass::first;
        sf = StructureFunction{Expr(0), -1};
        how = "exact_zero";
      } else if (auto p = proportional_to(b, cs, pairs, opt)) {
        cls = PairClass::first;
        sf = p;
        how = "proportional";
      } else {
        auto restricted = restrict_to_surface(b, cs);
        if (restricted.restricted.is_zero()) {
          cls = PairClass::first;
          how = "on_shell_symbolic";
        } else {
          auto s = free_symbols(restricted.restricted);
          bool has_momenta = std::any_of(pairs.begin(), pairs.end(), [&](const CanonicalPair& pr) {
            return s.count(pr.momentum) > 0;
          });
          if (!any_normal && has_momenta) {
            throw NotSolvableOnShell("no normal-form constraint to parametrize the surface");
          }
          switch (sample_on_surface(restricted.restricted, restricted.residual_constraints, opt)) {
            case SampleVerdict::all_zero:
              cls = PairClass::first;
              how = "on_shell_numeric";
              break;
            case SampleVerdict::all_nonzero:
              cls = PairClass::second;
              how = "on_shell_nonzero";
              break;
            default:
              break;
          }
        }
      }
      r.pair_class[i][j] = r.pair_class[j][i] = cls;
      r.method[i][j] = r.method[j][i] = how;
      r.structure[i][j] = sf;
      if (sf) r.structure[j][i] = StructureFunction{simplify(-sf->factor), sf->constraint};
    }
  }
  return r;
}

PairClass ClassificationResult::constraint_class(std::size_t i) const {
  bool undetermined = false;
  for (std::size_t j = 0; j < pair_class.size(); ++j) {
    if (pair_class[i][j] == PairClass::second) return PairClass::second;
    if (pair_class[i][j] == PairClass::undetermined) undetermined = true;
  }
  return undetermined ? PairClass::undetermined : PairClass::first;
}

bool ClassificationResult::all_first() const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (constraint_class(i) != PairClass::first) return false;
  }
  return true;
}

bool ClassificationResult::any_undetermined() const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (constraint_class(i) == PairClass::undetermined) return true;
  }
  return false;
}

std::vector<std::size_t> ClassificationResult::second_class_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (constraint_class(i) == PairClass::second) out.push_back(i);
  }
  return out;
}

nlohmann::json ClassificationResult::to_json() const {
  nlohmann::json j;
  j["constraints"] = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    j["constraints"].push_back({{"name", names[i]}, {"class", to_string(constraint_class(i))}});
  }
  j["pairs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t k = i + 1; k < names.size(); ++k) {
      nlohmann::json p{{"left", names[i]},
                       {"right", names[k]},
                       {"bracket", symcore::to_string(brackets[i][k])},
                       {"class", to_string(pair_class[i][k])},
                       {"method", method[i][k]}};
      if (structure[i][k]) {
        p["structure_function"] = symcore::to_string(structure[i][k]->factor);
        p["structure_constraint"] =
            structure[i][k]->constraint >= 0 ? nlohmann::json(names[structure[i][k]->constraint])
                                             : nlohmann::json(nullptr);
      } else {
        p["structure_function"] = nullptr;
      }
      j["pairs"].push_back(p);
    }
  }
  return j;
}

namespace {

Expr determinant(const std::vector<std::vector<Expr>>& m) {
  const std::size_t n = m.size();
  if (n == 0) return Expr(1);
  if (n == 1) return m[0][0];
  if (n == 2) return simplify(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
  std::vector<Expr> terms;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    std::vector<std::vector<Expr>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != c) row.push_back(m[r][k]);
      }
      minor.push_back(std::move(row));
    }
    Expr t = m[0][c] * determinant(minor);
    terms.push_back(c % 2 ? -t : t);
  }
  return simplify(make_sum(std::move(terms)));
}

Expr cofactor(const std::vector<std::vector<Expr>>& m, std::size_t r, std::size_t c) {
  std::vector<std::vector<Expr>> minor;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i == r) continue;
    std::vector<Expr> row;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (k != c) row.push_back(m[i][k]);
    }
    minor.push_back(std::move(row));
  }
  Expr d = determinant(minor);
  return (r + c) % 2 ? simplify(-d) : d;
}

}  // namespace

KMatrix k_matrix(const std::vector<Constraint>& cs, const std::vector<CanonicalPair>& pairs) {
  KMatrix k;
  const std::size_t n = cs.size();
  k.entries.assign(n, std::vector<Expr>(n));
  for (const auto& c : cs) k.names.push_back(c.name);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      k.entries[i][j] = poisson_bracket(cs[i].expr, cs[j].expr, pairs);
      k.entries[j][i] = simplify(-k.entries[i][j]);
    }
  }
  k.det = determinant(k.entries);
  return k;
}

KMatrix invert_k(const KMatrix& k, const ClassifyOptions& opt) {
  const std::size_t n = k.size();
  if (n % 2 == 1) throw SingularK("odd-dimensional second-class set (" + std::to_string(n) + ")");
  ZeroTestOptions zo;
  zo.seed = opt.seed;
  zo.fixed = opt.parameters;
  zo.ranges = opt.ranges;
  if (n > 0 && zero_test(k.det, zo).status != ZeroStatus::nonzero) {
    throw SingularK("determinant vanishes: " + symcore::to_string(k.det));
  }
  KMatrix inv;
  inv.names = k.names;
  inv.entries.assign(n, std::vector<Expr>(n));
  Expr det_inv = pow(k.det, Rational(-1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) inv.entries[i][j] = simplify(cofactor(k.entries, j, i) * det_inv);
  }
  inv.det = simplify(det_inv);
  return inv;
}

nlohmann::json KMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : entries) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& e : r) row.push_back(symcore::to_string(e));
    rows.push_back(row);
  }
  return {{"names", names}, {"entries", rows}, {"det", symcore::to_string(det)}};
}

DiracBracket::DiracBracket(std::vector<Constraint> second_class, std::vector<CanonicalPair> pairs,
                           const ClassifyOptions& opt)
    : cs_(std::move(second_class)), pairs_(std::move(pairs)) {
  k_ = k_matrix(cs_, pairs_);
  kinv_ = invert_k(k_, opt);
}

Expr DiracBracket::operator()(const Expr& f, const Expr& g) const {
  std::vector<Expr> terms{poisson_bracket(f, g, pairs_)};
  std::vector<Expr> fa, bg;
  for (const auto& c : cs_) {
    fa.push_back(poisson_bracket(f, c.expr, pairs_));
    bg.push_back(poisson_bracket(c.expr, g, pairs_));
  }
  for (std::size_t a = 0; a < cs_.size(); ++a) {
    if (fa[a].is_zero()) continue;
    for (std::size_t b = 0; b < cs_.size(); ++b) {
      if (bg[b].is_zero() || kinv_.entries[a][b].is_zero()) continue;
      terms.push_back(-(fa[a] * kinv_.entries[a][b] * bg[b]));
    }
  }
  return simplify(make_sum(std::move(terms)));
}

Expr dirac_bracket(const Expr& f, const Expr& g, const std::vector<Constraint>& second_class,
                   const std::vector<CanonicalPair>& pairs) {
  return DiracBracket(second_class, pairs)(f, g);
}

ExtendedHamiltonian ExtendedHamiltonian::from(const std::vector<Constraint>& cs) {
  ExtendedHamiltonian h;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    h.multipliers.push_back("lambda" + std::to_string(i + 1));
    h.terms.push_back(cs[i]);
  }
  return h;
}

Expr ExtendedHamiltonian::expression() const {
  std::vector<Expr> t;
  for (std::size_t i = 0; i < terms.size(); ++i) t.push_back(sym(multipliers[i]) * terms[i].expr);
  return simplify(make_sum(std::move(t)));
}

std::optional<Expr> ExtendedHamiltonian::kappa() const {
  if (multipliers.size() != 2) return std::nullopt;
  return sym(multipliers[0]) / sym(multipliers[1]);
}

Expr observable_flow(const Expr& o, const Constraint& generator) {
  if (!generator.normal_form || generator.leading_momentum != std::string("pi")) {
    throw NotNormalForm("generator '" + generator.name + "' is not of the form pi + h");
  }
  const Expr& h = generator.h;
  std::vector<CanonicalPair> qp{{"q", "p"}};
  return simplify(differentiate(o, "tau") + poisson_bracket(o, h, qp) -
                  differentiate(h, "tau") * differentiate(o, "pi"));
}

Expr observable_flow(const Expr& o, const ExtendedHamiltonian& h,
                     const std::vector<CanonicalPair>& pairs) {
  return poisson_bracket(o, h.expression(), pairs);
}

}  // namespace thermoquant::constraints
