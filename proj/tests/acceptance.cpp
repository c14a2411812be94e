#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thermoquant/cli/cli.hpp"
#include "thermoquant/constraints/constraints.hpp"
#include "thermoquant/evolve/evolve.hpp"
#include "thermoquant/pseudoherm/pseudoherm.hpp"
#include "thermoquant/quantize/reconstruct.hpp"
#include "thermoquant/symcore/bracket.hpp"
#include "thermoquant/symcore/evaluate.hpp"
#include "thermoquant/symcore/parse.hpp"
#include "thermoquant/wavefield/observables.hpp"

#ifndef THERMOQUANT_CLI_PATH
#define THERMOQUANT_CLI_PATH "thermoquant"
#endif

using namespace thermoquant;
using models::Ordering;
using quantize::DifferentialOperator;
using symcore::Complex;
using symcore::Expr;
using symcore::parse;
using wavefield::MetricWeight;

namespace {

class Criterion {
public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void item(const std::string& name, bool ok, const std::string& detail) {
    ok_ = ok_ && ok;
    std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << name << ": " << detail << "\n";
  }
  void note(const std::string& name, const std::string& detail) { std::cout << "  [info] " << name << ": " << detail << "\n"; }

  bool finish() const {
    std::cout << "AC" << id_ << " " << (ok_ ? "PASS" : "FAIL") << " " << title_ << "\n";
    return ok_;
  }

private:
  int id_;
  std::string title_;
  bool ok_ = true;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string bound(double v, const char* rel, double tol) { return num(v) + " " + rel + " " + num(tol); }

bool is_exact_zero(const Expr& e) { return symcore::simplify(symcore::expand(e)).is_zero(); }

constraints::ClassifyOptions classify_options(const models::ThermoModel& m) {
  constraints::ClassifyOptions o;
  o.parameters = m.parameters;
  return o;
}

DifferentialOperator generator(const models::ThermoModel& m, Ordering o) {
  return pseudoherm::generator_from_constraint(quantize::promote(quantize::select_constraints(m).phi1, o));
}

bool classification(Criterion& c) {
  const auto pairs = symcore::standard_pairs();
  for (const char* name : {"ideal_gas", "van_der_waals", "photon_first_class"}) {
    auto m = models::builtin(name);
    cli::RunConfig cfg;
    cfg.model_source = name;
    auto rep = cli::cmd_analyze(cfg);
    auto r = constraints::classify(m.constraints, pairs, classify_options(m));
    bool first = r.all_first() && rep.exit_code() == 0;
    for (const auto& k : rep.sections["classification"]["constraints"]) first = first && k["class"] == "first";
    c.item(std::string(name) + " first-class", first, first ? "both constraints first-class" : "misclassified");
    const auto& sf = r.structure[0][1];
    if (std::string(name) == "photon_first_class") {
      bool zero = r.brackets[0][1].is_zero() && sf && sf->constraint < 0;
      c.item(std::string(name) + " structure function 0", zero, "{phi1,phi2} = " + symcore::to_string(r.brackets[0][1]));
    } else {
      bool f_ok = sf && sf->factor == parse("1/kB") && sf->constraint == 1;
      bool residual = sf && is_exact_zero(r.brackets[0][1] - sf->factor * m.constraints[1].expr);
      c.item(std::string(name) + " structure function 1/kB", f_ok && residual,
             sf ? "f = " + symcore::to_string(sf->factor) + ", residual " + (residual ? "exactly 0" : "nonzero")
                : "no structure function");
    }
  }
  auto iso = models::builtin("photon_isentropic");
  auto r = constraints::classify(iso.constraints, pairs, classify_options(iso));
  bool second = r.constraint_class(0) == constraints::PairClass::second &&
                r.constraint_class(1) == constraints::PairClass::second;
  c.item("photon_isentropic second-class", second, second ? "both constraints second-class" : "misclassified");
  Expr expected = parse("(4/3)*xi*q^(-7/3)");
  bool bracket = is_exact_zero(r.brackets[0][1] - expected);
  c.item("photon_isentropic {phi1,phi2}", bracket,
         symcore::to_string(r.brackets[0][1]) + (bracket ? ", residual exactly 0" : ", residual nonzero"));
  cli::RunConfig cfg;
  cfg.model_source = "photon_isentropic";
  auto rep = cli::cmd_analyze(cfg);
  bool tables = rep.sections.contains("k_matrix") && rep.sections.contains("k_inverse") &&
                rep.sections.contains("dirac_brackets") && rep.exit_code() == 0;
  c.item("analyze photon_isentropic tables", tables, tables ? "K, K^-1 and Dirac table emitted" : "tables missing");
  return c.finish();
}

Expr random_function(std::mt19937_64& rng) {
  static const char* vars[] = {"tau", "pi", "q", "p"};
  std::uniform_int_distribution<int> exponent(0, 3), coeff(-5, 5), nterms(1, 4);
  Expr f;
  int n = nterms(rng);
  for (int t = 0; t < n; ++t) {
    int k = coeff(rng);
    Expr term(k == 0 ? 1 : k);
    for (const char* v : vars) {
      int e = exponent(rng);
      if (e > 0) term = term * symcore::pow(symcore::sym(v), symcore::Rational(e));
    }
    f = f + term;
  }
  return f;
}

bool dirac_suite(Criterion& c) {
  auto iso = models::builtin("photon_isentropic");
  auto opt = classify_options(iso);
  constraints::DiracBracket db(iso.constraints, symcore::standard_pairs(), opt);
  const auto tau = symcore::sym("tau");
  struct Target {
    const char* name;
    Expr other;
    Expr expected;
  };
  const Target targets[] = {{"{tau,pi}_D = 1", symcore::sym("pi"), Expr(1)},
                            {"{tau,q}_D = -(sigma/xi) pi^3 q^(7/3)", symcore::sym("q"),
                             parse("-(sigma/xi)*pi^3*q^(7/3)")},
                            {"{tau,p}_D = (4/3) sigma pi^3", symcore::sym("p"), parse("(4/3)*sigma*pi^3")}};
  for (const auto& t : targets) {
    Expr got = symcore::simplify(db(tau, t.other));
    bool ok = is_exact_zero(got - t.expected);
    c.item(t.name, ok, "computed " + symcore::to_string(got));
  }
  std::mt19937_64 rng(0);
  symcore::ZeroTestOptions zo;
  zo.fixed = iso.parameters;
  int exact = 0, numeric = 0, failed = 0;
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    Expr f = random_function(rng);
    for (const auto& phi : iso.constraints) {
      auto z = symcore::zero_test(db(phi.expr, f), zo);
      worst = std::max(worst, z.max_abs);
      if (z.status == symcore::ZeroStatus::exact_zero) {
        ++exact;
      } else if (z.status == symcore::ZeroStatus::numeric_zero) {
        ++numeric;
      } else {
        ++failed;
      }
    }
  }
  c.item("{phi_a, f}_D = 0 for 20 random f", failed == 0,
         std::to_string(exact) + " exact, " + std::to_string(numeric) + " numeric (max " + num(worst) + " < 1e-10), " +
             std::to_string(failed) + " nonzero");
  return c.finish();
}

bool residuals(Criterion& c) {
  for (const char* name : {"ideal_gas", "van_der_waals", "photon_first_class"}) {
    auto m = models::builtin(name);
    auto grid = wavefield::Grid2D::make(m.domain, 201, 201);
    for (auto o : models::kAllOrderings) {
      auto rec = quantize::reconstruct_wavefunction(m, o, grid);
      auto res = quantize::residual_norms(m, o, rec.field);
      std::string tag = std::string(name) + "/" + models::to_string(o);
      bool ok = res.phi1_analytic < 1e-8 && res.phi2_analytic < 1e-8;
      c.item(tag + " residuals", ok,
             "|phi1 psi| = " + num(res.phi1_analytic) + ", |phi2 psi| = " + num(res.phi2_analytic) + " (< 1e-8)");
      bool ratio = rec.ratio && rec.ratio->relative_spread < 1e-6;
      c.item(tag + " ratio spread", ratio, rec.ratio ? bound(rec.ratio->relative_spread, "<", 1e-6) : "no analytic form");
    }
  }
  return c.finish();
}

bool normalization(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  auto grid = wavefield::Grid2D::make(m.domain, 201, 201);
  auto cf = quantize::analytic_wavefunction(m, Ordering::symmetric);
  auto alpha = wavefield::normalize(wavefield::WaveField::from_closed_form(grid, cf), MetricWeight::standard()).second;
  double a2 = std::norm(alpha);
  const auto& b = m.domain;
  double kB = m.parameter("kB");
  double closed = 1.0 / ((b.q_max - b.q_min) * kB * (std::exp(-b.tau_min / kB) - std::exp(-b.tau_max / kB)));
  double rel = std::abs(a2 - closed) / closed;
  c.item("|alpha|^2 against closed form", rel < 1e-8,
         "quadrature " + num(a2) + ", closed " + num(closed) + ", relative " + bound(rel, "<", 1e-8));
  c.item("|alpha|^2 at defaults", std::abs(a2 - 0.86699) <= 1e-5, num(a2) + " = 0.86699 +- 1e-5");
  return c.finish();
}

bool temperature_shift(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  const auto& params = m.parameters;
  double bbar = m.parameter("bbar"), kB = m.parameter("kB");
  auto grid = wavefield::Grid2D::make(m.domain, 201, 201);
  auto st = MetricWeight::standard();
  auto psi = wavefield::normalize(quantize::reconstruct_wavefunction(m, Ordering::symmetric, grid).field, st).first;
  Complex pi = wavefield::expectation(DifferentialOperator::pi_hat(), psi, st, params);
  c.item("Im<pi>", std::abs(pi.imag() - bbar / (2 * kB)) <= 1e-9, num(pi.imag()) + " = bbar/(2kB) +- 1e-9");
  auto A = quantize::promote(parse("q*p/kB"), Ordering::symmetric);
  struct Case {
    const char* name;
    DifferentialOperator op;
    Complex expected;
  };
  const Case cases[] = {{"A = (qp+pq)/(2kB)", A, Complex(0, bbar / kB)},
                        {"pi", DifferentialOperator::pi_hat(), Complex(0, -bbar / kB)},
                        {"phi1", quantize::promote(m.constraints[0], Ordering::symmetric), Complex(0, 0)}};
  for (const auto& k : cases) {
    Complex d = wavefield::hermiticity_defect(k.op, psi, st, params);
    double err = std::abs(d - k.expected);
    c.item(std::string("defect ") + k.name, err <= 1e-9,
           "(" + num(d.real()) + ", " + num(d.imag()) + "), deviation " + bound(err, "<=", 1e-9));
  }
  return c.finish();
}

bool probability_flow(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  double kB = m.parameter("kB");
  auto grid = wavefield::Grid2D::make(m.domain, 201, 201);
  auto unit = wavefield::WaveField::from_closed_form(grid, quantize::analytic_wavefunction(m, Ordering::symmetric));
  const auto conv = wavefield::FlowConvention::unit_prefactor_per_volume;
  const auto& b = m.domain;
  auto theta = MetricWeight::theta(kB);
  double worst = 0, drift = 0, ref = 0;
  for (int k = 0; k < 10; ++k) {
    double tau = b.tau_min + (k + 0.5) / 10.0 * (b.tau_max - b.tau_min);
    double dp = wavefield::probability_flow(unit, tau, MetricWeight::standard(), conv);
    worst = std::max(worst, std::abs(dp + std::exp(-tau / kB) / kB));
    double pt = wavefield::probability(unit, tau, theta, conv);
    if (k == 0) ref = pt;
    drift = std::max(drift, std::abs(pt - ref) / ref);
  }
  c.item("dP/dtau + exp(-tau/kB)/kB at 10 tau", worst <= 1e-6, "max " + bound(worst, "<=", 1e-6));
  c.item("theta-metric norm constant", drift <= 1e-8, "max relative variation " + bound(drift, "<=", 1e-8));
  return c.finish();
}

bool evolution(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  auto cf = quantize::analytic_wavefunction(m, Ordering::symmetric);
  evolve::EvolutionConfig cfg;
  cfg.foot = evolve::FootPointRule::evaluate;
  const double tau0 = cfg.tau0;
  auto psi0 = [&](double q) { return cf(tau0, q); };
  auto exact = [&](double t, double q) { return cf(t, q); };
  cfg.scheme = evolve::Scheme::characteristics;
  double e_char = evolve::max_relative_error(evolve::evolve(psi0, cfg), exact);
  c.item("characteristics against closed form", e_char <= 1e-10, "max relative error " + bound(e_char, "<=", 1e-10));
  cfg.scheme = evolve::Scheme::implicit_midpoint;
  auto coarse = evolve::evolve(psi0, cfg);
  auto half = cfg;
  half.h_tau /= 2;
  double e1 = evolve::max_relative_error(coarse, exact);
  double e2 = evolve::max_relative_error(evolve::evolve(psi0, half), exact);
  double order = std::log2(e1 / e2);
  c.item("implicit-midpoint order", std::abs(order - 2.0) <= 0.1,
         "errors " + num(e1) + " -> " + num(e2) + ", order " + num(order) + " = 2.0 +- 0.1");
  double dev = evolve::decay_rate_deviation(coarse, -1.0 / m.parameter("kB"));
  c.item("norm decay rate -1/kB", dev <= 1e-3, "max deviation " + bound(dev, "<=", 1e-3));
  return c.finish();
}

bool pseudo_hermitian(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  auto h = generator(m, Ordering::symmetric);
  auto out = pseudoherm::transform_generator(h, pseudoherm::DysonMap::standard());
  auto varpi = quantize::promote(parse("q*p/kB"), Ordering::qp_first);
  c.item("transform_generator(-pi, exp(tau/(2kB)))", out == varpi, out.str() + (out == varpi ? " == " : " != ") + varpi.str());
  auto probes = pseudoherm::phase_probes(m.domain, 6, 0);
  auto q = wavefield::Axis::make(m.domain.q_min, m.domain.q_max, 201, wavefield::Scheme::gauss_legendre);
  double qh = pseudoherm::quasi_hermitian_residual(h, pseudoherm::DysonMap::standard(), probes, m.parameters, q);
  c.item("quasi-Hermitian residual, Theta = exp(tau/kB)", qh < 1e-6, bound(qh, "<", 1e-6));
  for (const char* name : {"ideal_gas", "van_der_waals"}) {
    auto mm = models::builtin(name);
    auto rep = pseudoherm::ordering_equivalence(mm, wavefield::Grid2D::make(mm.domain, 201, 201));
    c.item(std::string(name) + " ordering equivalence", rep.max_spread() < 1e-8,
           "max relative spread " + bound(rep.max_spread(), "<", 1e-8));
  }
  return c.finish();
}

bool uncertainty(Criterion& c) {
  auto m = models::builtin("ideal_gas");
  const auto& params = m.parameters;
  double bbar = m.parameter("bbar");
  auto grid = wavefield::Grid2D::make(m.domain, 201, 201);
  auto st = MetricWeight::standard();
  auto states = wavefield::gaussian_states(grid, 50, 0);
  const auto q = DifferentialOperator::q_hat(), p = DifferentialOperator::p_hat();
  const auto tau = DifferentialOperator::tau_hat(), pi = DifferentialOperator::pi_hat();
  double slack_qp = INFINITY, slack_tp = INFINITY, oracle = 0;
  for (const auto& s : states) {
    double bqp = wavefield::robertson_bound(q, p, s, st, params);
    double btp = wavefield::robertson_bound(tau, pi, s, st, params);
    oracle = std::max({oracle, std::abs(bqp - bbar / 2), std::abs(btp - bbar / 2)});
    slack_qp = std::min(slack_qp, wavefield::uncertainty(q, s, st, params) * wavefield::uncertainty(p, s, st, params) - bqp);
    slack_tp = std::min(slack_tp, wavefield::uncertainty(tau, s, st, params) * wavefield::uncertainty(pi, s, st, params) - btp);
  }
  c.item("commutator oracle |<[a,b]>|/2 = bbar/2", oracle <= 1e-10, "max deviation " + bound(oracle, "<=", 1e-10));
  c.item("dq dp >= bbar/2 on 50 states", slack_qp >= -1e-8, "min slack " + bound(slack_qp, ">=", -1e-8));
  c.item("dtau dpi >= bbar/2 on 50 states", slack_tp >= -1e-8, "min slack " + bound(slack_tp, ">=", -1e-8));
  auto psi = wavefield::normalize(quantize::reconstruct_wavefunction(m, Ordering::symmetric, grid).field, st).first;
  auto ent = wavefield::entropic_uncertainty(m.internal_energy, psi, st, params);
  c.note("entropic form (reported)", "du - (kB/2) dT = " + num(ent.energy_slack()) +
                                         ", dv dP - (kB/2) dT = " + num(ent.volume_slack()));
  return c.finish();
}

bool realization(Criterion& c) {
  auto iso = models::builtin("photon_isentropic");
  quantize::SecondClassRealization r;
  r.sigma_q = iso.parameter("sigma_q");
  r.sigma_p = iso.parameter("sigma_p");
  r.xi = iso.parameter("xi");
  r.C = iso.parameter("C");
  auto rep = quantize::verify_second_class_realization(r);
  for (const auto& k : rep.checks) {
    c.item(k.name, k.pass, "realized " + symcore::to_string(k.realized) + ", residual " + symcore::to_string(k.residual));
  }
  c.item("q(pi) > 0 on the pi range", rep.domain_ok, rep.domain_ok ? "positive" : "not positive");
  c.item("sign-discrepancy flag emitted", rep.sign_discrepancy,
         "printed " + symcore::to_string(rep.printed_bracket) + ", engine " + symcore::to_string(rep.engine_bracket));
  return c.finish();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool determinism(Criterion& c) {
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "thermoquant_determinism";
  fs::remove_all(base);
  std::vector<std::string> reports;
  for (const char* run : {"a", "b"}) {
    fs::path out = base / run;
    std::string cmd = std::string("\"") + THERMOQUANT_CLI_PATH + "\" verify ideal_gas --seed 0 --out \"" +
                      out.string() + "\" > \"" + (base / (std::string(run) + ".log")).string() + "\" 2>&1";
    fs::create_directories(base);
    int status = std::system(cmd.c_str());
    c.item(std::string("run ") + run, status == 0, "exit status " + std::to_string(status));
    reports.push_back(slurp(out / "report.json"));
  }
  bool same = !reports[0].empty() && reports[0] == reports[1];
  c.item("report.json bytewise identical", same, std::to_string(reports[0].size()) + " bytes");
  fs::remove_all(base);
  return c.finish();
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    const char* title;
    std::function<bool(Criterion&)> run;
  };
  const std::vector<Entry> criteria = {
      {"classification", classification},
      {"Dirac-bracket suite", dirac_suite},
      {"wave-function residuals", residuals},
      {"normalization", normalization},
      {"imaginary temperature shift and Hermiticity defects", temperature_shift},
      {"probability flow", probability_flow},
      {"evolution", evolution},
      {"pseudo-Hermitian layer", pseudo_hermitian},
      {"uncertainty relations", uncertainty},
      {"second-class realization", realization},
      {"determinism", determinism}};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      std::string v = argv[++i];
      if (v == "all") {
        for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);
      } else {
        selected.push_back(std::stoi(v));
      }
    } else {
      std::cerr << "usage: acceptance --criterion N|all\n";
      return 1;
    }
  }
  if (selected.empty()) {
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);
  }

  bool all = true;
  for (int k : selected) {
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "no criterion " << k << "\n";
      return 1;
    }
    Criterion c(k, criteria[static_cast<std::size_t>(k - 1)].title);
    try {
      all = criteria[static_cast<std::size_t>(k - 1)].run(c) && all;
    } catch (const std::exception& e) {
      c.item("exception", false, e.what());
      c.finish();
      all = false;
    }
  }
  return all ? 0 : 1;
}
