#include <gtest/gtest.h>

#include <cmath>

#include "thermoquant/errors.hpp"
#include "thermoquant/evolve/evolve.hpp"
#include "thermoquant/quantize/reconstruct.hpp"
#include "thermoquant/symcore/parse.hpp"

using namespace thermoquant;
using namespace thermoquant::evolve;
using symcore::Expr;

namespace {

// Ideal-gas closed form (symmetric ordering) at defaults.
Complex ideal(double tau, double q) {
  const double u = 1.5 * std::exp(2 * tau / 3) * std::pow(q, -2.0 / 3.0);
  return std::polar(std::exp(-tau / 2), u);
}

std::function<Complex(double)> ideal_at(double tau0) {
  return [tau0](double q) {
    if (q <= 0) throw DomainError("q must be positive");
    return ideal(tau0, q);
  };
}

EvolutionConfig characteristics_cfg() {
  EvolutionConfig c;
  c.scheme = Scheme::characteristics;
  c.foot = FootPointRule::evaluate;
  c.h_tau = 0.05;
  return c;
}

Trajectory run(const std::function<Complex(double)>& psi0, const EvolutionConfig& cfg) {
  return thermoquant::evolve::evolve(psi0, cfg);
}

double wrap(double a) { return std::remainder(a, 2 * M_PI); }

}  // namespace

TEST(Generator, IdealGasTerms) {
  auto h = ideal_gas_generator();
  EXPECT_EQ(h.coefficient(0, 1), quantize::CExpr::imag(symcore::parse("-bbar*q/kB")));
  EXPECT_EQ(h.coefficient(0, 0), quantize::CExpr::imag(symcore::parse("-bbar/(2*kB)")));
}

TEST(Characteristics, ExactAgainstClosedForm) {
  auto cfg = characteristics_cfg();
  Trajectory t = run(ideal_at(cfg.tau0), cfg);
  EXPECT_LT(max_relative_error(t, ideal), 1e-10);
}

TEST(Characteristics, AmplitudeAndPhaseAlongCharacteristics) {
  auto cfg = characteristics_cfg();
  cfg.h_tau = 0.25;
  Trajectory t = run(ideal_at(cfg.tau0), cfg);
  const auto& last = t.snapshots.back();
  ASSERT_NEAR(last.tau, cfg.tau0 + 1.0, 1e-12);
  auto psi0 = ideal_at(cfg.tau0);
  for (std::size_t j = 0; j < t.q.size(); j += 10) {
    const double q = t.q.nodes[j], foot = q * std::exp(-1.0);
    const Complex v = last.values(static_cast<Eigen::Index>(j));
    EXPECT_NEAR(std::abs(v) / std::abs(psi0(foot)), std::exp(-0.5), 1e-10);
    EXPECT_NEAR(wrap(std::arg(v) - std::arg(psi0(foot))), 0.0, 1e-8);
  }
  EXPECT_NEAR(std::exp(-0.5), 0.60653, 1e-5);
}

TEST(Characteristics, NormDecay) {
  auto cfg = characteristics_cfg();
  Trajectory t = run(ideal_at(cfg.tau0), cfg);
  auto s = norm_series(t);
  EXPECT_NEAR(s.back().p_standard / s.front().p_standard, std::exp(-1.0), 1e-3);
  for (const auto& p : s) EXPECT_NEAR(p.p_theta, s.front().p_theta, 1e-8 * s.front().p_theta);
  EXPECT_LT(decay_rate_deviation(t, -1.0), 1e-6);
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s[k].p_standard, s[k - 1].p_standard);
}

TEST(Characteristics, ZeroInitialField) {
  auto cfg = characteristics_cfg();
  cfg.foot = FootPointRule::extrapolate;
  Trajectory t = run([](double) { return Complex(0); }, cfg);
  for (const auto& p : norm_series(t)) EXPECT_EQ(p.p_standard, 0.0);
}

TEST(Characteristics, FootPointRules) {
  auto cfg = characteristics_cfg();
  cfg.foot = FootPointRule::error;
  EXPECT_THROW(run(ideal_at(cfg.tau0), cfg), FootPointOutOfDomain);
  // short horizon: foot points stay within a few node spacings of q_min
  cfg.foot = FootPointRule::extrapolate;
  cfg.tau1 = cfg.tau0 + 0.01;
  cfg.h_tau = 0.005;
  Trajectory t = run(ideal_at(cfg.tau0), cfg);
  EXPECT_LT(max_relative_error(t, ideal), 1e-4);
}

TEST(ImplicitMidpoint, ContinuityForTinyStep) {
  EvolutionConfig cfg;
  cfg.h_tau = 1e-6;
  cfg.tau1 = cfg.tau0 + 1e-6;
  Trajectory t = run([](double) { return Complex(1.0); }, cfg);
  ASSERT_EQ(t.snapshots.size(), 2u);
  const double change = (t.snapshots[1].values - t.snapshots[0].values).cwiseAbs().maxCoeff();
  EXPECT_LE(change, 2e-6);
}

TEST(ImplicitMidpoint, SecondOrderConvergence) {
  std::vector<double> err;
  for (double h : {1.0 / 50, 1.0 / 100, 1.0 / 200}) {
    EvolutionConfig cfg;
    cfg.h_tau = h;
    cfg.foot = FootPointRule::evaluate;
    err.push_back(max_relative_error(run(ideal_at(cfg.tau0), cfg), ideal));
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GE(order, 1.9) << err[k] << " " << err[k + 1];
    EXPECT_LE(order, 2.1) << err[k] << " " << err[k + 1];
  }
}

TEST(ImplicitMidpoint, AgreesWithCharacteristics) {
  EvolutionConfig imp;
  imp.foot = FootPointRule::evaluate;
  auto chr = imp;
  chr.scheme = Scheme::characteristics;
  Trajectory a = run(ideal_at(imp.tau0), imp), b = run(ideal_at(imp.tau0), chr);
  double worst = 0;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    worst = std::max(worst, (a.snapshots[k].values - b.snapshots[k].values).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(ImplicitMidpoint, NormDecayRate) {
  EvolutionConfig cfg;
  cfg.foot = FootPointRule::evaluate;
  Trajectory t = run(ideal_at(cfg.tau0), cfg);
  EXPECT_LT(decay_rate_deviation(t, -1.0), 1e-3);
  auto s = norm_series(t);
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s[k].p_standard, s[k - 1].p_standard);
}

TEST(Evolve, UnsupportedGenerators) {
  EvolutionConfig cfg;
  cfg.generator = quantize::DifferentialOperator::pi_hat();
  EXPECT_THROW(run(ideal_at(0.2), cfg), UnsupportedGenerator);
  cfg.generator = quantize::promote(symcore::parse("p^2"), models::Ordering::symmetric);
  EXPECT_THROW(run(ideal_at(0.2), cfg), UnsupportedGenerator);
  cfg.scheme = Scheme::characteristics;
  cfg.generator = quantize::CExpr(Expr(1)) * quantize::DifferentialOperator::d_q();
  EXPECT_THROW(run(ideal_at(0.2), cfg), UnsupportedGenerator);
}

TEST(Evolve, NonIdealGeneratorMatchesCharacteristics) {
  // h = -i bbar (1 + tau q) d_q + q^2: tau-dependent advection speed plus a phase term
  auto psi0 = [](double q) { return std::polar(std::exp(-q), 3 * q); };
  std::vector<double> diff;
  for (double h : {0.02, 0.01}) {
    EvolutionConfig cfg;
    cfg.generator = quantize::DifferentialOperator({{quantize::CExpr::imag(symcore::parse("-(1 + tau*q)")), 0, 1},
                                                     {quantize::CExpr(symcore::parse("q^2")), 0, 0}});
    cfg.foot = FootPointRule::evaluate;
    cfg.tau1 = 0.7;
    cfg.h_tau = h;
    auto chr = cfg;
    chr.scheme = Scheme::characteristics;
    Trajectory a = run(psi0, cfg), b = run(psi0, chr);
    double worst = 0;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      worst = std::max(worst, (a.snapshots[k].values - b.snapshots[k].values).cwiseAbs().maxCoeff());
    }
    diff.push_back(worst);
  }
  EXPECT_LT(diff[1], 1e-3);
  EXPECT_NEAR(diff[0] / diff[1], 4.0, 0.4);
}
