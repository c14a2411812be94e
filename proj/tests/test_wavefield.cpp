#include <gtest/gtest.h>

#include <cmath>

#include "thermoquant/errors.hpp"
#include "thermoquant/quantize/reconstruct.hpp"
#include "thermoquant/symcore/parse.hpp"
#include "thermoquant/wavefield/observables.hpp"

using namespace thermoquant;
using namespace thermoquant::wavefield;
using quantize::CExpr;
using quantize::DifferentialOperator;
using quantize::Ordering;
using symcore::parse;

namespace {

struct IdealGas {
  models::ThermoModel m = models::builtin("ideal_gas");
  std::shared_ptr<const Grid2D> grid = Grid2D::make(m.domain, 201, 201);
  WaveField psi(Ordering o = Ordering::symmetric) const {
    return WaveField::from_closed_form(grid, quantize::analytic_wavefunction(m, o));
  }
};

// (qp + pq)/(2 kB)
DifferentialOperator a_hat() { return quantize::promote(parse("q*p/kB"), Ordering::symmetric); }
// q p / kB
DifferentialOperator varpi_hat() { return quantize::promote(parse("q*p/kB"), Ordering::qp_first); }

double closed_norm(const models::DomainBox& b, double kB) {
  return 2 * kB * (b.q_max - b.q_min) * std::exp(-(b.tau_max + b.tau_min) / (2 * kB)) *
         std::sinh((b.tau_max - b.tau_min) / (2 * kB));
}

}  // namespace

TEST(Grid, NodesStrictlyIncreasingInsideBox) {
  for (auto s : {Scheme::gauss_legendre, Scheme::uniform_trapezoid}) {
    auto a = Axis::make(0.5, 2.0, 37, s);
    for (std::size_t i = 0; i + 1 < a.size(); ++i) EXPECT_LT(a.nodes[i], a.nodes[i + 1]);
    EXPECT_GE(a.nodes.front(), 0.5);
    EXPECT_LE(a.nodes.back(), 2.0);
    double w = 0;
    for (double x : a.weights) w += x;
    EXPECT_NEAR(w, 1.5, 1e-13);
  }
  EXPECT_THROW(Axis::make(0, 1, 3, Scheme::gauss_legendre), GridTooCoarse);
}

TEST(Grid, GaussLegendreExactForHighDegree) {
  auto a = Axis::make(-1, 2, 10, Scheme::gauss_legendre);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.weights[i] * std::pow(a.nodes[i], 19);
  EXPECT_NEAR(s, (std::pow(2.0, 20) - 1) / 20.0, 1e-8);
}

TEST(InnerProduct, IdealGasNormStandardAndTheta) {
  IdealGas g;
  WaveField psi = g.psi();
  Complex n = inner_product(psi, psi, MetricWeight::standard());
  EXPECT_NEAR(n.real(), closed_norm(g.m.domain, 1.0), 1e-12);
  EXPECT_NEAR(n.real(), 1.15342, 1e-5);
  EXPECT_NEAR(n.imag(), 0.0, 1e-15);
  EXPECT_NEAR(inner_product(psi, psi, MetricWeight::theta(1.0)).real(), 4.2, 1e-12);
}

TEST(InnerProduct, Sesquilinear) {
  IdealGas g;
  WaveField psi = g.psi();
  WaveField ipsi = psi.scaled({0.0, 1.0});
  auto st = MetricWeight::standard();
  Complex a = inner_product(psi, ipsi, st), b = inner_product(psi, psi, st);
  EXPECT_NEAR(std::abs(a - Complex(0, 1) * b), 0.0, 1e-14);
  auto states = gaussian_states(g.grid, 2, 9);
  Complex x = inner_product(states[0], psi, st), y = inner_product(psi, states[0], st);
  EXPECT_NEAR(std::abs(x - std::conj(y)), 0.0, 1e-15);
}

TEST(InnerProduct, GridMismatch) {
  IdealGas g;
  auto other = Grid2D::make(g.m.domain, 31, 31);
  WaveField a = g.psi(), b = WaveField::from_closed_form(other, quantize::analytic_wavefunction(g.m, Ordering::symmetric));
  EXPECT_THROW(inner_product(a, b, MetricWeight::standard()), GridMismatch);
}

TEST(Normalize, IdealGasAlpha) {
  IdealGas g;
  auto [psi, alpha] = normalize(g.psi(), MetricWeight::standard());
  const double closed = 1.0 / closed_norm(g.m.domain, 1.0);
  EXPECT_LT(std::abs(std::norm(alpha) - closed) / closed, 1e-8);
  EXPECT_NEAR(std::norm(alpha), 0.86699, 1e-5);
  EXPECT_TRUE(psi.normalized);
  EXPECT_NEAR(inner_product(psi, psi, MetricWeight::standard()).real(), 1.0, 1e-10);
  auto [again, a2] = normalize(psi, MetricWeight::standard());
  EXPECT_NEAR(std::abs(a2 - 1.0), 0.0, 1e-12);
  auto [twice, a3] = normalize(g.psi().scaled(2.0), MetricWeight::standard());
  EXPECT_NEAR(std::abs(a3 - alpha / 2.0), 0.0, 1e-12);
  EXPECT_THROW(normalize(g.psi().scaled(0.0), MetricWeight::standard()), ZeroNorm);
}

// Doubling the node count: Gauss-Legendre from the default 201, trapezoid from
// 401 (its h^2 error at 201 nodes moves the norm by 1.2e-5 on doubling).
TEST(Normalize, QuadratureConverges) {
  IdealGas g;
  for (auto [s, n0, tol] : {std::tuple{Scheme::gauss_legendre, std::size_t{201}, 1e-8},
                            std::tuple{Scheme::uniform_trapezoid, std::size_t{401}, 1e-5}}) {
    for (const char* name : {"ideal_gas", "van_der_waals", "photon_first_class"}) {
      auto m = models::builtin(name);
      double v[2];
      for (int k = 0; k < 2; ++k) {
        auto grid = Grid2D::make(m.domain, n0 * (k + 1), n0 * (k + 1), s);
        WaveField psi = WaveField::from_closed_form(grid, quantize::analytic_wavefunction(m, Ordering::symmetric));
        v[k] = inner_product(psi, psi, MetricWeight::standard()).real();
      }
      EXPECT_LT(std::abs(v[1] - v[0]) / v[0], tol) << name;
    }
  }
}

TEST(Expectation, ImaginaryTemperatureShift) {
  IdealGas g;
  auto psi = normalize(g.psi(), MetricWeight::standard()).first;
  Complex pi = expectation(DifferentialOperator::pi_hat(), psi, MetricWeight::standard(), g.m.parameters);
  EXPECT_NEAR(pi.imag(), 0.5, 1e-9);
  Complex id = expectation(DifferentialOperator::identity(), psi, MetricWeight::standard(), g.m.parameters);
  EXPECT_NEAR(std::abs(id - 1.0), 0.0, 1e-12);
  auto th = normalize(g.psi(), MetricWeight::theta(1.0)).first;
  EXPECT_NEAR(expectation(varpi_hat(), th, MetricWeight::theta(1.0), g.m.parameters).imag(), 0.0, 1e-10);
}

TEST(Expectation, ChiStandardEqualsPsiTheta) {
  IdealGas g;
  WaveField psi = normalize(g.psi(), MetricWeight::theta(1.0)).first;
  std::vector<Complex> eta;
  for (double t : g.grid->tau.nodes) eta.push_back(std::exp(t / 2));
  WaveField chi = psi.times_tau_function(eta, parse("tau/2"));
  for (const auto& op : {varpi_hat(), DifferentialOperator::q_hat(), DifferentialOperator::p_hat()}) {
    Complex a = expectation(op, chi, MetricWeight::standard(), g.m.parameters);
    Complex b = expectation(op, psi, MetricWeight::theta(1.0), g.m.parameters);
    EXPECT_LT(std::abs(a - b), 1e-9);
  }
}

TEST(Hermiticity, DefectsOnIdealGasState) {
  IdealGas g;
  auto st = MetricWeight::standard();
  auto psi = normalize(g.psi(), st).first;
  Complex dA = hermiticity_defect(a_hat(), psi, st, g.m.parameters);
  Complex dpi = hermiticity_defect(DifferentialOperator::pi_hat(), psi, st, g.m.parameters);
  Complex dphi = hermiticity_defect(quantize::promote(g.m.constraints[0], Ordering::symmetric), psi, st, g.m.parameters);
  EXPECT_LT(std::abs(dA - Complex(0, 1)), 1e-9);
  EXPECT_LT(std::abs(dpi - Complex(0, -1)), 1e-9);
  EXPECT_LT(std::abs(dphi), 1e-9);
}

TEST(Hermiticity, RealMultiplicativeOperatorsHaveNoDefect) {
  IdealGas g;
  auto states = gaussian_states(g.grid, 5, 3);
  states.push_back(normalize(g.psi(), MetricWeight::standard()).first);
  for (const auto& s : states) {
    for (const auto& w : {MetricWeight::standard(), MetricWeight::theta(1.0), MetricWeight::exponential(-0.7, "x")}) {
      for (const char* f : {"q", "tau*q^2", "exp(tau)/q"}) {
        auto op = DifferentialOperator::multiply(CExpr(parse(f)));
        EXPECT_LT(std::abs(hermiticity_defect(op, s, w, g.m.parameters)), 1e-10);
      }
    }
  }
}

TEST(Uncertainty, GaussianWidth) {
  IdealGas g;
  const double sg = 0.07;
  ClosedForm cf{parse("-(tau - 1.6)^2/0.08") + Expr::constant(-1.0 / (4 * sg * sg)) * parse("(q - 1.25)^2"),
                parse("2*q"), {1.0, 0.0}, {}};
  auto psi = normalize(WaveField::from_closed_form(g.grid, cf), MetricWeight::standard()).first;
  EXPECT_NEAR(uncertainty(DifferentialOperator::q_hat(), psi, MetricWeight::standard(), g.m.parameters), sg, 1e-9);
  // minimum-uncertainty state in q
  double dp = uncertainty(DifferentialOperator::p_hat(), psi, MetricWeight::standard(), g.m.parameters);
  EXPECT_NEAR(dp * sg, 0.5, 1e-8);
}

TEST(Uncertainty, RobertsonOnKinematicalStates) {
  IdealGas g;
  auto st = MetricWeight::standard();
  auto states = gaussian_states(g.grid, 50, 0);
  using D = DifferentialOperator;
  for (const auto& s : states) {
    double dq = uncertainty(D::q_hat(), s, st, g.m.parameters), dp = uncertainty(D::p_hat(), s, st, g.m.parameters);
    double dt = uncertainty(D::tau_hat(), s, st, g.m.parameters), dpi = uncertainty(D::pi_hat(), s, st, g.m.parameters);
    double bq = robertson_bound(D::q_hat(), D::p_hat(), s, st, g.m.parameters);
    double bt = robertson_bound(D::tau_hat(), D::pi_hat(), s, st, g.m.parameters);
    EXPECT_NEAR(bq, 0.5, 1e-12);
    EXPECT_NEAR(bt, 0.5, 1e-12);
    EXPECT_GE(dq * dp - bq, -1e-8);
    EXPECT_GE(dt * dpi - bt, -1e-8);
  }
  EXPECT_EQ(robertson_bound(D::tau_hat(), varpi_hat(), states[0], st, g.m.parameters), 0.0);
  EXPECT_THROW(uncertainty(varpi_hat(), states[0], st, g.m.parameters), ComplexExpectation);
}

TEST(Probability, FlowUnitPrefactorPerVolume) {
  IdealGas g;
  WaveField psi = g.psi();
  const auto c = FlowConvention::unit_prefactor_per_volume;
  EXPECT_NEAR(probability_flow(psi, 1.0, MetricWeight::standard(), c), -std::exp(-1.0), 1e-12);
  EXPECT_NEAR(probability(psi, 1.0, MetricWeight::standard(), c), std::exp(-1.0), 1e-12);
  // grid-only field: interpolation and finite differences over rows
  WaveField raw(g.grid, psi.values);
  EXPECT_NEAR(probability_flow(raw, 1.0, MetricWeight::standard(), c), -std::exp(-1.0), 1e-6);
  const double h = 1e-4;
  double fd = (probability(psi, 1.0 + h, MetricWeight::standard(), c) - probability(psi, 1.0 - h, MetricWeight::standard(), c)) / (2 * h);
  EXPECT_NEAR(fd, -std::exp(-1.0), 1e-8);
}

TEST(Probability, ThetaMetricAndQpOrderingHaveNoFlow) {
  IdealGas g;
  for (double t : {0.3, 1.0, 2.9}) {
    EXPECT_NEAR(probability_flow(g.psi(), t, MetricWeight::theta(1.0)), 0.0, 1e-12);
    EXPECT_NEAR(probability_flow(g.psi(Ordering::qp_first), t, MetricWeight::standard()), 0.0, 1e-12);
  }
  EXPECT_THROW(probability(g.psi(), 3.5, MetricWeight::standard()), DomainError);
}

TEST(Probability, NormalizedConventionIntegratesToOne) {
  IdealGas g;
  double s = 0;
  for (std::size_t i = 0; i < g.grid->tau.size(); ++i) s += g.grid->tau.weights[i] * probability(g.psi(), g.grid->tau.nodes[i], MetricWeight::standard());
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Entropic, ReportOnlyValuesAreFinite) {
  IdealGas g;
  auto psi = normalize(g.psi(), MetricWeight::theta(1.0)).first;
  auto e = entropic_uncertainty(g.m.internal_energy, psi, MetricWeight::theta(1.0), g.m.parameters);
  EXPECT_TRUE(std::isfinite(e.delta_u));
  EXPECT_TRUE(std::isfinite(e.delta_T));
  EXPECT_GT(e.delta_u, 0.0);
}
