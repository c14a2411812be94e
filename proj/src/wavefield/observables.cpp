#include "thermoquant/wavefield/observables.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "thermoquant/errors.hpp"

namespace thermoquant::wavefield {

using quantize::apply;
using quantize::CExpr;

namespace {

Complex quadrature(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, const Grid2D& g, const Eigen::VectorXd& w) {
  Complex s = 0;
  for (std::size_t i = 0; i < g.tau.size(); ++i) {
    Complex row = 0;
    const auto I = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < g.q.size(); ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      row += g.q.weights[j] * std::conj(a(I, J)) * b(I, J);
    }
    s += g.tau.weights[i] * w(I) * row;
  }
  return s;
}

}  // namespace

Complex inner_product(const WaveField& phi, const WaveField& psi, const MetricWeight& metric) {
  require_same_grid(phi, psi);
  return quadrature(phi.values, psi.values, *psi.grid, metric.on(psi.grid->tau));
}

std::pair<WaveField, Complex> normalize(const WaveField& psi, const MetricWeight& metric) {
  const double n2 = inner_product(psi, psi, metric).real();
  if (!(n2 > 0) || !std::isfinite(n2)) throw ZeroNorm("cannot normalize a field of norm " + std::to_string(n2));
  const Complex alpha = 1.0 / std::sqrt(n2);
  WaveField out = psi.scaled(alpha);
  out.normalized = true;
  return {std::move(out), alpha};
}

Complex expectation(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                    const RealBinding& params) {
  const Eigen::VectorXd w = metric.on(psi.grid->tau);
  const Complex den = quadrature(psi.values, psi.values, *psi.grid, w);
  if (std::abs(den) == 0) throw ZeroNorm("expectation in a zero state");
  return quadrature(psi.values, apply(op, psi, params), *psi.grid, w) / den;
}

Complex hermiticity_defect(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                           const RealBinding& params) {
  const Eigen::VectorXd w = metric.on(psi.grid->tau);
  const Eigen::MatrixXcd opsi = apply(op, psi, params);
  return quadrature(opsi, psi.values, *psi.grid, w) - quadrature(psi.values, opsi, *psi.grid, w);
}

double uncertainty(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                   const RealBinding& params, double tol) {
  const Complex m = expectation(op, psi, metric, params);
  if (std::abs(m.imag()) > tol) {
    throw ComplexExpectation("expectation " + std::to_string(m.real()) + " + " + std::to_string(m.imag()) +
                             "i is not real in metric " + metric.label);
  }
  const Complex m2 = expectation(quantize::compose(op, op), psi, metric, params);
  return std::sqrt(std::max(0.0, m2.real() - m.real() * m.real()));
}

double robertson_bound(const DifferentialOperator& a, const DifferentialOperator& b, const WaveField& psi,
                       const MetricWeight& metric, const RealBinding& params) {
  DifferentialOperator c = quantize::commutator(a, b);
  if (c.empty()) return 0.0;
  return 0.5 * std::abs(expectation(c, psi, metric, params));
}

const char* to_string(FlowConvention c) {
  switch (c) {
    case FlowConvention::normalized: return "normalized";
    case FlowConvention::unit_prefactor: return "unit_prefactor";
    case FlowConvention::unit_prefactor_per_volume: return "unit_prefactor_per_volume";
  }
  return "?";
}

namespace {

void require_in_box(const Grid2D& g, double tau) {
  if (!(tau >= g.tau.lo && tau <= g.tau.hi)) throw DomainError("tau outside the box");
}

double convention_scale(const WaveField& psi, const MetricWeight& metric, FlowConvention conv) {
  switch (conv) {
    case FlowConvention::normalized: {
      const double n2 = inner_product(psi, psi, metric).real();
      if (!(n2 > 0)) throw ZeroNorm("probability of a zero field");
      return 1.0 / n2;
    }
    case FlowConvention::unit_prefactor: return 1.0;
    case FlowConvention::unit_prefactor_per_volume: return 1.0 / (psi.grid->q.hi - psi.grid->q.lo);
  }
  return 1.0;
}

double weight_at(const MetricWeight& metric, double tau, int order) {
  Expr w = metric.weight;
  for (int k = 0; k < order; ++k) w = symcore::differentiate(w, "tau");
  RealBinding b = metric.params;
  b["tau"] = tau;
  return symcore::evaluate_real(w, b);
}

/// integral |psi(tau, q)|^2 dq on the row nodes (no metric).
double row_density(const WaveField& psi, std::size_t i) {
  double s = 0;
  for (std::size_t j = 0; j < psi.grid->q.size(); ++j) {
    s += psi.grid->q.weights[j] * std::norm(psi.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  return s;
}

/// integral f(q) |psi_cf(tau, q)|^2 dq for the closed form, with f = 1 or 2 M_tau.
double closed_density(const WaveField& psi, double tau, bool with_rate) {
  const ClosedForm& cf = *psi.closed;
  symcore::CompiledExpr M(cf.log_modulus, {"tau", "q"}, cf.params);
  symcore::CompiledExpr Mt(symcore::differentiate(cf.log_modulus, "tau"), {"tau", "q"}, cf.params);
  const double s2 = std::norm(cf.scale);
  double s = 0;
  for (std::size_t j = 0; j < psi.grid->q.size(); ++j) {
    const double q = psi.grid->q.nodes[j];
    const double dens = s2 * std::exp(2 * M(tau, q));
    s += psi.grid->q.weights[j] * dens * (with_rate ? 2 * Mt(tau, q) : 1.0);
  }
  return s;
}

double interpolated_density(const WaveField& psi, double tau, int order) {
  const auto& t = psi.grid->tau.nodes;
  const std::size_t s = quantize::stencil_start(t, tau);
  auto w = quantize::fd_weights(std::span<const double>(t.data() + s, 5), tau, order);
  double out = 0;
  for (std::size_t k = 0; k < 5; ++k) out += w[k] * row_density(psi, s + k);
  return out;
}

}  // namespace

double probability(const WaveField& psi, double tau, const MetricWeight& metric, FlowConvention conv) {
  require_in_box(*psi.grid, tau);
  const double d = psi.closed ? closed_density(psi, tau, false) : interpolated_density(psi, tau, 0);
  return convention_scale(psi, metric, conv) * weight_at(metric, tau, 0) * d;
}

double probability_flow(const WaveField& psi, double tau, const MetricWeight& metric, FlowConvention conv) {
  require_in_box(*psi.grid, tau);
  const double w = weight_at(metric, tau, 0), dw = weight_at(metric, tau, 1);
  double flow;
  if (psi.closed) {
    flow = dw * closed_density(psi, tau, false) + w * closed_density(psi, tau, true);
  } else {
    flow = dw * interpolated_density(psi, tau, 0) + w * interpolated_density(psi, tau, 1);
  }
  return convention_scale(psi, metric, conv) * flow;
}

std::vector<WaveField> gaussian_states(std::shared_ptr<const Grid2D> grid, std::size_t count, std::uint64_t seed) {
  std::vector<WaveField> out;
  for (auto& p : quantize::gaussian_probes(grid, count, seed)) out.push_back(normalize(p, MetricWeight::standard()).first);
  return out;
}

EntropicUncertainty entropic_uncertainty(const Expr& internal_energy, const WaveField& psi,
                                         const MetricWeight& metric, const RealBinding& params) {
  using quantize::DifferentialOperator;
  EntropicUncertainty e;
  if (auto it = params.find("kB"); it != params.end()) e.kB = it->second;
  auto safe = [&](const DifferentialOperator& op) {
    try {
      return uncertainty(op, psi, metric, params);
    } catch (const ComplexExpectation&) {
      return std::nan("");
    }
  };
  e.delta_u = safe(DifferentialOperator::multiply(CExpr(internal_energy)));
  DifferentialOperator T = quantize::compose(DifferentialOperator::q_hat(), DifferentialOperator::p_hat());
  e.delta_T = safe(CExpr(Expr(1) / symcore::sym("kB")) * T);
  e.delta_v = safe(DifferentialOperator::q_hat());
  e.delta_P = safe(-DifferentialOperator::p_hat());
  return e;
}

void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  char buf[64];
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.15g", r[k]);
      out << (k ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace thermoquant::wavefield
