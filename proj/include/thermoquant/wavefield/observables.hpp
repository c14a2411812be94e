#pragma once

#include <string>
#include <utility>
#include <vector>

#include "thermoquant/quantize/operator.hpp"
#include "thermoquant/wavefield/grid.hpp"

namespace thermoquant::wavefield {

using quantize::DifferentialOperator;

/// Quadrature of conj(phi) w(tau) psi. Throws GridMismatch.
Complex inner_product(const WaveField& phi, const WaveField& psi, const MetricWeight& metric);

/// psi / ||psi|| and alpha = 1/||psi|| (|alpha|^2 = 1/<psi,psi>). Throws ZeroNorm.
std::pair<WaveField, Complex> normalize(const WaveField& psi, const MetricWeight& metric);

/// <psi, op psi> / <psi, psi>.
Complex expectation(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                    const RealBinding& params);

/// <op psi, psi> - <psi, op psi>: zero for an operator Hermitian in the metric;
/// +i bbar/kB for the symmetric-ordered (pq + qp)/(2 kB) on the ideal-gas state.
Complex hermiticity_defect(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                           const RealBinding& params);

/// sqrt(<op^2> - <op>^2). Throws ComplexExpectation when |Im <op>| > tol.
double uncertainty(const DifferentialOperator& op, const WaveField& psi, const MetricWeight& metric,
                   const RealBinding& params, double tol = 1e-8);

/// |<[a, b]>| / 2
double robertson_bound(const DifferentialOperator& a, const DifferentialOperator& b, const WaveField& psi,
                       const MetricWeight& metric, const RealBinding& params);

/// How P(tau) is scaled:
///  normalized: psi normalized over the box in the metric;
///  unit_prefactor: psi as given;
///  unit_prefactor_per_volume: psi as given, divided by (q_max - q_min).
enum class FlowConvention { normalized, unit_prefactor, unit_prefactor_per_volume };
const char* to_string(FlowConvention c);

/// P(tau) = w(tau) * integral |psi(tau, q)|^2 dq. Off-node tau uses the closed
/// form, else 5-point interpolation between rows. Throws DomainError.
double probability(const WaveField& psi, double tau, const MetricWeight& metric,
                   FlowConvention conv = FlowConvention::normalized);
/// dP/dtau: analytic from the closed form when attached, else 4th-order
/// finite differences of the row probabilities.
double probability_flow(const WaveField& psi, double tau, const MetricWeight& metric,
                        FlowConvention conv = FlowConvention::normalized);

/// Separable Gaussian kinematical states, normalized in the standard metric.
std::vector<WaveField> gaussian_states(std::shared_ptr<const Grid2D> grid, std::size_t count,
                                       std::uint64_t seed);

/// Report-only entropic-form quantities with u multiplicative and T = Pi = q p / kB.
struct EntropicUncertainty {
  double delta_u = 0, delta_T = 0, delta_v = 0, delta_P = 0, kB = 1;
  /// delta_u - (kB/2) delta_T
  double energy_slack() const { return delta_u - 0.5 * kB * delta_T; }
  /// delta_v delta_P - (kB/2) delta_T
  double volume_slack() const { return delta_v * delta_P - 0.5 * kB * delta_T; }
};
EntropicUncertainty entropic_uncertainty(const Expr& internal_energy, const WaveField& psi,
                                         const MetricWeight& metric, const RealBinding& params);

/// Two-column CSV with a header line.
void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

}  // namespace thermoquant::wavefield
