#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoquant/evolve/evolve.hpp"
#include "thermoquant/quantize/reconstruct.hpp"
#include "thermoquant/wavefield/observables.hpp"

namespace thermoquant::pseudoherm {

using quantize::CExpr;
using quantize::DifferentialOperator;
using symcore::Complex;
using symcore::Expr;
using symcore::RealBinding;

/// eta(tau) = exp(exponent * tau) with a symbolic exponent.
struct DysonMap {
  Expr eta;
  Expr inverse;

  /// Throws NonCommutingMap when the exponent depends on anything but parameters.
  static DysonMap exponential(const Expr& exponent);
  /// exp(tau/(2 kB))
  static DysonMap standard();
  static DysonMap identity() { return exponential(Expr(0)); }
  /// Throws NonCommutingMap unless eta depends on tau only (and parameters).
  void validate() const;
  /// Theta = eta^2 (eta is real and positive).
  Expr theta() const;
  wavefield::MetricWeight metric(const RealBinding& params, std::string label = "theta") const;
};

/// Generator h = phi1 - pi for a normal-form phi1 = pi + h: on the constraint
/// surface -pi acts as h.
DifferentialOperator generator_from_constraint(const DifferentialOperator& phi1);

/// eta H eta^-1 + i bbar (d_tau eta) eta^-1
DifferentialOperator transform_generator(const DifferentialOperator& H, const DysonMap& eta);
/// eta o eta^-1
DifferentialOperator transform_observable(const DifferentialOperator& o, const DysonMap& eta);
/// eta^-1 h eta
DifferentialOperator pseudo_observable(const DifferentialOperator& h, const DysonMap& eta);

/// The Dyson map eta = exp(s tau) that removes the imaginary constant
/// -i bbar s from a generator. Throws NonCommutingMap if s depends on q.
DysonMap matching_dyson_map(const DifferentialOperator& H);

/// Probe with |phi| independent of q: phi(q) = exp(i (k q + c q^2)) at tau.
struct PhaseProbe {
  double tau;
  double k;
  double c;
  Complex operator()(double q) const { return std::polar(1.0, k * q + c * q * q); }
};
std::vector<PhaseProbe> phase_probes(const models::DomainBox& box, std::size_t count, std::uint64_t seed);
/// Phase-only probe fields m(tau) exp(i S(q)) on a 2-D grid.
std::vector<wavefield::WaveField> phase_probe_fields(std::shared_ptr<const wavefield::Grid2D> grid,
                                                     std::size_t count, std::uint64_t seed);

/// max over probes of |d ln <phi,phi>_Theta / d tau| measured over one
/// implicit-midpoint step of the H-evolution.
double quasi_hermitian_residual(const DifferentialOperator& H, const DysonMap& eta, const std::vector<PhaseProbe>& probes,
                                const RealBinding& params, const wavefield::Axis& q, double h_tau = 1e-4);

struct RatioEntry {
  std::string name;
  std::string metric;
  quantize::RatioStats stats;
};

struct EquivalenceReport {
  std::string model;
  std::map<models::Ordering, std::string> dyson_exponent;
  std::vector<RatioEntry> ratios;
  double max_spread() const;
  nlohmann::json to_json() const;
};

/// Checks eta_o psi_o / psi_qp is constant for every ordering o and that
/// psi_pq e^(tau/(2kB)) / psi_symmetric is constant. Throws MissingField when
/// a field is absent.
EquivalenceReport ordering_equivalence(const models::ThermoModel& m,
                                       const std::map<models::Ordering, wavefield::WaveField>& fields);
/// Reconstructs the three fields on the grid first.
EquivalenceReport ordering_equivalence(const models::ThermoModel& m, std::shared_ptr<const wavefield::Grid2D> grid);

}  // namespace thermoquant::pseudoherm
