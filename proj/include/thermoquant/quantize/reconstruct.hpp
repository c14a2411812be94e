#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoquant/quantize/operator.hpp"

namespace thermoquant::quantize {

/// The pair (phi1, phi2) used for reconstruction: phi1 in normal form
/// pi + h, phi2 free of pi.
struct ConstraintPair {
  constraints::Constraint phi1;
  constraints::Constraint phi2;
};
/// Throws NotNormalForm.
ConstraintPair select_constraints(const models::ThermoModel& m);

/// log|psi| for psi = exp(M(tau) + i u/bbar) solving both promoted
/// constraints, derived from the constraint operators; nullopt when the
/// annihilator condition does not reduce to M' = const.
std::optional<Expr> derive_log_modulus(const models::ThermoModel& m, Ordering ord);

/// Closed form exp(M + i u/bbar) with the model's parameters. Uses the stored
/// log-modulus or derives it. Throws MissingField if neither is available.
wavefield::ClosedForm analytic_wavefunction(const models::ThermoModel& m, Ordering ord);

struct RatioStats {
  Complex mean;
  double relative_spread = 0;  // max |r - mean| / |mean|
};
/// Pointwise a/b statistics. Throws GridMismatch.
RatioStats ratio_stats(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

struct Reconstruction {
  WaveField field;
  std::optional<RatioStats> ratio;  // against the analytic form when known
};

/// Two-stage reconstruction: RK4 along q for each tau-row from the phi2 ODE
/// (seed 1 at q_min), then the row factor g(tau) from phi1 restricted to q_min.
/// When an analytic form exists it is attached with the fitted global constant.
/// Throws NotNormalForm, OrderingUnsupported.
Reconstruction reconstruct_wavefunction(const models::ThermoModel& m, Ordering ord,
                                        std::shared_ptr<const wavefield::Grid2D> grid);

struct ResidualReport {
  Ordering ordering;
  std::size_t n_tau = 0, n_q = 0;
  double phi1_analytic = 0, phi2_analytic = 0;
  double phi1_fd = 0, phi2_fd = 0;
  nlohmann::json to_json() const;
};
/// ||phi1 psi||, ||phi2 psi|| on the field normalized in the standard metric.
ResidualReport residual_norms(const models::ThermoModel& m, Ordering ord, const WaveField& psi);

struct SecondClassRealization {
  double sigma_q = 1, sigma_p = 1, xi = 1, C = 0;
  double pi_min = 0.2, pi_max = 3.0;

  /// q(pi) = (sigma_q pi^4/(3 xi) + C)^(-3/4)
  Expr q_of_pi() const;
  /// p(pi) = -sigma_p pi^4 / 3
  Expr p_of_pi() const;
};

struct CommutatorCheck {
  std::string name;
  Expr realized;  // [tau, f] / (i bbar)
  Expr target;
  Expr residual;
  bool pass = false;
};

struct RealizationReport {
  std::vector<CommutatorCheck> checks;
  bool domain_ok = false;  // q(pi) > 0 on [pi_min, pi_max]
  /// Printed bracket {tau, p}_D = +(4/3) sigma pi^3 against the realized commutator.
  Expr printed_bracket;
  Expr engine_bracket;  // {tau, p}_D from the Dirac-bracket engine
  bool sign_discrepancy = false;
  bool engine_agrees = false;
  bool all_pass() const;
  nlohmann::json to_json() const;
};

RealizationReport verify_second_class_realization(const SecondClassRealization& r);

}  // namespace thermoquant::quantize
