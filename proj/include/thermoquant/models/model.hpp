#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoquant/constraints/constraints.hpp"
#include "thermoquant/symcore/evaluate.hpp"

namespace thermoquant::models {

using constraints::Constraint;
using symcore::Expr;
using symcore::RealBinding;

enum class Ordering { symmetric, qp_first, pq_first };
const char* to_string(Ordering o);
/// Accepts "symmetric", "qp", "qp_first", "pq", "pq_first".
Ordering parse_ordering(std::string_view s);
inline constexpr Ordering kAllOrderings[] = {Ordering::symmetric, Ordering::qp_first,
                                             Ordering::pq_first};

struct DomainBox {
  double tau_min = 0.2;
  double tau_max = 3.0;
  double q_min = 0.5;
  double q_max = 2.0;

  /// Throws DomainError; `q_floor` is the excluded-volume bound (w).
  void validate(double q_floor = 0.0) const;
  bool contains(double tau, double q) const;
  bool operator==(const DomainBox&) const = default;
};

struct ThermoModel {
  std::string name;
  std::map<std::string, std::string> mapping;
  RealBinding parameters;
  std::vector<Expr> state_equations;
  std::vector<Constraint> constraints;
  Expr internal_energy;
  /// log|psi| per ordering for the closed-form wave function
  /// psi = exp(M(tau) + i u/bbar); empty when no closed form is known.
  std::map<Ordering, Expr> log_modulus;
  DomainBox domain;

  double parameter(const std::string& n) const;
  /// Parameters plus tau, q.
  RealBinding binding(double tau, double q) const;
  bool operator==(const ThermoModel& o) const;
};

/// Default dimensionless parameter values.
const RealBinding& default_parameters();

/// ideal_gas, van_der_waals, photon_first_class, photon_isentropic.
/// Throws UnknownModel.
ThermoModel builtin(std::string_view name);
std::vector<std::string> builtin_names();

/// Throws SchemaError, ExpressionParseError, DomainError.
ThermoModel load_model(const nlohmann::json& doc);
ThermoModel load_model_text(std::string_view text);
nlohmann::json to_json(const ThermoModel& m);

/// Throws DomainError outside the box.
double internal_energy(const ThermoModel& m, double tau, double q);

}  // namespace thermoquant::models
