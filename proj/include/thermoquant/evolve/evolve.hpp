#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "thermoquant/quantize/operator.hpp"
#include "thermoquant/wavefield/grid.hpp"

namespace thermoquant::evolve {

using quantize::DifferentialOperator;
using symcore::Complex;
using symcore::RealBinding;

enum class Scheme { implicit_midpoint, characteristics };
const char* to_string(Scheme s);

/// What to do with characteristic foot points outside the q-interval:
///  extrapolate: cubic extrapolation of the sampled initial field;
///  evaluate: call the initial function there (it may throw DomainError);
///  error: throw FootPointOutOfDomain.
/// Foot points inside the interval use cubic interpolation of the samples,
/// except under `evaluate`, which calls the initial function everywhere.
enum class FootPointRule { extrapolate, evaluate, error };

/// h = (q p + p q)/(2 kB) = q p/kB - i bbar/(2 kB)
DifferentialOperator ideal_gas_generator();

struct EvolutionConfig {
  DifferentialOperator generator = ideal_gas_generator();
  RealBinding params{{"kB", 1.0}, {"bbar", 1.0}};
  double tau0 = 0.2;
  double tau1 = 1.2;
  double h_tau = 0.01;
  wavefield::Axis q = wavefield::Axis::make(0.5, 2.0, 201, wavefield::Scheme::gauss_legendre);
  Scheme scheme = Scheme::implicit_midpoint;
  FootPointRule foot = FootPointRule::extrapolate;
  /// Characteristic tracing step (RK4).
  double trace_step = 1e-3;
};

struct Snapshot {
  double tau;
  Eigen::VectorXcd values;
};

struct Trajectory {
  wavefield::Axis q;
  std::vector<Snapshot> snapshots;
  double kB = 1;
};

/// Integrates i bbar d(psi)/d(tau) = h psi, i.e. psi_tau = -(i/bbar) h psi,
/// on the reduced (phi2-enforced) surface. Throws UnsupportedGenerator,
/// FootPointOutOfDomain, DomainError.
Trajectory evolve(const std::function<Complex(double)>& psi0, const EvolutionConfig& cfg);

struct NormPoint {
  double tau;
  double p_standard;
  double p_theta;  // e^(tau/kB) * P
};
std::vector<NormPoint> norm_series(const Trajectory& t);

/// max over snapshots and nodes of |psi - exact| / max |exact|.
double max_relative_error(const Trajectory& t, const std::function<Complex(double, double)>& exact);

/// max over consecutive snapshots of |d ln P/d tau - rate|.
double decay_rate_deviation(const Trajectory& t, double rate);

/// Columns tau, q, re, im.
void write_trajectory_csv(const Trajectory& t, const std::string& path);
/// Columns tau, P_standard, P_theta.
void write_norm_series_csv(const std::vector<NormPoint>& s, const std::string& path);

}  // namespace thermoquant::evolve
