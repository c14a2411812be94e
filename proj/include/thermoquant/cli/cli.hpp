#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "thermoquant/models/model.hpp"

namespace thermoquant::cli {

enum class Format { json, csv, markdown };
/// Accepts "json", "csv", "md", "markdown".
Format parse_format(std::string_view s);

enum class MetricChoice { standard, theta };
MetricChoice parse_metric(std::string_view s);

struct Tolerances {
  double algebra = 1e-10;
  double residual_analytic = 1e-8;
  double residual_fd = 1e-5;
  double ratio_spread = 1e-6;
  double normalization = 1e-8;
  double expectation = 1e-9;
  double theta_expectation = 1e-10;
  double defect = 1e-9;
  double uncertainty_slack = 1e-8;
  double flow = 1e-6;
  double metric_norm = 1e-8;
  double quasi_hermitian = 1e-6;
  double equivalence = 1e-8;
  double characteristics = 1e-10;
  double decay = 1e-3;
  double convergence_ratio = 0.4;
};

struct RunConfig {
  std::string model_source;
  models::Ordering ordering = models::Ordering::symmetric;
  std::size_t n_tau = 201;
  std::size_t n_q = 201;
  MetricChoice metric = MetricChoice::standard;
  std::string out_dir = ".";
  Format format = Format::json;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// Evolution step; the convergence check also runs at h_tau / 2.
  double h_tau = 0.01;
  std::size_t uncertainty_states = 50;
  std::size_t flow_samples = 10;
  Tolerances tol;

  /// Throws DomainError for non-positive tolerances or steps, GridTooCoarse
  /// for grids below 5 nodes.
  void validate() const;
};

/// "201x201" -> (201, 201). Throws DomainError.
std::pair<std::size_t, std::size_t> parse_grid(std::string_view s);

struct Check {
  std::string id;
  nlohmann::json value;
  nlohmann::json expected;
  double tolerance = 0;
  /// "abs_diff": |value - expected| <= tolerance; "below": value < tolerance;
  /// "at_least": value >= -tolerance; "exact": value == expected.
  std::string comparison;
  /// Empty for report-only entries.
  std::optional<bool> pass;

  nlohmann::json to_json() const;
};

struct Report {
  std::string command;
  std::string model;
  std::optional<models::Ordering> ordering;
  std::vector<Check> checks;
  /// File names relative to the output directory.
  std::vector<std::string> artifacts;
  nlohmann::json sections = nlohmann::json::object();
  bool undetermined = false;

  bool hard_pass() const;
  /// 0 all hard checks pass, 2 a hard check fails or a classification is undetermined.
  int exit_code() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Builtin name or path to a model JSON file. Throws UnknownModel, SchemaError.
models::ThermoModel load(const std::string& source);

Report cmd_analyze(const RunConfig& cfg);
Report cmd_verify(const RunConfig& cfg);
Report cmd_evolve(const RunConfig& cfg);

/// Writes report.{json,csv,md} into the output directory; returns its path.
std::string write_report(const Report& r, const RunConfig& cfg);

}  // namespace thermoquant::cli
