#include <iostream>

#include "CLI11.hpp"
#include "thermoquant/cli/cli.hpp"
#include "thermoquant/errors.hpp"

namespace tq = thermoquant;

int main(int argc, char** argv) {
  CLI::App app{"Canonical quantization toolkit for equilibrium thermodynamics"};
  app.require_subcommand(1);

  tq::cli::RunConfig cfg;
  std::string ordering = "symmetric", grid = "201x201", metric = "standard", format = "json";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", cfg.model_source, "Builtin model name or model JSON path")->required();
    sub->add_option("--ordering", ordering, "symmetric|qp|pq")->capture_default_str();
    sub->add_option("--grid", grid, "NtauxNq")->capture_default_str();
    sub->add_option("--metric", metric, "standard|theta")->capture_default_str();
    sub->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", format, "json|csv|md")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Seed for probes and on-shell samples")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  };
  auto* analyze = app.add_subcommand("analyze", "Classify the constraints");
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  auto* evolve = app.add_subcommand("evolve", "Integrate the entropic evolution");
  for (auto* s : {analyze, verify, evolve}) add_common(s);
  evolve->add_option("--h-tau", cfg.h_tau, "Evolution step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    cfg.ordering = tq::models::parse_ordering(ordering);
    std::tie(cfg.n_tau, cfg.n_q) = tq::cli::parse_grid(grid);
    cfg.metric = tq::cli::parse_metric(metric);
    cfg.format = tq::cli::parse_format(format);
    tq::cli::Report report;
    if (analyze->parsed()) {
      report = tq::cli::cmd_analyze(cfg);
    } else if (verify->parsed()) {
      report = tq::cli::cmd_verify(cfg);
    } else {
      report = tq::cli::cmd_evolve(cfg);
    }
    std::string path = tq::cli::write_report(report, cfg);
    for (const auto& c : report.checks) {
      std::cout << (c.pass ? (*c.pass ? "pass   " : "FAIL   ") : "report ") << c.id << " = "
                << (c.value.is_string() ? c.value.get<std::string>() : c.value.dump()) << "\n";
    }
    if (report.undetermined) std::cout << "classification undetermined\n";
    std::cout << "report: " << path << "\n";
    return report.exit_code();
  } catch (const tq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
