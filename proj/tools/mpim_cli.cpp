// mpim: experiment harness for the mixed-precision in-memory solver.
//
//   mpim scalar-mult  [--config cfg.json] [--seed N] [--out DIR] [--noise-off]
//   mpim solve-model  ...
//   mpim gene-network ...
//
// Exit codes: 0 success, 2 configuration or usage error, 3 non-convergence,
// 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"
#include "mpim/experiments.hpp"
#include "mpim/io.hpp"
#include "mpim/refinement.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNotConverged = 3, kIoError = 4 };

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool noise_off = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "master seed (overrides the config)");
  sub->add_option("--out", args.out, "output directory (one per run)");
  sub->add_flag("--noise-off", args.noise_off, "disable programming/read noise, drift and ADC; linear f(V)");
}

mpim::ExperimentConfig load_config(mpim::ExperimentKind kind, const CommonArgs& args) {
  mpim::ExperimentConfig cfg = args.config.empty() ? mpim::ExperimentConfig::defaults_for(kind)
                                                   : mpim::config_from_json(mpim::read_json(args.config), kind);
  // Data paths in a config file are relative to that file.
  if (!args.config.empty()) {
    const std::filesystem::path base = std::filesystem::path(args.config).parent_path();
    for (auto* p : {&cfg.gene.csv_path, &cfg.gene.groups_path})
      if (*p && p->value().is_relative()) *p = base / p->value();
  }
  cfg.kind = kind;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.noise_off) cfg.noise = mpim::NoiseModel::noiseless();
  cfg.validate();
  return cfg;
}

int run(mpim::ExperimentKind kind, const CommonArgs& args) {
  const mpim::ExperimentConfig cfg = load_config(kind, args);
  switch (kind) {
    case mpim::ExperimentKind::ScalarMult: {
      const auto report = mpim::run_scalar_mult(cfg);
      if (cfg.out_dir) mpim::write_outputs(cfg, report);
      std::cout << "K      std(error)\n";
      for (const auto& s : report.per_k) std::cout << s.k << "      " << s.std_error << '\n';
      std::cout << "log-log slope: " << report.loglog_slope << '\n';
      return kOk;
    }
    case mpim::ExperimentKind::SolveModel: {
      const auto report = mpim::run_solve_model(cfg);
      if (cfg.out_dir) mpim::write_outputs(cfg, report);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "N=" << cfg.n << " inner=" << report.inner << " devices=" << report.device_count
                << " refinements=" << report.trace.refinements_used
                << " converged=" << (report.trace.converged ? "yes" : "no")
                << " residual=" << report.trace.final_residual() << " error_2=" << report.final_error_2
                << " hp_matvecs=" << report.trace.high_precision_matvecs()
                << " analog_matvecs=" << report.trace.analog_matvecs() << '\n';
      return report.trace.converged ? kOk : kNotConverged;
    }
    case mpim::ExperimentKind::GeneNetwork: {
      const auto report = mpim::run_gene_network(cfg);
      if (cfg.out_dir) mpim::write_outputs(cfg, report);
      for (const auto* c : {&report.reference, &report.case_cohort}) {
        std::cout << c->label << ": " << c->traces.size() << " systems";
        if (c->failed_columns.empty()) {
          std::cout << ", all converged\n";
        } else {
          std::cout << ", failed columns:";
          for (int col : c->failed_columns) std::cout << ' ' << col;
          std::cout << '\n';
        }
      }
      if (!report.all_converged()) return kNotConverged;
      std::cout << "threshold=" << report.reference_network.threshold
                << " reference_edges=" << report.reference_network.edges.size()
                << " case_edges=" << report.case_network.edges.size() << '\n';
      return kOk;
    }
  }
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-precision in-memory computing experiments"};
  app.require_subcommand(1);

  CommonArgs scalar_args, solve_args, gene_args;
  auto* scalar = app.add_subcommand("scalar-mult", "scalar multiplication error vs. devices averaged (K)");
  auto* solve = app.add_subcommand("solve-model", "solve the model covariance system with mixed precision");
  auto* gene = app.add_subcommand("gene-network", "partial-correlation interactome from expression data");
  add_common(scalar, scalar_args);
  add_common(solve, solve_args);
  add_common(gene, gene_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (scalar->parsed()) return run(mpim::ExperimentKind::ScalarMult, scalar_args);
    if (solve->parsed()) return run(mpim::ExperimentKind::SolveModel, solve_args);
    return run(mpim::ExperimentKind::GeneNetwork, gene_args);
  } catch (const mpim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const mpim::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const mpim::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const mpim::ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const mpim::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kNotConverged;
  }
}
