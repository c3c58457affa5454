#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mpim/gene_network.hpp"
#include "mpim/noise_model.hpp"
#include "mpim/refinement.hpp"

namespace mpim {

/// Devices available on one simulated array.
inline constexpr std::size_t kDefaultArrayBudget = 1'000'000;

enum class ExperimentKind { ScalarMult, SolveModel, GeneNetwork };
enum class InnerKind { Auto, Cg, Gmres };

struct SolverBlock {
  double tol = 1e-5;
  int m = 5;
  int k_per_element = 4;
  std::optional<int> band_halfwidth;
  int max_refinements = 200;
  InnerKind inner = InnerKind::Auto;
  bool calibrate = true;
  /// Inner matvecs in exact double precision instead of the crossbar.
  bool exact_matvec = false;
};

struct ScalarBlock {
  std::vector<int> k_values{1, 2, 4, 8, 16};
  int pairs = 1024;
  int repetitions = 1;
  int histogram_bins = 41;
};

struct SyntheticCohortBlock {
  int genes = 20;
  int samples = 5000;
};

struct GeneBlock {
  std::optional<std::filesystem::path> csv_path;
  std::optional<std::filesystem::path> groups_path;
  std::string cohort_column = "cohort";
  std::string reference_label = "normal";
  std::string case_label = "cancer";
  double percentile = 90.0;
  bool equalize_cohorts = true;
  /// Used when no CSV is given.
  SyntheticCohortBlock synthetic;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SolveModel;
  NoiseModel noise;
  SolverBlock solver;
  ScalarBlock scalar;
  GeneBlock gene;
  int n = 500;
  std::uint64_t seed = 1;
  std::size_t array_budget = kDefaultArrayBudget;
  std::optional<std::filesystem::path> out_dir;

  /// Defaults for the given experiment (e.g. GMRES, m=5, tol=1e-3 for the
  /// gene network).
  static ExperimentConfig defaults_for(ExperimentKind kind);
  /// Throws ConfigError on invalid parameters or missing files.
  void validate() const;
  /// Noise model whose seed is derived from the master seed.
  NoiseModel seeded_noise(std::string_view purpose) const;
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Reads a config block; missing keys take the defaults of `kind`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentKind kind);

// ---------------------------------------------------------------------------

struct ScalarKStats {
  int k = 1;
  double mean_error = 0.0;
  double std_error = 0.0;
  double max_abs_error = 0.0;
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
};

struct ScalarMultReport {
  std::vector<ScalarKStats> per_k;
  double loglog_slope = 0.0;
  nlohmann::json to_json() const;
};

/// Estimates beta*gamma for random pairs on fresh devices for every K and
/// fits log(std of error) against log(K).
ScalarMultReport run_scalar_mult(const ExperimentConfig& cfg);

struct SolveModelReport {
  SolveTrace trace;
  std::string inner;
  std::size_t device_count = 0;
  std::size_t unconverged_devices = 0;
  double final_error_2 = 0.0;
  double final_error_inf = 0.0;
  /// Iterations of a plain double-precision CG run until its error matches
  /// final_error_2; nullopt if it never does within 10 N iterations.
  std::optional<int> baseline_cg_iterations;
  std::vector<std::string> warnings;
  nlohmann::json encoding;
  nlohmann::json to_json() const;
};

/// Builds the model covariance problem, solves it with mixed precision and
/// compares against a direct double-precision solve.
SolveModelReport run_solve_model(const ExperimentConfig& cfg);

/// Double-precision CG iterations needed for ||x_k - x_exact||_2 <= target.
std::optional<int> cg_iterations_to_accuracy(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                             const Eigen::VectorXd& x_exact, double target_error, int max_iters);

struct CohortResult {
  std::string label;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd partial_corr;
  std::vector<SolveTrace> traces;
  std::vector<int> failed_columns;
};

struct GeneNetworkReport {
  std::vector<std::string> gene_ids;
  std::vector<std::string> groups;
  CohortResult reference;
  CohortResult case_cohort;
  GeneNetwork reference_network;
  GeneNetwork case_network;
  bool all_converged() const { return reference.failed_columns.empty() && case_cohort.failed_columns.empty(); }
  nlohmann::json to_json() const;
};

GeneNetworkReport run_gene_network(const ExperimentConfig& cfg);

/// Writes config snapshot, summary and traces into cfg.out_dir.
void write_outputs(const ExperimentConfig& cfg, const ScalarMultReport& report);
void write_outputs(const ExperimentConfig& cfg, const SolveModelReport& report);
void write_outputs(const ExperimentConfig& cfg, const GeneNetworkReport& report);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mpim
