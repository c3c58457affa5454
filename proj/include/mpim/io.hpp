#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mpim/problems.hpp"
#include "mpim/refinement.hpp"

namespace mpim {

/// Genes-as-columns CSV with a header row. The column named `cohort_column`
/// (if present) holds the cohort label of each sample; every other column
/// must be numeric. Throws IoError on unreadable files, DomainError on
/// malformed content.
ExpressionMatrix read_expression_csv(const std::filesystem::path& path, const std::string& cohort_column = "cohort");

void write_expression_csv(const std::filesystem::path& path, const ExpressionMatrix& x,
                          const std::string& cohort_column = "cohort");

/// Two-column `gene,group` CSV (header optional). Returns the group of each
/// gene in `gene_ids` order; genes not listed map to themselves.
std::vector<std::string> read_group_csv(const std::filesystem::path& path, const std::vector<std::string>& gene_ids);

/// Matrix with a header row of labels and one labelled row per entry.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels);

/// One row per refinement: refinement, residual_norm, error_norm,
/// relative_error, error_inf, analog_matvecs, high_precision_matvecs.
void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace);
std::string trace_csv(const SolveTrace& trace);

void to_json(nlohmann::json& j, const RefinementRecord& r);
void to_json(nlohmann::json& j, const SolveTrace& t);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace mpim
