#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace mpim {

/// rho_ij = -S_ij / sqrt(S_ii S_jj) off the diagonal, 1 on it. The
/// off-diagonal numerator uses the symmetric part of S.
Eigen::MatrixXd partial_correlation(const Eigen::MatrixXd& sigma);

/// Linear-interpolation percentile (p in [0, 100]) of `values`.
double percentile(std::vector<double> values, double p);

/// |rho_ij| for i < j.
std::vector<double> offdiag_magnitudes(const Eigen::MatrixXd& rho);

struct NetworkEdge {
  int i = 0;
  int j = 0;  // i < j
  double weight = 0.0;
};

struct GroupStrength {
  std::string group_a;
  std::string group_b;
  double strength = 0.0;  // mean rho over qualifying pairs
  int pairs = 0;
};

struct GeneNetwork {
  Eigen::MatrixXd partial_corr;
  double threshold = 0.0;
  std::vector<std::string> gene_ids;
  std::vector<std::string> groups;  // group label per gene
  std::vector<NetworkEdge> edges;
  std::vector<GroupStrength> group_strengths;
};

/// Threshold tau = `percentile` of the reference's off-diagonal |rho|; edges
/// are the case pairs with |rho| > tau; group strengths average rho over the
/// qualifying pairs of each group pair. `groups` may be empty (each gene is
/// then its own group).
GeneNetwork build_interactome(const Eigen::MatrixXd& rho_case, const Eigen::MatrixXd& rho_reference,
                              const std::vector<std::string>& gene_ids, const std::vector<std::string>& groups,
                              double percentile_p);

void to_json(nlohmann::json& j, const GeneNetwork& net);

}  // namespace mpim
