#include "mpim/gene_network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"

namespace mpim {

Eigen::MatrixXd partial_correlation(const Eigen::MatrixXd& sigma) {
  const Eigen::Index g = sigma.rows();
  if (sigma.cols() != g) throw DomainError("partial_correlation: matrix must be square");
  for (Eigen::Index i = 0; i < g; ++i)
    if (!(sigma(i, i) > 0.0)) throw DomainError("partial_correlation: nonpositive diagonal entry");
  Eigen::MatrixXd rho(g, g);
  for (Eigen::Index i = 0; i < g; ++i) {
    rho(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < g; ++j) {
      const double s = 0.5 * (sigma(i, j) + sigma(j, i));
      rho(i, j) = rho(j, i) = -s / std::sqrt(sigma(i, i) * sigma(j, j));
    }
  }
  return rho;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile: empty input");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile: p outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> offdiag_magnitudes(const Eigen::MatrixXd& rho) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rho.cols(); ++j) out.push_back(std::abs(rho(i, j)));
  return out;
}

GeneNetwork build_interactome(const Eigen::MatrixXd& rho_case, const Eigen::MatrixXd& rho_reference,
                              const std::vector<std::string>& gene_ids, const std::vector<std::string>& groups,
                              double percentile_p) {
  const Eigen::Index g = rho_case.rows();
  if (rho_case.cols() != g || rho_reference.rows() != g || rho_reference.cols() != g)
    throw DomainError("build_interactome: matrices must be square and of equal shape");
  if (!(percentile_p > 0.0 && percentile_p < 100.0)) throw DomainError("build_interactome: percentile outside (0, 100)");
  const std::vector<double> ref = offdiag_magnitudes(rho_reference);
  if (ref.empty()) throw DomainError("build_interactome: reference has no off-diagonal entries");
  if (!gene_ids.empty() && static_cast<Eigen::Index>(gene_ids.size()) != g)
    throw DomainError("build_interactome: gene id count does not match matrix size");
  if (!groups.empty() && static_cast<Eigen::Index>(groups.size()) != g)
    throw DomainError("build_interactome: group count does not match matrix size");

  GeneNetwork net;
  net.partial_corr = rho_case;
  net.threshold = percentile(ref, percentile_p);
  for (Eigen::Index i = 0; i < g; ++i) {
    net.gene_ids.push_back(gene_ids.empty() ? "G" + std::to_string(i + 1) : gene_ids[static_cast<std::size_t>(i)]);
    net.groups.push_back(groups.empty() ? net.gene_ids.back() : groups[static_cast<std::size_t>(i)]);
  }

  // Unordered group pair -> (sum, count).
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = i + 1; j < g; ++j) {
      const double r = rho_case(i, j);
      if (!(std::abs(r) > net.threshold)) continue;
      net.edges.push_back({static_cast<int>(i), static_cast<int>(j), r});
      auto key = std::minmax(net.groups[static_cast<std::size_t>(i)], net.groups[static_cast<std::size_t>(j)]);
      auto& slot = acc[{key.first, key.second}];
      slot.first += r;
      slot.second += 1;
    }
  }
  for (const auto& [key, sc] : acc)
    net.group_strengths.push_back({key.first, key.second, sc.first / sc.second, sc.second});
  return net;
}

void to_json(nlohmann::json& j, const GeneNetwork& net) {
  j = nlohmann::json::object();
  j["threshold"] = net.threshold;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < net.gene_ids.size(); ++i)
    nodes.push_back({{"index", i}, {"gene", net.gene_ids[i]}, {"group", net.groups[i]}});
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : net.edges)
    edges.push_back({{"source", net.gene_ids[static_cast<std::size_t>(e.i)]},
                     {"target", net.gene_ids[static_cast<std::size_t>(e.j)]},
                     {"weight", e.weight},
                     {"sign", e.weight > 0 ? 1 : -1}});
  auto& gs = j["group_strengths"] = nlohmann::json::array();
  for (const auto& s : net.group_strengths)
    gs.push_back({{"group_a", s.group_a}, {"group_b", s.group_b}, {"strength", s.strength}, {"pairs", s.pairs}});
}

}  // namespace mpim
