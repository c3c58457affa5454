#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mpim/errors.hpp"
#include "mpim/io.hpp"

namespace mpim {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw DomainError("CSV line " + std::to_string(line_no) + ": non-numeric value '" + s + "'");
  return v;
}

}  // namespace

ExpressionMatrix read_expression_csv(const std::filesystem::path& path, const std::string& cohort_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open expression file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DomainError("expression file " + path.string() + " is empty");
  const std::vector<std::string> header = split_csv_line(line);

  int cohort_idx = -1;
  ExpressionMatrix x;
  std::vector<int> gene_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == cohort_column) {
      cohort_idx = static_cast<int>(c);
    } else {
      gene_cols.push_back(static_cast<int>(c));
      x.gene_ids.push_back(header[c]);
    }
  }
  if (gene_cols.empty()) throw DomainError("expression file has no gene columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DomainError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(gene_cols.size());
    for (int c : gene_cols) {
      if (cells[static_cast<std::size_t>(c)].empty())
        throw DomainError("CSV line " + std::to_string(line_no) + ": missing value");
      row.push_back(parse_number(cells[static_cast<std::size_t>(c)], line_no));
    }
    rows.push_back(std::move(row));
    if (cohort_idx >= 0) x.cohorts.push_back(cells[static_cast<std::size_t>(cohort_idx)]);
  }
  x.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(gene_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < gene_cols.size(); ++c)
      x.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return x;
}

void write_expression_csv(const std::filesystem::path& path, const ExpressionMatrix& x,
                          const std::string& cohort_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  const bool with_cohort = !x.cohorts.empty();
  if (with_cohort) out << cohort_column << ',';
  for (std::size_t g = 0; g < x.gene_ids.size(); ++g) out << (g ? "," : "") << x.gene_ids[g];
  out << '\n';
  for (Eigen::Index s = 0; s < x.samples(); ++s) {
    if (with_cohort) out << x.cohorts[static_cast<std::size_t>(s)] << ',';
    for (Eigen::Index g = 0; g < x.genes(); ++g) out << (g ? "," : "") << x.values(s, g);
    out << '\n';
  }
}

std::vector<std::string> read_group_csv(const std::filesystem::path& path, const std::vector<std::string>& gene_ids) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open group file " + path.string());
  std::map<std::string, std::string> group_of;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split_csv_line(t);
    if (cells.size() < 2) throw DomainError("group file line '" + t + "' needs gene,group");
    if (cells[0] == "gene" && cells[1] == "group") continue;
    group_of[cells[0]] = cells[1];
  }
  std::vector<std::string> out;
  out.reserve(gene_ids.size());
  for (const auto& g : gene_ids) {
    auto it = group_of.find(g);
    out.push_back(it == group_of.end() ? g : it->second);
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "gene";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
    out << '\n';
  }
}

}  // namespace mpim
