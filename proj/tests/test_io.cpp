#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"
#include "mpim/io.hpp"

using namespace mpim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mpim_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("expression CSV round trip") {
  ExpressionMatrix x;
  x.values.resize(3, 2);
  x.values << 1.5, -2, 0.125, 3e-7, 1e10, 4;
  x.gene_ids = {"TP53", "BRCA1"};
  x.cohorts = {"normal", "cancer", "normal"};
  const fs::path p = scratch("expr.csv");
  write_expression_csv(p, x);
  const ExpressionMatrix y = read_expression_csv(p);
  CHECK(y.values == x.values);
  CHECK(y.gene_ids == x.gene_ids);
  CHECK(y.cohorts == x.cohorts);
}

TEST_CASE("expression CSV with the cohort column in the middle") {
  const fs::path p = scratch("expr_mid.csv");
  write_text(p, "g1,group,g2\n1,a,2\n3,b,4\n");
  const ExpressionMatrix x = read_expression_csv(p, "group");
  CHECK(x.gene_ids == std::vector<std::string>{"g1", "g2"});
  CHECK(x.cohorts == std::vector<std::string>{"a", "b"});
  CHECK(x.values(1, 1) == 4.0);

}

TEST_CASE("malformed expression CSV") {
  const fs::path p = scratch("bad.csv");
  write_text(p, "g1,g2\n1,x\n");
  CHECK_THROWS_AS(read_expression_csv(p), DomainError);
  write_text(p, "g1,g2\n1\n");
  CHECK_THROWS_AS(read_expression_csv(p), DomainError);
  write_text(p, "g1,g2\n1,\n");
  CHECK_THROWS_AS(read_expression_csv(p), DomainError);
  write_text(p, "");
  CHECK_THROWS_AS(read_expression_csv(p), DomainError);
  CHECK_THROWS_AS(read_expression_csv(scratch("missing.csv")), IoError);
}

TEST_CASE("group CSV") {
  const fs::path p = scratch("groups.csv");
  write_text(p, "gene,group\n# comment\nA,K1\nC,K2\n\n");
  CHECK(read_group_csv(p, {"A", "B", "C"}) == std::vector<std::string>{"K1", "B", "K2"});
  CHECK_THROWS_AS(read_group_csv(scratch("nope.csv"), {"A"}), IoError);
}

TEST_CASE("trace CSV and JSON") {
  SolveTrace t;
  RefinementRecord a;
  a.refinement = 0;
  a.residual_norm = 2.0;
  a.error_norm = 1.0;
  a.high_precision_matvecs = 1;
  RefinementRecord b;
  b.refinement = 1;
  b.residual_norm = 1e-6;
  b.analog_matvecs = 5;
  b.high_precision_matvecs = 2;
  t.records = {a, b};
  t.converged = true;
  t.refinements_used = 1;

  CHECK(trace_csv(t) ==
        "refinement,residual_norm,error_norm,relative_error,error_inf,analog_matvecs,high_precision_matvecs\n"
        "0,2,1,,,0,1\n"
        "1,9.9999999999999995e-07,,,,5,2\n");
  const fs::path p = scratch("trace.csv");
  write_trace_csv(p, t);
  CHECK(read_text(p) == trace_csv(t));

  const nlohmann::json j = t;
  CHECK(j["converged"] == true);
  CHECK(j["high_precision_matvecs"] == 2);
  CHECK(j["records"][1]["error_norm"].is_null());

  const fs::path jp = scratch("trace.json");
  write_json(jp, j);
  CHECK(read_json(jp) == j);
  write_text(jp, "{ not json");
  CHECK_THROWS_AS(read_json(jp), ConfigError);
}

TEST_CASE("matrix CSV") {
  Eigen::Matrix2d m;
  m << 1, 0.5, -0.25, 2;
  const fs::path p = scratch("m.csv");
  write_matrix_csv(p, m, {"x", "y"});
  CHECK(read_text(p) == "gene,x,y\nx,1,0.5\ny,-0.25,2\n");
}
