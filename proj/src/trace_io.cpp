#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"
#include "mpim/io.hpp"

namespace mpim {
namespace {

template <class T>
void put_optional(std::ostream& out, const std::optional<T>& v) {
  if (v) out << *v;
}

}  // namespace

std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "refinement,residual_norm,error_norm,relative_error,error_inf,analog_matvecs,high_precision_matvecs\n";
  for (const auto& r : trace.records) {
    out << r.refinement << ',' << r.residual_norm << ',';
    put_optional(out, r.error_norm);
    out << ',';
    put_optional(out, r.relative_error);
    out << ',';
    put_optional(out, r.error_inf);
    out << ',' << r.analog_matvecs << ',' << r.high_precision_matvecs << '\n';
  }
  return out.str();
}

void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << trace_csv(trace);
}

void to_json(nlohmann::json& j, const RefinementRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = {{"refinement", r.refinement},
       {"residual_norm", r.residual_norm},
       {"error_norm", opt(r.error_norm)},
       {"relative_error", opt(r.relative_error)},
       {"error_inf", opt(r.error_inf)},
       {"analog_matvecs", r.analog_matvecs},
       {"high_precision_matvecs", r.high_precision_matvecs}};
}

void to_json(nlohmann::json& j, const SolveTrace& t) {
  j = {{"converged", t.converged},
       {"diverged", t.diverged},
       {"refinements_used", t.refinements_used},
       {"analog_matvecs", t.analog_matvecs()},
       {"high_precision_matvecs", t.high_precision_matvecs()},
       {"records", t.records}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace mpim
