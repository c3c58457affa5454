#include "mpim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mpim/crossbar.hpp"
#include "mpim/errors.hpp"
#include "mpim/io.hpp"
#include "mpim/problems.hpp"
#include "mpim/rng.hpp"

namespace mpim {
namespace {

const char* to_string(InnerKind k) {
  switch (k) {
    case InnerKind::Cg: return "cg";
    case InnerKind::Gmres: return "gmres";
    case InnerKind::Auto: break;
  }
  return "auto";
}

InnerKind inner_from_string(const std::string& s) {
  if (s == "cg") return InnerKind::Cg;
  if (s == "gmres") return InnerKind::Gmres;
  if (s == "auto") return InnerKind::Auto;
  throw ConfigError("solver.inner must be one of auto, cg, gmres (got '" + s + "')");
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    try {
      it->get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

void require_budget(std::size_t needed, std::size_t budget) {
  if (needed > budget)
    throw ConfigError("encoding requires " + std::to_string(needed) + " devices but the array budget is " +
                      std::to_string(budget));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::defaults_for(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  if (kind == ExperimentKind::GeneNetwork) {
    c.solver.inner = InnerKind::Gmres;
    c.solver.tol = 1e-3;
    c.solver.m = 5;
    c.solver.k_per_element = 4;
  }
  return c;
}

NoiseModel ExperimentConfig::seeded_noise(std::string_view purpose) const {
  NoiseModel m = noise;
  m.seed = rng::split(seed, purpose);
  return m;
}

void ExperimentConfig::validate() const {
  try {
    noise.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(solver.tol > 0.0)) fail("solver.tol must be positive");
  if (solver.m < 1) fail("solver.m must be >= 1");
  if (solver.k_per_element < 1) fail("solver.k must be >= 1");
  if (solver.band_halfwidth && *solver.band_halfwidth < 0) fail("solver.band_halfwidth must be >= 0");
  if (solver.max_refinements < 1) fail("solver.max_refinements must be >= 1");
  if (array_budget == 0) fail("array_budget must be positive");
  switch (kind) {
    case ExperimentKind::ScalarMult:
      if (scalar.k_values.empty()) fail("scalar.k_values must not be empty");
      for (int k : scalar.k_values)
        if (k < 1) fail("scalar.k_values entries must be >= 1");
      if (scalar.pairs < 1) fail("scalar.pairs must be >= 1");
      if (scalar.repetitions < 1) fail("scalar.repetitions must be >= 1");
      if (scalar.histogram_bins < 1) fail("scalar.histogram_bins must be >= 1");
      break;
    case ExperimentKind::SolveModel:
      if (n < 1) fail("problem.n must be >= 1");
      break;
    case ExperimentKind::GeneNetwork:
      if (gene.csv_path && !std::filesystem::exists(*gene.csv_path))
        fail("expression file not found: " + gene.csv_path->string());
      if (gene.groups_path && !std::filesystem::exists(*gene.groups_path))
        fail("group file not found: " + gene.groups_path->string());
      if (!(gene.percentile > 0.0 && gene.percentile < 100.0)) fail("gene.percentile must lie in (0, 100)");
      if (!gene.csv_path && (gene.synthetic.genes < 2 || gene.synthetic.samples < 2))
        fail("synthetic cohort needs >= 2 genes and >= 2 samples");
      break;
  }
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ScalarMult: return "scalar-mult";
    case ExperimentKind::SolveModel: return "solve-model";
    case ExperimentKind::GeneNetwork: return "gene-network";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "scalar-mult") return ExperimentKind::ScalarMult;
  if (s == "solve-model") return ExperimentKind::SolveModel;
  if (s == "gene-network") return ExperimentKind::GeneNetwork;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  auto opt_path = [](const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
  };
  j = nlohmann::json{
      {"experiment", to_string(c.kind)},
      {"seed", c.seed},
      {"array_budget", c.array_budget},
      {"noise", c.noise},
      {"solver",
       {{"tol", c.solver.tol},
        {"m", c.solver.m},
        {"k", c.solver.k_per_element},
        {"band_halfwidth", c.solver.band_halfwidth ? nlohmann::json(*c.solver.band_halfwidth) : nlohmann::json(nullptr)},
        {"max_refinements", c.solver.max_refinements},
        {"inner", to_string(c.solver.inner)},
        {"calibrate", c.solver.calibrate},
        {"exact_matvec", c.solver.exact_matvec}}},
      {"problem",
       {{"n", c.n},
        {"k_values", c.scalar.k_values},
        {"pairs", c.scalar.pairs},
        {"repetitions", c.scalar.repetitions},
        {"histogram_bins", c.scalar.histogram_bins},
        {"csv_path", opt_path(c.gene.csv_path)},
        {"groups_path", opt_path(c.gene.groups_path)},
        {"cohort_column", c.gene.cohort_column},
        {"reference_label", c.gene.reference_label},
        {"case_label", c.gene.case_label},
        {"percentile", c.gene.percentile},
        {"equalize_cohorts", c.gene.equalize_cohorts},
        {"synthetic_genes", c.gene.synthetic.genes},
        {"synthetic_samples", c.gene.synthetic.samples}}},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentKind kind) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c = ExperimentConfig::defaults_for(kind);
  get_if(j, "seed", c.seed);
  get_if(j, "array_budget", c.array_budget);
  if (auto it = j.find("noise"); it != j.end()) {
    try {
      from_json(*it, c.noise);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("noise block: ") + e.what());
    }
  }
  if (auto it = j.find("solver"); it != j.end()) {
    const auto& s = *it;
    get_if(s, "tol", c.solver.tol);
    get_if(s, "m", c.solver.m);
    get_if(s, "k", c.solver.k_per_element);
    get_if(s, "max_refinements", c.solver.max_refinements);
    get_if(s, "calibrate", c.solver.calibrate);
    get_if(s, "exact_matvec", c.solver.exact_matvec);
    if (auto b = s.find("band_halfwidth"); b != s.end() && !b->is_null()) {
      int band = 0;
      get_if(s, "band_halfwidth", band);
      c.solver.band_halfwidth = band;
    }
    if (s.contains("inner")) {
      std::string inner;
      get_if(s, "inner", inner);
      c.solver.inner = inner_from_string(inner);
    }
  }
  if (auto it = j.find("problem"); it != j.end()) {
    const auto& p = *it;
    get_if(p, "n", c.n);
    get_if(p, "k_values", c.scalar.k_values);
    get_if(p, "pairs", c.scalar.pairs);
    get_if(p, "repetitions", c.scalar.repetitions);
    get_if(p, "histogram_bins", c.scalar.histogram_bins);
    get_if(p, "cohort_column", c.gene.cohort_column);
    get_if(p, "reference_label", c.gene.reference_label);
    get_if(p, "case_label", c.gene.case_label);
    get_if(p, "percentile", c.gene.percentile);
    get_if(p, "equalize_cohorts", c.gene.equalize_cohorts);
    get_if(p, "synthetic_genes", c.gene.synthetic.genes);
    get_if(p, "synthetic_samples", c.gene.synthetic.samples);
    for (auto [key, field] : {std::pair{"csv_path", &c.gene.csv_path}, std::pair{"groups_path", &c.gene.groups_path}}) {
      if (auto it2 = p.find(key); it2 != p.end() && !it2->is_null()) {
        std::string path;
        get_if(p, key, path);
        *field = path;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scalar multiplication

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_slope: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("fit_slope: x values are all equal");
  return sxy / sxx;
}

ScalarMultReport run_scalar_mult(const ExperimentConfig& cfg) {
  cfg.validate();
  const NoiseModel model = cfg.seeded_noise("scalar-devices");
  const std::uint64_t pair_key = rng::split(cfg.seed, "scalar-pairs");

  ScalarMultReport report;
  std::vector<std::vector<double>> errors(cfg.scalar.k_values.size());
  for (int rep = 0; rep < cfg.scalar.repetitions; ++rep) {
    rng::Stream pairs(rng::combine(pair_key, static_cast<std::uint64_t>(rep)));
    for (int n = 0; n < cfg.scalar.pairs; ++n) {
      const double beta = pairs.uniform();
      const double gamma = pairs.uniform();
      const double exact = beta * gamma;
      for (std::size_t ki = 0; ki < cfg.scalar.k_values.size(); ++ki) {
        // Fresh devices for every (repetition, pair, K).
        std::uint64_t stream = rng::combine(model.seed, static_cast<std::uint64_t>(rep));
        stream = rng::combine(stream, static_cast<std::uint64_t>(n));
        stream = rng::combine(stream, ki);
        errors[ki].push_back(scalar_multiply(beta, gamma, cfg.scalar.k_values[ki], model, stream) - exact);
      }
    }
  }

  double hist_range = 0.0;
  for (const auto& e : errors)
    for (double x : e) hist_range = std::max(hist_range, std::abs(x));
  if (hist_range == 0.0) hist_range = 1.0;

  std::vector<double> log_k, log_std;
  for (std::size_t ki = 0; ki < errors.size(); ++ki) {
    const auto& e = errors[ki];
    ScalarKStats st;
    st.k = cfg.scalar.k_values[ki];
    const double n = static_cast<double>(e.size());
    st.mean_error = std::accumulate(e.begin(), e.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : e) {
      ss += (x - st.mean_error) * (x - st.mean_error);
      st.max_abs_error = std::max(st.max_abs_error, std::abs(x));
    }
    st.std_error = e.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    const int bins = cfg.scalar.histogram_bins;
    st.histogram_counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b <= bins; ++b) st.histogram_edges.push_back(-hist_range + 2.0 * hist_range * b / bins);
    for (double x : e) {
      auto b = static_cast<int>(std::floor((x + hist_range) / (2.0 * hist_range) * bins));
      st.histogram_counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    if (st.std_error > 0.0) {
      log_k.push_back(std::log(static_cast<double>(st.k)));
      log_std.push_back(std::log(st.std_error));
    }
    report.per_k.push_back(std::move(st));
  }
  report.loglog_slope = log_k.size() >= 2 ? fit_slope(log_k, log_std) : 0.0;
  return report;
}

nlohmann::json ScalarMultReport::to_json() const {
  nlohmann::json j;
  j["loglog_slope"] = loglog_slope;
  auto& rows = j["per_k"] = nlohmann::json::array();
  for (const auto& s : per_k)
    rows.push_back({{"k", s.k},
                    {"mean_error", s.mean_error},
                    {"std_error", s.std_error},
                    {"max_abs_error", s.max_abs_error},
                    {"histogram_edges", s.histogram_edges},
                    {"histogram_counts", s.histogram_counts}});
  return j;
}

// ---------------------------------------------------------------------------
// Model covariance solve

std::optional<int> cg_iterations_to_accuracy(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                             const Eigen::VectorXd& x_exact, double target_error, int max_iters) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd ap = a * p;
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    if ((x - x_exact).norm() <= target_error) return it;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    if (rr_next == 0.0) return (x - x_exact).norm() <= target_error ? std::optional<int>(it) : std::nullopt;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return std::nullopt;
}

SolveModelReport run_solve_model(const ExperimentConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.n;
  SolveModelReport report;

  const Eigen::MatrixXd a = model_covariance(n);
  const Eigen::VectorXd b = generate_rhs(n, rng::split(cfg.seed, "rhs"));
  const Eigen::VectorXd x_exact = a.partialPivLu().solve(b);

  InnerKind kind = cfg.solver.inner;
  const bool symmetric = is_symmetric(a);
  if (kind == InnerKind::Auto) kind = symmetric ? InnerKind::Cg : InnerKind::Gmres;
  if (kind == InnerKind::Cg && !symmetric)
    report.warnings.push_back("CG selected for a non-symmetric matrix; convergence is not guaranteed");
  report.inner = to_string(kind);

  std::optional<CrossbarEncoding> enc;
  std::unique_ptr<LinearOperator> op;
  if (cfg.solver.exact_matvec) {
    Eigen::MatrixXd coded = a;
    if (cfg.solver.band_halfwidth)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
          if (std::abs(i - j) > *cfg.solver.band_halfwidth) coded(i, j) = 0.0;
    op = std::make_unique<DenseOperator>(std::move(coded));
  } else {
    require_budget(count_devices(a, cfg.solver.k_per_element, cfg.solver.band_halfwidth), cfg.array_budget);
    enc.emplace(encode_matrix(a, cfg.solver.k_per_element, cfg.solver.band_halfwidth, cfg.seeded_noise("array")));
    report.device_count = enc->device_count();
    report.unconverged_devices = enc->unconverged_devices();
    op = std::make_unique<CrossbarOperator>(*enc, cfg.solver.calibrate);
  }

  std::unique_ptr<InnerSolver> inner;
  if (kind == InnerKind::Cg)
    inner = std::make_unique<CgInnerSolver>(*op, cfg.solver.m);
  else
    inner = std::make_unique<GmresInnerSolver>(*op, cfg.solver.m, false);

  RefineOptions ro;
  ro.tol = cfg.solver.tol;
  ro.max_refinements = cfg.solver.max_refinements;
  ro.reference = x_exact;
  SolveResult res = iterative_refine(LinearProblem{a, b, std::nullopt}, *inner, ro);

  report.final_error_2 = (res.x - x_exact).norm();
  report.final_error_inf = (res.x - x_exact).lpNorm<Eigen::Infinity>();
  report.baseline_cg_iterations =
      cg_iterations_to_accuracy(a, b, x_exact, report.final_error_2, static_cast<int>(10 * n));
  report.trace = std::move(res.trace);
  if (enc) report.encoding = enc->metadata();
  return report;
}

nlohmann::json SolveModelReport::to_json() const {
  nlohmann::json j;
  j["converged"] = trace.converged;
  j["diverged"] = trace.diverged;
  j["refinements_used"] = trace.refinements_used;
  j["inner"] = inner;
  j["device_count"] = device_count;
  j["unconverged_devices"] = unconverged_devices;
  j["final_residual"] = trace.final_residual();
  j["final_error_2"] = final_error_2;
  j["final_error_inf"] = final_error_inf;
  j["analog_matvecs"] = trace.analog_matvecs();
  j["high_precision_matvecs"] = trace.high_precision_matvecs();
  j["baseline_cg_iterations"] = baseline_cg_iterations ? nlohmann::json(*baseline_cg_iterations) : nlohmann::json(nullptr);
  j["warnings"] = warnings;
  j["encoding"] = encoding;
  j["trace"] = trace;
  return j;
}

// ---------------------------------------------------------------------------
// Gene network

namespace {

CohortResult solve_cohort(const ExperimentConfig& cfg, const ExpressionMatrix& x, const std::string& label) {
  CohortResult out;
  out.label = label;
  out.covariance = sample_covariance(x);
  InverseCovarianceOptions opts;
  opts.model = cfg.seeded_noise("array-" + label);
  opts.k_per_element = cfg.solver.k_per_element;
  opts.m = cfg.solver.m;
  opts.tol = cfg.solver.tol;
  opts.max_refinements = cfg.solver.max_refinements;
  opts.calibrate = cfg.solver.calibrate;
  opts.exact_matvec = cfg.solver.exact_matvec;
  if (!opts.exact_matvec) {
    const PreconditionSplit split = precondition_split(out.covariance);
    require_budget(count_devices(split.offdiag, opts.k_per_element, std::nullopt), cfg.array_budget);
  }
  InverseCovarianceResult inv = solve_inverse_columns(out.covariance, opts);
  out.sigma = std::move(inv.sigma);
  out.traces = std::move(inv.traces);
  out.failed_columns = std::move(inv.failed_columns);
  if (out.failed_columns.empty()) out.partial_corr = partial_correlation(out.sigma);
  return out;
}

}  // namespace

GeneNetworkReport run_gene_network(const ExperimentConfig& cfg) {
  cfg.validate();
  ExpressionMatrix reference, case_x;
  if (cfg.gene.csv_path) {
    const ExpressionMatrix all = read_expression_csv(*cfg.gene.csv_path, cfg.gene.cohort_column);
    reference = all.cohort(cfg.gene.reference_label);
    case_x = all.cohort(cfg.gene.case_label);
    if (reference.samples() < 2) throw ConfigError("reference cohort '" + cfg.gene.reference_label + "' has < 2 samples");
    if (case_x.samples() < 2) throw ConfigError("case cohort '" + cfg.gene.case_label + "' has < 2 samples");
  } else {
    const Eigen::Index g = cfg.gene.synthetic.genes;
    reference = sample_gaussian_cohort(make_sparse_precision(g, rng::split(cfg.seed, "precision-reference")),
                                       cfg.gene.synthetic.samples, rng::split(cfg.seed, "samples-reference"),
                                       cfg.gene.reference_label);
    case_x = sample_gaussian_cohort(make_sparse_precision(g, rng::split(cfg.seed, "precision-case")),
                                    cfg.gene.synthetic.samples, rng::split(cfg.seed, "samples-case"), cfg.gene.case_label);
  }
  if (cfg.gene.equalize_cohorts) {
    const Eigen::Index n = std::min(reference.samples(), case_x.samples());
    if (reference.samples() > n) reference = reference.subsample(n, rng::split(cfg.seed, "subsample-reference"));
    if (case_x.samples() > n) case_x = case_x.subsample(n, rng::split(cfg.seed, "subsample-case"));
  }

  GeneNetworkReport report;
  report.gene_ids = reference.gene_ids;
  report.groups = cfg.gene.groups_path ? read_group_csv(*cfg.gene.groups_path, report.gene_ids) : report.gene_ids;
  report.reference = solve_cohort(cfg, reference, cfg.gene.reference_label);
  report.case_cohort = solve_cohort(cfg, case_x, cfg.gene.case_label);
  if (report.all_converged()) {
    const auto& ref = report.reference.partial_corr;
    report.reference_network = build_interactome(ref, ref, report.gene_ids, report.groups, cfg.gene.percentile);
    report.case_network =
        build_interactome(report.case_cohort.partial_corr, ref, report.gene_ids, report.groups, cfg.gene.percentile);
  }
  return report;
}

nlohmann::json GeneNetworkReport::to_json() const {
  auto cohort_json = [](const CohortResult& c) {
    nlohmann::json j;
    j["label"] = c.label;
    j["failed_columns"] = c.failed_columns;
    std::vector<int> refinements;
    for (const auto& t : c.traces) refinements.push_back(t.refinements_used);
    j["refinements_per_column"] = refinements;
    return j;
  };
  nlohmann::json j;
  j["all_converged"] = all_converged();
  j["reference"] = cohort_json(reference);
  j["case"] = cohort_json(case_cohort);
  if (all_converged()) {
    j["reference_network"] = reference_network;
    j["case_network"] = case_network;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::filesystem::path prepare_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir) throw ConfigError("no output directory configured");
  std::error_code ec;
  std::filesystem::create_directories(*cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir->string() + ": " + ec.message());
  write_json(*cfg.out_dir / "config.json", nlohmann::json(cfg));
  return *cfg.out_dir;
}

}  // namespace

void write_outputs(const ExperimentConfig& cfg, const ScalarMultReport& report) {
  const auto dir = prepare_dir(cfg);
  write_json(dir / "summary.json", report.to_json());
  std::ofstream out(dir / "std_table.csv");
  if (!out) throw IoError("cannot write std_table.csv");
  out.precision(17);
  out << "k,mean_error,std_error,max_abs_error\n";
  for (const auto& s : report.per_k) out << s.k << ',' << s.mean_error << ',' << s.std_error << ',' << s.max_abs_error << '\n';
  std::ofstream hist(dir / "histograms.csv");
  if (!hist) throw IoError("cannot write histograms.csv");
  hist.precision(17);
  hist << "k,bin_low,bin_high,count\n";
  for (const auto& s : report.per_k)
    for (std::size_t b = 0; b < s.histogram_counts.size(); ++b)
      hist << s.k << ',' << s.histogram_edges[b] << ',' << s.histogram_edges[b + 1] << ',' << s.histogram_counts[b] << '\n';
}

void write_outputs(const ExperimentConfig& cfg, const SolveModelReport& report) {
  const auto dir = prepare_dir(cfg);
  write_json(dir / "summary.json", report.to_json());
  write_trace_csv(dir / "trace.csv", report.trace);
}

void write_outputs(const ExperimentConfig& cfg, const GeneNetworkReport& report) {
  const auto dir = prepare_dir(cfg);
  write_json(dir / "summary.json", report.to_json());
  for (const CohortResult* c : {&report.reference, &report.case_cohort}) {
    const auto cdir = dir / c->label;
    std::filesystem::create_directories(cdir);
    for (std::size_t col = 0; col < c->traces.size(); ++col)
      write_trace_csv(cdir / ("trace_col" + std::to_string(col) + ".csv"), c->traces[col]);
    write_matrix_csv(cdir / "covariance.csv", c->covariance, report.gene_ids);
    write_matrix_csv(cdir / "inverse_covariance.csv", c->sigma, report.gene_ids);
    if (c->partial_corr.size() > 0) write_matrix_csv(cdir / "partial_correlation.csv", c->partial_corr, report.gene_ids);
  }
  if (report.all_converged()) {
    write_json(dir / "network_reference.json", nlohmann::json(report.reference_network));
    write_json(dir / "network_case.json", nlohmann::json(report.case_network));
  }
}

}  // namespace mpim
