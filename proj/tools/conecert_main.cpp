#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conecert/certificates.hpp"
#include "conecert/problem.hpp"
#include "conecert/repro.hpp"

namespace {

using nlohmann::json;
using namespace conecert;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kMaxIter = 2,
  kDiverged = 3,
  kCertFail = 4,
  kAdvisory = 5,
  kUsage = 64,
};

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct GlobalOptions {
  std::optional<double> grid_h;
  std::optional<double> tol;
  uint64_t seed = 1;
  std::string output;
  std::string format = "json";
};

void add_global_flags(CLI::App* cmd, GlobalOptions& opts, bool with_tol = true) {
  cmd->add_option("--grid-h", opts.grid_h, "Override the grid spacing from the problem file");
  if (with_tol)
    cmd->add_option("--tol", opts.tol, "Override the linear solver tolerance");
  cmd->add_option("--seed", opts.seed, "Seed for random starts");
  cmd->add_option("--output", opts.output, "Write the primary artifact to this path");
  cmd->add_option("--format", opts.format, "Stdout format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

LoadedProblem load_with(const std::string& path, const GlobalOptions& opts) {
  LoadedProblem problem = load_problem(path);
  if (opts.tol) problem.solver.tolerance = *opts.tol;
  if (opts.grid_h) problem.grid.h = *opts.grid_h;
  return problem;
}

std::vector<double> parse_range(const std::string& text) {
  // "start:end:step" inclusive, or a comma-separated list.
  std::vector<double> out;
  const auto c1 = text.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
      raise(ErrorCode::ValidationError, "range must be start:end:step: " + text);
    const double start = std::stod(text.substr(0, c1));
    const double end = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (!(step > 0.0)) raise(ErrorCode::ValidationError, "range step must be positive");
    for (double v = start; v <= end + 1e-9 * step; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<double> parse_vector(const std::string& text, int n, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (static_cast<int>(out.size()) == 1 && n > 1) out.assign(static_cast<size_t>(n), out[0]);
  if (static_cast<int>(out.size()) != n)
    raise(ErrorCode::ValidationError,
          std::string(what) + " needs " + std::to_string(n) + " comma-separated values");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::Internal, "cannot write '" + path + "'");
  out << text;
}

std::string field_csv(const Grid& grid, std::span<const GridFunction> fields,
                      std::span<const std::string> names) {
  std::string csv = "x1,x2";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  for (int k = 0; k < grid.node_count(); ++k) {
    const Point2 p = grid.node(k);
    csv += g17(p.x) + "," + g17(p.y);
    for (const auto& f : fields) csv += "," + g17(f.values[k]);
    csv += "\n";
  }
  return csv;
}

int sweep_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned threads = std::min(hw, 4u);
  if (const char* env = std::getenv("CONECERT_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
  }
  return static_cast<int>(threads);
}

int run_validate(const std::string& path, const GlobalOptions& opts) {
  const auto problem = load_with(path, opts);
  const auto sys = problem.build();
  json report;
  report["problem"] = problem.spec.name.empty() ? path : problem.spec.name;
  report["n"] = sys.n();
  report["grid"] = {{"h", sys.grid()->spacing()},
                    {"nodes", sys.grid()->node_count()},
                    {"boundary_points", sys.grid()->boundary_points().size()},
                    {"clamped_cuts", sys.grid()->clamped_cut_count()}};
  report["components"] = json::array();
  for (int i = 0; i < sys.n(); ++i) {
    json cj;
    cj["mu0"] = sys.validation(i).mu0;
    cj["m_matrix_certified"] = sys.op(i).op().m_matrix_certified;
    cj["symmetric"] = sys.op(i).op().symmetric;
    cj["solver"] = sys.op(i).solver_name();
    report["components"].push_back(cj);
  }
  if (sys.outside_paper_geometry())
    report["caveats"] = {"geometry outside paper hypotheses (rectangle corners)"};
  report["valid"] = true;
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int run_solve(const std::string& path, const GlobalOptions& opts, double theta, double tol,
              int max_iter, int starts) {
  const auto problem = load_with(path, opts);
  const auto sys = problem.build();
  PicardOptions poptions;
  poptions.theta = theta;
  poptions.tol = tol;
  poptions.max_iter = max_iter;
  const auto result = multi_start_solve(sys, poptions, starts, opts.seed);

  // Best run: first distinct converged one, otherwise the first run.
  size_t best = result.distinct_converged.empty() ? 0 : result.distinct_converged[0];
  const auto& run = result.runs[best];

  json report;
  report["status"] = picard_status_name(run.status);
  report["residual"] = run.residual;
  report["norm"] = SystemOperator::product_norm(run.u);
  json norms = json::array();
  for (const auto& ui : run.u) norms.push_back(ui.norm_inf());
  report["component_norms"] = norms;
  report["clamp_events"] = run.clamp_events;
  report["iterations"] = run.trace.size();
  report["distinct_fixed_points"] = result.distinct_converged.size();
  json runs = json::array();
  for (const auto& r : result.runs)
    runs.push_back({{"status", picard_status_name(r.status)},
                    {"residual", r.residual},
                    {"norm", SystemOperator::product_norm(r.u)},
                    {"iterations", r.trace.size()},
                    {"clamp_events", r.clamp_events}});
  report["runs"] = runs;
  const auto verification = verify_solution(sys, run.u, poptions.tol, 0.0);
  report["verification"] = {{"residual", verification.residual},
                            {"in_box", verification.in_box},
                            {"nonzero", verification.nonzero}};

  std::vector<std::string> names;
  for (int i = 0; i < sys.n(); ++i) names.push_back("u" + std::to_string(i + 1));
  const std::string csv = field_csv(*sys.grid(), run.u, names);
  if (!opts.output.empty()) write_text(opts.output, csv);
  if (opts.format == "csv")
    std::cout << csv;
  else
    std::cout << report.dump(2) << "\n";

  switch (run.status) {
    case PicardStatus::Converged: return kOk;
    case PicardStatus::MaxIter: return kMaxIter;
    case PicardStatus::Diverged: return kDiverged;
  }
  return kInternal;
}

int run_certify(const std::string& kind, const std::string& path, const GlobalOptions& opts,
                const std::string& lambda_text, const std::string& eta_text,
                std::optional<int> i0, std::optional<double> rho0, bool repro_rounding) {
  auto problem = load_with(path, opts);
  auto sys = problem.build();
  if (!lambda_text.empty()) {
    const auto lambda = parse_vector(lambda_text, sys.n(), "--lambda");
    for (int i = 0; i < sys.n(); ++i)
      sys.mutable_spec().components[static_cast<size_t>(i)].lambda = lambda[static_cast<size_t>(i)];
  }
  if (!eta_text.empty()) {
    const auto eta = parse_vector(eta_text, sys.n(), "--eta");
    for (int i = 0; i < sys.n(); ++i)
      sys.mutable_spec().components[static_cast<size_t>(i)].eta = eta[static_cast<size_t>(i)];
  }
  CertifyOptions options;
  options.i0 = i0;
  options.rho0 = rho0;
  options.repro_rounding = repro_rounding;
  const auto constants = gather_constants(sys, options);
  const Certificate cert = kind == "existence" ? certify_existence(sys, constants, options)
                                               : certify_nonexistence(sys, constants, options);
  const std::string text = cert.to_json().dump(2) + "\n";
  std::cout << text;
  if (!opts.output.empty()) write_text(opts.output, text);
  if (cert.verdict == "pass") return kOk;
  if (cert.verdict == "advisory") return kAdvisory;
  return kCertFail;
}

int run_region(const std::string& path, const GlobalOptions& opts, const std::string& kind,
               const std::vector<std::pair<std::string, std::string>>& axis_specs) {
  const auto problem = load_with(path, opts);
  const auto sys = problem.build();
  std::vector<SweepAxis> axes;
  for (const auto& [name, text] : axis_specs)
    if (!text.empty()) axes.push_back({name, parse_range(text)});
  if (axes.empty()) raise(ErrorCode::ValidationError, "region needs at least one swept axis");

  CertifyOptions options;
  const auto constants = gather_constants(sys, options);
  const auto sweep = sweep_region(sys, constants, kind, axes, options, sweep_threads());

  std::string csv;
  for (size_t a = 0; a < sweep.axes.size(); ++a) csv += (a ? "," : "") + sweep.axes[a].name;
  csv += ",verdict,binding\n";
  for (const auto& row : sweep.rows) {
    for (size_t a = 0; a < row.values.size(); ++a) csv += (a ? "," : "") + g17(row.values[a]);
    csv += "," + row.verdict + "," + row.binding + "\n";
  }
  if (!opts.output.empty())
    write_text(opts.output, csv);
  else
    std::cout << csv;
  return kOk;
}

int run_operator_info(const std::string& path, const GlobalOptions& opts) {
  const auto problem = load_with(path, opts);
  const auto sys = problem.build();
  json report;
  report["grid"] = {{"h", sys.grid()->spacing()}, {"nodes", sys.grid()->node_count()}};
  report["components"] = json::array();
  for (int i = 0; i < sys.n(); ++i) {
    const auto& K = sys.op(i);
    json cj;
    cj["K1_norm"] = K.norm_K1();
    cj["gamma_norm"] = K.norm_gamma();
    try {
      const auto& s = K.spectral(1e-10, 2000);
      cj["r"] = s.r;
      cj["mu"] = s.mu;
      cj["power_iterations"] = s.iterations;
      cj["eigen_residual"] = s.residual;
    } catch (const Error& e) {
      cj["r"] = nullptr;
      cj["mu"] = nullptr;
      cj["spectral_error"] = e.what();
    }
    report["components"].push_back(cj);

    if (!opts.output.empty()) {
      const std::string tag = "_" + std::to_string(i + 1) + ".csv";
      write_text(opts.output + "_K1" + tag,
                 field_csv(*sys.grid(), std::vector<GridFunction>{K.K1()},
                           std::vector<std::string>{"K1"}));
      write_text(opts.output + "_gamma" + tag,
                 field_csv(*sys.grid(), std::vector<GridFunction>{K.gamma()},
                           std::vector<std::string>{"gamma"}));
      try {
        write_text(opts.output + "_phi" + tag,
                   field_csv(*sys.grid(), std::vector<GridFunction>{K.spectral().phi},
                             std::vector<std::string>{"phi"}));
      } catch (const Error&) {
        // no principal eigenpair without the sign certificate
      }
    }
  }
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int run_repro(const std::string& name, const GlobalOptions& opts) {
  const auto report = repro(name, opts.grid_h);
  if (opts.format == "json")
    std::cout << report.to_json().dump(2) << "\n";
  else
    std::cout << report.format_text();
  if (!opts.output.empty()) write_text(opts.output, report.to_json().dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conecert: discretize elliptic systems with functional boundary conditions,\n"
               "solve the fixed-point problem and certify existence/non-existence regions"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::string path, kind, name;
  double theta = 0.5, ptol = 1e-8;
  int max_iter = 2000, starts = 3;
  std::optional<int> i0;
  std::optional<double> rho0;
  bool repro_rounding = false;
  std::string lambda_text, eta_text;
  std::vector<std::pair<std::string, std::string>> axis_specs{
      {"lambda1", ""}, {"lambda2", ""}, {"eta1", ""}, {"eta2", ""}};

  auto* validate = app.add_subcommand("validate", "Load a problem file and run all checks");
  validate->add_option("problem", path)->required();
  add_global_flags(validate, opts);

  auto* solve = app.add_subcommand("solve", "Damped Picard iteration for the fixed point");
  solve->add_option("problem", path)->required();
  solve->add_option("--theta", theta, "Damping factor in (0, 1]");
  solve->add_option("--tol", ptol, "Picard residual tolerance");
  solve->add_option("--solver-tol", opts.tol, "Override the linear solver tolerance");
  solve->add_option("--max-iter", max_iter);
  solve->add_option("--starts", starts, "Number of random starts besides corner/midpoint");
  add_global_flags(solve, opts, /*with_tol=*/false);

  auto* certify = app.add_subcommand("certify", "Check the theorem hypotheses at a point");
  certify->add_option("kind", kind)->check(CLI::IsMember({"existence", "nonexistence"}))
      ->required();
  certify->add_option("problem", path)->required();
  certify->add_option("--lambda", lambda_text, "Comma-separated lambda values");
  certify->add_option("--eta", eta_text, "Comma-separated eta values");
  certify->add_option("--i0", i0, "Component for the spectral condition (1-based)");
  certify->add_option("--rho0", rho0, "Small-box radius for the delta condition");
  certify->add_flag("--repro-rounding", repro_rounding,
                    "Round constants up at the third decimal first");
  add_global_flags(certify, opts);

  auto* region = app.add_subcommand("region", "Sweep a parameter region into a CSV table");
  region->add_option("problem", path)->required();
  region->add_option("--kind", kind)->check(CLI::IsMember({"existence", "nonexistence"}))
      ->required();
  for (auto& [axis_name, axis_text] : axis_specs)
    region->add_option("--" + axis_name, axis_text, "Range start:end:step or list");
  add_global_flags(region, opts);

  auto* info = app.add_subcommand("operator-info",
                                  "Report ||K(1)||, ||gamma||, r(K), mu and export fields");
  info->add_option("problem", path)->required();
  add_global_flags(info, opts);

  auto* rep = app.add_subcommand("repro", "Recompute a bundled example's constants table");
  rep->add_option("name", name)->required();
  add_global_flags(rep, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) return run_validate(path, opts);
    if (solve->parsed()) return run_solve(path, opts, theta, ptol, max_iter, starts);
    if (certify->parsed())
      return run_certify(kind, path, opts, lambda_text, eta_text, i0, rho0, repro_rounding);
    if (region->parsed()) return run_region(path, opts, kind, axis_specs);
    if (info->parsed()) return run_operator_info(path, opts);
    if (rep->parsed()) {
      if (name != "example1" && name != "example2") {
        std::cerr << "unknown reproduction target '" << name
                  << "' (expected example1 or example2)\n";
        return kUsage;
      }
      return run_repro(name, opts);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
