#include "conecert/repro.hpp"

#include <cstdio>
#include <sstream>

#include "conecert/certificates.hpp"
#include "conecert/problem.hpp"

namespace conecert {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const ReproRow& ReproReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  raise(ErrorCode::Internal, "repro row '" + name + "' not found");
}

nlohmann::json ReproReport::to_json() const {
  nlohmann::json j;
  j["example"] = example;
  j["grid_h"] = grid_h;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"name", r.name}, {"value", r.value}, {"rounded", r.rounded}});
  j["lines"] = lines;
  return j;
}

std::string ReproReport::format_text() const {
  std::ostringstream os;
  os << "reproduction: " << example << " (h = " << grid_h << ")\n";
  for (const auto& r : rows)
    os << "  " << r.name << " = " << r.rounded << "   (full: " << num(r.value) << ")\n";
  for (const auto& line : lines) os << "  " << line << "\n";
  return os.str();
}

ReproReport repro(const std::string& name, std::optional<double> h_override) {
  if (name != "example1" && name != "example2")
    raise(ErrorCode::ValidationError, "unknown reproduction target '" + name + "'");

  const LoadedProblem problem = load_problem_text(embedded_problem_text(name));
  const SystemOperator sys = problem.build(h_override);
  CertifyOptions options;
  options.repro_rounding = true;
  const ConstantsReport constants = gather_constants(sys, options);

  ReproReport rep;
  rep.example = name;
  rep.grid_h = sys.grid()->spacing();

  auto add = [&](const std::string& rname, double v) {
    rep.rows.push_back({rname, v, round_up_3_string(v)});
  };

  const int n = sys.n();
  for (int i = 0; i < n; ++i) add("K1_norm_" + std::to_string(i + 1), constants.k1_norm[static_cast<size_t>(i)]);
  for (int i = 0; i < n; ++i) add("gamma_norm_" + std::to_string(i + 1), constants.gamma_norm[static_cast<size_t>(i)]);

  if (name == "example1") {
    for (int i = 0; i < n; ++i)
      add("M" + std::to_string(i + 1), constants.M[static_cast<size_t>(i)].value);
    for (int i = 0; i < n; ++i)
      add("H" + std::to_string(i + 1), constants.H[static_cast<size_t>(i)].value);
    for (int i = 0; i < n; ++i)
      add("rho" + std::to_string(i + 1), sys.spec().components[static_cast<size_t>(i)].rho);

    // Box inequalities with the rounded coefficients, as in the worked table.
    for (int i = 0; i < n; ++i) {
      const std::string M = round_up_3_string(constants.M[static_cast<size_t>(i)].value);
      const std::string H = round_up_3_string(constants.H[static_cast<size_t>(i)].value);
      const std::string k1 = round_up_3_string(constants.k1_norm[static_cast<size_t>(i)]);
      const std::string gn = round_up_3_string(constants.gamma_norm[static_cast<size_t>(i)]);
      const std::string rho = round_up_3_string(sys.spec().components[static_cast<size_t>(i)].rho);
      rep.lines.push_back(M + "*" + k1 + "*lambda" + std::to_string(i + 1) + " + " + H + "*" +
                          gn + "*eta" + std::to_string(i + 1) + " <= " + rho);
    }

    // Sample point: the lambda/eta stored in the bundled problem file.
    const Certificate cert = certify_existence(sys, constants, options);
    std::string point = "sample point: lambda = (";
    for (int i = 0; i < n; ++i) point += (i ? ", " : "") + num(cert.lambda[static_cast<size_t>(i)]);
    point += "), eta = (";
    for (int i = 0; i < n; ++i) point += (i ? ", " : "") + num(cert.eta[static_cast<size_t>(i)]);
    point += ") -> " + cert.verdict;
    rep.lines.push_back(point);
    for (const auto& c : cert.conditions) {
      if (c.name.rfind("d2.", 0) != 0) continue;
      rep.lines.push_back(c.name + ": lhs = " + num(c.lhs) + ", rhs = " + num(c.rhs) +
                          ", margin = " + num(c.margin) +
                          (c.satisfied ? " (satisfied)" : " (violated)"));
    }
  } else {
    for (int i = 0; i < n; ++i)
      add("tau" + std::to_string(i + 1), constants.tau[static_cast<size_t>(i)].value);
    for (int i = 0; i < n; ++i)
      add("xi" + std::to_string(i + 1), constants.xi[static_cast<size_t>(i)].value);
    for (int i = 0; i < n; ++i) {
      rep.lines.push_back("linear bounds component " + std::to_string(i + 1) + ": " +
                          (constants.bounds_verified[static_cast<size_t>(i)] ? "verified" : "VIOLATED") +
                          " (min slack " + num(constants.bounds_slack[static_cast<size_t>(i)]) + ")");
    }
    // The example's reduced inequality lines: tau_i lambda_i + xi_i eta_i < 1
    // (conservative: the operator norm factor ||K(1)|| <= 1 is dropped).
    for (int i = 0; i < n; ++i) {
      const std::string tau = round_up_3_string(constants.tau[static_cast<size_t>(i)].value);
      const std::string xi = round_up_3_string(constants.xi[static_cast<size_t>(i)].value);
      rep.lines.push_back(tau + "*lambda" + std::to_string(i + 1) + " + " + xi + "*eta" +
                          std::to_string(i + 1) + " < 1");
    }
    // Theorem-form inequalities with the discrete operator norms.
    const Certificate cert = certify_nonexistence(sys, constants, options);
    for (const auto& c : cert.conditions) {
      if (c.name.rfind("contraction_inequality_", 0) != 0) continue;
      rep.lines.push_back(c.name + ": lhs = " + num(c.lhs) + " < 1 " +
                          (c.satisfied ? "(satisfied)" : "(violated)"));
    }
    rep.lines.push_back("verdict at bundled (lambda, eta): " + cert.verdict +
                        ", contraction factor c = " + num(cert.contraction_factor));
  }
  return rep;
}

}  // namespace conecert
