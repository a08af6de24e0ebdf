#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conecert/fixed_point.hpp"

namespace conecert {

struct Constant {
  double value = std::numeric_limits<double>::quiet_NaN();
  Provenance provenance = Provenance::Sampled;
  bool present = false;
};

/// The theorem constants for one system, each tagged with provenance.
struct ConstantsReport {
  std::vector<Constant> M, H;     // per component
  std::vector<Constant> tau, xi;  // per component, user-supplied
  std::vector<bool> bounds_verified;  // verify_linear_bounds outcome per component
  std::vector<double> bounds_slack;
  double delta = 0.0;
  Provenance delta_provenance = Provenance::Sampled;
  double rho0 = 0.0;
  int i0 = 1;  // 1-based
  // operator-derived quantities (always discrete; recorded with the grid)
  std::vector<double> k1_norm, gamma_norm;
  double grid_h = 0.0;

  nlohmann::json to_json() const;
};

struct CertifyOptions {
  int samples_per_axis = 33;
  int bound_samples_per_axis = 65;
  std::optional<double> rho0;  // default: 0.01 * min rho
  std::optional<int> i0;       // default: override in problem file, else 1
  bool repro_rounding = false; // round constants up at the third decimal first
  bool spectral_refine = true; // attach a coarse-grid Richardson estimate of r
  double spectral_tol = 1e-10;
  int spectral_max_iter = 2000;
};

/// Collect M, H, delta (and tau/xi verification when supplied) for a system:
/// user overrides win and are marked rigorous, everything else is sampled.
ConstantsReport gather_constants(const SystemOperator& sys, const CertifyOptions& options = {});

struct Condition {
  std::string name;
  bool satisfied = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool numeric = true;  // false for qualitative conditions (finite/positivity)
  std::string note;
};

struct Certificate {
  std::string kind;     // "existence" | "nonexistence"
  std::string verdict;  // "pass" | "advisory" | "fail" | "not-applicable"
  std::string system;
  std::vector<double> lambda, eta;
  ConstantsReport constants;
  std::vector<Condition> conditions;
  std::vector<std::string> caveats;
  // existence: spectral data for condition (d1)
  double mu_i0 = 0.0;
  double r_h = 0.0;
  double r_2h = 0.0;
  double r_extrapolated = 0.0;
  // nonexistence: contraction factor max_i (lambda tau ||K1|| + eta xi ||gamma||)
  double contraction_factor = 0.0;
  // localization statement carried by a passing existence certificate
  std::string localization;

  bool all_conditions_satisfied() const;
  nlohmann::json to_json() const;
};

/// Existence conditions (a)-(d): nonnegativity of f, delta on the small box,
/// finite H, the spectral inequality mu_{i0}/delta <= lambda_{i0} and the
/// per-component box inequality lambda M ||K1|| + eta H ||gamma|| <= rho.
Certificate certify_existence(const SystemOperator& sys, const ConstantsReport& constants,
                              const CertifyOptions& options = {});

/// Non-existence: verified linear bounds plus the strict per-component
/// inequality lambda tau ||K1|| + eta xi ||gamma|| < 1.
Certificate certify_nonexistence(const SystemOperator& sys, const ConstantsReport& constants,
                                 const CertifyOptions& options = {});

struct SweepAxis {
  std::string name;  // "lambda<k>" or "eta<k>", 1-based component
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> values;  // one per axis, same order
  std::string verdict;
  std::string binding;  // condition with the smallest margin
};

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<SweepRow> rows;  // row-major over the axes, first axis fastest
};

/// Evaluate one certificate per lattice point of the axes; constants are
/// computed once and shared. `threads` <= 0 means sequential.
SweepResult sweep_region(const SystemOperator& sys, const ConstantsReport& constants,
                         const std::string& kind, std::vector<SweepAxis> axes,
                         const CertifyOptions& options = {}, int threads = 0);

}  // namespace conecert
