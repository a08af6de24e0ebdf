#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conecert/functionals.hpp"
#include "conecert/solution_operator.hpp"

namespace conecert {

/// Optional user-supplied constants (majorants and non-existence slopes).
struct ConstantOverrides {
  std::vector<std::optional<double>> M, H, tau, xi;
  std::optional<double> delta;
  std::optional<double> rho0;
  std::optional<int> i0;  // 1-based

  void resize(int n) {
    M.resize(static_cast<size_t>(n));
    H.resize(static_cast<size_t>(n));
    tau.resize(static_cast<size_t>(n));
    xi.resize(static_cast<size_t>(n));
  }
};

struct ComponentSpec {
  EllipticSpec L;
  BoundarySpec B;
  Expr f;            // f_i(x, u)
  FunctionalSpec h;  // h_i[u]
  double rho = 1.0;
  double lambda = 0.0;
  double eta = 0.0;
};

/// Full problem description: domain, n coupled components, parameters and
/// optional constant overrides.
struct SystemSpec {
  std::string name;
  DomainSpec domain;
  int n = 0;
  std::vector<ComponentSpec> components;
  ConstantOverrides constants;

  std::vector<double> box() const {
    std::vector<double> rho;
    for (const auto& c : components) rho.push_back(c.rho);
    return rho;
  }
  double min_rho() const;
};

/// The assembled machinery of T + Gamma on one grid: per-component
/// discretizations, solution operators and functional evaluators.
class SystemOperator {
 public:
  SystemOperator(SystemSpec spec, std::shared_ptr<const Grid> grid,
                 SolverConfig solver = {});

  const SystemSpec& spec() const { return spec_; }
  SystemSpec& mutable_spec() { return spec_; }  // lambda/eta re-pointing only
  const std::shared_ptr<const Grid>& grid() const { return grid_; }
  const SolverConfig& solver_config() const { return solver_; }
  int n() const { return spec_.n; }
  const SolutionOperator& op(int i) const { return ops_[static_cast<size_t>(i)]; }
  const FunctionalEvaluator& functional(int i) const { return evals_[static_cast<size_t>(i)]; }
  const EllipticValidation& validation(int i) const {
    return validations_[static_cast<size_t>(i)];
  }
  bool outside_paper_geometry() const {
    return spec_.domain.kind == DomainSpec::Kind::Rectangle;
  }

  /// (T + Gamma)(u) = (lambda_i K_i F_i(u) + eta_i h_i[u] gamma_i)_i.
  /// With check_box, inputs outside [0, rho_i] (tolerance 1e-9) raise OutOfBox.
  std::vector<GridFunction> apply_TGamma(std::span<const GridFunction> u,
                                         bool check_box = true) const;

  std::vector<GridFunction> zero_state() const;
  std::vector<GridFunction> constant_state(std::span<const double> c) const;

  /// Product norm max_i ||u_i||_inf.
  static double product_norm(std::span<const GridFunction> u);

 private:
  SystemSpec spec_;
  std::shared_ptr<const Grid> grid_;
  SolverConfig solver_;
  std::vector<SolutionOperator> ops_;
  std::vector<FunctionalEvaluator> evals_;
  std::vector<EllipticValidation> validations_;
};

struct PicardOptions {
  double theta = 0.5;   // damping in (0, 1]
  double tol = 1e-8;    // residual ||u - (T+Gamma)u|| in the product norm
  int max_iter = 2000;
};

struct TraceStep {
  double norm = 0.0;
  double residual = 0.0;
  bool box_violation = false;  // pre-clamp overshoot this step
};

enum class PicardStatus { Converged, MaxIter, Diverged };

const char* picard_status_name(PicardStatus s);

struct PicardResult {
  std::vector<GridFunction> u;
  std::vector<TraceStep> trace;
  PicardStatus status = PicardStatus::MaxIter;
  double residual = 0.0;
  long clamp_events = 0;
};

/// Damped Picard iteration u <- (1-theta) u + theta (T+Gamma)u with node-wise
/// clamping to [0, rho_i]; clamp events are recorded.
PicardResult picard_solve(const SystemOperator& sys, std::span<const GridFunction> u0,
                          const PicardOptions& options = {});

struct MultiStartResult {
  std::vector<PicardResult> runs;         // one per start, in start order
  std::vector<size_t> distinct_converged; // indices of pairwise-distinct fixed points
};

/// Corner rho, midpoint rho/2, and seeded random starts; fixed points are
/// distinct when their sup-distance exceeds 100 * tol.
MultiStartResult multi_start_solve(const SystemOperator& sys, const PicardOptions& options,
                                   int random_starts, uint64_t seed);

std::vector<GridFunction> random_state(const SystemOperator& sys, uint64_t seed);

struct SolutionReport {
  double residual = 0.0;
  bool in_box = false;
  double norm = 0.0;
  std::vector<double> component_norms;
  bool nonzero = false;          // ||u|| > tol
  bool localization_ok = false;  // rho0 <= ||u|| and ||u_i|| <= rho_i
};

SolutionReport verify_solution(const SystemOperator& sys, std::span<const GridFunction> u,
                               double tol, double rho0);

}  // namespace conecert
