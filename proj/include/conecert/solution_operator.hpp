#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "conecert/elliptic.hpp"

namespace conecert {

struct SolverConfig {
  enum class Method { Auto, Direct, Iterative };
  Method method = Method::Auto;
  double tolerance = 1e-10;     // relative residual
  int max_iterations = 20000;   // iterative solvers
  int direct_node_limit = 40000;
};

/// Discrete solution operator K of (L, homogeneous B): K g solves L u = g,
/// B u = 0. Caches the factorization, e = K(1), the boundary lift gamma
/// (L gamma = 0, B gamma = 1) and, on demand, the principal eigenpair.
class SolutionOperator {
 public:
  SolutionOperator(DiscreteOperator op, SolverConfig config = {});
  ~SolutionOperator();
  SolutionOperator(SolutionOperator&&) noexcept;
  SolutionOperator& operator=(SolutionOperator&&) noexcept;

  const DiscreteOperator& op() const { return op_; }
  const std::shared_ptr<const Grid>& grid() const { return op_.grid; }
  const SolverConfig& config() const { return config_; }
  const std::string& solver_name() const { return solver_name_; }

  /// K g. Throws SolverDiverged when the linear solve fails its residual check.
  GridFunction apply(const GridFunction& g) const;

  /// Solve with an explicit right-hand side vector (homogeneous boundary).
  GridFunction solve_rhs(const Eigen::VectorXd& rhs) const;

  /// Solution with zero interior source and boundary data g at the grid's
  /// boundary points.
  GridFunction lift(const Eigen::VectorXd& boundary_data) const;

  const GridFunction& K1() const { return e_; }
  double norm_K1() const { return e_.values.size() ? e_.values.maxCoeff() : 0.0; }

  const GridFunction& gamma() const;
  double norm_gamma() const;

  struct Spectral {
    double r = 0.0;   // spectral radius of K
    double mu = 0.0;  // 1 / r
    GridFunction phi; // principal eigenfunction, phi >= 0, sup-norm 1
    int iterations = 0;
    double residual = 0.0;  // ||mu K phi - phi||_inf at exit
  };

  /// Power iteration from the strictly positive start phi = 1; requires the
  /// sign-certified operator. Result is cached; a repeated call with a larger
  /// tolerance reuses the cache.
  const Spectral& spectral(double tol = 1e-10, int max_iter = 500) const;

  /// (alpha_g, beta_g) with alpha_g e <= K g <= beta_g e over nodes where
  /// e is above the division guard.
  std::pair<double, double> e_positivity(const GridFunction& g) const;

 private:
  DiscreteOperator op_;
  SolverConfig config_;
  std::string solver_name_;
  GridFunction e_;
  mutable std::optional<GridFunction> gamma_;
  mutable std::optional<Spectral> spectral_;

  struct Backend;
  std::unique_ptr<Backend> backend_;

  Eigen::VectorXd solve_vec(const Eigen::VectorXd& rhs) const;
};

}  // namespace conecert
