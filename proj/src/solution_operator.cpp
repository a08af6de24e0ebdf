#include "conecert/solution_operator.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace conecert {

struct SolutionOperator::Backend {
  enum class Kind { LDLT, LU, CG, BiCGStab } kind = Kind::LU;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> bicgstab;
};

SolutionOperator::SolutionOperator(DiscreteOperator op, SolverConfig config)
    : op_(std::move(op)), config_(config), backend_(std::make_unique<Backend>()) {
  const int n = op_.grid->node_count();
  const bool direct = config_.method == SolverConfig::Method::Direct ||
                      (config_.method == SolverConfig::Method::Auto &&
                       n <= config_.direct_node_limit);
  if (direct) {
    if (op_.symmetric) {
      backend_->ldlt.compute(op_.matrix);
      if (backend_->ldlt.info() == Eigen::Success) {
        backend_->kind = Backend::Kind::LDLT;
        solver_name_ = "direct-ldlt";
      }
    }
    if (solver_name_.empty()) {
      backend_->lu.compute(op_.matrix);
      if (backend_->lu.info() != Eigen::Success)
        raise(ErrorCode::SolverDiverged, "sparse LU factorization failed");
      backend_->kind = Backend::Kind::LU;
      solver_name_ = "direct-lu";
    }
  } else if (op_.symmetric) {
    backend_->cg.setTolerance(config_.tolerance);
    backend_->cg.setMaxIterations(config_.max_iterations);
    backend_->cg.compute(op_.matrix);
    backend_->kind = Backend::Kind::CG;
    solver_name_ = "cg";
  } else {
    backend_->bicgstab.setTolerance(config_.tolerance);
    backend_->bicgstab.setMaxIterations(config_.max_iterations);
    backend_->bicgstab.compute(op_.matrix);
    backend_->kind = Backend::Kind::BiCGStab;
    solver_name_ = "bicgstab";
  }

  e_ = solve_rhs(Eigen::VectorXd::Ones(n));
  // Populate the boundary lift eagerly so all later reads are const.
  gamma();
}

SolutionOperator::~SolutionOperator() = default;
SolutionOperator::SolutionOperator(SolutionOperator&&) noexcept = default;
SolutionOperator& SolutionOperator::operator=(SolutionOperator&&) noexcept = default;

Eigen::VectorXd SolutionOperator::solve_vec(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x;
  switch (backend_->kind) {
    case Backend::Kind::LDLT: x = backend_->ldlt.solve(rhs); break;
    case Backend::Kind::LU: x = backend_->lu.solve(rhs); break;
    case Backend::Kind::CG: x = backend_->cg.solve(rhs); break;
    case Backend::Kind::BiCGStab: x = backend_->bicgstab.solve(rhs); break;
  }
  const double rhs_scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double residual = (op_.matrix * x - rhs).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > 100.0 * config_.tolerance * rhs_scale) {
    std::string trace = solver_name_;
    if (backend_->kind == Backend::Kind::CG)
      trace += " after " + std::to_string(backend_->cg.iterations()) + " iterations";
    if (backend_->kind == Backend::Kind::BiCGStab)
      trace += " after " + std::to_string(backend_->bicgstab.iterations()) + " iterations";
    raise(ErrorCode::SolverDiverged,
          "linear solve residual " + std::to_string(residual) + " (" + trace + ")");
  }
  return x;
}

GridFunction SolutionOperator::apply(const GridFunction& g) const {
  if (g.grid.get() != op_.grid.get())
    raise(ErrorCode::GridMismatch, "source term does not live on the operator's grid");
  if (!g.values.allFinite())
    raise(ErrorCode::ValidationError, "source term contains non-finite values");
  return GridFunction(op_.grid, solve_vec(g.values));
}

GridFunction SolutionOperator::solve_rhs(const Eigen::VectorXd& rhs) const {
  return GridFunction(op_.grid, solve_vec(rhs));
}

GridFunction SolutionOperator::lift(const Eigen::VectorXd& boundary_data) const {
  if (boundary_data.size() != op_.boundary_rhs.cols())
    raise(ErrorCode::GridMismatch, "boundary data size does not match boundary point count");
  return GridFunction(op_.grid, solve_vec(op_.boundary_rhs * boundary_data));
}

const GridFunction& SolutionOperator::gamma() const {
  if (!gamma_) {
    const Eigen::VectorXd ones =
        Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op_.grid->boundary_points().size()));
    gamma_ = lift(ones);
  }
  return *gamma_;
}

double SolutionOperator::norm_gamma() const { return gamma().norm_inf(); }

const SolutionOperator::Spectral& SolutionOperator::spectral(double tol, int max_iter) const {
  if (spectral_ && spectral_->residual <= tol) return *spectral_;
  if (!op_.m_matrix_certified)
    raise(ErrorCode::NotPositiveOperator,
          "spectral radius requires a sign-certified (M-matrix) operator");

  const int n = op_.grid->node_count();
  const double neg_tol = 10.0 * config_.tolerance;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double r = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd w = solve_vec(v);
    if (w.minCoeff() < -neg_tol)
      raise(ErrorCode::NotPositiveOperator,
            "power iteration produced negative values (min " + std::to_string(w.minCoeff()) + ")");
    r = w.cwiseAbs().maxCoeff();
    if (!(r > 0.0))
      raise(ErrorCode::NotPositiveOperator, "power iteration collapsed to zero");
    w /= r;
    // Relative eigen-residual ||mu K v - v|| with v the previous iterate is
    // equivalent to comparing successive normalized iterates.
    residual = (w - v).cwiseAbs().maxCoeff();
    v = std::move(w);
    if (residual <= tol) break;
  }
  if (residual > tol)
    raise(ErrorCode::NoConvergence, "power iteration: residual " + std::to_string(residual) +
                                        " after " + std::to_string(max_iter) + " iterations");

  // One more application on the converged direction gives the final pair and
  // an honest eigen-residual.
  Eigen::VectorXd w = solve_vec(v);
  r = w.cwiseAbs().maxCoeff();
  const double eigres = (w / r - v).cwiseAbs().maxCoeff();
  v = w / r;
  v = v.cwiseMax(0.0);  // clip solver-level negative dust

  Spectral s;
  s.r = r;
  s.mu = 1.0 / r;
  s.phi = GridFunction(op_.grid, std::move(v));
  s.iterations = it + 1;
  s.residual = eigres;
  spectral_ = std::move(s);
  return *spectral_;
}

std::pair<double, double> SolutionOperator::e_positivity(const GridFunction& g) const {
  if (g.grid.get() != op_.grid.get())
    raise(ErrorCode::GridMismatch, "input does not live on the operator's grid");
  if (g.norm_inf() == 0.0)
    raise(ErrorCode::ZeroInput, "e-positivity quotients require g not identically zero");

  const GridFunction Kg = apply(g);
  constexpr double kGuard = 1e-14;
  double alpha = std::numeric_limits<double>::infinity();
  double beta = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < Kg.size(); ++k) {
    const double ek = e_.values[k];
    if (ek <= kGuard) continue;
    const double q = Kg.values[k] / ek;
    alpha = std::min(alpha, q);
    beta = std::max(beta, q);
  }
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    raise(ErrorCode::Internal, "e vanished on every node");
  if (op_.m_matrix_certified && g.min() >= 0.0 && !(alpha > 0.0))
    raise(ErrorCode::NotPositiveOperator,
          "e-positivity failed: alpha = " + std::to_string(alpha));
  return {alpha, beta};
}

}  // namespace conecert
