#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "conecert/expr.hpp"
#include "conecert/geometry.hpp"

namespace conecert {

/// Coefficients of L u = -sum a_jl d2u/dxj dxl + sum a_j du/dxj + a u,
/// each given as an expression of x.
struct EllipticSpec {
  std::array<std::array<Expr, 2>, 2> diffusion;  // a_jl
  std::array<Expr, 2> advection;                 // a_j
  Expr reaction;                                 // a >= 0

  /// -Laplace with optional reaction c and a scale on the diffusion.
  static EllipticSpec laplace(double diffusion_scale = 1.0, double reaction = 0.0);
};

struct BoundarySpec {
  enum class Kind { Dirichlet, Neumann, Robin };
  Kind kind = Kind::Dirichlet;
  std::optional<Expr> robin_b;  // b(x) >= 0, not identically 0

  static BoundarySpec dirichlet() { return {Kind::Dirichlet, std::nullopt}; }
  static BoundarySpec neumann() { return {Kind::Neumann, std::nullopt}; }
  static BoundarySpec robin(Expr b) { return {Kind::Robin, std::move(b)}; }
};

struct EllipticValidation {
  struct Item {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Item> items;
  double mu0 = 0.0;  // uniform ellipticity constant over sampled nodes
};

/// Check symmetry, uniform ellipticity and sign of the reaction term on the
/// grid nodes. Throws AsymmetricDiffusion / NotElliptic / NegativeReaction.
EllipticValidation validate_elliptic(const EllipticSpec& spec, const Grid& grid);

/// Interior-only discretization of (L, B). Boundary values enter through
/// `boundary_rhs`, which maps data sampled at the grid's boundary points to a
/// right-hand-side contribution.
struct DiscreteOperator {
  std::shared_ptr<const Grid> grid;
  Eigen::SparseMatrix<double> matrix;        // N x N over interior nodes
  Eigen::SparseMatrix<double> boundary_rhs;  // N x B
  bool symmetric = false;
  bool m_matrix_certified = false;
  int sign_violations = 0;
};

/// Assemble the cut-cell finite difference operator: Shortley-Weller second
/// differences for diffusion, first-order upwind for advection, ghost
/// elimination along the outward normal for Neumann/Robin boundaries.
DiscreteOperator assemble(const EllipticSpec& spec, const BoundarySpec& bspec,
                          std::shared_ptr<const Grid> grid);

GridFunction apply_operator(const DiscreteOperator& op, const GridFunction& u);

}  // namespace conecert
