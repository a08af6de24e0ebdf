#include "conecert/elliptic.hpp"

#include <cmath>
#include <vector>

namespace conecert {

EllipticSpec EllipticSpec::laplace(double diffusion_scale, double reaction) {
  const auto sig = ExprSignature::coefficients();
  auto lit = [&](double v) {
    ExprBuilder b(sig);
    b.literal(v);
    return std::move(b).take();
  };
  EllipticSpec spec;
  spec.diffusion[0][0] = lit(diffusion_scale);
  spec.diffusion[0][1] = lit(0.0);
  spec.diffusion[1][0] = lit(0.0);
  spec.diffusion[1][1] = lit(diffusion_scale);
  spec.advection[0] = lit(0.0);
  spec.advection[1] = lit(0.0);
  spec.reaction = lit(reaction);
  return spec;
}

EllipticValidation validate_elliptic(const EllipticSpec& spec, const Grid& grid) {
  EllipticValidation report;
  double mu0 = std::numeric_limits<double>::infinity();
  double worst_asym = 0.0;
  double min_reaction = std::numeric_limits<double>::infinity();
  Point2 asym_at{}, eig_at{}, reac_at{};
  double min_eig = std::numeric_limits<double>::infinity();

  for (int id = 0; id < grid.node_count(); ++id) {
    const Point2 p = grid.node(id);
    ExprEnv env;
    env.x1 = p.x;
    env.x2 = p.y;
    const double a11 = spec.diffusion[0][0].eval(env);
    const double a12 = spec.diffusion[0][1].eval(env);
    const double a21 = spec.diffusion[1][0].eval(env);
    const double a22 = spec.diffusion[1][1].eval(env);

    const double scale = std::max({1.0, std::abs(a12), std::abs(a21)});
    const double asym = std::abs(a12 - a21);
    if (asym / scale > worst_asym) {
      worst_asym = asym / scale;
      asym_at = p;
    }

    // Smallest eigenvalue of the symmetric part [[a11, m],[m, a22]].
    const double m = 0.5 * (a12 + a21);
    const double eig =
        0.5 * (a11 + a22) - std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + m * m);
    if (eig < min_eig) {
      min_eig = eig;
      eig_at = p;
    }
    mu0 = std::min(mu0, eig);

    const double a0 = spec.reaction.eval(env);
    if (a0 < min_reaction) {
      min_reaction = a0;
      reac_at = p;
    }
  }

  auto loc = [](Point2 p) {
    return " at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
  };

  const bool sym_ok = worst_asym <= 1e-12;
  report.items.push_back({"diffusion symmetry", sym_ok,
                          sym_ok ? "a12 = a21 on all nodes"
                                 : "relative asymmetry " + std::to_string(worst_asym) + loc(asym_at)});
  if (!sym_ok)
    raise(ErrorCode::AsymmetricDiffusion,
          "a12 != a21 (relative gap " + std::to_string(worst_asym) + ")" + loc(asym_at));

  const bool ell_ok = min_eig > 0.0;
  report.items.push_back({"uniform ellipticity", ell_ok,
                          "min eigenvalue " + std::to_string(min_eig) + loc(eig_at)});
  if (!ell_ok)
    raise(ErrorCode::NotElliptic,
          "diffusion matrix has eigenvalue " + std::to_string(min_eig) + loc(eig_at));

  const bool reac_ok = min_reaction >= 0.0;
  report.items.push_back({"nonnegative reaction", reac_ok,
                          "min value " + std::to_string(min_reaction) + loc(reac_at)});
  if (!reac_ok)
    raise(ErrorCode::NegativeReaction,
          "reaction coefficient " + std::to_string(min_reaction) + loc(reac_at));

  report.mu0 = mu0;
  return report;
}

namespace {

struct Assembler {
  const EllipticSpec& spec;
  const BoundarySpec& bspec;
  const Grid& grid;
  double h;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<Eigen::Triplet<double>> rhs_triplets;

  double boundary_b(const BoundaryPoint& bp) const {
    switch (bspec.kind) {
      case BoundarySpec::Kind::Dirichlet: return 1.0;
      case BoundarySpec::Kind::Neumann: return 0.0;
      case BoundarySpec::Kind::Robin: {
        ExprEnv env;
        env.x1 = bp.position.x;
        env.x2 = bp.position.y;
        return bspec.robin_b->eval(env);
      }
    }
    return 1.0;
  }

  // Route a stencil coefficient aimed at a leg: either onto the interior
  // neighbor, or through the boundary condition at the cut point.
  void add_leg(int row, const Grid::Leg& leg, double coeff) {
    if (coeff == 0.0) return;
    if (leg.neighbor >= 0) {
      triplets.emplace_back(row, leg.neighbor, coeff);
      return;
    }
    const BoundaryPoint& bp = grid.boundary_points()[static_cast<size_t>(leg.boundary_point)];
    if (bspec.kind == BoundarySpec::Kind::Dirichlet) {
      // u(p) = g(p): the whole contribution moves to the right-hand side.
      rhs_triplets.emplace_back(row, leg.boundary_point, -coeff);
      return;
    }
    // Neumann/Robin: du/dnu(p) + b(p) u(p) = g(p). One-sided normal
    // difference against the probe q = p - s*nu, s = h, interpolated from
    // interior nodes: u(p: = (s g(p) + u(q)) / (1 + s b(p)).
    const double s = h;
    const double denom = 1.0 + s * boundary_b(bp);
    const Point2 q{bp.position.x - s * bp.normal.x, bp.position.y - s * bp.normal.y};
    const auto weights = grid.bilinear_weights(q);
    for (const auto& [node, w] : weights)
      triplets.emplace_back(row, node, coeff * w / denom);
    rhs_triplets.emplace_back(row, leg.boundary_point, -coeff * s / denom);
  }

  // u_xy by the 4-corner central stencil where all corners are interior,
  // otherwise by a first-order stencil shifted toward the interior.
  void add_cross(int row, int i, int j, double c12) {
    if (c12 == 0.0) return;
    const double h2 = h * h;
    const int ne = grid.node_at(i + 1, j + 1), nw = grid.node_at(i - 1, j + 1);
    const int se = grid.node_at(i + 1, j - 1), sw = grid.node_at(i - 1, j - 1);
    if (ne >= 0 && nw >= 0 && se >= 0 && sw >= 0) {
      const double c = c12 / (4.0 * h2);
      triplets.emplace_back(row, ne, c);
      triplets.emplace_back(row, sw, c);
      triplets.emplace_back(row, nw, -c);
      triplets.emplace_back(row, se, -c);
      return;
    }
    for (const auto [sx, sy] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
      const int corner = grid.node_at(i + sx, j + sy);
      const int ex = grid.node_at(i + sx, j);
      const int ey = grid.node_at(i, j + sy);
      if (corner < 0 || ex < 0 || ey < 0) continue;
      const double c = c12 * sx * sy / h2;
      triplets.emplace_back(row, corner, c);
      triplets.emplace_back(row, ex, -c);
      triplets.emplace_back(row, ey, -c);
      triplets.emplace_back(row, row, c);
      return;
    }
    raise(ErrorCode::AssemblyError,
          "no usable cross-derivative stencil at node " + std::to_string(row));
  }

  void assemble_row(int row) {
    const Point2 p = grid.node(row);
    const auto [i, j] = grid.lattice_of(row);
    ExprEnv env;
    env.x1 = p.x;
    env.x2 = p.y;
    const double a11 = spec.diffusion[0][0].eval(env);
    const double a22 = spec.diffusion[1][1].eval(env);
    const double a12 = 0.5 * (spec.diffusion[0][1].eval(env) + spec.diffusion[1][0].eval(env));
    const double b1 = spec.advection[0].eval(env);
    const double b2 = spec.advection[1].eval(env);
    const double a0 = spec.reaction.eval(env);

    const auto& legs = grid.legs(row);
    const double h2 = h * h;
    double diag = a0;

    // -a11 u_xx, Shortley-Weller along x.
    {
      const double tE = legs[East].theta, tW = legs[West].theta;
      const double cE = -2.0 * a11 / (h2 * tE * (tE + tW));
      const double cW = -2.0 * a11 / (h2 * tW * (tE + tW));
      diag += 2.0 * a11 / (h2 * tE * tW);
      add_leg(row, legs[East], cE);
      add_leg(row, legs[West], cW);
    }
    // -a22 u_yy along y.
    {
      const double tN = legs[North].theta, tS = legs[South].theta;
      const double cN = -2.0 * a22 / (h2 * tN * (tN + tS));
      const double cS = -2.0 * a22 / (h2 * tS * (tN + tS));
      diag += 2.0 * a22 / (h2 * tN * tS);
      add_leg(row, legs[North], cN);
      add_leg(row, legs[South], cS);
    }
    // -2 a12 u_xy.
    add_cross(row, i, j, -2.0 * a12);

    // + b1 u_x, upwind against the sign of b1.
    if (b1 > 0.0) {
      const double t = legs[West].theta;
      diag += b1 / (t * h);
      add_leg(row, legs[West], -b1 / (t * h));
    } else if (b1 < 0.0) {
      const double t = legs[East].theta;
      diag += -b1 / (t * h);
      add_leg(row, legs[East], b1 / (t * h));
    }
    // + b2 u_y.
    if (b2 > 0.0) {
      const double t = legs[South].theta;
      diag += b2 / (t * h);
      add_leg(row, legs[South], -b2 / (t * h));
    } else if (b2 < 0.0) {
      const double t = legs[North].theta;
      diag += -b2 / (t * h);
      add_leg(row, legs[North], b2 / (t * h));
    }

    triplets.emplace_back(row, row, diag);
  }
};

}  // namespace

DiscreteOperator assemble(const EllipticSpec& spec, const BoundarySpec& bspec,
                          std::shared_ptr<const Grid> grid) {
  const int n = grid->node_count();
  Assembler as{spec, bspec, *grid, grid->spacing(), {}, {}};
  as.triplets.reserve(static_cast<size_t>(n) * 6);
  for (int row = 0; row < n; ++row) as.assemble_row(row);

  DiscreteOperator op;
  op.grid = std::move(grid);
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(as.triplets.begin(), as.triplets.end());
  op.matrix.makeCompressed();
  const int nb = static_cast<int>(op.grid->boundary_points().size());
  op.boundary_rhs.resize(n, nb);
  op.boundary_rhs.setFromTriplets(as.rhs_triplets.begin(), as.rhs_triplets.end());
  op.boundary_rhs.makeCompressed();

  // Sign-pattern scan: positive diagonal, nonpositive off-diagonal.
  double max_abs = 0.0;
  for (int c = 0; c < op.matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, c); it; ++it)
      max_abs = std::max(max_abs, std::abs(it.value()));
  const double tol = 1e-12 * max_abs;
  int violations = 0;
  for (int c = 0; c < op.matrix.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, c); it; ++it) {
      if (it.row() == it.col()) {
        if (!(it.value() > 0.0)) ++violations;
      } else if (it.value() > tol) {
        ++violations;
      }
    }
  }
  op.sign_violations = violations;
  op.m_matrix_certified = violations == 0;

  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(op.matrix.transpose()) - op.matrix;
  double asym = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  op.symmetric = asym <= 1e-12 * std::max(1.0, max_abs);

  return op;
}

GridFunction apply_operator(const DiscreteOperator& op, const GridFunction& u) {
  if (u.grid.get() != op.grid.get())
    raise(ErrorCode::GridMismatch, "grid function does not match the operator's grid");
  return GridFunction(u.grid, op.matrix * u.values);
}

}  // namespace conecert
