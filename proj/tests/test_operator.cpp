#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "conecert/elliptic.hpp"

using namespace conecert;

namespace {

EllipticSpec elliptic_from(const char* a11, const char* a12, const char* a21, const char* a22,
                           const char* b1 = "0", const char* b2 = "0", const char* a0 = "0") {
  const auto sig = ExprSignature::coefficients();
  EllipticSpec spec;
  spec.diffusion[0][0] = parse(a11, sig);
  spec.diffusion[0][1] = parse(a12, sig);
  spec.diffusion[1][0] = parse(a21, sig);
  spec.diffusion[1][1] = parse(a22, sig);
  spec.advection[0] = parse(b1, sig);
  spec.advection[1] = parse(b2, sig);
  spec.reaction = parse(a0, sig);
  return spec;
}

bool full_interior_row(const Grid& g, int id, bool need_corners = false) {
  for (const auto& leg : g.legs(id))
    if (leg.neighbor < 0) return false;
  if (need_corners) {
    const auto [i, j] = g.lattice_of(id);
    for (int di : {-1, 1})
      for (int dj : {-1, 1})
        if (g.node_at(i + di, j + dj) < 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ellipticity validation on constant coefficients") {
  auto grid = build_grid(DomainSpec::disk({0, 0}, 1.0), 0.25);

  SUBCASE("identity diffusion gives mu0 = 1") {
    const auto report = validate_elliptic(EllipticSpec::laplace(), *grid);
    CHECK(report.mu0 == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& item : report.items) CHECK(item.pass);
  }
  SUBCASE("diag(2, 1/2) gives mu0 = 1/2") {
    const auto report = validate_elliptic(elliptic_from("2", "0", "0", "0.5"), *grid);
    CHECK(report.mu0 == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("indefinite [[1,2],[2,1]] is rejected") {
    try {
      validate_elliptic(elliptic_from("1", "2", "2", "1"), *grid);
      FAIL_CHECK("expected NotElliptic");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotElliptic);
    }
  }
  SUBCASE("asymmetric off-diagonals are rejected") {
    try {
      validate_elliptic(elliptic_from("1", "0.1", "0.2", "1"), *grid);
      FAIL_CHECK("expected AsymmetricDiffusion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AsymmetricDiffusion);
    }
  }
  SUBCASE("negative reaction is rejected") {
    try {
      validate_elliptic(elliptic_from("1", "0", "0", "1", "0", "0", "0-1"), *grid);
      FAIL_CHECK("expected NegativeReaction");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NegativeReaction);
    }
  }
}

TEST_CASE("mu0 is non-increasing under nested refinement") {
  const auto spec = elliptic_from("2 + x1", "0", "0", "2");
  auto coarse = build_grid(DomainSpec::disk({0, 0}, 1.0), 1.0 / 8.0);
  auto fine = build_grid(DomainSpec::disk({0, 0}, 1.0), 1.0 / 16.0);
  const double mu_coarse = validate_elliptic(spec, *coarse).mu0;
  const double mu_fine = validate_elliptic(spec, *fine).mu0;
  CHECK(mu_fine <= mu_coarse + 1e-15);
  CHECK(mu_fine > 0.0);
}

TEST_CASE("classical 5-point stencil on the aligned unit square") {
  auto grid = build_grid(DomainSpec::rectangle({0, 0}, {1, 1}), 0.25);
  const auto op = assemble(EllipticSpec::laplace(), BoundarySpec::dirichlet(), grid);
  const double h2 = 0.25 * 0.25;

  CHECK(op.symmetric);
  CHECK(op.m_matrix_certified);
  for (int c = 0; c < op.matrix.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, c); it; ++it) {
      if (it.row() == it.col())
        CHECK(it.value() == doctest::Approx(4.0 / h2).epsilon(1e-13));
      else
        CHECK(it.value() == doctest::Approx(-1.0 / h2).epsilon(1e-13));
    }
  }
  // Dirichlet data enters the right-hand side with nonnegative coefficients.
  for (int c = 0; c < op.boundary_rhs.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.boundary_rhs, c); it; ++it)
      CHECK(it.value() >= 0.0);
}

TEST_CASE("disk Laplacian is a sign-certified M-matrix with dominant rows") {
  auto grid = build_grid(DomainSpec::disk({0, 0}, 1.0), 1.0 / 16.0);
  const auto op = assemble(EllipticSpec::laplace(), BoundarySpec::dirichlet(), grid);
  CHECK(op.m_matrix_certified);
  CHECK(op.sign_violations == 0);

  // Weak diagonal dominance with strict dominance on cut rows.
  Eigen::VectorXd row_sums = op.matrix * Eigen::VectorXd::Ones(grid->node_count());
  double max_sum = 0.0;
  for (int k = 0; k < row_sums.size(); ++k) {
    CHECK(row_sums[k] >= -1e-7);
    max_sum = std::max(max_sum, row_sums[k]);
  }
  CHECK(max_sum > 0.0);
}

TEST_CASE("Neumann assembly with reaction term") {
  auto grid = build_grid(DomainSpec::disk({0, 0}, 1.0), 1.0 / 16.0);
  const auto spec = elliptic_from("1", "0", "0", "1", "0", "0", "1");
  const auto op = assemble(spec, BoundarySpec::neumann(), grid);
  CHECK(op.m_matrix_certified);
  // Away from cut rows the constant is annihilated up to the reaction term.
  const Eigen::VectorXd interior = op.matrix * Eigen::VectorXd::Ones(grid->node_count());
  for (int k = 0; k < interior.size(); ++k)
    if (full_interior_row(*grid, k))
      CHECK(interior[k] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("apply_operator basics") {
  auto grid = build_grid(DomainSpec::rectangle({0, 0}, {1, 1}), 0.125);
  const auto op = assemble(EllipticSpec::laplace(), BoundarySpec::dirichlet(), grid);

  SUBCASE("zero maps to zero") {
    const auto zero = GridFunction::zeros(grid);
    CHECK(apply_operator(op, zero).norm_inf() == 0.0);
  }
  SUBCASE("second difference of a linear field vanishes on interior rows") {
    const auto u = GridFunction::sample(grid, [](Point2 p) { return p.x; });
    const auto v = apply_operator(op, u);
    for (int k = 0; k < grid->node_count(); ++k)
      if (full_interior_row(*grid, k)) CHECK(std::abs(v.values[k]) <= 1e-10);
  }
  SUBCASE("linearity to round-off") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    auto random_fn = [&] {
      Eigen::VectorXd v(grid->node_count());
      for (int k = 0; k < v.size(); ++k) v[k] = val(rng);
      return GridFunction(grid, std::move(v));
    };
    const auto u = random_fn(), v = random_fn();
    const double alpha = 0.37, beta = -1.21;
    GridFunction combo(grid, alpha * u.values + beta * v.values);
    const auto lhs = apply_operator(op, combo);
    const Eigen::VectorXd rhs =
        alpha * apply_operator(op, u).values + beta * apply_operator(op, v).values;
    const double scale = lhs.norm_inf() + 1.0;
    CHECK((lhs.values - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
  SUBCASE("grid mismatch is rejected") {
    auto other = build_grid(DomainSpec::rectangle({0, 0}, {1, 1}), 0.25);
    const auto u = GridFunction::zeros(other);
    CHECK_THROWS_AS(apply_operator(op, u), Error);
  }
}

TEST_CASE("constant-coefficient diffusion is exact on quadratics away from the boundary") {
  // u = 1 + 2x - y + 0.5 x^2 + 0.3 xy + 0.2 y^2 under
  // L = -(a11 uxx + 2 a12 uxy + a22 uyy) with constant coefficients.
  const auto spec = elliptic_from("2", "0.25", "0.25", "1");
  auto u_exact = [](Point2 p) {
    return 1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.x + 0.3 * p.x * p.y + 0.2 * p.y * p.y;
  };
  const double Lu = -(2.0 * 1.0 + 2.0 * 0.25 * 0.3 + 1.0 * 0.4);

  for (auto domain : {DomainSpec::rectangle({0, 0}, {1, 1}), DomainSpec::disk({0, 0}, 1.0)}) {
    auto grid = build_grid(domain, 1.0 / 8.0);
    const auto op = assemble(spec, BoundarySpec::dirichlet(), grid);
    const auto u = GridFunction::sample(grid, u_exact);
    const auto v = apply_operator(op, u);
    int tested = 0;
    for (int k = 0; k < grid->node_count(); ++k) {
      if (!full_interior_row(*grid, k, /*need_corners=*/true)) continue;
      CHECK(v.values[k] == doctest::Approx(Lu).epsilon(1e-10));
      ++tested;
    }
    CHECK(tested > 0);
  }
}

TEST_CASE("upwind advection is exact on linear fields and keeps the sign pattern") {
  auto grid = build_grid(DomainSpec::disk({0, 0}, 1.0), 1.0 / 16.0);
  const auto spec = elliptic_from("1", "0", "0", "1", "3", "0-2");
  const auto op = assemble(spec, BoundarySpec::dirichlet(), grid);
  CHECK(op.m_matrix_certified);

  const auto u = GridFunction::sample(grid, [](Point2 p) { return p.x + p.y; });
  const auto v = apply_operator(op, u);
  // L u = 3 du/dx - 2 du/dy = 3 - 2 = 1 for u = x + y.
  for (int k = 0; k < grid->node_count(); ++k)
    if (full_interior_row(*grid, k)) CHECK(v.values[k] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cross-derivative terms lose the sign certificate but stay usable") {
  auto grid = build_grid(DomainSpec::rectangle({0, 0}, {1, 1}), 0.125);
  const auto op = assemble(elliptic_from("1", "0.4", "0.4", "1"), BoundarySpec::dirichlet(), grid);
  CHECK_FALSE(op.m_matrix_certified);
  CHECK(op.sign_violations > 0);
}
