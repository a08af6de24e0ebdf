#include "conecert/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace conecert {

namespace {
constexpr double kBoxTolerance = 1e-9;
}

double SystemSpec::min_rho() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : components) m = std::min(m, c.rho);
  return m;
}

SystemOperator::SystemOperator(SystemSpec spec, std::shared_ptr<const Grid> grid,
                               SolverConfig solver)
    : spec_(std::move(spec)), grid_(std::move(grid)), solver_(solver) {
  if (spec_.n != static_cast<int>(spec_.components.size()))
    raise(ErrorCode::ValidationError, "component count does not match n");
  const auto box = spec_.box();
  for (int i = 0; i < spec_.n; ++i) {
    const auto& comp = spec_.components[static_cast<size_t>(i)];
    if (!(comp.rho > 0.0))
      raise(ErrorCode::ValidationError, "rho must be positive (component " +
                                            std::to_string(i + 1) + ")");
    if (comp.lambda < 0.0 || comp.eta < 0.0)
      raise(ErrorCode::ValidationError, "lambda and eta must be nonnegative (component " +
                                            std::to_string(i + 1) + ")");
    validations_.push_back(validate_elliptic(comp.L, *grid_));

    if (comp.B.kind == BoundarySpec::Kind::Neumann) {
      // Neumann requires a reaction term that is not identically zero.
      double max_reaction = 0.0;
      for (int k = 0; k < grid_->node_count(); ++k) {
        const Point2 p = grid_->node(k);
        ExprEnv env;
        env.x1 = p.x;
        env.x2 = p.y;
        max_reaction = std::max(max_reaction, std::abs(comp.L.reaction.eval(env)));
      }
      if (max_reaction == 0.0)
        raise(ErrorCode::ValidationError,
              "Neumann boundary needs a non-vanishing reaction term (component " +
                  std::to_string(i + 1) + ")");
    }
    if (comp.B.kind == BoundarySpec::Kind::Robin) {
      double max_b = 0.0, min_b = std::numeric_limits<double>::infinity();
      for (const auto& bp : grid_->boundary_points()) {
        ExprEnv env;
        env.x1 = bp.position.x;
        env.x2 = bp.position.y;
        const double b = comp.B.robin_b->eval(env);
        max_b = std::max(max_b, b);
        min_b = std::min(min_b, b);
      }
      if (min_b < 0.0)
        raise(ErrorCode::ValidationError, "Robin coefficient is negative on the boundary");
      if (max_b == 0.0)
        raise(ErrorCode::ValidationError, "Robin coefficient vanishes identically");
    }

    validate_functional(comp.h, grid_, box);
    ops_.emplace_back(assemble(comp.L, comp.B, grid_), solver_);
    evals_.emplace_back(comp.h, grid_);
  }
}

std::vector<GridFunction> SystemOperator::zero_state() const {
  std::vector<GridFunction> u;
  for (int i = 0; i < n(); ++i) u.push_back(GridFunction::zeros(grid_));
  return u;
}

std::vector<GridFunction> SystemOperator::constant_state(std::span<const double> c) const {
  std::vector<GridFunction> u;
  for (int i = 0; i < n(); ++i)
    u.push_back(GridFunction::constant(grid_, c[static_cast<size_t>(i)]));
  return u;
}

double SystemOperator::product_norm(std::span<const GridFunction> u) {
  double m = 0.0;
  for (const auto& ui : u) m = std::max(m, ui.norm_inf());
  return m;
}

std::vector<GridFunction> SystemOperator::apply_TGamma(std::span<const GridFunction> u,
                                                       bool check_box) const {
  if (static_cast<int>(u.size()) != n())
    raise(ErrorCode::ValidationError, "state has wrong component count");
  if (check_box) {
    for (int i = 0; i < n(); ++i) {
      const double rho = spec_.components[static_cast<size_t>(i)].rho;
      for (int k = 0; k < u[static_cast<size_t>(i)].size(); ++k) {
        const double v = u[static_cast<size_t>(i)].values[k];
        if (v < -kBoxTolerance || v > rho + kBoxTolerance) {
          const Point2 p = grid_->node(k);
          raise(ErrorCode::OutOfBox,
                "u" + std::to_string(i + 1) + " = " + std::to_string(v) + " at (" +
                    std::to_string(p.x) + ", " + std::to_string(p.y) + ") leaves [0, " +
                    std::to_string(rho) + "]");
        }
      }
    }
  }

  std::vector<GridFunction> out;
  out.reserve(static_cast<size_t>(n()));
  for (int i = 0; i < n(); ++i) {
    const auto& comp = spec_.components[static_cast<size_t>(i)];
    const GridFunction Fi = nemytskii(comp.f, u, *grid_);
    GridFunction term = ops_[static_cast<size_t>(i)].apply(Fi);
    term.values *= comp.lambda;
    if (comp.eta != 0.0) {
      const double hi = evals_[static_cast<size_t>(i)].eval(u);
      term.values += (comp.eta * hi) * ops_[static_cast<size_t>(i)].gamma().values;
    }
    out.push_back(std::move(term));
  }
  return out;
}

const char* picard_status_name(PicardStatus s) {
  switch (s) {
    case PicardStatus::Converged: return "converged";
    case PicardStatus::MaxIter: return "maxiter";
    case PicardStatus::Diverged: return "diverged";
  }
  return "unknown";
}

PicardResult picard_solve(const SystemOperator& sys, std::span<const GridFunction> u0,
                          const PicardOptions& options) {
  if (!(options.theta > 0.0 && options.theta <= 1.0))
    raise(ErrorCode::ValidationError, "damping theta must lie in (0, 1]");

  PicardResult res;
  res.u.assign(u0.begin(), u0.end());
  res.trace.reserve(static_cast<size_t>(options.max_iter));

  for (int it = 0; it < options.max_iter; ++it) {
    const auto v = sys.apply_TGamma(res.u, /*check_box=*/true);
    double residual = 0.0;
    bool overshoot = false;
    for (int i = 0; i < sys.n(); ++i) {
      residual = std::max(
          residual,
          (res.u[static_cast<size_t>(i)].values - v[static_cast<size_t>(i)].values)
              .cwiseAbs()
              .maxCoeff());
    }
    if (!std::isfinite(residual)) {
      res.status = PicardStatus::Diverged;
      res.residual = residual;
      return res;
    }
    res.residual = residual;
    res.trace.push_back({SystemOperator::product_norm(res.u), residual, false});
    if (residual <= options.tol) {
      res.status = PicardStatus::Converged;
      return res;
    }

    for (int i = 0; i < sys.n(); ++i) {
      const double rho = sys.spec().components[static_cast<size_t>(i)].rho;
      auto& ui = res.u[static_cast<size_t>(i)].values;
      ui = (1.0 - options.theta) * ui + options.theta * v[static_cast<size_t>(i)].values;
      for (int k = 0; k < ui.size(); ++k) {
        if (ui[k] < 0.0) {
          if (ui[k] < -kBoxTolerance) overshoot = true;
          ui[k] = 0.0;
          ++res.clamp_events;
        } else if (ui[k] > rho) {
          if (ui[k] > rho + kBoxTolerance) overshoot = true;
          ui[k] = rho;
          ++res.clamp_events;
        }
      }
    }
    res.trace.back().box_violation = overshoot;
  }
  res.status = PicardStatus::MaxIter;
  return res;
}

std::vector<GridFunction> random_state(const SystemOperator& sys, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GridFunction> u;
  for (int i = 0; i < sys.n(); ++i) {
    const double rho = sys.spec().components[static_cast<size_t>(i)].rho;
    std::uniform_real_distribution<double> dist(0.0, rho);
    Eigen::VectorXd v(sys.grid()->node_count());
    for (int k = 0; k < v.size(); ++k) v[k] = dist(rng);
    u.emplace_back(sys.grid(), std::move(v));
  }
  return u;
}

MultiStartResult multi_start_solve(const SystemOperator& sys, const PicardOptions& options,
                                   int random_starts, uint64_t seed) {
  MultiStartResult out;
  std::vector<std::vector<GridFunction>> starts;

  std::vector<double> corner, mid;
  for (int i = 0; i < sys.n(); ++i) {
    corner.push_back(sys.spec().components[static_cast<size_t>(i)].rho);
    mid.push_back(0.5 * sys.spec().components[static_cast<size_t>(i)].rho);
  }
  starts.push_back(sys.constant_state(corner));
  starts.push_back(sys.constant_state(mid));
  for (int s = 0; s < random_starts; ++s)
    starts.push_back(random_state(sys, seed + static_cast<uint64_t>(s)));

  for (const auto& u0 : starts) out.runs.push_back(picard_solve(sys, u0, options));

  const double distinct_tol = 100.0 * options.tol;
  for (size_t r = 0; r < out.runs.size(); ++r) {
    if (out.runs[r].status != PicardStatus::Converged) continue;
    bool is_new = true;
    for (size_t prev : out.distinct_converged) {
      double dist = 0.0;
      for (int i = 0; i < sys.n(); ++i) {
        dist = std::max(dist, (out.runs[r].u[static_cast<size_t>(i)].values -
                               out.runs[prev].u[static_cast<size_t>(i)].values)
                                  .cwiseAbs()
                                  .maxCoeff());
      }
      if (dist <= distinct_tol) {
        is_new = false;
        break;
      }
    }
    if (is_new) out.distinct_converged.push_back(r);
  }
  return out;
}

SolutionReport verify_solution(const SystemOperator& sys, std::span<const GridFunction> u,
                               double tol, double rho0) {
  SolutionReport rep;
  const auto v = sys.apply_TGamma(u, /*check_box=*/false);
  double residual = 0.0;
  for (int i = 0; i < sys.n(); ++i)
    residual = std::max(residual,
                        (u[static_cast<size_t>(i)].values - v[static_cast<size_t>(i)].values)
                            .cwiseAbs()
                            .maxCoeff());
  rep.residual = residual;
  rep.norm = SystemOperator::product_norm(u);
  rep.in_box = true;
  for (int i = 0; i < sys.n(); ++i) {
    const auto& ui = u[static_cast<size_t>(i)];
    rep.component_norms.push_back(ui.norm_inf());
    const double rho = sys.spec().components[static_cast<size_t>(i)].rho;
    if (ui.min() < -kBoxTolerance || ui.max() > rho + kBoxTolerance) rep.in_box = false;
  }
  rep.nonzero = rep.norm > tol;
  bool loc = rho0 <= rep.norm;
  for (int i = 0; i < sys.n(); ++i)
    loc = loc && rep.component_norms[static_cast<size_t>(i)] <=
                     sys.spec().components[static_cast<size_t>(i)].rho + kBoxTolerance;
  rep.localization_ok = loc;
  return rep;
}

}  // namespace conecert
