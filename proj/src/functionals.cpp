#include "conecert/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace conecert {

namespace {

constexpr double kNegativeSlack = 1e-12;

std::vector<double> lattice(double hi, int samples) {
  std::vector<double> pts(static_cast<size_t>(samples));
  if (samples == 1) {
    pts[0] = hi;
    return pts;
  }
  for (int k = 0; k < samples; ++k)
    pts[static_cast<size_t>(k)] = hi * static_cast<double>(k) / (samples - 1);
  pts.back() = hi;  // endpoint exactly
  return pts;
}

// Odometer over a tensor lattice; calls fn(std::span<const double> u).
template <class F>
void for_each_sample(std::span<const std::vector<double>> axes, F&& fn) {
  const size_t n = axes.size();
  std::vector<size_t> idx(n, 0);
  std::vector<double> u(n);
  for (;;) {
    for (size_t k = 0; k < n; ++k) u[k] = axes[k][idx[k]];
    fn(std::span<const double>(u));
    size_t k = 0;
    while (k < n) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == n) break;
  }
}

}  // namespace

std::vector<std::string> FunctionalSpec::primitive_names() const {
  std::vector<std::string> names;
  names.reserve(primitives.size());
  for (const auto& p : primitives) names.push_back(p.name);
  return names;
}

FunctionalEvaluator::FunctionalEvaluator(const FunctionalSpec& spec,
                                         std::shared_ptr<const Grid> grid)
    : spec_(spec), grid_(std::move(grid)) {
  data_.reserve(spec_.primitives.size());
  for (const auto& prim : spec_.primitives) {
    PrimitiveData d;
    if (const auto* pe = std::get_if<FunctionalSpec::PointEval>(&prim.kind)) {
      d.is_point = true;
      d.component = pe->component - 1;
      if (!grid_->domain().contains(pe->point))
        raise(ErrorCode::PointOutsideDomain,
              "primitive '" + prim.name + "' evaluates outside the domain");
      d.point_weights = grid_->bilinear_weights(pe->point);
    } else {
      const auto& in = std::get<FunctionalSpec::Integral>(prim.kind);
      d.is_point = false;
      d.component = in.component - 1;
      const auto& w = grid_->cell_weights();
      d.integral_weights.resize(grid_->node_count());
      for (int k = 0; k < grid_->node_count(); ++k) {
        const Point2 p = grid_->node(k);
        ExprEnv env;
        env.x1 = p.x;
        env.x2 = p.y;
        const double a = in.weight.eval(env);
        if (a < 0.0)
          raise(ErrorCode::NegativeWeight, "integral weight of '" + prim.name +
                                               "' is negative at node " + std::to_string(k));
        d.integral_weights[k] = w[static_cast<size_t>(k)] * a;
      }
      d.integral_total = d.integral_weights.sum();
    }
    data_.push_back(std::move(d));
  }
}

double FunctionalEvaluator::combine(std::span<const double> primitive_values) const {
  ExprEnv env;
  env.scalars = primitive_values;
  const double v = spec_.combiner.eval(env);
  if (v < -kNegativeSlack * std::max(1.0, std::abs(v)))
    raise(ErrorCode::NegativeFunctionalValue,
          "functional evaluated to " + std::to_string(v));
  return std::max(v, 0.0);
}

double FunctionalEvaluator::eval(std::span<const GridFunction> u) const {
  std::vector<double> vals(data_.size());
  for (size_t k = 0; k < data_.size(); ++k) {
    const auto& d = data_[k];
    if (d.component < 0 || d.component >= static_cast<int>(u.size()))
      raise(ErrorCode::ValidationError, "functional references component u" +
                                            std::to_string(d.component + 1) +
                                            " beyond the solution vector");
    const GridFunction& uk = u[static_cast<size_t>(d.component)];
    if (uk.grid.get() != grid_.get())
      raise(ErrorCode::GridMismatch, "functional input lives on a different grid");
    if (d.is_point) {
      double s = 0.0;
      for (const auto& [node, w] : d.point_weights) s += w * uk.values[node];
      vals[k] = s;
    } else {
      vals[k] = d.integral_weights.dot(uk.values);
    }
  }
  return combine(vals);
}

double FunctionalEvaluator::eval_constant(std::span<const double> c) const {
  std::vector<double> vals(data_.size());
  for (size_t k = 0; k < data_.size(); ++k) {
    const auto& d = data_[k];
    const double ck = c[static_cast<size_t>(d.component)];
    vals[k] = d.is_point ? ck : d.integral_total * ck;
  }
  return combine(vals);
}

GridFunction nemytskii(const Expr& f, std::span<const GridFunction> u, const Grid& grid) {
  Eigen::VectorXd out(grid.node_count());
  std::vector<double> uk(u.size());
  for (int node = 0; node < grid.node_count(); ++node) {
    const Point2 p = grid.node(node);
    for (size_t c = 0; c < u.size(); ++c) uk[c] = u[c].values[node];
    ExprEnv env;
    env.x1 = p.x;
    env.x2 = p.y;
    env.u = uk;
    try {
      out[node] = f.eval(env);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::EvalDomainError)
        raise(ErrorCode::EvalDomainError,
              std::string(err.what()) + " at node (" + std::to_string(p.x) + ", " +
                  std::to_string(p.y) + ")");
      throw;
    }
  }
  return GridFunction(u.empty() ? nullptr : u[0].grid, std::move(out));
}

double eval_functional(const FunctionalSpec& h, std::span<const GridFunction> u,
                       std::shared_ptr<const Grid> grid) {
  return FunctionalEvaluator(h, std::move(grid)).eval(u);
}

void validate_functional(const FunctionalSpec& h, std::shared_ptr<const Grid> grid,
                         std::span<const double> box) {
  for (const auto& prim : h.primitives) {
    if (const auto* pe = std::get_if<FunctionalSpec::PointEval>(&prim.kind)) {
      if (!grid->domain().contains(pe->point))
        raise(ErrorCode::PointOutsideDomain,
              "functional point '" + prim.name + "' is not strictly inside the domain");
      if (pe->component < 1 || pe->component > static_cast<int>(box.size()))
        raise(ErrorCode::ValidationError,
              "functional primitive '" + prim.name + "' references a missing component");
    } else {
      const auto& in = std::get<FunctionalSpec::Integral>(prim.kind);
      if (in.component < 1 || in.component > static_cast<int>(box.size()))
        raise(ErrorCode::ValidationError,
              "functional primitive '" + prim.name + "' references a missing component");
      for (int k = 0; k < grid->node_count(); ++k) {
        const Point2 p = grid->node(k);
        ExprEnv env;
        env.x1 = p.x;
        env.x2 = p.y;
        if (in.weight.eval(env) < 0.0)
          raise(ErrorCode::NegativeWeight,
                "integral weight of '" + prim.name + "' is negative on the grid");
      }
    }
  }

  // Combiner must map nonnegative primitive values to nonnegative results;
  // sampled over plausible magnitudes of each primitive on the box.
  const double rho_max = box.empty() ? 1.0 : *std::max_element(box.begin(), box.end());
  const double area = grid->domain().area();
  std::vector<std::vector<double>> axes;
  for (const auto& prim : h.primitives) {
    const bool is_point = std::holds_alternative<FunctionalSpec::PointEval>(prim.kind);
    const double cap = is_point ? rho_max : rho_max * std::max(area, 1.0);
    axes.push_back(lattice(cap, 5));
  }
  for_each_sample(axes, [&](std::span<const double> vals) {
    ExprEnv env;
    env.scalars = vals;
    const double v = h.combiner.eval(env);
    if (v < -kNegativeSlack)
      raise(ErrorCode::NegativeFunctionalValue,
            "combiner takes negative value " + std::to_string(v) +
                " on nonnegative primitive inputs");
  });
}

SampledBound estimate_M(const Expr& f, std::span<const double> box, const Grid& grid,
                        int samples_per_axis) {
  std::vector<std::vector<double>> axes;
  for (double rho : box) axes.push_back(lattice(rho, samples_per_axis));

  // x-independent nonlinearities collapse the spatial loop.
  const bool spatial = f.uses_x();
  const int node_count = spatial ? grid.node_count() : 1;

  SampledBound out;
  out.value = -std::numeric_limits<double>::infinity();
  out.min_sample = std::numeric_limits<double>::infinity();
  std::vector<double> min_witness;
  Point2 min_x{};

  for (int node = 0; node < node_count; ++node) {
    const Point2 p = spatial ? grid.node(node) : Point2{0, 0};
    for_each_sample(axes, [&](std::span<const double> u) {
      ExprEnv env;
      env.x1 = p.x;
      env.x2 = p.y;
      env.u = u;
      const double v = f.eval(env);
      if (v > out.value) {
        out.value = v;
        out.witness_u.assign(u.begin(), u.end());
        out.witness_x = p;
      }
      if (v < out.min_sample) {
        out.min_sample = v;
        min_witness.assign(u.begin(), u.end());
        min_x = p;
      }
    });
  }
  if (out.min_sample < -kNegativeSlack) {
    std::string w = "(";
    for (size_t k = 0; k < min_witness.size(); ++k)
      w += (k ? ", " : "") + std::to_string(min_witness[k]);
    w += ")";
    raise(ErrorCode::NegativeNonlinearity,
          "f = " + std::to_string(out.min_sample) + " at u = " + w);
  }
  out.provenance = Provenance::Sampled;
  return out;
}

SampledBound estimate_H(const FunctionalSpec& h, std::span<const double> box,
                        std::shared_ptr<const Grid> grid, int samples_per_axis) {
  FunctionalEvaluator ev(h, std::move(grid));
  std::vector<std::vector<double>> axes;
  for (double rho : box) axes.push_back(lattice(rho, samples_per_axis));

  SampledBound out;
  out.value = -std::numeric_limits<double>::infinity();
  out.min_sample = std::numeric_limits<double>::infinity();
  for_each_sample(axes, [&](std::span<const double> c) {
    const double v = ev.eval_constant(c);
    if (v > out.value) {
      out.value = v;
      out.witness_u.assign(c.begin(), c.end());
    }
    out.min_sample = std::min(out.min_sample, v);
  });
  out.provenance = Provenance::Sampled;
  return out;
}

double find_delta(const Expr& f, int i0_one_based, double rho0, int n_components,
                  const Grid& grid, int samples_per_axis) {
  const int i0 = i0_one_based - 1;
  if (i0 < 0 || i0 >= n_components)
    raise(ErrorCode::ValidationError, "i0 out of range");
  std::vector<std::vector<double>> axes;
  for (int k = 0; k < n_components; ++k)
    axes.push_back(lattice(rho0, samples_per_axis));

  const bool spatial = f.uses_x();
  const int node_count = spatial ? grid.node_count() : 1;

  double delta = std::numeric_limits<double>::infinity();
  bool usable = true;
  for (int node = 0; node < node_count && usable; ++node) {
    const Point2 p = spatial ? grid.node(node) : Point2{0, 0};
    for_each_sample(axes, [&](std::span<const double> u) {
      if (!usable) return;
      const double ui0 = u[static_cast<size_t>(i0)];
      ExprEnv env;
      env.x1 = p.x;
      env.x2 = p.y;
      env.u = u;
      const double v = f.eval(env);
      if (v < 0.0) {
        usable = false;
        return;
      }
      if (ui0 <= 0.0) return;  // the inequality is trivial where u_{i0} = 0
      const double ratio = v / ui0;
      if (ratio <= 0.0) {
        usable = false;
        return;
      }
      delta = std::min(delta, ratio);
    });
  }
  if (!usable || !std::isfinite(delta)) return 0.0;
  return delta;
}

BoundCheck verify_linear_bounds(const Expr& f, int i_one_based, double tau,
                                const FunctionalSpec& h, double xi,
                                std::span<const double> box,
                                std::shared_ptr<const Grid> grid,
                                int samples_per_axis) {
  if (!(tau > 0.0) || !(xi > 0.0))
    raise(ErrorCode::ValidationError, "tau and xi must be positive");
  const int i = i_one_based - 1;
  const double rho_max = *std::max_element(box.begin(), box.end());
  const double eps = kNegativeSlack * std::max({1.0, tau * rho_max, xi * rho_max});

  std::vector<std::vector<double>> axes;
  for (double rho : box) axes.push_back(lattice(rho, samples_per_axis));

  BoundCheck out;
  out.min_slack = std::numeric_limits<double>::infinity();

  // f(x, u) in [0, tau u_i] over grid nodes x box lattice.
  const bool spatial = f.uses_x();
  const int node_count = spatial ? grid->node_count() : 1;
  for (int node = 0; node < node_count; ++node) {
    const Point2 p = spatial ? grid->node(node) : Point2{0, 0};
    for_each_sample(axes, [&](std::span<const double> u) {
      ExprEnv env;
      env.x1 = p.x;
      env.x2 = p.y;
      env.u = u;
      const double v = f.eval(env);
      const double slack = std::min(v, tau * u[static_cast<size_t>(i)] - v);
      if (slack < out.min_slack) {
        out.min_slack = slack;
        out.binding = "f";
        out.witness_u.assign(u.begin(), u.end());
        out.witness_x = p;
      }
    });
  }

  // h[u] <= xi ||u|| over constant fields.
  FunctionalEvaluator ev(h, std::move(grid));
  for_each_sample(axes, [&](std::span<const double> c) {
    double norm = 0.0;
    for (double ck : c) norm = std::max(norm, std::abs(ck));
    const double slack = xi * norm - ev.eval_constant(c);
    if (slack < out.min_slack) {
      out.min_slack = slack;
      out.binding = "h";
      out.witness_u.assign(c.begin(), c.end());
      out.witness_x = Point2{};
    }
  });

  out.verified = out.min_slack >= -eps;
  return out;
}

double round_up_3(double v) {
  return std::ceil(v * 1000.0 - 1e-9) / 1000.0;
}

std::string round_up_3_string(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f", round_up_3(v));
  return buf;
}

}  // namespace conecert
