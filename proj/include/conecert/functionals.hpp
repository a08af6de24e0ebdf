#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "conecert/expr.hpp"
#include "conecert/geometry.hpp"

namespace conecert {

enum class Provenance { Sampled, User };

inline const char* provenance_name(Provenance p) {
  return p == Provenance::User ? "user" : "sampled";
}

/// Boundary functional h[u]: named primitives (point evaluations inside the
/// domain or weighted integrals over it) combined by a scalar expression.
struct FunctionalSpec {
  struct PointEval {
    int component;  // 1-based
    Point2 point;
  };
  struct Integral {
    int component;  // 1-based
    Expr weight;    // alpha(x) >= 0
  };
  struct Primitive {
    std::string name;
    std::variant<PointEval, Integral> kind;
  };

  std::vector<Primitive> primitives;
  Expr combiner;  // expression over the primitive names

  std::vector<std::string> primitive_names() const;
};

/// Precomputed evaluator for one functional on one grid: interpolation
/// weights for point primitives, weighted cell measures for integrals.
class FunctionalEvaluator {
 public:
  FunctionalEvaluator(const FunctionalSpec& spec, std::shared_ptr<const Grid> grid);

  /// h[u]; result is clamped at tiny negative round-off and must otherwise be
  /// nonnegative.
  double eval(std::span<const GridFunction> u) const;

  /// h[c] for the constant field u = c (no grid functions materialized).
  double eval_constant(std::span<const double> c) const;

  const FunctionalSpec& spec() const { return spec_; }

 private:
  FunctionalSpec spec_;
  std::shared_ptr<const Grid> grid_;
  struct PrimitiveData {
    int component = 0;  // 0-based
    bool is_point = false;
    std::vector<std::pair<int, double>> point_weights;
    Eigen::VectorXd integral_weights;  // cell weight * alpha(x) per node
    double integral_total = 0.0;       // sum of integral_weights
  };
  std::vector<PrimitiveData> data_;

  double combine(std::span<const double> primitive_values) const;
};

/// Pointwise substitution F(u)(x) = f(x, u(x)).
GridFunction nemytskii(const Expr& f, std::span<const GridFunction> u, const Grid& grid);

/// One-shot h[u] (builds a FunctionalEvaluator internally).
double eval_functional(const FunctionalSpec& h, std::span<const GridFunction> u,
                       std::shared_ptr<const Grid> grid);

/// Validate a functional against a grid: points strictly inside, weights
/// nonnegative on nodes, combiner nonnegative on sampled nonnegative inputs.
void validate_functional(const FunctionalSpec& h, std::shared_ptr<const Grid> grid,
                         std::span<const double> box);

struct SampledBound {
  double value = 0.0;
  Provenance provenance = Provenance::Sampled;
  double min_sample = 0.0;             // smallest sampled value (sign check)
  std::vector<double> witness_u;       // sample attaining the max
  Point2 witness_x{};
};

/// Sampled maximum of f over grid nodes x tensor lattice of the box
/// [0, rho_1] x ... x [0, rho_n]. Raises NegativeNonlinearity when a sample
/// is negative.
SampledBound estimate_M(const Expr& f, std::span<const double> box, const Grid& grid,
                        int samples_per_axis = 33);

/// Sampled supremum of h over constant fields u = c with c in the tensor
/// lattice of the box (a heuristic; the certificate records it as sampled).
SampledBound estimate_H(const FunctionalSpec& h, std::span<const double> box,
                        std::shared_ptr<const Grid> grid, int samples_per_axis = 33);

/// Largest delta with f(x, u) >= delta * u_{i0} over samples of
/// [0, rho0]^n with u_{i0} > 0; returns 0 when the condition is unusable.
double find_delta(const Expr& f, int i0_one_based, double rho0, int n_components,
                  const Grid& grid, int samples_per_axis = 33);

struct BoundCheck {
  bool verified = false;
  double min_slack = 0.0;
  std::string binding;          // "f" or "h": which side attains min slack
  std::vector<double> witness_u;
  Point2 witness_x{};
};

/// Verify 0 <= f(x,u) <= tau * u_i on box samples and h[u] <= xi * ||u|| on
/// constant-field samples; reports the minimal slack and a witness.
BoundCheck verify_linear_bounds(const Expr& f, int i_one_based, double tau,
                                const FunctionalSpec& h, double xi,
                                std::span<const double> box,
                                std::shared_ptr<const Grid> grid,
                                int samples_per_axis = 65);

/// Round a value up at the third decimal ("from above unless exact"); a tiny
/// guard keeps values that are already exact thousandths unchanged.
double round_up_3(double v);

/// Fixed three-decimal string of round_up_3(v).
std::string round_up_3_string(double v);

}  // namespace conecert
