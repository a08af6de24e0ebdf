#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "conecert/fixed_point.hpp"

namespace conecert {

struct GridOptions {
  double h = 1.0 / 64.0;
  double cut_floor = 1e-6;
};

/// A parsed and validated problem file.
struct LoadedProblem {
  SystemSpec spec;
  GridOptions grid;
  SolverConfig solver;

  /// Build the grid and assemble all component operators.
  SystemOperator build(std::optional<double> h_override = std::nullopt) const;
};

/// Parse a problem JSON document; schema errors carry a JSON-pointer-style
/// location, semantic problems raise ValidationError.
LoadedProblem load_problem_json(const nlohmann::json& doc);
LoadedProblem load_problem_text(const std::string& text);
LoadedProblem load_problem(const std::string& path);

/// Serialize back to the problem-file schema (expressions in canonical form).
nlohmann::json save_problem(const LoadedProblem& problem);

/// Built-in copies of the bundled problem files ("example1", "example2").
const std::string& embedded_problem_text(const std::string& name);

}  // namespace conecert
