#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace conecert {

/// One reported constant: full precision plus the three-decimal round-up
/// used in the worked examples' tables.
struct ReproRow {
  std::string name;
  double value = 0.0;
  std::string rounded;
};

struct ReproReport {
  std::string example;
  double grid_h = 0.0;
  std::vector<ReproRow> rows;
  std::vector<std::string> lines;  // inequality lines and point evaluations

  const ReproRow& row(const std::string& name) const;
  nlohmann::json to_json() const;
  std::string format_text() const;
};

/// Recompute the constants tables of the bundled examples ("example1",
/// "example2") on a fresh grid and render them with round-up-at-3-decimals
/// values alongside full precision.
ReproReport repro(const std::string& name, std::optional<double> h_override = std::nullopt);

}  // namespace conecert
