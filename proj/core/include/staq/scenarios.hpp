#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "staq/data.hpp"

namespace staq {

/// A synthetic data set with a description of the data-generating process.
struct SimulatedData {
  DataTable table;
  std::string response = "y";
  std::vector<std::string> covariates;
  /// Active effect parts as "<covariate>:<linear|nonlinear>".
  std::vector<std::string> active_parts;
  /// Effect parts that carry no signal.
  std::vector<std::string> noise_parts;
  /// JSON description of the generating process.
  std::string truth_json;
};

/// "sparse-linear", "sparse-nonlinear", "heteroskedastic-linear".
std::vector<std::string> scenario_catalog();

/// Covariates are U(0, 1), errors standard normal scaled per scenario:
///   sparse-linear           y = 1 + 2 x1 + 0.5 e, noise x2..x4
///   sparse-nonlinear        y = 1 + 1.5 x1 + sin(2 pi x2) + 0.5 e, noise x3, x4
///   heteroskedastic-linear  y = 1 + 2 x1 + (1 + x1) e
/// Throws DomainError for unknown ids or n < 10.
SimulatedData simulate_scenario(std::string_view id, std::uint64_t seed, int n);

}  // namespace staq
