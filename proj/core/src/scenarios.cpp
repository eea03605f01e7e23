#include "staq/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"
#include "staq/errors.hpp"
#include "staq/random.hpp"

namespace staq {

std::vector<std::string> scenario_catalog() {
  return {"sparse-linear", "sparse-nonlinear", "heteroskedastic-linear"};
}

SimulatedData simulate_scenario(std::string_view id, std::uint64_t seed, int n) {
  if (n < 10) throw DomainError("scenario needs at least 10 rows");
  RandomStream rng(seed);
  const auto rows = static_cast<std::size_t>(n);
  auto uniform_column = [&] {
    std::vector<double> x(rows);
    for (auto& v : x) v = rng.uniform();
    return x;
  };
  auto both_parts = [](const std::string& cov) {
    return std::vector<std::string>{cov + ":linear", cov + ":nonlinear"};
  };

  SimulatedData out;
  nlohmann::json truth{{"scenario", std::string(id)}, {"seed", seed}, {"n", n}};
  std::vector<std::vector<double>> x;
  std::vector<double> y(rows);

  if (id == "sparse-linear") {
    out.covariates = {"x1", "x2", "x3", "x4"};
    for (int k = 0; k < 4; ++k) x.push_back(uniform_column());
    for (std::size_t i = 0; i < rows; ++i) y[i] = 1.0 + 2.0 * x[0][i] + 0.5 * rng.normal();
    out.active_parts = {"x1:linear"};
    for (const char* c : {"x2", "x3", "x4"}) {
      for (auto& p : both_parts(c)) out.noise_parts.push_back(p);
    }
    truth["model"] = "y = 1 + 2 x1 + 0.5 e";
    truth["effects"] = {{"x1", "linear, slope 2"}, {"x2", "none"}, {"x3", "none"}, {"x4", "none"}};
  } else if (id == "sparse-nonlinear") {
    out.covariates = {"x1", "x2", "x3", "x4"};
    for (int k = 0; k < 4; ++k) x.push_back(uniform_column());
    for (std::size_t i = 0; i < rows; ++i) {
      y[i] = 1.0 + 1.5 * x[0][i] + std::sin(2.0 * std::numbers::pi * x[1][i]) + 0.5 * rng.normal();
    }
    out.active_parts = {"x1:linear", "x2:nonlinear"};
    for (const char* c : {"x3", "x4"}) {
      for (auto& p : both_parts(c)) out.noise_parts.push_back(p);
    }
    truth["model"] = "y = 1 + 1.5 x1 + sin(2 pi x2) + 0.5 e";
    truth["effects"] = {{"x1", "linear, slope 1.5"}, {"x2", "sine, one period"}, {"x3", "none"}, {"x4", "none"}};
  } else if (id == "heteroskedastic-linear") {
    out.covariates = {"x1"};
    x.push_back(uniform_column());
    for (std::size_t i = 0; i < rows; ++i) y[i] = 1.0 + 2.0 * x[0][i] + (1.0 + x[0][i]) * rng.normal();
    out.active_parts = {"x1:linear"};
    truth["model"] = "y = 1 + 2 x1 + (1 + x1) e";
    truth["effects"] = {{"x1", "linear in every quantile: 1 + 2 x1 + (1 + x1) z_tau"}};
  } else {
    throw DomainError("unknown scenario '" + std::string(id) + "'");
  }

  truth["errors"] = "e ~ N(0, 1)";
  truth["covariates"] = "independent U(0, 1)";
  truth["active_parts"] = out.active_parts;
  truth["noise_parts"] = out.noise_parts;
  out.truth_json = truth.dump(2);

  out.table.add_numeric_column(out.response, y);
  for (std::size_t k = 0; k < x.size(); ++k) out.table.add_numeric_column(out.covariates[k], x[k]);
  return out;
}

}  // namespace staq
