#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staq/gibbs.hpp"
#include "staq/model.hpp"

namespace staq {

struct InclusionRow {
  std::string covariate;
  EffectPart part = EffectPart::Linear;
  double tau = 0.5;
  double inclusion_prob = 0.0;
  bool selected = false;  // inclusion_prob >= 0.5
};

using InclusionTable = std::vector<InclusionRow>;

/// Mean of the stored gamma draws per selectable block, pooled over chains
/// (all chains must share one tau).
InclusionTable inclusion_probabilities(const BuiltModel& model, std::span<const PosteriorDraws> chains);

enum class CurvePart { Linear, Nonlinear, Total };

std::string_view to_string(CurvePart part);

struct EffectCurve {
  std::string covariate;
  CurvePart part = CurvePart::Total;
  double tau = 0.5;
  std::vector<double> x;  // original units, strictly increasing
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Pointwise posterior mean and equal-tailed interval of every effect part and
/// of the per-covariate total on `grid_size` equidistant points of the
/// training range.
std::vector<EffectCurve> effect_curves(const BuiltModel& model, std::span<const PosteriorDraws> chains,
                                       int grid_size = 200, double level = 0.95);

/// Per-draw curve values of one block on a standardized grid (draws x grid).
Matrix block_curve_draws(const EffectBlock& block, const BlockTrace& trace, std::span<const double> unit_grid);

struct FittedQuantiles {
  double tau = 0.5;
  Vector mean;
  Vector lower;
  Vector upper;
};

FittedQuantiles fitted_quantiles(std::span<const PosteriorDraws> chains, double level = 0.95);

/// Effective sample size from the autocorrelation sum, truncated at the
/// first pair of consecutive lags whose sum is negative.
double effective_sample_size(std::span<const double> draws);

/// Split-Rhat over >= 2 chains of equal length.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct ScalarDiagnostic {
  std::string name;
  double tau = 0.5;
  double ess = 0.0;
  std::optional<double> rhat;  // omitted for a single chain
  double mean = 0.0;
};

/// ESS and split-Rhat for every stored scalar (gamma, zeta2, psi2, omega per
/// block; delta2; mandatory coefficients).
std::vector<ScalarDiagnostic> diagnostics(const BuiltModel& model, std::span<const PosteriorDraws> chains);

/// Names and values of every stored scalar of one chain, in draws.csv order.
struct ScalarColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};
ScalarColumns scalar_columns(const BuiltModel& model, const PosteriorDraws& draws);

/// Mean check loss over rows.
double pinball_score(std::span<const double> y, std::span<const double> fitted, double tau);

}  // namespace staq
