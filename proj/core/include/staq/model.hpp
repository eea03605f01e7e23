#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "staq/data.hpp"
#include "staq/spline.hpp"
#include "staq/types.hpp"

namespace staq {

enum class EffectKind { Decomposed, LinearOnly, NonlinearOnly };

std::string_view to_string(EffectKind kind);
EffectKind effect_kind_from_string(std::string_view s);

struct CovariateSpec {
  std::string name;
  EffectKind kind = EffectKind::Decomposed;
  bool selectable = true;
  /// Per-covariate elicitation overrides.
  std::optional<double> c;
  std::optional<double> alpha;
};

/// Categorical term entered as dummies against a reference level.
struct CategoricalTerm {
  std::string name;
  std::string reference;
};

struct HyperDefaults {
  double a = 5.0;
  double a0 = 1.0;
  double b0 = 1.0;
  double alpha = 0.1;
  double c = 0.1;
  double a_delta = 0.001;
  double b_delta = 0.001;

  void validate() const;
};

struct SamplerConfig {
  int iterations = 12000;
  int burn_in = 2000;
  int thin = 10;
  std::uint64_t seed = 1;
  int num_chains = 2;

  int num_stored() const noexcept { return (iterations - burn_in) / thin; }
  void validate() const;
};

struct ModelSpec {
  std::string response;
  std::vector<CovariateSpec> covariates;
  std::vector<CategoricalTerm> mandatory_terms;
  std::vector<double> quantiles{0.6, 0.8, 0.9};
  HyperDefaults hyper;
  SamplerConfig sampler;
  BasisConfig basis;
  /// Prior precision of the coefficients that are not subject to selection.
  double mandatory_precision = 1e-6;
  int elicitation_draws = 100000;

  void validate() const;
};

struct StandardizationEntry {
  double min = 0.0;
  double max = 1.0;

  double to_unit(double x) const { return (x - min) / (max - min); }
  double from_unit(double u) const { return min + u * (max - min); }
};

using StandardizationMap = std::map<std::string, StandardizationEntry>;

/// (x - min) / (max - min). Throws DomainError for constant columns.
std::pair<std::vector<double>, StandardizationEntry> standardize(std::span<const double> x);

/// Spike-and-slab hyperparameters of one block. b and r come from elicitation.
struct SpikeSlabHyper {
  double a = 5.0;
  double b = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;
  double r = 0.01;
  double alpha = 0.1;
  double c = 0.1;
};

/// One effect part: immutable design information plus its prior settings.
/// The sampled state lives in the chain (see gibbs.hpp).
struct EffectBlock {
  std::string id;         // "<covariate>:<part>"
  std::string covariate;
  BlockDesign design;
  bool selectable = true;
  SpikeSlabHyper hyper;
  StandardizationEntry scale;

  EffectPart part() const noexcept { return design.part; }
  int dimension() const noexcept { return design.dimension(); }
  /// Dimension of the constrained prior, D - rows(A); equals rank(K).
  int prior_rank() const noexcept {
    return dimension() - static_cast<int>(design.constraint.rows());
  }
};

/// Everything the sampler needs, independent of the quantile level.
struct BuiltModel {
  Vector y;
  std::vector<EffectBlock> blocks;
  Matrix mandatory_design;
  std::vector<std::string> mandatory_names;
  double mandatory_precision = 1e-6;
  StandardizationMap standardization;
  /// Standardized covariate columns keyed by covariate name.
  std::map<std::string, std::vector<double>> unit_covariates;

  std::size_t num_rows() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t num_selectable() const;
};

/// Standardize covariates, build blocks and the mandatory design
/// (intercept plus dummies). Rows with missing values must be removed first.
BuiltModel build_blocks(const DataTable& data, const ModelSpec& spec);

/// Per-block sampled quantities that enter the predictor.
struct BlockCoefficients {
  Vector beta_tilde;
  double zeta2 = 1.0;
};

/// Contribution zeta * B beta_tilde of one block at the training rows.
Vector block_contribution(const EffectBlock& block, const BlockCoefficients& coef);

/// Predictor at every training row.
Vector evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks);

/// Predictor at one training row.
double evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks, std::size_t row);

/// Predictor at a new covariate row given in original units. Mandatory
/// dummies are given as their design values in `mandatory_row`. Throws
/// DomainError if a covariate lies outside its training range.
double evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks,
                          const std::map<std::string, double>& covariates, const Vector& mandatory_row);

}  // namespace staq
