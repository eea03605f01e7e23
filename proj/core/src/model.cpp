#include "staq/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "staq/errors.hpp"

namespace staq {

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::Decomposed: return "decomposed";
    case EffectKind::LinearOnly: return "linear";
    case EffectKind::NonlinearOnly: return "nonlinear";
  }
  return "decomposed";
}

EffectKind effect_kind_from_string(std::string_view s) {
  if (s == "decomposed") return EffectKind::Decomposed;
  if (s == "linear" || s == "linear-only") return EffectKind::LinearOnly;
  if (s == "nonlinear" || s == "nonlinear-only") return EffectKind::NonlinearOnly;
  throw ConfigError("unknown effect kind '" + std::string(s) + "'");
}

void HyperDefaults::validate() const {
  for (double v : {a, a0, b0, alpha, c, a_delta, b_delta}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("hyperparameters must be positive and finite");
  }
  if (!(alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

void SamplerConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn_in must satisfy 0 <= burn_in < iterations");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (num_chains < 1) throw ConfigError("at least one chain is required");
}

void ModelSpec::validate() const {
  if (response.empty()) throw ConfigError("response column is not set");
  std::set<std::string> names;
  for (const auto& cov : covariates) {
    if (cov.name == response) throw ConfigError("response '" + response + "' is also listed as a covariate");
    if (!names.insert(cov.name).second) throw ConfigError("duplicate covariate '" + cov.name + "'");
    if (cov.c && !(*cov.c > 0.0)) throw ConfigError("covariate '" + cov.name + "': c must be positive");
    if (cov.alpha && !(*cov.alpha > 0.0 && *cov.alpha < 1.0)) {
      throw ConfigError("covariate '" + cov.name + "': alpha must lie in (0, 1)");
    }
  }
  for (const auto& term : mandatory_terms) {
    if (term.name == response) throw ConfigError("response is listed as a mandatory term");
    if (!names.insert(term.name).second) throw ConfigError("term '" + term.name + "' appears more than once");
  }
  if (quantiles.empty()) throw ConfigError("at least one quantile level is required");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(quantiles[i] > quantiles[i - 1])) throw ConfigError("quantile levels must be strictly increasing");
  }
  hyper.validate();
  sampler.validate();
  try {
    basis.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (basis.dimension() < 3) throw ConfigError("basis dimension must be at least 3");
  if (!(mandatory_precision > 0.0)) throw ConfigError("mandatory prior precision must be positive");
  if (elicitation_draws < 10000) throw ConfigError("elicitation needs at least 10^4 draws");
}

std::pair<std::vector<double>, StandardizationEntry> standardize(std::span<const double> x) {
  if (x.empty()) throw DomainError("cannot standardize an empty column");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw DomainError("covariate has zero variance");
  StandardizationEntry entry{*lo, *hi};
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(entry.to_unit(x[i]), 0.0, 1.0);
  return {std::move(out), entry};
}

std::size_t BuiltModel::num_selectable() const {
  return static_cast<std::size_t>(
      std::count_if(blocks.begin(), blocks.end(), [](const EffectBlock& b) { return b.selectable; }));
}

BuiltModel build_blocks(const DataTable& data, const ModelSpec& spec) {
  spec.validate();
  BuiltModel model;
  model.mandatory_precision = spec.mandatory_precision;

  const auto y = data.numeric(spec.response);
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n == 0) throw DataError("data set has no rows");
  model.y = Eigen::Map<const Vector>(y.data(), n);

  for (const auto& cov : spec.covariates) {
    const auto raw = data.numeric(cov.name);
    std::vector<double> unit;
    StandardizationEntry entry;
    try {
      std::tie(unit, entry) = standardize(raw);
    } catch (const DomainError&) {
      throw DataError("covariate '" + cov.name + "' has zero variance");
    }

    SpikeSlabHyper hyper;
    hyper.a = spec.hyper.a;
    hyper.a0 = spec.hyper.a0;
    hyper.b0 = spec.hyper.b0;
    hyper.alpha = cov.alpha.value_or(spec.hyper.alpha);
    hyper.c = cov.c.value_or(spec.hyper.c);

    auto add = [&](BlockDesign design) {
      EffectBlock block;
      block.covariate = cov.name;
      block.id = cov.name + ":" + std::string(to_string(design.part));
      block.design = std::move(design);
      block.selectable = cov.selectable;
      block.hyper = hyper;
      block.scale = entry;
      model.blocks.push_back(std::move(block));
    };
    if (cov.kind != EffectKind::NonlinearOnly) add(linear_block(unit));
    if (cov.kind != EffectKind::LinearOnly) add(nonlinear_block(unit, spec.basis));

    model.standardization[cov.name] = entry;
    model.unit_covariates[cov.name] = std::move(unit);
  }

  // Intercept plus treatment-coded dummies.
  std::vector<Vector> columns{Vector::Ones(n)};
  model.mandatory_names.push_back("(intercept)");
  for (const auto& term : spec.mandatory_terms) {
    const auto& cells = data.column(term.name);
    std::set<std::string> levels(cells.begin(), cells.end());
    if (!levels.count(term.reference)) {
      throw DataError("reference level '" + term.reference + "' not found in column '" + term.name + "'");
    }
    for (const auto& level : levels) {
      if (level == term.reference) continue;
      Vector col(n);
      for (Eigen::Index i = 0; i < n; ++i) col(i) = cells[static_cast<std::size_t>(i)] == level ? 1.0 : 0.0;
      columns.push_back(std::move(col));
      model.mandatory_names.push_back(term.name + "=" + level);
    }
  }
  model.mandatory_design.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) model.mandatory_design.col(static_cast<Eigen::Index>(j)) = columns[j];
  return model;
}

Vector block_contribution(const EffectBlock& block, const BlockCoefficients& coef) {
  return std::sqrt(coef.zeta2) * (block.design.design * coef.beta_tilde);
}

Vector evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks) {
  if (blocks.size() != model.blocks.size()) throw DomainError("block coefficient count mismatch");
  Vector eta = model.mandatory_design * mandatory;
  for (std::size_t j = 0; j < blocks.size(); ++j) eta += block_contribution(model.blocks[j], blocks[j]);
  return eta;
}

double evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks, std::size_t row) {
  if (blocks.size() != model.blocks.size()) throw DomainError("block coefficient count mismatch");
  const auto i = static_cast<Eigen::Index>(row);
  double eta = model.mandatory_design.row(i).dot(mandatory);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    eta += std::sqrt(blocks[j].zeta2) * model.blocks[j].design.design.row(i).dot(blocks[j].beta_tilde);
  }
  return eta;
}

double evaluate_predictor(const BuiltModel& model, const Vector& mandatory,
                          std::span<const BlockCoefficients> blocks,
                          const std::map<std::string, double>& covariates, const Vector& mandatory_row) {
  if (blocks.size() != model.blocks.size()) throw DomainError("block coefficient count mismatch");
  double eta = mandatory_row.dot(mandatory);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& block = model.blocks[j];
    const auto it = covariates.find(block.covariate);
    if (it == covariates.end()) throw DomainError("missing covariate '" + block.covariate + "'");
    const double x = it->second;
    if (x < block.scale.min || x > block.scale.max) {
      throw DomainError("covariate '" + block.covariate + "' value outside the training range (extrapolation)");
    }
    const double u = block.scale.to_unit(x);
    const Matrix row = block.design.evaluate(std::span<const double>(&u, 1));
    eta += std::sqrt(blocks[j].zeta2) * row.row(0).dot(blocks[j].beta_tilde);
  }
  return eta;
}

}  // namespace staq
