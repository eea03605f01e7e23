#include "staq/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "staq/ald.hpp"
#include "staq/elicitation.hpp"
#include "staq/errors.hpp"

namespace staq {
namespace {

void require_draws(std::span<const PosteriorDraws> chains) {
  if (chains.empty()) throw DomainError("no chains supplied");
  std::size_t total = 0;
  for (const auto& c : chains) {
    total += c.size();
    if (c.tau != chains.front().tau) throw DomainError("chains mix different quantile levels");
  }
  if (total == 0) throw DomainError("no stored draws");
}

// Equal-tailed interval and mean of each column of `values` (draws x points).
void summarize_columns(const Matrix& values, double level, std::vector<double>& mean, std::vector<double>& lo,
                       std::vector<double>& hi) {
  const double tail = 0.5 * (1.0 - level);
  const auto cols = values.cols();
  mean.resize(static_cast<std::size_t>(cols));
  lo.resize(static_cast<std::size_t>(cols));
  hi.resize(static_cast<std::size_t>(cols));
  std::vector<double> column(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) column[static_cast<std::size_t>(r)] = values(r, c);
    const auto k = static_cast<std::size_t>(c);
    mean[k] = values.col(c).mean();
    lo[k] = std::min(empirical_quantile(column, tail), mean[k]);
    hi[k] = std::max(empirical_quantile(column, 1.0 - tail), mean[k]);
  }
}

Matrix stack_rows(const std::vector<const Matrix*>& parts) {
  Eigen::Index rows = 0;
  for (const auto* p : parts) rows += p->rows();
  Matrix out(rows, parts.empty() ? 0 : parts.front()->cols());
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.middleRows(at, p->rows()) = *p;
    at += p->rows();
  }
  return out;
}

}  // namespace

InclusionTable inclusion_probabilities(const BuiltModel& model, std::span<const PosteriorDraws> chains) {
  require_draws(chains);
  InclusionTable table;
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    const auto& block = model.blocks[j];
    if (!block.selectable) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& c : chains) {
      for (int g : c.blocks.at(j).gamma) sum += g;
      count += c.blocks.at(j).gamma.size();
    }
    const double prob = sum / static_cast<double>(count);
    table.push_back({block.covariate, block.part(), chains.front().tau, prob, prob >= 0.5});
  }
  return table;
}

std::string_view to_string(CurvePart part) {
  switch (part) {
    case CurvePart::Linear: return "linear";
    case CurvePart::Nonlinear: return "nonlinear";
    case CurvePart::Total: return "total";
  }
  return "total";
}

Matrix block_curve_draws(const EffectBlock& block, const BlockTrace& trace, std::span<const double> unit_grid) {
  const Matrix basis = block.design.evaluate(unit_grid);  // grid x D
  return trace.coefficients * basis.transpose();          // draws x grid
}

std::vector<EffectCurve> effect_curves(const BuiltModel& model, std::span<const PosteriorDraws> chains, int grid_size,
                                       double level) {
  require_draws(chains);
  if (grid_size < 2) throw DomainError("curve grid needs at least 2 points");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("interval level must lie in (0, 1)");

  std::vector<double> unit_grid(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) unit_grid[static_cast<std::size_t>(g)] = static_cast<double>(g) / (grid_size - 1);

  // Covariates in declaration order.
  std::vector<std::string> order;
  for (const auto& b : model.blocks) {
    if (std::find(order.begin(), order.end(), b.covariate) == order.end()) order.push_back(b.covariate);
  }

  std::vector<EffectCurve> curves;
  for (const auto& name : order) {
    Matrix total;
    const StandardizationEntry* scale = nullptr;
    std::vector<double> x;
    for (std::size_t j = 0; j < model.blocks.size(); ++j) {
      const auto& block = model.blocks[j];
      if (block.covariate != name) continue;
      scale = &block.scale;
      std::vector<Matrix> per_chain;
      per_chain.reserve(chains.size());
      for (const auto& c : chains) per_chain.push_back(block_curve_draws(block, c.blocks.at(j), unit_grid));
      std::vector<const Matrix*> parts;
      for (const auto& m : per_chain) parts.push_back(&m);
      const Matrix values = stack_rows(parts);
      total = total.size() == 0 ? values : Matrix(total + values);

      EffectCurve curve;
      curve.covariate = name;
      curve.part = block.part() == EffectPart::Linear ? CurvePart::Linear : CurvePart::Nonlinear;
      curve.tau = chains.front().tau;
      summarize_columns(values, level, curve.mean, curve.lower, curve.upper);
      curves.push_back(std::move(curve));
    }
    for (double u : unit_grid) x.push_back(scale->from_unit(u));
    for (auto& c : curves) {
      if (c.covariate == name && c.x.empty()) c.x = x;
    }
    EffectCurve sum;
    sum.covariate = name;
    sum.part = CurvePart::Total;
    sum.tau = chains.front().tau;
    sum.x = x;
    summarize_columns(total, level, sum.mean, sum.lower, sum.upper);
    curves.push_back(std::move(sum));
  }
  return curves;
}

FittedQuantiles fitted_quantiles(std::span<const PosteriorDraws> chains, double level) {
  require_draws(chains);
  std::vector<const Matrix*> parts;
  for (const auto& c : chains) parts.push_back(&c.eta);
  const Matrix eta = stack_rows(parts);
  std::vector<double> mean, lo, hi;
  summarize_columns(eta, level, mean, lo, hi);
  FittedQuantiles out;
  out.tau = chains.front().tau;
  out.mean = Eigen::Map<Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  out.lower = Eigen::Map<Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  out.upper = Eigen::Map<Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return out;
}

double effective_sample_size(std::span<const double> draws) {
  const auto n = draws.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = draws[i] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);

  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw DomainError("split-Rhat needs at least two chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len) throw DomainError("split-Rhat needs chains of equal length");
  }
  const std::size_t half = len / 2;
  if (half < 2) throw DomainError("chains too short for split-Rhat");

  std::vector<double> means, vars;
  for (const auto& c : chains) {
    for (int part = 0; part < 2; ++part) {
      const std::size_t begin = part == 0 ? 0 : len - half;
      double m = 0.0;
      for (std::size_t i = 0; i < half; ++i) m += c[begin + i];
      m /= static_cast<double>(half);
      double v = 0.0;
      for (std::size_t i = 0; i < half; ++i) v += (c[begin + i] - m) * (c[begin + i] - m);
      v /= static_cast<double>(half - 1);
      means.push_back(m);
      vars.push_back(v);
    }
  }
  const auto k = static_cast<double>(means.size());
  const auto nn = static_cast<double>(half);
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= k;
  double between = 0.0;
  for (double m : means) between += (m - grand) * (m - grand);
  between *= nn / (k - 1.0);
  double within = 0.0;
  for (double v : vars) within += v;
  within /= k;
  if (!(within > 0.0)) return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (nn - 1.0) / nn * within + between / nn;
  return std::sqrt(var_plus / within);
}

ScalarColumns scalar_columns(const BuiltModel& model, const PosteriorDraws& draws) {
  ScalarColumns out;
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    const auto& block = model.blocks[j];
    if (!block.selectable) continue;
    const auto& t = draws.blocks.at(j);
    out.names.push_back(block.id + ".gamma");
    out.values.emplace_back(t.gamma.begin(), t.gamma.end());
    out.names.push_back(block.id + ".zeta2");
    out.values.push_back(t.zeta2);
    out.names.push_back(block.id + ".psi2");
    out.values.push_back(t.psi2);
    out.names.push_back(block.id + ".omega");
    out.values.push_back(t.omega);
  }
  out.names.push_back("delta2");
  out.values.push_back(draws.delta2);
  for (Eigen::Index k = 0; k < draws.mandatory.cols(); ++k) {
    out.names.push_back("beta[" + model.mandatory_names.at(static_cast<std::size_t>(k)) + "]");
    std::vector<double> col(static_cast<std::size_t>(draws.mandatory.rows()));
    for (Eigen::Index r = 0; r < draws.mandatory.rows(); ++r) col[static_cast<std::size_t>(r)] = draws.mandatory(r, k);
    out.values.push_back(std::move(col));
  }
  return out;
}

std::vector<ScalarDiagnostic> diagnostics(const BuiltModel& model, std::span<const PosteriorDraws> chains) {
  require_draws(chains);
  std::vector<ScalarColumns> per_chain;
  for (const auto& c : chains) per_chain.push_back(scalar_columns(model, c));
  std::vector<ScalarDiagnostic> out;
  for (std::size_t s = 0; s < per_chain.front().names.size(); ++s) {
    ScalarDiagnostic d;
    d.name = per_chain.front().names[s];
    d.tau = chains.front().tau;
    std::vector<std::vector<double>> values;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& pc : per_chain) {
      values.push_back(pc.values[s]);
      d.ess += effective_sample_size(pc.values[s]);
      for (double v : pc.values[s]) sum += v;
      count += pc.values[s].size();
    }
    d.mean = sum / static_cast<double>(count);
    if (values.size() >= 2 && values.front().size() >= 4) d.rhat = split_rhat(values);
    out.push_back(std::move(d));
  }
  return out;
}

double pinball_score(std::span<const double> y, std::span<const double> fitted, double tau) {
  if (y.size() != fitted.size()) throw DomainError("pinball score: length mismatch");
  if (y.empty()) throw DomainError("pinball score: no rows");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += check_loss(tau, y[i] - fitted[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace staq
