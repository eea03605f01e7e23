#include "staq/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "staq/errors.hpp"

namespace staq {

void BasisConfig::validate() const {
  if (degree < 1) throw DomainError("B-spline degree must be at least 1");
  if (num_knots < 2) throw DomainError("B-spline basis needs at least 2 knots");
}

namespace {

std::vector<double> knot_sequence(const BasisConfig& cfg) {
  const double h = 1.0 / (cfg.num_knots - 1);
  std::vector<double> knots;
  knots.reserve(cfg.num_knots + 2 * cfg.degree);
  for (int i = -cfg.degree; i < cfg.num_knots + cfg.degree; ++i) knots.push_back(i * h);
  // Pin the interior ends exactly.
  knots[cfg.degree] = 0.0;
  knots[cfg.degree + cfg.num_knots - 1] = 1.0;
  return knots;
}

// De Boor's triangular scheme for the degree+1 non-zero basis values in the
// knot interval [t_k, t_{k+1}].
void basis_values(const std::vector<double>& t, int degree, int k, double x, std::vector<double>& out) {
  out.assign(degree + 1, 0.0);
  std::vector<double> left(degree + 1), right(degree + 1);
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - t[k + 1 - j];
    right[j] = t[k + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

Vector centered_index(int d) {
  Vector t(d);
  const double mid = 0.5 * (d - 1);
  for (int i = 0; i < d; ++i) t(i) = i - mid;
  return t;
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

void require_non_constant(std::span<const double> x) {
  if (x.empty()) throw DomainError("covariate is empty");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw DomainError("covariate has zero variance");
}

}  // namespace

Matrix bspline_design(std::span<const double> x, const BasisConfig& cfg) {
  cfg.validate();
  const int d = cfg.dimension();
  const auto t = knot_sequence(cfg);
  const int first = cfg.degree;                       // index of knot at 0
  const int last = cfg.degree + cfg.num_knots - 2;    // index of the last interval start
  const double h = 1.0 / (cfg.num_knots - 1);

  Matrix design = Matrix::Zero(static_cast<Eigen::Index>(x.size()), d);
  std::vector<double> values;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (!(xi >= 0.0 && xi <= 1.0)) {
      throw DomainError("covariate value outside [0, 1] at row " + std::to_string(i));
    }
    int k = first + static_cast<int>(std::floor(xi / h));
    k = std::clamp(k, first, last);
    while (k < last && xi >= t[k + 1]) ++k;
    while (k > first && xi < t[k]) --k;
    basis_values(t, cfg.degree, k, xi, values);
    for (int r = 0; r <= cfg.degree; ++r) design(static_cast<Eigen::Index>(i), k - cfg.degree + r) = values[r];
  }
  return design;
}

PenaltySpec rw2_penalty(int dimension) {
  if (dimension < 3) throw DomainError("RW2 penalty needs dimension >= 3");
  Matrix diff = Matrix::Zero(dimension - 2, dimension);
  for (int i = 0; i < dimension - 2; ++i) {
    diff(i, i) = 1.0;
    diff(i, i + 1) = -2.0;
    diff(i, i + 2) = 1.0;
  }
  PenaltySpec spec;
  spec.matrix = diff.transpose() * diff;
  spec.rank = dimension - 2;
  spec.kernel_basis.resize(dimension, 2);
  spec.kernel_basis.col(0) = Vector::Ones(dimension).normalized();
  spec.kernel_basis.col(1) = centered_index(dimension).normalized();
  return spec;
}

PenaltySpec identity_penalty(int dimension) {
  if (dimension < 1) throw DomainError("penalty dimension must be positive");
  return {Matrix::Identity(dimension, dimension), dimension, Matrix(dimension, 0)};
}

Matrix constraint_matrix(const PenaltySpec& spec) { return spec.kernel_basis.transpose(); }

std::string_view to_string(EffectPart part) {
  return part == EffectPart::Linear ? "linear" : "nonlinear";
}

Matrix BlockDesign::evaluate(std::span<const double> x) const {
  if (part == EffectPart::Linear) {
    Matrix out(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = x[i] - x_mean;
    return out;
  }
  Matrix out = bspline_design(x, basis);
  out.rowwise() -= column_means.transpose();
  return out;
}

BlockDesign linear_block(std::span<const double> x) {
  require_non_constant(x);
  BlockDesign block;
  block.part = EffectPart::Linear;
  block.x_mean = mean_of(x);
  block.design = block.evaluate(x);
  block.penalty = identity_penalty(1);
  block.constraint = constraint_matrix(block.penalty);
  return block;
}

BlockDesign nonlinear_block(std::span<const double> x, const BasisConfig& cfg) {
  require_non_constant(x);
  BlockDesign block;
  block.part = EffectPart::Nonlinear;
  block.basis = cfg;
  Matrix raw = bspline_design(x, cfg);
  block.column_means = raw.colwise().mean().transpose();
  raw.rowwise() -= block.column_means.transpose();
  block.design = std::move(raw);
  block.x_mean = mean_of(x);
  block.penalty = rw2_penalty(cfg.dimension());
  block.constraint = constraint_matrix(block.penalty);
  return block;
}

std::pair<BlockDesign, BlockDesign> decompose_effect(std::span<const double> x, const BasisConfig& cfg) {
  return {linear_block(x), nonlinear_block(x, cfg)};
}

}  // namespace staq
