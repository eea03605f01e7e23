#include "staq/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "staq/errors.hpp"

namespace staq {

double empirical_quantile(std::span<const double> sample, double prob) {
  if (sample.empty()) throw DomainError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Rows of B V_+ Lambda_+^{-1/2} restricted to distinct design rows, so that a
// prior draw of the block's function values is `map * z` with z ~ N(0, I).
Matrix prior_function_map(const BlockDesign& block) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(block.penalty.matrix);
  const Vector& values = eig.eigenvalues();
  const double tol = 1e-10 * values.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) > tol) keep.push_back(k);
  }
  Matrix root(values.size(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    root.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(keep[j]) / std::sqrt(values(keep[j]));
  }
  const Matrix& a = block.constraint;
  if (a.rows() > 0) {
    const Matrix aat = a * a.transpose();
    root -= a.transpose() * aat.llt().solve(a * root);
  }

  // Distinct design rows (the sup over observed covariate values).
  std::set<std::vector<double>> seen;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < block.design.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(block.design.cols()));
    for (Eigen::Index c = 0; c < block.design.cols(); ++c) key[static_cast<std::size_t>(c)] = block.design(i, c);
    if (seen.insert(std::move(key)).second) rows.push_back(i);
  }
  Matrix unique(static_cast<Eigen::Index>(rows.size()), block.design.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) unique.row(static_cast<Eigen::Index>(k)) = block.design.row(rows[k]);
  return unique * root;
}

}  // namespace

std::vector<double> simulate_supnorm(const BlockDesign& block, double a, int num_draws, RandomStream& rng) {
  if (num_draws < 10000) throw DomainError("sup-norm simulation needs at least 10^4 draws");
  if (!(a > 0.0)) throw DomainError("shape a must be positive");
  const Matrix map = prior_function_map(block);
  std::vector<double> out(static_cast<std::size_t>(num_draws));
  Vector z(map.cols());
  for (int m = 0; m < num_draws; ++m) {
    const double zeta = sample_sqrt_beta_prime(a, rng);
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    out[static_cast<std::size_t>(m)] = zeta * (map * z).cwiseAbs().maxCoeff();
  }
  return out;
}

double solve_slab_scale(double c, double alpha, std::span<const double> supnorm) {
  if (!(c > 0.0)) throw DomainError("c must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double q = empirical_quantile(supnorm, alpha);
  if (!(q > 0.0)) throw NumericalError("degenerate sup-norm sample (alpha-quantile is zero)");
  return c * c / (2.0 * q * q);
}

double solve_spike_factor(double c, double alpha, double b, std::span<const double> supnorm) {
  if (!(c > 0.0)) throw DomainError("c must be positive");
  if (!(b > 0.0)) throw DomainError("slab scale b must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double q = empirical_quantile(supnorm, 1.0 - alpha);
  if (!(q > 0.0)) throw NumericalError("degenerate sup-norm sample ((1 - alpha)-quantile is zero)");
  return c * c / (2.0 * b * q * q);
}

ElicitationResult elicit_block(const EffectBlock& block, int num_draws, RandomStream& rng) {
  const auto& h = block.hyper;
  const auto sample = simulate_supnorm(block.design, h.a, num_draws, rng);
  ElicitationResult res;
  res.block_id = block.id;
  res.a = h.a;
  res.c = h.c;
  res.alpha = h.alpha;
  res.num_draws = num_draws;
  res.q_slab = empirical_quantile(sample, h.alpha);
  res.q_spike = empirical_quantile(sample, 1.0 - h.alpha);
  res.b = solve_slab_scale(h.c, h.alpha, sample);
  res.r = solve_spike_factor(h.c, h.alpha, res.b, sample);
  res.spike_not_smaller = !(res.r < 1.0);
  return res;
}

double forward_supnorm_probability(const BlockDesign& block, double a, double b, double r, double c,
                                   int num_draws, RandomStream& rng) {
  const Matrix map = prior_function_map(block);
  Vector z(map.cols());
  int below = 0;
  for (int m = 0; m < num_draws; ++m) {
    const double psi2 = sample_inverse_gamma(a, b, rng);
    const double zeta2 = sample_gamma(0.5, 1.0 / (2.0 * r * psi2), rng);
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    if (std::sqrt(zeta2) * (map * z).cwiseAbs().maxCoeff() <= c) ++below;
  }
  return static_cast<double>(below) / num_draws;
}

}  // namespace staq
