#pragma once

#include <span>
#include <string>
#include <vector>

#include "staq/model.hpp"
#include "staq/random.hpp"

namespace staq {

struct ElicitationResult {
  std::string block_id;
  double a = 5.0;
  double b = 0.0;
  double r = 0.0;
  double c = 0.1;
  double alpha = 0.1;
  int num_draws = 0;
  double q_slab = 0.0;   // alpha-quantile of the sup-norm sample
  double q_spike = 0.0;  // (1 - alpha)-quantile
  bool spike_not_smaller = false;  // r >= 1: inconsistent (c, alpha)
};

/// Empirical quantile with linear interpolation of order statistics (type 7).
double empirical_quantile(std::span<const double> sample, double prob);

/// M draws of max_i |zeta_tilde * B_i beta_tilde| over the distinct observed
/// rows of the block design, with zeta_tilde^2 ~ beta-prime(1/2, a) and
/// beta_tilde from the constrained prior N(0, K^-).
std::vector<double> simulate_supnorm(const BlockDesign& block, double a, int num_draws, RandomStream& rng);

/// b = c^2 / (2 q^2) with q the alpha-quantile of the sup-norm sample.
double solve_slab_scale(double c, double alpha, std::span<const double> supnorm);

/// r = c^2 / (2 b q^2) with q the (1 - alpha)-quantile.
double solve_spike_factor(double c, double alpha, double b, std::span<const double> supnorm);

/// One simulation pass plus the two quantile look-ups.
ElicitationResult elicit_block(const EffectBlock& block, int num_draws, RandomStream& rng);

/// Probability P(sup |f| <= c) under the full hierarchy
/// (psi^2 ~ IG(a, b), zeta^2 | psi^2 ~ Gamma(1/2, rate 1 / (2 r psi^2)),
/// beta_tilde ~ N(0, K^-)). Forward simulation used to check solved (b, r).
double forward_supnorm_probability(const BlockDesign& block, double a, double b, double r, double c,
                                   int num_draws, RandomStream& rng);

}  // namespace staq
