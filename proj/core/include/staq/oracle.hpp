#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "staq/gibbs.hpp"
#include "staq/model.hpp"
#include "staq/random.hpp"
#include "staq/spline.hpp"
#include "staq/types.hpp"

namespace staq {

/// Check-loss minimizer of y on X. Exhaustive over p-subsets of rows when
/// n <= 30 and p <= 4; ties are broken toward the lexicographically smaller
/// coefficient vector. Larger problems use linear_qr_iterative.
Vector linear_qr_exact(const Matrix& X, const Vector& y, double tau);

/// Smoothed check loss (softplus with decreasing bandwidth) minimized by
/// Newton steps; stops once the subgradient condition holds.
Vector linear_qr_iterative(const Matrix& X, const Vector& y, double tau);

double check_loss_sum(const Matrix& X, const Vector& y, const Vector& beta, double tau);

enum class DistributionId { Gig, InverseGaussian, BetaPrime };

/// Gig: (p, a, b). InverseGaussian: (mean, shape). BetaPrime: (alpha, beta).
struct DistributionSpec {
  DistributionId id = DistributionId::Gig;
  double p1 = 1.0;
  double p2 = 1.0;
  double p3 = 1.0;

  static DistributionSpec gig(double p, double a, double b) { return {DistributionId::Gig, p, a, b}; }
  static DistributionSpec inverse_gaussian(double mean, double shape) {
    return {DistributionId::InverseGaussian, mean, shape, 0.0};
  }
  static DistributionSpec beta_prime(double alpha, double beta) {
    return {DistributionId::BetaPrime, alpha, beta, 0.0};
  }
  std::string label() const;
};

/// Unnormalized log density on x > 0.
double log_density(const DistributionSpec& dist, double x);

/// Distribution function by adaptive Gauss-Kronrod quadrature of the
/// normalized density. x may be +infinity.
double numeric_cdf(const DistributionSpec& dist, double x);

/// numeric_cdf at every point of an ascending sequence, integrating only
/// between neighbours.
std::vector<double> numeric_cdf_sorted(const DistributionSpec& dist, std::span<const double> sorted);

/// Inverse of numeric_cdf by bisection on the log scale.
double numeric_quantile(const DistributionSpec& dist, double prob);

/// Kolmogorov-Smirnov distance between a sorted sample and the model CDF
/// evaluated at the sample points.
double ks_statistic(std::span<const double> sorted, std::span<const double> cdf);

/// Asymptotic critical value of the one-sample KS distance.
double ks_critical_value(std::size_t n, double level = 0.01);

struct GewekeConfig {
  int n = 20;
  double tau = 0.7;
  int sweeps = 200000;
  int forward_draws = 200000;
  int burn_in = 1000;
  double a_delta = 10.0;
  double b_delta = 10.0;
  SpikeSlabHyper hyper{5.0, 1.0, 1.0, 1.0, 0.01, 0.1, 0.1};
  BasisConfig basis;
};

using SweepFunction = std::function<void(const GibbsSampler&, ChainState&, RandomStream&)>;

struct GewekeResult {
  std::vector<std::string> names;
  std::vector<double> forward_mean;
  std::vector<double> gibbs_mean;
  std::vector<double> gibbs_ess;
  std::vector<double> z;

  double max_abs_z() const;
};

/// Reduced model used by the joint-distribution test: one covariate on an
/// equidistant grid, decomposed into a linear and a non-linear block, no
/// mandatory columns.
BuiltModel geweke_model(const GewekeConfig& config);

/// Names of the test functions, in result order.
std::vector<std::string> geweke_test_functions();

/// Marginal-conditional vs successive-conditional simulation. `sweep`
/// replaces GibbsSampler::sweep (used for mutation runs).
GewekeResult geweke_joint_test(const GewekeConfig& config, RandomStream& rng, const SweepFunction& sweep = {});

}  // namespace staq
