#pragma once

namespace staq {

/// Check (pinball) loss u * (tau - 1{u < 0}).
double check_loss(double tau, double u);

/// Log density of ALD(eta, delta2, tau):
/// log(tau (1 - tau) delta2) - delta2 * check_loss(tau, y - eta).
double ald_log_density(double y, double eta, double delta2, double tau);

/// Closed-form ALD distribution function.
double ald_cdf(double y, double eta, double delta2, double tau);

/// Constants of the normal / exponential mixture representation
///   Y = eta + xi W + sqrt(sigma2 W / delta2) Z,  W ~ Exp(delta2), Z ~ N(0, 1).
/// sigma2 is the variance multiplier 2 / (tau (1 - tau)); with it the mixture
/// is exactly ALD(eta, delta2, tau).
struct QuantileConstants {
  double tau;
  double xi;
  double sigma2;
};

QuantileConstants quantile_constants(double tau);

}  // namespace staq
