#include "staq/ald.hpp"

#include <cmath>

#include "staq/errors.hpp"

namespace staq {
namespace {

void require_level(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level tau must lie in (0, 1)");
}

}  // namespace

double check_loss(double tau, double u) {
  require_level(tau);
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

double ald_log_density(double y, double eta, double delta2, double tau) {
  require_level(tau);
  if (!(delta2 > 0.0)) throw DomainError("ALD scale delta2 must be positive");
  return std::log(tau) + std::log1p(-tau) + std::log(delta2) - delta2 * check_loss(tau, y - eta);
}

double ald_cdf(double y, double eta, double delta2, double tau) {
  require_level(tau);
  if (!(delta2 > 0.0)) throw DomainError("ALD scale delta2 must be positive");
  const double u = y - eta;
  if (u < 0.0) return tau * std::exp((1.0 - tau) * delta2 * u);
  return 1.0 - (1.0 - tau) * std::exp(-tau * delta2 * u);
}

QuantileConstants quantile_constants(double tau) {
  require_level(tau);
  const double v = tau * (1.0 - tau);
  return {tau, (1.0 - 2.0 * tau) / v, 2.0 / v};
}

}  // namespace staq
