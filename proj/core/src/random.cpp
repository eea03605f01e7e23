#include "staq/random.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "staq/errors.hpp"

namespace staq {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

RandomStream RandomStream::derive(std::uint64_t stream_id) const {
  return RandomStream(mix_seed(seed_ ^ mix_seed(stream_id + 0x632be59bd9b4e019ULL)));
}

double RandomStream::uniform() {
  // (k + 0.5) / 2^53 lies strictly inside (0, 1).
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

// Generators for the standardized GIG(lambda, omega) with density
// proportional to x^(lambda-1) exp(-omega/2 (x + 1/x)), lambda >= 0.
// Ratio-of-uniforms variants after Hoermann & Leydold (2014).

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) {
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  }
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms with mode shift; valid for all parameters, efficient for
// lambda > 2 or omega > 3.
double gig_rou_shift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic bounding the shifted region.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-p * p * p / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;

  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms without shift; for moderate lambda and omega.
double gig_rou_noshift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);

  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece hat; for 0 <= lambda < 1 and small omega where
// the density is not T-concave.
double gig_small_omega(double lambda, double omega, RandomStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1 = 0.0;
  double k2 = 0.0;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = (lambda == 0.0)
                  ? k1 * std::log(2.0 / (omega * omega))
                  : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];
  const double tail_start = std::max(x0, 2.0 / omega);

  for (;;) {
    double v = total * rng.uniform();
    double x;
    double hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * tail_start) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

double sample_gig(const GigParams& params, RandomStream& rng) {
  const auto [p, a, b] = params;
  require(std::isfinite(p), "GIG: order p must be finite");
  require(a > 0.0 && std::isfinite(a), "GIG: coefficient a must be positive");
  require(b > 0.0 && std::isfinite(b), "GIG: coefficient b must be positive");

  if (p == -0.5) return sample_inverse_gaussian(std::sqrt(b / a), b, rng);
  if (p == 0.5) return 1.0 / sample_inverse_gaussian(std::sqrt(a / b), a, rng);

  const double lambda = std::abs(p);
  const double omega = std::sqrt(a * b);
  const double scale = std::sqrt(b / a);

  double y;
  if (omega < 1e-300) {
    // Limit omega -> 0: Gamma (p > 0) or inverse gamma (p < 0).
    return p > 0.0 ? sample_gamma(p, a / 2.0, rng) : sample_inverse_gamma(-p, b / 2.0, rng);
  }
  if (lambda > 2.0 || omega > 3.0) {
    y = gig_rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    y = gig_rou_noshift(lambda, omega, rng);
  } else {
    y = gig_small_omega(lambda, omega, rng);
  }
  return p < 0.0 ? scale / y : scale * y;
}

double sample_inverse_gaussian(double mean, double shape, RandomStream& rng) {
  require(mean > 0.0 && shape > 0.0, "inverse Gaussian: mean and shape must be positive");
  if (std::isinf(mean)) {
    // Levy limit: shape / Z^2.
    const double z = rng.normal();
    return shape / (z * z);
  }
  // Michael, Schucany & Haas; the root is written in a cancellation-free form.
  const double nu = rng.normal();
  const double t = mean * nu * nu / (2.0 * shape);
  const double x = mean / (1.0 + t + std::sqrt(t * t + 2.0 * t));
  if (rng.uniform() <= mean / (mean + x)) return x;
  return mean * mean / x;
}

double sample_gamma(double shape, double rate, RandomStream& rng) {
  require(shape > 0.0 && rate > 0.0 && std::isfinite(shape) && std::isfinite(rate),
          "gamma: shape and rate must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    return g * std::exp(std::log(rng.uniform()) / shape) / rate;
  }
  // Marsaglia & Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_inverse_gamma(double shape, double scale, RandomStream& rng) {
  require(shape > 0.0 && scale > 0.0, "inverse gamma: shape and scale must be positive");
  return 1.0 / sample_gamma(shape, scale, rng);
}

double sample_beta(double a, double b, RandomStream& rng) {
  require(a > 0.0 && b > 0.0, "beta: shape parameters must be positive");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

int sample_bernoulli(double prob, RandomStream& rng) {
  require(prob >= 0.0 && prob <= 1.0, "bernoulli: probability must lie in [0, 1]");
  return rng.uniform() < prob ? 1 : 0;
}

double sample_exponential(double rate, RandomStream& rng) {
  require(rate > 0.0, "exponential: rate must be positive");
  return -std::log(rng.uniform()) / rate;
}

double sample_sqrt_beta_prime(double a, RandomStream& rng) {
  require(a > 0.0, "beta prime: shape a must be positive");
  const double x = sample_gamma(0.5, 1.0, rng);
  const double y = sample_gamma(a, 1.0, rng);
  return std::sqrt(x / y);
}

Vector sample_mvn_canonical(const Matrix& precision, const Vector& linear, RandomStream& rng,
                            std::string_view context) {
  if (precision.rows() != precision.cols() || precision.rows() != linear.size()) {
    throw DomainError("mvn: precision must be square and match the linear term");
  }
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("precision matrix is not positive definite", std::string(context));
  }
  // P = L L'. Solve L v = h, then x = L'^{-1} (v + z): mean P^{-1} h, cov P^{-1}.
  Vector v = llt.matrixL().solve(linear);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += rng.normal();
  return llt.matrixU().solve(v);
}

Vector sample_constrained_mvn(const Matrix& precision, const Vector& linear, const Matrix& constraint,
                              RandomStream& rng, std::string_view context) {
  if (constraint.rows() == 0) return sample_mvn_canonical(precision, linear, rng, context);
  if (constraint.cols() != precision.rows()) {
    throw DomainError("constrained mvn: constraint column count must match the dimension");
  }
  const Eigen::Index m = constraint.rows();
  Eigen::FullPivLU<Matrix> rank_check(constraint);
  if (rank_check.rank() != m) throw DomainError("constrained mvn: constraint matrix is rank deficient");

  // Adding s A'A changes nothing on {Ax = 0} but makes P definite on null(K).
  const double s = std::max(1.0, precision.diagonal().cwiseAbs().maxCoeff());
  Matrix augmented = precision;
  augmented.noalias() += s * constraint.transpose() * constraint;

  Eigen::LLT<Matrix> llt(augmented);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("precision matrix is not positive definite", std::string(context));
  }
  Vector v = llt.matrixL().solve(linear);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += rng.normal();
  Vector x = llt.matrixU().solve(v);

  const Matrix w = llt.solve(constraint.transpose());  // P^-1 A'
  const Matrix gram = constraint * w;                  // A P^-1 A'
  x -= w * gram.llt().solve(constraint * x);

  // Orthogonal cleanup removes the O(eps * |x|) residual left by the solves.
  const Matrix aat = constraint * constraint.transpose();
  x -= constraint.transpose() * aat.llt().solve(constraint * x);
  return x;
}

}  // namespace staq
