#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "staq/types.hpp"

namespace staq {

/// Seedable random stream. All variate generators take one by reference.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard;
/// every transformation on top of it is implemented here, so a given seed
/// yields the same draws on every platform. A stream must not be shared
/// between threads; use derive() to hand out independent sub-streams.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream keyed by (seed, stream_id).
  RandomStream derive(std::uint64_t stream_id) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal (Marsaglia polar method, one value per call).
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Generalized inverse Gaussian parameters; density proportional to
/// x^(p-1) exp(-(a x + b / x) / 2) on x > 0.
struct GigParams {
  double p = 1.0;
  double a = 1.0;
  double b = 1.0;
};

double sample_gig(const GigParams& params, RandomStream& rng);

/// Inverse Gaussian with the (mean, shape) convention.
double sample_inverse_gaussian(double mean, double shape, RandomStream& rng);

/// Gamma with shape-rate convention.
double sample_gamma(double shape, double rate, RandomStream& rng);

/// Inverse gamma with shape-scale convention (1 / Gamma(shape, rate = scale)).
double sample_inverse_gamma(double shape, double scale, RandomStream& rng);

double sample_beta(double a, double b, RandomStream& rng);

int sample_bernoulli(double prob, RandomStream& rng);

double sample_exponential(double rate, RandomStream& rng);

/// sqrt(X / Y) with X ~ Gamma(1/2, 1) and Y ~ Gamma(a, 1); the square is
/// beta-prime(1/2, a).
double sample_sqrt_beta_prime(double a, RandomStream& rng);

/// Draw from N(P^-1 h, P^-1) using one Cholesky factorization of P and two
/// triangular solves. `context` is attached to factorization errors.
Vector sample_mvn_canonical(const Matrix& precision, const Vector& linear,
                            RandomStream& rng, std::string_view context = {});

/// Draw from N(P^-1 h, P^-1) conditioned on A x = 0 (conditioning by kriging).
/// A must have full row rank; an empty A reduces to sample_mvn_canonical.
/// The precision only needs to be positive definite on the null space of A.
Vector sample_constrained_mvn(const Matrix& precision, const Vector& linear,
                              const Matrix& constraint, RandomStream& rng,
                              std::string_view context = {});

}  // namespace staq
