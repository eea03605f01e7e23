#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "staq/errors.hpp"
#include "staq/oracle.hpp"
#include "staq/random.hpp"

using namespace staq;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename F>
Moments moments(int n, F&& draw) {
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  return {m, s2 / n - m * m};
}

// KS distance of n GIG draws against the quadrature CDF.
double gig_ks(double p, double a, double b, int n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sample_gig({p, a, b}, rng);
  std::sort(x.begin(), x.end());
  const auto cdf = numeric_cdf_sorted(DistributionSpec::gig(p, a, b), x);
  return ks_statistic(x, cdf);
}

}  // namespace

TEST_SUITE("rand-dist") {
  TEST_CASE("identical seeds give identical sequences") {
    RandomStream a(42);
    RandomStream b(42);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.uniform() == b.uniform());
      CHECK(a.normal() == b.normal());
      CHECK(sample_gig({-3.0, 1.0, 4.0}, a) == sample_gig({-3.0, 1.0, 4.0}, b));
    }
  }

  TEST_CASE("fixed seed reproduces a pinned value") {
    // mt19937_64 output is fixed by the standard; these guard the transforms.
    RandomStream rng(7);
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    RandomStream again(7);
    const std::uint64_t k = again.next_u64() >> 11;
    CHECK(u == (static_cast<double>(k) + 0.5) * 0x1.0p-53);
  }

  TEST_CASE("derived streams are independent of each other and of the parent") {
    RandomStream base(3);
    auto s1 = base.derive(1);
    auto s2 = base.derive(2);
    CHECK(s1.seed() != s2.seed());
    CHECK(s1.seed() != base.seed());
    // Drawing from one derived stream leaves the other untouched.
    auto s2_copy = base.derive(2);
    for (int i = 0; i < 100; ++i) s1.uniform();
    CHECK(s2.uniform() == s2_copy.uniform());
    // Low correlation between sibling streams.
    auto a = base.derive(10);
    auto b = base.derive(11);
    double sab = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sab += a.normal() * b.normal();
    CHECK(std::abs(sab / n) < 4.0 / std::sqrt(n));
  }

  TEST_CASE("uniform lies in the open unit interval, normal has unit moments") {
    RandomStream rng(11);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double u = rng.uniform();
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    const auto m = moments(200000, [&] { return rng.normal(); });
    CHECK(std::abs(m.mean) < 4.0 / std::sqrt(200000.0));
    CHECK(m.var == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("GIG p = -1/2 equals an inverse Gaussian; mean within 3 standard errors") {
    const double a = 2.0;
    const double b = 3.0;
    const double mean = std::sqrt(b / a);
    const double var = mean * mean * mean / b;
    RandomStream rng(5);
    const int n = 1000000;
    const auto m = moments(n, [&] { return sample_gig({-0.5, a, b}, rng); });
    CHECK(std::abs(m.mean - mean) < 3.0 * std::sqrt(var / n));
  }

  TEST_CASE("GIG with tiny b and p > 0 approaches Gamma(p, rate a / 2)") {
    const double p = 2.5;
    const double a = 3.0;
    RandomStream rng(6);
    const int n = 200000;
    const auto m = moments(n, [&] { return sample_gig({p, a, 1e-12}, rng); });
    const double mean = p / (a / 2.0);
    const double var = p / (a * a / 4.0);
    CHECK(std::abs(m.mean - mean) < 4.0 * std::sqrt(var / n));
    CHECK(m.var == doctest::Approx(var).epsilon(0.03));
  }

  TEST_CASE("GIG KS against the quadrature CDF in every generator regime") {
    const double crit = ks_critical_value(100000, 0.01);
    // p = 0.5 (reciprocal inverse Gaussian), mode-shift, no-shift with
    // lambda = 0 and lambda in [1, 2], and the small-omega hat.
    CHECK(gig_ks(0.5, 2.0, 3.0, 100000, 21) < crit);
    CHECK(gig_ks(-3.0, 1.0, 4.0, 100000, 22) < crit);
    CHECK(gig_ks(0.0, 2.0, 1.0, 100000, 23) < crit);
    CHECK(gig_ks(1.5, 1.0, 1.0, 100000, 24) < crit);
    CHECK(gig_ks(-1.2, 0.5, 0.5, 100000, 25) < crit);
    CHECK(gig_ks(0.3, 0.01, 0.01, 100000, 26) < crit);
    CHECK(gig_ks(0.0, 0.1, 0.1, 100000, 27) < crit);
    CHECK(gig_ks(-0.6, 0.02, 0.5, 100000, 28) < crit);
    CHECK(gig_ks(4.0, 10.0, 0.3, 100000, 29) < crit);
  }

  TEST_CASE("GIG draws are positive and invalid parameters are rejected") {
    RandomStream rng(8);
    for (double p : {-5.0, -0.5, 0.0, 0.2, 0.5, 1.0, 7.0}) {
      for (double ab : {1e-6, 0.05, 1.0, 40.0}) {
        for (int i = 0; i < 200; ++i) {
          const double x = sample_gig({p, ab, 1.0}, rng);
          REQUIRE(x > 0.0);
          REQUIRE(std::isfinite(x));
        }
      }
    }
    CHECK_THROWS_AS(sample_gig({1.0, 0.0, 1.0}, rng), DomainError);
    CHECK_THROWS_AS(sample_gig({1.0, 1.0, -1.0}, rng), DomainError);
    CHECK_THROWS_AS(sample_gig({NAN, 1.0, 1.0}, rng), DomainError);
  }

  TEST_CASE("inverse Gaussian mean and variance") {
    const double mean = 1.5;
    const double shape = 2.0;
    RandomStream rng(9);
    const int n = 1000000;
    double lo = 1.0;
    const auto m = moments(n, [&] {
      const double x = sample_inverse_gaussian(mean, shape, rng);
      lo = std::min(lo, x);
      return x;
    });
    const double var = mean * mean * mean / shape;
    CHECK(lo > 0.0);
    CHECK(std::abs(m.mean - mean) < 3.0 * std::sqrt(var / n));
    CHECK(m.var == doctest::Approx(var).epsilon(0.03));
  }

  TEST_CASE("MVN canonical: bivariate standard normal and scalar case") {
    RandomStream rng(12);
    const int n = 100000;
    Matrix P = Matrix::Identity(2, 2);
    Vector h = Vector::Zero(2);
    Matrix s = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
      const Vector x = sample_mvn_canonical(P, h, rng);
      s += x * x.transpose();
    }
    s /= n;
    CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s(1, 1) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(s(0, 1)) < 0.015);

    Matrix P1(1, 1);
    P1(0, 0) = 4.0;
    Vector h1(1);
    h1(0) = 8.0;
    const auto m = moments(n, [&] { return sample_mvn_canonical(P1, h1, rng)(0); });
    CHECK(std::abs(m.mean - 2.0) < 3.0 * std::sqrt(0.25 / n));
    CHECK(m.var == doctest::Approx(0.25).epsilon(0.02));
  }

  TEST_CASE("MVN canonical: random 5x5 precision matches the dense inverse") {
    RandomStream rng(13);
    Matrix L = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) L(i, j) = rng.normal();
    const Matrix P = L * L.transpose() + 2.0 * Matrix::Identity(5, 5);
    Vector h(5);
    for (int i = 0; i < 5; ++i) h(i) = rng.normal();
    const Matrix cov = P.inverse();
    const Vector mean = cov * h;

    const int n = 100000;
    Vector s = Vector::Zero(5);
    Matrix ss = Matrix::Zero(5, 5);
    for (int i = 0; i < n; ++i) {
      const Vector x = sample_mvn_canonical(P, h, rng);
      s += x;
      ss += x * x.transpose();
    }
    const Vector m = s / n;
    const Matrix c = ss / n - m * m.transpose();
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(m(i) - mean(i)) < 3.5 * std::sqrt(cov(i, i) / n));
      for (int j = 0; j < 5; ++j) {
        const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
        CHECK(std::abs(c(i, j) - cov(i, j)) < 4.5 * se);
      }
    }
  }

  TEST_CASE("MVN canonical reports a non-positive-definite precision") {
    RandomStream rng(1);
    Matrix P = Matrix::Identity(2, 2);
    P(1, 1) = -1.0;
    CHECK_THROWS_AS(sample_mvn_canonical(P, Vector::Zero(2), rng, "block x"), NumericalError);
  }

  TEST_CASE("constrained MVN: sum-to-zero constraint") {
    RandomStream rng(14);
    const Matrix A = Matrix::Ones(1, 6);
    Vector h(6);
    h << 1, 2, 3, 4, 5, 6;
    for (int i = 0; i < 1000; ++i) {
      const Vector x = sample_constrained_mvn(Matrix::Identity(6, 6), h, A, rng);
      REQUIRE(std::abs(x.sum()) < 1e-10);
    }
  }

  TEST_CASE("constrained MVN with an empty constraint equals the canonical sampler") {
    RandomStream a(15);
    RandomStream b(15);
    Matrix P = Matrix::Identity(3, 3) * 2.0;
    P(0, 1) = P(1, 0) = 0.5;
    const Vector h = Vector::Ones(3);
    for (int i = 0; i < 50; ++i) {
      const Vector x = sample_constrained_mvn(P, h, Matrix(0, 3), a);
      const Vector y = sample_mvn_canonical(P, h, b);
      REQUIRE((x - y).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("constrained MVN matches the analytic conditional distribution") {
    RandomStream rng(16);
    Matrix L(4, 4);
    L << 2, 0, 0, 0, 0.5, 1.5, 0, 0, -0.3, 0.2, 1.2, 0, 0.1, -0.4, 0.3, 1.0;
    const Matrix P = L * L.transpose();
    Vector h(4);
    h << 0.5, -1.0, 2.0, 0.3;
    Matrix A(2, 4);
    A << 1, 1, 1, 1, 0, 1, -1, 2;

    const Matrix S = P.inverse();
    const Vector mu = S * h;
    const Matrix G = S * A.transpose() * (A * S * A.transpose()).inverse();
    const Vector mean = mu - G * (A * mu);
    const Matrix cov = S - G * A * S;

    const int n = 100000;
    Vector s = Vector::Zero(4);
    Matrix ss = Matrix::Zero(4, 4);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vector x = sample_constrained_mvn(P, h, A, rng);
      worst = std::max(worst, (A * x).cwiseAbs().maxCoeff());
      s += x;
      ss += x * x.transpose();
    }
    CHECK(worst < 1e-10);
    const Vector m = s / n;
    const Matrix c = ss / n - m * m.transpose();
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(m(i) - mean(i)) < 3.5 * std::sqrt(cov(i, i) / n) + 1e-12);
      for (int j = 0; j < 4; ++j) {
        const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
        CHECK(std::abs(c(i, j) - cov(i, j)) < 4.5 * se + 1e-12);
      }
    }
  }

  TEST_CASE("constrained MVN with a precision that is singular off the constraint space") {
    // RW2-like precision: singular on the constant vector, which A removes.
    RandomStream rng(17);
    Matrix P(3, 3);
    P << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    const Matrix A = Matrix::Ones(1, 3) / std::sqrt(3.0);
    for (int i = 0; i < 200; ++i) {
      const Vector x = sample_constrained_mvn(P, Vector::Zero(3), A, rng);
      REQUIRE(x.allFinite());
      REQUIRE(std::abs((A * x)(0)) < 1e-10);
    }
  }

  TEST_CASE("gamma, inverse gamma, beta, bernoulli, exponential") {
    RandomStream rng(18);
    const int n = 400000;
    auto m = moments(n, [&] { return sample_gamma(1.0, 2.5, rng); });
    CHECK(std::abs(m.mean - 0.4) < 4.0 * 0.4 / std::sqrt(n));
    m = moments(n, [&] { return sample_gamma(0.3, 1.0, rng); });
    CHECK(std::abs(m.mean - 0.3) < 4.0 * std::sqrt(0.3 / n));
    m = moments(n, [&] { return sample_inverse_gamma(4.0, 3.0, rng); });
    CHECK(std::abs(m.mean - 1.0) < 4.0 * std::sqrt(0.5 / n));
    m = moments(n, [&] { return sample_beta(2.0, 1.0, rng); });
    CHECK(std::abs(m.mean - 2.0 / 3.0) < 4.0 * std::sqrt(1.0 / 18.0 / n));
    m = moments(n, [&] { return sample_exponential(3.0, rng); });
    CHECK(std::abs(m.mean - 1.0 / 3.0) < 4.0 / 3.0 / std::sqrt(n));
    for (int i = 0; i < 1000; ++i) {
      REQUIRE(sample_bernoulli(0.0, rng) == 0);
      REQUIRE(sample_bernoulli(1.0, rng) == 1);
    }
    m = moments(n, [&] { return static_cast<double>(sample_bernoulli(0.3, rng)); });
    CHECK(std::abs(m.mean - 0.3) < 4.0 * std::sqrt(0.21 / n));
    CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_inverse_gamma(1.0, -1.0, rng), DomainError);
  }

  TEST_CASE("squared sqrt-beta-prime draws: median and finite fourth moment") {
    RandomStream rng(19);
    const int n = 200000;
    std::vector<double> x(n);
    for (auto& v : x) {
      const double s = sample_sqrt_beta_prime(5.0, rng);
      REQUIRE(s > 0.0);
      v = s * s;
    }
    auto sorted = x;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    const double oracle = numeric_quantile(DistributionSpec::beta_prime(0.5, 5.0), 0.5);
    // Density at the median sets the standard error of the sample median.
    const double f = std::exp(log_density(DistributionSpec::beta_prime(0.5, 5.0), oracle)) /
                     std::beta(0.5, 5.0);
    CHECK(std::abs(median - oracle) < 4.0 * 0.5 / (f * std::sqrt(n)));

    // E[X^4] = B(4.5, 1) / B(0.5, 5) for beta-prime(1/2, 5).
    const double m4_exact = std::beta(4.5, 1.0) / std::beta(0.5, 5.0);
    double half = 0.0;
    double full = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = std::pow(x[i], 4);
      if (i < n / 2) half += v;
      full += v;
    }
    half /= n / 2;
    full /= n;
    CHECK(std::isfinite(full));
    CHECK(full == doctest::Approx(m4_exact).epsilon(0.5));
    CHECK(half == doctest::Approx(full).epsilon(0.5));
  }
}
