#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"
#include "staq/errors.hpp"
#include "staq/oracle.hpp"
#include "staq/random.hpp"

using namespace staq;

namespace {

void random_instance(RandomStream& rng, int n, Matrix& X, Vector& y) {
  X.resize(n, 2);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = 4.0 * rng.uniform() - 2.0;
    y(i) = 0.5 + 1.5 * X(i, 1) + rng.normal();
  }
}

double ig_cdf(double x, double mean, double shape) {
  const boost::math::normal z;
  const double s = std::sqrt(shape / x);
  return boost::math::cdf(z, s * (x / mean - 1.0)) +
         std::exp(2.0 * shape / mean) * boost::math::cdf(z, -s * (x / mean + 1.0));
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("intercept-only median, with the lower middle point for even n") {
    Vector y(5);
    y << 3.0, -1.0, 7.0, 2.0, 10.0;
    CHECK(linear_qr_exact(Matrix::Ones(5, 1), y, 0.5)(0) == doctest::Approx(3.0));
    Vector y4(4);
    y4 << 4.0, 1.0, 3.0, 2.0;
    CHECK(linear_qr_exact(Matrix::Ones(4, 1), y4, 0.5)(0) == doctest::Approx(2.0));
    // tau = 0.8 on 10 points: the 8th order statistic.
    Vector y10(10);
    for (int i = 0; i < 10; ++i) y10(i) = 10 - i;
    CHECK(linear_qr_exact(Matrix::Ones(10, 1), y10, 0.8)(0) == doctest::Approx(8.0));
  }

  TEST_CASE("noise-free line is interpolated with zero loss") {
    Matrix X(12, 2);
    Vector y(12);
    for (int i = 0; i < 12; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = i * 0.5;
      y(i) = -2.0 + 3.0 * X(i, 1);
    }
    const Vector b = linear_qr_exact(X, y, 0.7);
    CHECK(b(0) == doctest::Approx(-2.0));
    CHECK(b(1) == doctest::Approx(3.0));
    CHECK(check_loss_sum(X, y, b, 0.7) < 1e-12);
  }

  TEST_CASE("exact path: optimality, subgradient counts and agreement with the iterative path") {
    RandomStream rng(1);
    for (int inst = 0; inst < 10; ++inst) {
      Matrix X;
      Vector y;
      random_instance(rng, 15, X, y);
      for (double tau : {0.2, 0.5, 0.8}) {
        const Vector exact = linear_qr_exact(X, y, tau);
        const Vector iter = linear_qr_iterative(X, y, tau);
        const double le = check_loss_sum(X, y, exact, tau);
        CHECK(le <= check_loss_sum(X, y, iter, tau) + 1e-8);
        // No local perturbation improves the loss.
        for (int k = 0; k < 200; ++k) {
          Vector d(2);
          d << 1e-3 * rng.normal(), 1e-3 * rng.normal();
          REQUIRE(check_loss_sum(X, y, exact + d, tau) >= le - 1e-12);
        }
        const Vector r = y - X * exact;
        const auto negative = std::count_if(r.begin(), r.end(), [](double v) { return v < -1e-9; });
        CHECK(negative >= 15 * tau - 2);
        CHECK(negative <= 15 * tau + 2);
      }
    }
  }

  TEST_CASE("iterative path on a larger instance satisfies the subgradient counts") {
    RandomStream rng(2);
    Matrix X;
    Vector y;
    random_instance(rng, 200, X, y);
    const Vector b = linear_qr_exact(X, y, 0.75);
    const Vector r = y - X * b;
    const auto negative = std::count_if(r.begin(), r.end(), [](double v) { return v < -1e-9; });
    CHECK(negative >= 150 - 2);
    CHECK(negative <= 150 + 2);
  }

  TEST_CASE("solver input errors") {
    Matrix X = Matrix::Ones(6, 2);
    Vector y = Vector::Zero(6);
    CHECK_THROWS_AS(linear_qr_exact(X, y, 0.5), DomainError);
    CHECK_THROWS_AS(linear_qr_exact(Matrix::Ones(6, 1), y, 1.0), DomainError);
    CHECK_THROWS_AS(linear_qr_exact(Matrix::Ones(5, 1), y, 0.5), DomainError);
  }

  TEST_CASE("numeric CDF normalization and monotonicity") {
    for (const auto& d : {DistributionSpec::gig(-3, 1, 4), DistributionSpec::gig(0, 2, 1),
                          DistributionSpec::gig(0.5, 2, 3), DistributionSpec::inverse_gaussian(1, 2),
                          DistributionSpec::inverse_gaussian(3, 0.5), DistributionSpec::beta_prime(0.5, 5)}) {
      CHECK(numeric_cdf(d, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0).epsilon(1e-8));
      double prev = 0.0;
      for (double x = 1e-3; x < 100.0; x *= 1.3) {
        const double f = numeric_cdf(d, x);
        REQUIRE(f >= prev);
        prev = f;
      }
      CHECK(d.label().size() > 0);
    }
    CHECK(numeric_cdf(DistributionSpec::gig(1, 1, 1), 0.0) == 0.0);
    CHECK_THROWS_AS(numeric_cdf(DistributionSpec::gig(1, -1, 1), 1.0), DomainError);
  }

  TEST_CASE("inverse-Gaussian numeric CDF matches the closed form within 1e-8") {
    for (const auto& [mean, shape] : {std::pair{1.0, 2.0}, std::pair{3.0, 0.5}, std::pair{0.2, 5.0}}) {
      const auto d = DistributionSpec::inverse_gaussian(mean, shape);
      std::vector<double> xs;
      for (double x = 0.01; x < 20.0; x *= 1.25) xs.push_back(x);
      const auto sorted = numeric_cdf_sorted(d, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(std::abs(numeric_cdf(d, xs[i]) - ig_cdf(xs[i], mean, shape)) < 1e-8);
        CHECK(std::abs(sorted[i] - ig_cdf(xs[i], mean, shape)) < 1e-8);
      }
    }
  }

  TEST_CASE("beta-prime quantiles match the incomplete-beta inverse") {
    const auto d = DistributionSpec::beta_prime(0.5, 5.0);
    for (double p : {0.1, 0.5, 0.9}) {
      const double u = boost::math::ibeta_inv(0.5, 5.0, p);
      CHECK(numeric_quantile(d, p) == doctest::Approx(u / (1.0 - u)).epsilon(1e-7));
    }
    CHECK_THROWS_AS(numeric_quantile(d, 1.0), DomainError);
  }

  TEST_CASE("KS statistic and critical value") {
    const std::vector<double> x{0.1, 0.4, 0.7};
    const std::vector<double> cdf{0.1, 0.4, 0.7};
    // Uniform CDF at the sample: D = max(i/n - F, F - (i-1)/n).
    CHECK(ks_statistic(x, cdf) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(ks_critical_value(100000, 0.01) == doctest::Approx(1.6276 / std::sqrt(100000.0)).epsilon(1e-4));
    CHECK(ks_critical_value(100, 0.05) == doctest::Approx(1.3581 / 10.0).epsilon(1e-4));
    CHECK_THROWS_AS(ks_statistic(x, std::vector<double>{0.1}), DomainError);
  }

  TEST_CASE("joint-distribution test: fixed function list, determinism, proper priors") {
    CHECK(geweke_test_functions().size() == 12);
    GewekeConfig cfg;
    cfg.sweeps = 2000;
    cfg.forward_draws = 2000;
    cfg.burn_in = 100;
    RandomStream a(3);
    RandomStream b(3);
    const auto ra = geweke_joint_test(cfg, a);
    const auto rb = geweke_joint_test(cfg, b);
    CHECK(ra.names == geweke_test_functions());
    CHECK(ra.z == rb.z);
    CHECK(ra.max_abs_z() >= 0.0);
    const auto model = geweke_model(cfg);
    CHECK(model.blocks.size() == 2);
    CHECK(model.num_rows() == 20);
    CHECK(model.mandatory_design.cols() == 0);

    auto bad = cfg;
    bad.hyper.b = 0.0;
    CHECK_THROWS_AS(geweke_joint_test(bad, a), DomainError);
    bad = cfg;
    bad.a_delta = -1.0;
    CHECK_THROWS_AS(geweke_joint_test(bad, a), DomainError);
  }
}
