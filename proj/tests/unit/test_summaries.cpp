#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "staq/data.hpp"
#include "staq/errors.hpp"
#include "staq/random.hpp"
#include "staq/summaries.hpp"

using namespace staq;

namespace {

BuiltModel two_covariate_model(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  DataTable t;
  std::vector<double> y(n), x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = 10.0 + 5.0 * rng.uniform();
    x2[i] = rng.uniform();
    y[i] = x1[i] + rng.normal();
  }
  t.add_numeric_column("y", y);
  t.add_numeric_column("x1", x1);
  t.add_numeric_column("x2", x2);
  ModelSpec spec;
  spec.response = "y";
  spec.covariates.push_back({"x1", EffectKind::Decomposed, true, {}, {}});
  spec.covariates.push_back({"x2", EffectKind::LinearOnly, true, {}, {}});
  return build_blocks(t, spec);
}

// Random draws that respect each block's constraint.
PosteriorDraws fake_draws(const BuiltModel& model, int draws, double tau, std::uint64_t seed) {
  RandomStream rng(seed);
  PosteriorDraws d;
  d.tau = tau;
  d.blocks.resize(model.blocks.size());
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    const auto& b = model.blocks[j];
    auto& tr = d.blocks[j];
    tr.coefficients.resize(draws, b.dimension());
    for (int r = 0; r < draws; ++r) {
      Vector v(b.dimension());
      for (int k = 0; k < v.size(); ++k) v(k) = rng.normal();
      const Matrix& A = b.design.constraint;
      if (A.rows() > 0) v -= A.transpose() * (A * v);
      tr.coefficients.row(r) = v.transpose();
      tr.gamma.push_back(sample_bernoulli(0.5, rng));
      tr.zeta2.push_back(rng.uniform());
      tr.psi2.push_back(rng.uniform());
      tr.omega.push_back(rng.uniform());
    }
  }
  for (int r = 0; r < draws; ++r) {
    d.iterations.push_back(r + 1);
    d.delta2.push_back(1.0 + rng.uniform());
  }
  d.mandatory = Matrix::Zero(draws, model.mandatory_design.cols());
  d.eta = Matrix::Zero(draws, static_cast<Eigen::Index>(model.num_rows()));
  for (int r = 0; r < draws; ++r)
    for (Eigen::Index i = 0; i < d.eta.cols(); ++i) d.eta(r, i) = rng.normal() + static_cast<double>(i);
  return d;
}

std::vector<double> ar1(int n, double rho, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> x(n);
  double v = rng.normal() / std::sqrt(1.0 - rho * rho);
  for (auto& e : x) {
    v = rho * v + rng.normal();
    e = v;
  }
  return x;
}

}  // namespace

TEST_SUITE("summaries") {
  TEST_CASE("inclusion probabilities: all ones and the inclusive 0.5 threshold") {
    const auto model = two_covariate_model(30, 1);
    auto d = fake_draws(model, 10, 0.6, 2);
    d.blocks[0].gamma.assign(10, 1);
    for (int r = 0; r < 10; ++r) d.blocks[1].gamma[r] = r % 2;
    d.blocks[2].gamma.assign(10, 0);
    d.blocks[2].gamma[0] = 1;
    const std::vector<PosteriorDraws> chains{d};
    const auto t = inclusion_probabilities(model, chains);
    REQUIRE(t.size() == 3);
    CHECK(t[0].inclusion_prob == 1.0);
    CHECK(t[0].selected);
    CHECK(t[1].inclusion_prob == 0.5);
    CHECK(t[1].selected);
    CHECK(t[2].inclusion_prob == doctest::Approx(0.1));
    CHECK_FALSE(t[2].selected);
    CHECK(t[0].covariate == "x1");
    CHECK(t[1].part == EffectPart::Nonlinear);
    CHECK(t[0].tau == 0.6);
  }

  TEST_CASE("inclusion probabilities pool chains and equal the draw mean exactly") {
    const auto model = two_covariate_model(30, 3);
    std::vector<PosteriorDraws> chains{fake_draws(model, 37, 0.5, 4), fake_draws(model, 37, 0.5, 5)};
    const auto t = inclusion_probabilities(model, chains);
    for (std::size_t j = 0; j < 3; ++j) {
      int s = 0;
      for (const auto& c : chains)
        for (int g : c.blocks[j].gamma) s += g;
      CHECK(t[j].inclusion_prob == static_cast<double>(s) / 74.0);
      CHECK(t[j].inclusion_prob >= 0.0);
      CHECK(t[j].inclusion_prob <= 1.0);
    }
    chains[1].tau = 0.9;
    CHECK_THROWS_AS(inclusion_probabilities(model, chains), DomainError);
    CHECK_THROWS_AS(inclusion_probabilities(model, std::vector<PosteriorDraws>{}), DomainError);
  }

  TEST_CASE("effect curves: layout, grid in original units, linear part through zero at the mean") {
    const auto model = two_covariate_model(50, 6);
    const std::vector<PosteriorDraws> chains{fake_draws(model, 40, 0.8, 7)};
    const auto curves = effect_curves(model, chains, 101);
    REQUIRE(curves.size() == 5);
    CHECK(curves[0].part == CurvePart::Linear);
    CHECK(curves[1].part == CurvePart::Nonlinear);
    CHECK(curves[2].part == CurvePart::Total);
    CHECK(curves[3].covariate == "x2");
    CHECK(curves[4].part == CurvePart::Total);
    CHECK(to_string(CurvePart::Total) == "total");
    const auto& s = model.blocks[0].scale;
    CHECK(curves[0].x.front() == doctest::Approx(s.min));
    CHECK(curves[0].x.back() == doctest::Approx(s.max));
    CHECK(std::is_sorted(curves[0].x.begin(), curves[0].x.end()));

    // Per draw, the linear curve is slope * (u - mean(u)).
    std::vector<double> grid(101);
    for (int g = 0; g < 101; ++g) grid[g] = g / 100.0;
    const Matrix lin = block_curve_draws(model.blocks[0], chains[0].blocks[0], grid);
    const double m = model.blocks[0].design.x_mean;
    for (int r = 0; r < 40; ++r) {
      const double slope = chains[0].blocks[0].coefficients(r, 0);
      for (int g = 0; g < 101; ++g) CHECK(lin(r, g) == doctest::Approx(slope * (grid[g] - m)).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < curves.size(); ++k) {
      for (std::size_t g = 0; g < 101; ++g) {
        CHECK(curves[k].lower[g] <= curves[k].mean[g]);
        CHECK(curves[k].mean[g] <= curves[k].upper[g]);
      }
    }
  }

  TEST_CASE("total curve equals linear plus nonlinear per draw") {
    const auto model = two_covariate_model(50, 8);
    const std::vector<PosteriorDraws> chains{fake_draws(model, 30, 0.5, 9)};
    std::vector<double> grid(57);
    for (int g = 0; g < 57; ++g) grid[g] = g / 56.0;
    const Matrix lin = block_curve_draws(model.blocks[0], chains[0].blocks[0], grid);
    const Matrix nl = block_curve_draws(model.blocks[1], chains[0].blocks[1], grid);
    const auto curves = effect_curves(model, chains, 57);
    const Matrix total = lin + nl;
    for (int g = 0; g < 57; ++g) {
      CHECK(curves[2].mean[g] == doctest::Approx(total.col(g).mean()).epsilon(1e-10));
      CHECK(curves[2].mean[g] == doctest::Approx(curves[0].mean[g] + curves[1].mean[g]).epsilon(1e-10));
    }
    // Curves evaluated at training points reproduce the block contribution.
    const Matrix at_train = block_curve_draws(model.blocks[1], chains[0].blocks[1], model.unit_covariates.at("x1"));
    const Vector contrib = model.blocks[1].design.design * chains[0].blocks[1].coefficients.row(3).transpose();
    CHECK((at_train.row(3).transpose() - contrib).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("zero coefficients give an identically zero curve with a zero-width band") {
    const auto model = two_covariate_model(40, 10);
    auto d = fake_draws(model, 20, 0.5, 11);
    for (auto& tr : d.blocks) {
      tr.coefficients.setZero();
      tr.gamma.assign(20, 0);
    }
    const std::vector<PosteriorDraws> chains{d};
    for (const auto& c : effect_curves(model, chains, 25)) {
      for (std::size_t g = 0; g < 25; ++g) {
        CHECK(c.mean[g] == 0.0);
        CHECK(c.lower[g] == 0.0);
        CHECK(c.upper[g] == 0.0);
      }
    }
  }

  TEST_CASE("bands widen with the level and summaries are deterministic") {
    const auto model = two_covariate_model(40, 12);
    const std::vector<PosteriorDraws> chains{fake_draws(model, 200, 0.5, 13)};
    const auto c50 = effect_curves(model, chains, 30, 0.5);
    const auto c95 = effect_curves(model, chains, 30, 0.95);
    const auto again = effect_curves(model, chains, 30, 0.95);
    for (std::size_t k = 0; k < c50.size(); ++k) {
      for (std::size_t g = 0; g < 30; ++g) {
        CHECK(c95[k].upper[g] - c95[k].lower[g] >= c50[k].upper[g] - c50[k].lower[g]);
        CHECK(again[k].upper[g] == c95[k].upper[g]);
        CHECK(again[k].mean[g] == c95[k].mean[g]);
      }
    }
    CHECK_THROWS_AS(effect_curves(model, chains, 1), DomainError);
    CHECK_THROWS_AS(effect_curves(model, chains, 30, 1.0), DomainError);
  }

  TEST_CASE("fitted quantiles pool chains") {
    const auto model = two_covariate_model(20, 14);
    const std::vector<PosteriorDraws> chains{fake_draws(model, 500, 0.9, 15), fake_draws(model, 500, 0.9, 16)};
    const auto f = fitted_quantiles(chains);
    CHECK(f.tau == 0.9);
    CHECK(f.mean.size() == 20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const double m = 0.5 * (chains[0].eta.col(i).mean() + chains[1].eta.col(i).mean());
      CHECK(f.mean(i) == doctest::Approx(m).epsilon(1e-12));
      CHECK(f.lower(i) < f.mean(i));
      CHECK(f.upper(i) > f.mean(i));
      // Draws are N(i, 1): the 95 % band is close to i -+ 1.96.
      CHECK(f.upper(i) - f.lower(i) == doctest::Approx(2 * 1.96).epsilon(0.15));
    }
  }

  TEST_CASE("constant-only model at tau = 0.5 fits the sample median") {
    RandomStream rng(17);
    const int n = 201;
    std::vector<double> y(n);
    for (auto& v : y) v = 3.0 + std::exp(rng.normal());
    DataTable t;
    t.add_numeric_column("y", y);
    ModelSpec spec;
    spec.response = "y";
    const auto model = build_blocks(t, spec);
    RandomStream chain_rng(18);
    const auto d = run_chain(model, 0.5, SamplerConfig{4000, 1000, 2, 1, 1}, 0, 0.001, 0.001, chain_rng);
    const std::vector<PosteriorDraws> chains{d};
    const auto f = fitted_quantiles(chains);
    auto sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[n / 2];
    // Standard error of the median of a lognormal shifted sample is about 0.09.
    CHECK(std::abs(f.mean(0) - median) < 0.2);
  }

  TEST_CASE("ESS: white noise and AR(1)") {
    RandomStream rng(19);
    std::vector<double> iid(20000);
    for (auto& v : iid) v = rng.normal();
    CHECK(effective_sample_size(iid) == doctest::Approx(20000.0).epsilon(0.1));
    const auto x = ar1(20000, 0.9, 20);
    CHECK(effective_sample_size(x) == doctest::Approx(20000.0 * 0.1 / 1.9).epsilon(0.2));
    CHECK(effective_sample_size(std::vector<double>(50, 2.0)) == 50.0);
  }

  TEST_CASE("split R-hat") {
    RandomStream rng(21);
    std::vector<double> a(4000);
    for (auto& v : a) v = rng.normal();
    // Duplicated chain: no between-chain disagreement beyond the split halves.
    CHECK(split_rhat({a, a}) == doctest::Approx(1.0).epsilon(0.01));
    std::vector<double> b(4000);
    for (auto& v : b) v = rng.normal() + 3.0;
    CHECK(split_rhat({a, b}) > 1.5);
    // A drifting chain is flagged by the split.
    std::vector<double> trend(4000);
    for (int i = 0; i < 4000; ++i) trend[i] = i / 400.0 + rng.normal();
    CHECK(split_rhat({trend, trend}) > 1.2);
    CHECK_THROWS_AS(split_rhat({a}), DomainError);
    CHECK_THROWS_AS(split_rhat({a, std::vector<double>(10, 0.0)}), DomainError);
  }

  TEST_CASE("diagnostics cover every stored scalar") {
    const auto model = two_covariate_model(20, 22);
    const std::vector<PosteriorDraws> chains{fake_draws(model, 100, 0.5, 23), fake_draws(model, 100, 0.5, 24)};
    const auto diag = diagnostics(model, chains);
    REQUIRE(diag.size() == 3 * 4 + 1 + 1);
    CHECK(diag[0].name == "x1:linear.gamma");
    CHECK(diag[1].name == "x1:linear.zeta2");
    CHECK(diag[12].name == "delta2");
    CHECK(diag[13].name == "beta[(intercept)]");
    for (const auto& d : diag) {
      CHECK(d.rhat.has_value());
      CHECK(d.ess > 0.0);
    }
    const std::vector<PosteriorDraws> one{chains[0]};
    CHECK_FALSE(diagnostics(model, one)[0].rhat.has_value());
    const auto cols = scalar_columns(model, chains[0]);
    CHECK(cols.names.size() == cols.values.size());
    CHECK(cols.values[0].size() == 100);
  }

  TEST_CASE("pinball score") {
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
    CHECK(pinball_score(y, y, 0.3) == 0.0);
    const std::vector<double> f{1.5, 1.0, 3.0, 6.0};
    const double mae = (0.5 + 1.0 + 0.0 + 2.0) / 4.0;
    CHECK(pinball_score(y, f, 0.5) == doctest::Approx(0.5 * mae));
    CHECK_THROWS_AS(pinball_score(y, std::vector<double>{1.0}, 0.5), DomainError);

    // Signal-aware fit beats the constant quantile on data with signal.
    RandomStream rng(25);
    std::vector<double> x(500), yy(500), fit(500), base(500);
    for (int i = 0; i < 500; ++i) {
      x[i] = rng.uniform();
      yy[i] = 4.0 * x[i] + rng.normal();
      fit[i] = 4.0 * x[i];
    }
    auto sorted = yy;
    std::sort(sorted.begin(), sorted.end());
    std::fill(base.begin(), base.end(), sorted[250]);
    CHECK(pinball_score(yy, fit, 0.5) < pinball_score(yy, base, 0.5));
  }
}
