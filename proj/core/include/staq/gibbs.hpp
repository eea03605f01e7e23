#pragma once

#include <cstdint>
#include <vector>

#include "staq/ald.hpp"
#include "staq/model.hpp"
#include "staq/random.hpp"
#include "staq/types.hpp"

namespace staq {

/// Sampled quantities of one effect block.
struct BlockState {
  Vector beta_tilde;
  double zeta2 = 1.0;
  int gamma = 1;
  double psi2 = 1.0;
  double omega = 0.5;
};

/// All sampled quantities at one sweep. `eta` caches the predictor at the
/// training rows.
struct ChainState {
  std::vector<BlockState> blocks;
  Vector mandatory;
  Vector w;
  double delta2 = 1.0;
  Vector eta;
};

/// Per-block trace of the stored sweeps.
struct BlockTrace {
  std::vector<int> gamma;
  std::vector<double> zeta2;
  std::vector<double> psi2;
  std::vector<double> omega;
  /// One row per stored sweep: full-scale coefficients zeta * beta_tilde.
  Matrix coefficients;
};

/// Thinned post-burn-in draws of one chain at one quantile level.
struct PosteriorDraws {
  double tau = 0.5;
  int chain = 0;
  std::uint64_t seed = 0;
  std::vector<int> iterations;
  std::vector<BlockTrace> blocks;
  std::vector<double> delta2;
  Matrix mandatory;  // draws x p
  Matrix eta;        // draws x n

  std::size_t size() const noexcept { return iterations.size(); }
};

/// P(gamma = 1 | rest) for the normal-beta-prime spike and slab.
double indicator_probability(double zeta2, double psi2, double r, double omega);

/// Full conditional of zeta^2 given the full-scale penalized quadratic form.
GigParams importance_conditional(int prior_rank, double r_gamma, double psi2, double quad_form);

/// Gibbs sampler for one quantile level. Holds a copy of the response so the
/// joint-distribution test can re-draw it between sweeps.
class GibbsSampler {
 public:
  GibbsSampler(const BuiltModel& model, double tau, double a_delta, double b_delta);

  const QuantileConstants& constants() const noexcept { return constants_; }
  const BuiltModel& model() const noexcept { return *model_; }
  const Vector& response() const noexcept { return y_; }
  void set_response(const Vector& y);

  /// beta_tilde = 0, zeta^2 = 1, gamma = 1, psi^2 = b / (a - 1),
  /// omega = a0 / (a0 + b0), w = 1, delta^2 = 1, mandatory by least squares.
  ChainState initial_state() const;

  /// One draw of every parameter from the prior (all priors must be proper).
  ChainState draw_from_prior(RandomStream& rng) const;

  /// y = eta + xi w + sqrt(sigma^2 w / delta^2) z.
  Vector simulate_response(const ChainState& state, RandomStream& rng) const;

  // Steps of one sweep. Block steps take the block index.
  void step_mandatory(ChainState& state, RandomStream& rng) const;
  void step_coefficients(std::size_t j, ChainState& state, RandomStream& rng) const;
  void step_importance(std::size_t j, ChainState& state, RandomStream& rng) const;
  void step_indicator(std::size_t j, ChainState& state, RandomStream& rng) const;
  void step_hypervariance(std::size_t j, ChainState& state, RandomStream& rng) const;
  void step_inclusion_prob(std::size_t j, ChainState& state, RandomStream& rng) const;
  void step_weights(ChainState& state, RandomStream& rng) const;
  void step_scale(ChainState& state, RandomStream& rng) const;

  /// Steps 1-5 per block (declaration order, mandatory block first), a full
  /// predictor refresh, then Steps 6 and 7.
  void sweep(ChainState& state, RandomStream& rng) const;

  void refresh_predictor(ChainState& state) const;

  std::vector<BlockCoefficients> coefficients(const ChainState& state) const;

 private:
  const BuiltModel* model_;
  QuantileConstants constants_;
  double a_delta_;
  double b_delta_;
  Vector y_;
};

/// Run one chain: `config.iterations` sweeps, storing every `thin`-th sweep
/// after burn-in. Numerical failures are rethrown with sweep and step.
PosteriorDraws run_chain(const BuiltModel& model, double tau, const SamplerConfig& config, int chain,
                         double a_delta, double b_delta, RandomStream& rng);

/// Mode of the ALD posterior of a linear predictor X beta under a flat prior,
/// found by EM on the normal / exponential mixture (E-step: mean of 1 / w).
/// Equals the check-loss minimizer.
Vector ald_posterior_mode(const Matrix& X, const Vector& y, double tau, int max_iterations = 20000,
                          double tolerance = 1e-12);

}  // namespace staq
