#include "staq/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "staq/errors.hpp"

namespace staq {
namespace {

constexpr double kResidualFloor = 1e-10;

double r_of(const SpikeSlabHyper& h, int gamma) { return gamma == 1 ? 1.0 : h.r; }

}  // namespace

double indicator_probability(double zeta2, double psi2, double r, double omega) {
  if (omega <= 0.0) return 0.0;
  if (omega >= 1.0) return 1.0;
  // log phi(zeta; 0, r psi2) - log phi(zeta; 0, psi2)
  const double log_ratio = -0.5 * std::log(r) - zeta2 / (2.0 * r * psi2) + zeta2 / (2.0 * psi2);
  const double log_odds = log_ratio + std::log1p(-omega) - std::log(omega);
  if (log_odds > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(log_odds));
}

GigParams importance_conditional(int prior_rank, double r_gamma, double psi2, double quad_form) {
  return {0.5 - 0.5 * prior_rank, 1.0 / (r_gamma * psi2), quad_form};
}

GibbsSampler::GibbsSampler(const BuiltModel& model, double tau, double a_delta, double b_delta)
    : model_(&model), constants_(quantile_constants(tau)), a_delta_(a_delta), b_delta_(b_delta), y_(model.y) {
  if (!(a_delta > 0.0 && b_delta > 0.0)) throw DomainError("delta^2 prior parameters must be positive");
}

void GibbsSampler::set_response(const Vector& y) {
  if (y.size() != y_.size()) throw DomainError("response length mismatch");
  y_ = y;
}

std::vector<BlockCoefficients> GibbsSampler::coefficients(const ChainState& state) const {
  std::vector<BlockCoefficients> out;
  out.reserve(state.blocks.size());
  for (const auto& b : state.blocks) out.push_back({b.beta_tilde, b.zeta2});
  return out;
}

void GibbsSampler::refresh_predictor(ChainState& state) const {
  const auto coef = coefficients(state);
  state.eta = evaluate_predictor(*model_, state.mandatory, coef);
}

ChainState GibbsSampler::initial_state() const {
  const auto& m = *model_;
  const auto n = static_cast<Eigen::Index>(m.num_rows());
  ChainState s;
  for (const auto& block : m.blocks) {
    BlockState b;
    b.beta_tilde = Vector::Zero(block.dimension());
    b.zeta2 = 1.0;
    b.gamma = 1;
    b.psi2 = block.hyper.a > 1.0 ? block.hyper.b / (block.hyper.a - 1.0) : block.hyper.b;
    b.omega = block.hyper.a0 / (block.hyper.a0 + block.hyper.b0);
    s.blocks.push_back(std::move(b));
  }
  const auto& x = m.mandatory_design;
  if (x.cols() > 0) {
    Matrix xtx = x.transpose() * x;
    xtx.diagonal().array() += 1e-8;
    s.mandatory = xtx.ldlt().solve(x.transpose() * y_);
  } else {
    s.mandatory = Vector(0);
  }
  s.w = Vector::Ones(n);
  s.delta2 = 1.0;
  refresh_predictor(s);
  return s;
}

ChainState GibbsSampler::draw_from_prior(RandomStream& rng) const {
  const auto& m = *model_;
  const auto n = static_cast<Eigen::Index>(m.num_rows());
  ChainState s;
  for (const auto& block : m.blocks) {
    const auto& h = block.hyper;
    const int d = block.dimension();
    BlockState b;
    if (block.selectable) {
      b.omega = sample_beta(h.a0, h.b0, rng);
      b.gamma = sample_bernoulli(b.omega, rng);
      b.psi2 = sample_inverse_gamma(h.a, h.b, rng);
      b.zeta2 = sample_gamma(0.5, 1.0 / (2.0 * r_of(h, b.gamma) * b.psi2), rng);
      b.beta_tilde = sample_constrained_mvn(block.design.penalty.matrix, Vector::Zero(d),
                                            block.design.constraint, rng, block.id);
    } else {
      b.beta_tilde = sample_constrained_mvn(m.mandatory_precision * Matrix::Identity(d, d), Vector::Zero(d),
                                            block.design.constraint, rng, block.id);
    }
    s.blocks.push_back(std::move(b));
  }
  const auto p = m.mandatory_design.cols();
  s.mandatory = Vector(p);
  for (Eigen::Index k = 0; k < p; ++k) s.mandatory(k) = rng.normal() / std::sqrt(m.mandatory_precision);
  s.delta2 = sample_gamma(a_delta_, b_delta_, rng);
  s.w = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) s.w(i) = sample_exponential(s.delta2, rng);
  refresh_predictor(s);
  return s;
}

Vector GibbsSampler::simulate_response(const ChainState& state, RandomStream& rng) const {
  const auto n = state.eta.size();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = state.eta(i) + constants_.xi * state.w(i) +
           std::sqrt(constants_.sigma2 * state.w(i) / state.delta2) * rng.normal();
  }
  return y;
}

void GibbsSampler::step_mandatory(ChainState& state, RandomStream& rng) const {
  const auto& x = model_->mandatory_design;
  if (x.cols() == 0) return;
  const double scale = state.delta2 / constants_.sigma2;
  const Vector inv_w = state.w.cwiseInverse();
  const Vector old_fit = x * state.mandatory;
  const Vector resid = y_ - constants_.xi * state.w - (state.eta - old_fit);

  const Matrix xw = x.array().colwise() * inv_w.array();
  Matrix precision = scale * (x.transpose() * xw);
  precision.diagonal().array() += model_->mandatory_precision;
  const Vector linear = scale * (xw.transpose() * resid);
  state.mandatory = sample_mvn_canonical(precision, linear, rng, "mandatory coefficients");
  state.eta += x * state.mandatory - old_fit;
}

void GibbsSampler::step_coefficients(std::size_t j, ChainState& state, RandomStream& rng) const {
  const auto& block = model_->blocks[j];
  auto& b = state.blocks[j];
  const auto& design = block.design.design;
  const double zeta = std::sqrt(b.zeta2);
  const double scale = state.delta2 / constants_.sigma2;
  const Vector inv_w = state.w.cwiseInverse();
  const Vector old_fit = zeta * (design * b.beta_tilde);
  const Vector resid = y_ - constants_.xi * state.w - (state.eta - old_fit);

  const Matrix bw = design.array().colwise() * inv_w.array();
  // Sampling beta_tilde at unit scale: the design is zeta * B.
  Matrix precision = (scale * b.zeta2) * (design.transpose() * bw);
  if (block.selectable) {
    precision += block.design.penalty.matrix;
  } else {
    precision.diagonal().array() += model_->mandatory_precision;
  }
  const Vector linear = (scale * zeta) * (bw.transpose() * resid);
  b.beta_tilde = sample_constrained_mvn(precision, linear, block.design.constraint, rng, block.id);
  state.eta += zeta * (design * b.beta_tilde) - old_fit;
}

void GibbsSampler::step_importance(std::size_t j, ChainState& state, RandomStream& rng) const {
  const auto& block = model_->blocks[j];
  if (!block.selectable) return;
  auto& b = state.blocks[j];
  const double r = r_of(block.hyper, b.gamma);
  // Penalized quadratic form of the full-scale coefficients beta = zeta beta_tilde.
  const double quad = b.zeta2 * b.beta_tilde.dot(block.design.penalty.matrix * b.beta_tilde);
  double zeta2_new;
  if (!(quad > 1e-300)) {
    zeta2_new = sample_gamma(0.5, 1.0 / (2.0 * r * b.psi2), rng);
  } else {
    zeta2_new = sample_gig(importance_conditional(block.prior_rank(), r, b.psi2, quad), rng);
  }
  zeta2_new = std::max(zeta2_new, 1e-300);
  // beta is held fixed, so beta_tilde absorbs the change of scale.
  b.beta_tilde *= std::sqrt(b.zeta2 / zeta2_new);
  b.zeta2 = zeta2_new;
}

void GibbsSampler::step_indicator(std::size_t j, ChainState& state, RandomStream& rng) const {
  const auto& block = model_->blocks[j];
  if (!block.selectable) return;
  auto& b = state.blocks[j];
  b.gamma = sample_bernoulli(indicator_probability(b.zeta2, b.psi2, block.hyper.r, b.omega), rng);
}

void GibbsSampler::step_hypervariance(std::size_t j, ChainState& state, RandomStream& rng) const {
  const auto& block = model_->blocks[j];
  if (!block.selectable) return;
  auto& b = state.blocks[j];
  const auto& h = block.hyper;
  b.psi2 = sample_inverse_gamma(h.a + 0.5, h.b + b.zeta2 / (2.0 * r_of(h, b.gamma)), rng);
}

void GibbsSampler::step_inclusion_prob(std::size_t j, ChainState& state, RandomStream& rng) const {
  const auto& block = model_->blocks[j];
  if (!block.selectable) return;
  auto& b = state.blocks[j];
  const auto& h = block.hyper;
  b.omega = sample_beta(h.a0 + b.gamma, h.b0 + 1.0 - b.gamma, rng);
  b.omega = std::clamp(b.omega, 1e-300, 1.0 - 1e-16);
}

void GibbsSampler::step_weights(ChainState& state, RandomStream& rng) const {
  const auto& k = constants_;
  const double c = k.xi * k.xi + 2.0 * k.sigma2;
  const double shape = state.delta2 * c / k.sigma2;
  const double root = std::sqrt(c);
  for (Eigen::Index i = 0; i < state.w.size(); ++i) {
    const double resid = std::max(std::abs(y_(i) - state.eta(i)), kResidualFloor);
    state.w(i) = 1.0 / sample_inverse_gaussian(root / resid, shape, rng);
  }
}

void GibbsSampler::step_scale(ChainState& state, RandomStream& rng) const {
  const auto& k = constants_;
  const auto n = static_cast<double>(state.w.size());
  double quad = 0.0;
  double sum_w = 0.0;
  for (Eigen::Index i = 0; i < state.w.size(); ++i) {
    const double e = y_(i) - state.eta(i) - k.xi * state.w(i);
    quad += e * e / state.w(i);
    sum_w += state.w(i);
  }
  state.delta2 = sample_gamma(a_delta_ + 1.5 * n, b_delta_ + quad / (2.0 * k.sigma2) + sum_w, rng);
}

void GibbsSampler::sweep(ChainState& state, RandomStream& rng) const {
  step_mandatory(state, rng);
  for (std::size_t j = 0; j < state.blocks.size(); ++j) {
    step_coefficients(j, state, rng);
    step_importance(j, state, rng);
    step_indicator(j, state, rng);
    step_hypervariance(j, state, rng);
    step_inclusion_prob(j, state, rng);
  }
  refresh_predictor(state);
  step_weights(state, rng);
  step_scale(state, rng);
}

PosteriorDraws run_chain(const BuiltModel& model, double tau, const SamplerConfig& config, int chain,
                         double a_delta, double b_delta, RandomStream& rng) {
  config.validate();
  GibbsSampler sampler(model, tau, a_delta, b_delta);
  ChainState state = sampler.initial_state();

  const auto stored = static_cast<Eigen::Index>(config.num_stored());
  const auto n = static_cast<Eigen::Index>(model.num_rows());
  PosteriorDraws draws;
  draws.tau = tau;
  draws.chain = chain;
  draws.seed = rng.seed();
  draws.blocks.resize(model.blocks.size());
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    draws.blocks[j].coefficients.resize(stored, model.blocks[j].dimension());
  }
  draws.mandatory.resize(stored, model.mandatory_design.cols());
  draws.eta.resize(stored, n);

  Eigen::Index row = 0;
  for (int it = 1; it <= config.iterations; ++it) {
    try {
      sampler.sweep(state, rng);
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), "tau " + std::to_string(tau) + " chain " + std::to_string(chain) +
                                         " sweep " + std::to_string(it));
    }
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0 || row >= stored) continue;
    draws.iterations.push_back(it);
    for (std::size_t j = 0; j < state.blocks.size(); ++j) {
      const auto& b = state.blocks[j];
      auto& trace = draws.blocks[j];
      trace.gamma.push_back(b.gamma);
      trace.zeta2.push_back(b.zeta2);
      trace.psi2.push_back(b.psi2);
      trace.omega.push_back(b.omega);
      trace.coefficients.row(row) = std::sqrt(b.zeta2) * b.beta_tilde.transpose();
    }
    draws.delta2.push_back(state.delta2);
    draws.mandatory.row(row) = state.mandatory.transpose();
    draws.eta.row(row) = state.eta.transpose();
    ++row;
  }
  return draws;
}

Vector ald_posterior_mode(const Matrix& X, const Vector& y, double tau, int max_iterations, double tolerance) {
  if (X.rows() != y.size()) throw DomainError("design and response lengths differ");
  const auto k = quantile_constants(tau);
  const double root = std::sqrt(k.xi * k.xi + 2.0 * k.sigma2);
  Vector beta = X.colPivHouseholderQr().solve(y);
  Vector weight(y.size());
  for (int it = 0; it < max_iterations; ++it) {
    const Vector resid = y - X * beta;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      weight(i) = root / std::max(std::abs(resid(i)), 1e-14);  // E[1 / w_i | y, beta]
    }
    // M-step: minimize sum E[1/w_i] (y_i - x_i b)^2 - 2 xi (y_i - x_i b).
    const Matrix xw = X.array().colwise() * weight.array();
    const Matrix lhs = X.transpose() * xw;
    const Vector rhs = xw.transpose() * y - k.xi * X.transpose() * Vector::Ones(y.size());
    const Vector next = lhs.ldlt().solve(rhs);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < tolerance) break;
  }
  return beta;
}

}  // namespace staq
