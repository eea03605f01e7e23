#include "staq/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "staq/ald.hpp"
#include "staq/errors.hpp"
#include "staq/summaries.hpp"

namespace staq {

// ---------------------------------------------------------------------------
// Linear quantile regression

double check_loss_sum(const Matrix& X, const Vector& y, const Vector& beta, double tau) {
  const Vector r = y - X * beta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += check_loss(tau, r(i));
  return s;
}

namespace {

void require_full_rank(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw DomainError("design and response lengths differ");
  if (X.cols() == 0 || X.rows() < X.cols()) throw DomainError("quantile regression needs n >= p >= 1");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols()) throw DomainError("design matrix is rank deficient");
}

bool lexicographically_less(const Vector& a, const Vector& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) < b(k)) return true;
    if (a(k) > b(k)) return false;
  }
  return false;
}

// Interpolating fit through the `p` rows of r with the smallest |r|, kept if
// it does not increase the loss.
Vector polish_basic_solution(const Matrix& X, const Vector& y, const Vector& beta, double tau) {
  const Eigen::Index p = X.cols();
  const Vector r = (y - X * beta).cwiseAbs();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r.size()));
  for (Eigen::Index i = 0; i < r.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return r(a) < r(b); });
  Matrix xh(p, p);
  Vector yh(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    xh.row(k) = X.row(order[static_cast<std::size_t>(k)]);
    yh(k) = y(order[static_cast<std::size_t>(k)]);
  }
  Eigen::FullPivLU<Matrix> lu(xh);
  if (!lu.isInvertible()) return beta;
  const Vector candidate = lu.solve(yh);
  return check_loss_sum(X, y, candidate, tau) <= check_loss_sum(X, y, beta, tau) ? candidate : beta;
}

}  // namespace

Vector linear_qr_iterative(const Matrix& X, const Vector& y, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
  require_full_rank(X, y);
  const auto n = y.size();
  Vector beta = X.colPivHouseholderQr().solve(y);
  const double spread = std::max((y - X * beta).cwiseAbs().maxCoeff(), 1e-8);

  // rho_eps(u) = tau u + eps log(1 + exp(-u / eps)) -> check loss as eps -> 0.
  auto smoothed = [&](const Vector& b, double eps) {
    const Vector r = y - X * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = -r(i) / eps;
      s += tau * r(i) + eps * (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
    }
    return s;
  };

  for (double eps = spread; eps > 1e-10 * spread; eps *= 0.2) {
    for (int it = 0; it < 200; ++it) {
      const Vector r = y - X * beta;
      Vector psi(n), curv(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = 1.0 / (1.0 + std::exp(r(i) / eps));  // logistic(-r / eps)
        psi(i) = tau - s;
        curv(i) = std::max(s * (1.0 - s) / eps, 1e-12 / eps);
      }
      const Vector grad = -X.transpose() * psi;
      const Matrix hess = X.transpose() * (X.array().colwise() * curv.array()).matrix();
      const Vector step = hess.ldlt().solve(-grad);
      double t = 1.0;
      const double f0 = smoothed(beta, eps);
      Vector next = beta + step;
      while (smoothed(next, eps) > f0 + 1e-4 * t * grad.dot(step) && t > 1e-10) {
        t *= 0.5;
        next = beta + t * step;
      }
      const double change = (next - beta).cwiseAbs().maxCoeff();
      beta = next;
      if (change < 1e-14 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }
  }
  return polish_basic_solution(X, y, beta, tau);
}

Vector linear_qr_exact(const Matrix& X, const Vector& y, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
  require_full_rank(X, y);
  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  if (n > 30 || p > 4) return linear_qr_iterative(X, y, tau);

  Vector best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) idx[static_cast<std::size_t>(k)] = k;
  Matrix xh(p, p);
  Vector yh(p);
  while (true) {
    for (int k = 0; k < p; ++k) {
      xh.row(k) = X.row(idx[static_cast<std::size_t>(k)]);
      yh(k) = y(idx[static_cast<std::size_t>(k)]);
    }
    Eigen::FullPivLU<Matrix> lu(xh);
    if (lu.isInvertible()) {
      const Vector b = lu.solve(yh);
      const double loss = check_loss_sum(X, y, b, tau);
      const double tol = 1e-12 * (1.0 + std::abs(best_loss));
      if (best.size() == 0 || loss < best_loss - tol ||
          (std::abs(loss - best_loss) <= tol && lexicographically_less(b, best))) {
        best = b;
        best_loss = std::min(loss, best_loss);
      }
    }
    // Next p-subset in lexicographic order.
    int k = p - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == n - p + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int m = k + 1; m < p; ++m) idx[static_cast<std::size_t>(m)] = idx[static_cast<std::size_t>(m - 1)] + 1;
  }
  if (best.size() == 0) throw DomainError("no non-singular p-subset of rows");
  return best;
}

// ---------------------------------------------------------------------------
// Numeric distribution functions

std::string DistributionSpec::label() const {
  auto num = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (id) {
    case DistributionId::Gig: return "gig(p=" + num(p1) + ",a=" + num(p2) + ",b=" + num(p3) + ")";
    case DistributionId::InverseGaussian: return "inverse_gaussian(mean=" + num(p1) + ",shape=" + num(p2) + ")";
    case DistributionId::BetaPrime: return "beta_prime(" + num(p1) + "," + num(p2) + ")";
  }
  return "unknown";
}

double log_density(const DistributionSpec& d, double x) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  switch (d.id) {
    case DistributionId::Gig:
      return (d.p1 - 1.0) * std::log(x) - 0.5 * (d.p2 * x + d.p3 / x);
    case DistributionId::InverseGaussian:
      return -1.5 * std::log(x) - d.p2 * (x - d.p1) * (x - d.p1) / (2.0 * d.p1 * d.p1 * x);
    case DistributionId::BetaPrime:
      return (d.p1 - 1.0) * std::log(x) - (d.p1 + d.p2) * std::log1p(x);
  }
  throw DomainError("unsupported distribution");
}

namespace {

void validate(const DistributionSpec& d) {
  switch (d.id) {
    case DistributionId::Gig:
      if (!(d.p2 > 0.0 && d.p3 > 0.0)) throw DomainError("GIG needs a > 0 and b > 0");
      return;
    case DistributionId::InverseGaussian:
    case DistributionId::BetaPrime:
      if (!(d.p1 > 0.0 && d.p2 > 0.0)) throw DomainError("distribution parameters must be positive");
      return;
  }
  throw DomainError("unsupported distribution");
}

// Integration runs in t = sqrt(x), which removes the x^(-1/2) singularity of
// beta-prime(1/2, .) at zero. The integrand is scaled by its maximum over a
// geometric grid, and integrals are accumulated over that grid.
class CdfIntegrator {
 public:
  explicit CdfIntegrator(const DistributionSpec& d) : dist_(d) {
    validate(d);
    constexpr int kPoints = 641;
    const double lo = -10.0, hi = 10.0;  // log10 t
    grid_.resize(kPoints);
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kPoints; ++k) {
      grid_[static_cast<std::size_t>(k)] = std::pow(10.0, lo + (hi - lo) * k / (kPoints - 1));
      top = std::max(top, log_integrand_unscaled(grid_[static_cast<std::size_t>(k)]));
    }
    shift_ = top;
    cumulative_.assign(grid_.size(), 0.0);
    cumulative_[0] = piece(0.0, grid_[0]);
    for (std::size_t k = 1; k < grid_.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + piece(grid_[k - 1], grid_[k]);
    }
    total_ = cumulative_.back() + piece(grid_.back(), std::numeric_limits<double>::infinity());
    if (!(total_ > 0.0) || !std::isfinite(total_)) throw NumericalError("density normalization failed", d.label());
  }

  // P(X <= x).
  double cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    return std::clamp(integral_to(std::sqrt(x)) / total_, 0.0, 1.0);
  }

  // Unnormalized integral over (0, t].
  double integral_to(double t) const {
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    if (it == grid_.begin()) return piece(0.0, t);
    const auto k = static_cast<std::size_t>(it - grid_.begin()) - 1;
    return cumulative_[k] + piece(grid_[k], t);
  }

  // Integral between two points in t.
  double piece(double a, double b) const {
    if (!(b > a)) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    auto f = [this](double t) { return std::exp(log_integrand_unscaled(t) - shift_); };
    if (std::isinf(b)) return gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-10);
    // Mapped to [0, 1]: the quadrature's error estimate is not scaled by the
    // interval length, so very short intervals would otherwise never converge.
    const double width = b - a;
    auto g = [&](double s) { return f(a + width * s); };
    return width * gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, 12, 1e-10);
  }

  double total() const { return total_; }

 private:
  double log_integrand_unscaled(double t) const {
    if (!(t > 0.0) || std::isinf(t)) return -std::numeric_limits<double>::infinity();
    return log_density(dist_, t * t) + std::log(2.0 * t);
  }

  DistributionSpec dist_;
  std::vector<double> grid_;
  std::vector<double> cumulative_;
  double shift_ = 0.0;
  double total_ = 0.0;
};

}  // namespace

double numeric_cdf(const DistributionSpec& dist, double x) { return CdfIntegrator(dist).cdf(x); }

std::vector<double> numeric_cdf_sorted(const DistributionSpec& dist, std::span<const double> sorted) {
  const CdfIntegrator integ(dist);
  std::vector<double> out(sorted.size());
  double prev_t = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = sorted[i];
    if (i > 0 && x < sorted[i - 1]) throw DomainError("numeric_cdf_sorted needs ascending input");
    if (!(x > 0.0)) {
      out[i] = 0.0;
      continue;
    }
    if (std::isinf(x)) {
      out[i] = 1.0;
      continue;
    }
    const double t = std::sqrt(x);
    // Integrating from the previous point keeps every piece short; restart
    // from the grid when the gap is large.
    if (prev_t > 0.0 && t < 1.1 * prev_t) {
      acc += integ.piece(prev_t, t);
    } else {
      acc = integ.integral_to(t);
    }
    prev_t = t;
    out[i] = std::clamp(acc / integ.total(), 0.0, 1.0);
  }
  return out;
}

double numeric_quantile(const DistributionSpec& dist, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  const CdfIntegrator integ(dist);
  double lo = -40.0, hi = 40.0;  // log x
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (integ.cdf(std::exp(mid)) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

double ks_statistic(std::span<const double> sorted, std::span<const double> cdf) {
  if (sorted.size() != cdf.size() || sorted.empty()) throw DomainError("KS statistic: size mismatch or empty sample");
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    d = std::max(d, cdf[i] - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - cdf[i]);
  }
  return d;
}

double ks_critical_value(std::size_t n, double level) {
  if (n == 0 || !(level > 0.0 && level < 1.0)) throw DomainError("KS critical value: invalid arguments");
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Joint-distribution test

double GewekeResult::max_abs_z() const {
  double m = 0.0;
  for (double v : z) m = std::max(m, std::abs(v));
  return m;
}

BuiltModel geweke_model(const GewekeConfig& config) {
  if (config.n < 5) throw DomainError("joint-distribution test needs n >= 5");
  const auto& h = config.hyper;
  for (double v : {h.a, h.b, h.a0, h.b0, h.r, config.a_delta, config.b_delta}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("joint-distribution test requires proper priors");
  }
  std::vector<double> x(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / (config.n - 1);

  BuiltModel model;
  model.y = Vector::Zero(config.n);
  model.mandatory_design = Matrix(config.n, 0);
  auto [lin, nonlin] = decompose_effect(x, config.basis);
  for (auto* design : {&lin, &nonlin}) {
    EffectBlock block;
    block.covariate = "x";
    block.id = "x:" + std::string(to_string(design->part));
    block.design = std::move(*design);
    block.selectable = true;
    block.hyper = h;
    model.blocks.push_back(std::move(block));
  }
  model.standardization["x"] = StandardizationEntry{0.0, 1.0};
  model.unit_covariates["x"] = x;
  return model;
}

std::vector<std::string> geweke_test_functions() {
  return {"zeta2[linear]",  "zeta2[nonlinear]",      "gamma[linear]",        "gamma[nonlinear]",
          "psi2[linear]",   "psi2[nonlinear]",       "omega[linear]",        "delta2",
          "beta'beta[linear]", "beta'beta[nonlinear]", "mean(y)",             "mean(y^2)"};
}

namespace {

std::array<double, 12> test_values(const ChainState& s, const Vector& y) {
  const auto& lin = s.blocks[0];
  const auto& nl = s.blocks[1];
  return {lin.zeta2,
          nl.zeta2,
          static_cast<double>(lin.gamma),
          static_cast<double>(nl.gamma),
          lin.psi2,
          nl.psi2,
          lin.omega,
          s.delta2,
          lin.zeta2 * lin.beta_tilde.squaredNorm(),
          nl.zeta2 * nl.beta_tilde.squaredNorm(),
          y.mean(),
          y.squaredNorm() / static_cast<double>(y.size())};
}

}  // namespace

GewekeResult geweke_joint_test(const GewekeConfig& config, RandomStream& rng, const SweepFunction& sweep) {
  if (config.sweeps < 100 || config.forward_draws < 100) throw DomainError("joint-distribution test needs >= 100 draws");
  const BuiltModel model = geweke_model(config);
  GibbsSampler sampler(model, config.tau, config.a_delta, config.b_delta);
  constexpr std::size_t kFunctions = 12;

  // Marginal-conditional simulator.
  RandomStream forward_rng = rng.derive(1);
  std::array<double, kFunctions> f_sum{}, f_sq{};
  for (int m = 0; m < config.forward_draws; ++m) {
    const ChainState s = sampler.draw_from_prior(forward_rng);
    const Vector y = sampler.simulate_response(s, forward_rng);
    const auto g = test_values(s, y);
    for (std::size_t k = 0; k < kFunctions; ++k) {
      f_sum[k] += g[k];
      f_sq[k] += g[k] * g[k];
    }
  }

  // Successive-conditional simulator.
  RandomStream gibbs_rng = rng.derive(2);
  ChainState state = sampler.draw_from_prior(gibbs_rng);
  Vector y = sampler.simulate_response(state, gibbs_rng);
  sampler.set_response(y);
  std::vector<std::vector<double>> trace(kFunctions);
  for (auto& t : trace) t.reserve(static_cast<std::size_t>(config.sweeps));
  for (int it = 0; it < config.burn_in + config.sweeps; ++it) {
    if (sweep) {
      sweep(sampler, state, gibbs_rng);
    } else {
      sampler.sweep(state, gibbs_rng);
    }
    y = sampler.simulate_response(state, gibbs_rng);
    sampler.set_response(y);
    if (it < config.burn_in) continue;
    const auto g = test_values(state, y);
    for (std::size_t k = 0; k < kFunctions; ++k) trace[k].push_back(g[k]);
  }

  GewekeResult out;
  out.names = geweke_test_functions();
  const auto m = static_cast<double>(config.forward_draws);
  for (std::size_t k = 0; k < kFunctions; ++k) {
    const double f_mean = f_sum[k] / m;
    const double f_var = std::max(f_sq[k] / m - f_mean * f_mean, 0.0);
    double g_mean = 0.0;
    for (double v : trace[k]) g_mean += v;
    g_mean /= static_cast<double>(trace[k].size());
    double g_var = 0.0;
    for (double v : trace[k]) g_var += (v - g_mean) * (v - g_mean);
    g_var /= static_cast<double>(trace[k].size() - 1);
    const double ess = effective_sample_size(trace[k]);
    const double se = std::sqrt(f_var / m + g_var / ess);
    out.forward_mean.push_back(f_mean);
    out.gibbs_mean.push_back(g_mean);
    out.gibbs_ess.push_back(ess);
    out.z.push_back(se > 0.0 ? (g_mean - f_mean) / se : 0.0);
  }
  return out;
}

}  // namespace staq
