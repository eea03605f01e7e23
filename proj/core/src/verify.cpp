#include "staq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "staq/ald.hpp"
#include "staq/config.hpp"
#include "staq/data.hpp"
#include "staq/elicitation.hpp"
#include "staq/errors.hpp"
#include "staq/gibbs.hpp"
#include "staq/oracle.hpp"
#include "staq/pipeline.hpp"
#include "staq/random.hpp"
#include "staq/scenarios.hpp"
#include "staq/spline.hpp"

namespace staq {
namespace {

using Clock = std::chrono::steady_clock;

class SuiteTimer {
 public:
  explicit SuiteTimer(SuiteReport& report) : report_(report), start_(Clock::now()) {}
  ~SuiteTimer() { report_.seconds = std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  SuiteReport& report_;
  Clock::time_point start_;
};

void say(const ProgressSink& progress, const std::string& msg) {
  if (progress) progress(msg);
}

CheckResult below(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value < threshold, value, threshold, std::move(detail)};
}

CheckResult above(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value > threshold, value, threshold, std::move(detail)};
}

CheckResult ks_check(const std::string& name, std::vector<double> sample, const DistributionSpec& dist) {
  std::sort(sample.begin(), sample.end());
  const auto cdf = numeric_cdf_sorted(dist, sample);
  return below("ks " + name, ks_statistic(sample, cdf), ks_critical_value(sample.size(), 0.01),
               "KS distance vs numeric CDF, 1% critical value");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ModelSpec scenario_spec(const SimulatedData& sim, std::vector<double> quantiles, std::uint64_t seed) {
  ModelSpec spec;
  spec.response = sim.response;
  for (const auto& c : sim.covariates) spec.covariates.push_back({c, EffectKind::Decomposed, true, {}, {}});
  spec.quantiles = std::move(quantiles);
  spec.sampler.seed = seed;
  return spec;
}

double inclusion_of(const QuantileFit& fit, const std::string& part_id) {
  for (const auto& row : fit.inclusion) {
    if (row.covariate + ":" + std::string(to_string(row.part)) == part_id) return row.inclusion_prob;
  }
  throw DomainError("no inclusion row for " + part_id);
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string SuiteReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                    {"detail", c.detail}});
  }
  return nlohmann::json{{"suite", suite}, {"passed", passed()}, {"seconds", seconds}, {"checks", list}}.dump(2);
}

SuiteReport verify_distributions(std::uint64_t seed, int draws) {
  SuiteReport report{"distributions", {}, 0.0};
  SuiteTimer timer(report);
  RandomStream base(seed);
  const auto n = static_cast<std::size_t>(draws);
  std::uint64_t stream = 0;

  for (const auto& g : {GigParams{-3.0, 1.0, 4.0}, GigParams{0.0, 2.0, 1.0}, GigParams{0.5, 2.0, 3.0}}) {
    RandomStream rng = base.derive(++stream);
    std::vector<double> x(n);
    for (auto& v : x) v = sample_gig(g, rng);
    const auto dist = DistributionSpec::gig(g.p, g.a, g.b);
    report.checks.push_back(ks_check(dist.label(), std::move(x), dist));
  }
  for (const auto& [mean, shape] : {std::pair{1.0, 2.0}, std::pair{3.0, 0.5}}) {
    RandomStream rng = base.derive(++stream);
    std::vector<double> x(n);
    for (auto& v : x) v = sample_inverse_gaussian(mean, shape, rng);
    const auto dist = DistributionSpec::inverse_gaussian(mean, shape);
    report.checks.push_back(ks_check(dist.label(), std::move(x), dist));
  }
  {
    RandomStream rng = base.derive(++stream);
    std::vector<double> x(n);
    for (auto& v : x) {
      const double s = sample_sqrt_beta_prime(5.0, rng);
      v = s * s;
    }
    const auto dist = DistributionSpec::beta_prime(0.5, 5.0);
    report.checks.push_back(ks_check(dist.label(), std::move(x), dist));
  }

  // ALD as a normal / exponential mixture.
  const double eta = 0.3, delta2 = 1.7;
  for (double tau : {0.6, 0.8, 0.9}) {
    RandomStream rng = base.derive(++stream);
    const auto k = quantile_constants(tau);
    std::vector<double> y(n);
    std::size_t below_eta = 0;
    for (auto& v : y) {
      const double w = sample_exponential(delta2, rng);
      v = eta + k.xi * w + std::sqrt(k.sigma2 * w / delta2) * rng.normal();
      below_eta += v <= eta ? 1 : 0;
    }
    std::sort(y.begin(), y.end());
    std::vector<double> cdf(n);
    for (std::size_t i = 0; i < n; ++i) cdf[i] = ald_cdf(y[i], eta, delta2, tau);
    const std::string label = "ald mixture tau=" + format_double(tau);
    report.checks.push_back(below("ks " + label, ks_statistic(y, cdf), ks_critical_value(n, 0.01),
                                  "KS distance vs closed-form ALD CDF, 1% critical value"));
    const double frac = static_cast<double>(below_eta) / static_cast<double>(n);
    report.checks.push_back(below("P(Y<=eta) " + label, std::abs(frac - tau), 0.01, "|share below eta - tau|"));
  }
  return report;
}

SuiteReport verify_geweke(std::uint64_t seed, int sweeps, const ProgressSink& progress) {
  SuiteReport report{"geweke", {}, 0.0};
  SuiteTimer timer(report);
  GewekeConfig cfg;
  cfg.sweeps = sweeps;
  cfg.forward_draws = sweeps;

  RandomStream rng(seed);
  say(progress, "joint-distribution test: " + std::to_string(sweeps) + " sweeps");
  const auto clean = geweke_joint_test(cfg, rng);
  for (std::size_t k = 0; k < clean.z.size(); ++k) {
    report.checks.push_back(below("|z| " + clean.names[k], std::abs(clean.z[k]), 3.0,
                                  "forward mean " + format_double(clean.forward_mean[k]) + ", gibbs mean " +
                                      format_double(clean.gibbs_mean[k]) + ", ess " +
                                      format_double(std::round(clean.gibbs_ess[k]))));
  }

  // Mutation: Step 4 with its scale halved.
  const SweepFunction corrupted = [](const GibbsSampler& s, ChainState& state, RandomStream& r) {
    s.step_mandatory(state, r);
    for (std::size_t j = 0; j < state.blocks.size(); ++j) {
      s.step_coefficients(j, state, r);
      s.step_importance(j, state, r);
      s.step_indicator(j, state, r);
      auto& b = state.blocks[j];
      const auto& h = s.model().blocks[j].hyper;
      const double rg = b.gamma == 1 ? 1.0 : h.r;
      b.psi2 = sample_inverse_gamma(h.a + 0.5, 0.5 * (h.b + b.zeta2 / (2.0 * rg)), r);
      s.step_inclusion_prob(j, state, r);
    }
    s.refresh_predictor(state);
    s.step_weights(state, r);
    s.step_scale(state, r);
  };
  RandomStream mutation_rng(seed);
  say(progress, "mutation run with corrupted hypervariance step");
  const auto mutated = geweke_joint_test(cfg, mutation_rng, corrupted);
  report.checks.push_back(above("mutation max |z|", mutated.max_abs_z(), 5.0,
                                "corrupted Step 4 must be detected"));
  return report;
}

SuiteReport verify_qr_mode(std::uint64_t seed, int instances) {
  SuiteReport report{"qr-mode", {}, 0.0};
  SuiteTimer timer(report);
  RandomStream base(seed);
  for (int inst = 0; inst < instances; ++inst) {
    RandomStream rng = base.derive(static_cast<std::uint64_t>(inst));
    const int n = 15;
    Matrix X(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = 4.0 * rng.uniform() - 2.0;
      y(i) = 0.5 + 1.5 * X(i, 1) + rng.normal();
    }
    for (double tau : {0.5, 0.8}) {
      const Vector exact = linear_qr_exact(X, y, tau);
      const Vector mode = ald_posterior_mode(X, y, tau);
      const double diff = (exact - mode).cwiseAbs().maxCoeff();
      report.checks.push_back(below("instance " + std::to_string(inst) + " tau=" + format_double(tau), diff, 1e-2,
                                    "max-norm distance between posterior mode and exact minimizer"));
    }
  }
  return report;
}

SuiteReport verify_calibration(std::uint64_t seed, int n, const ProgressSink& progress) {
  SuiteReport report{"calibration", {}, 0.0};
  SuiteTimer timer(report);
  const auto sim = simulate_scenario("heteroskedastic-linear", seed, n);
  const auto spec = scenario_spec(sim, {0.6, 0.8, 0.9}, seed);
  LogSink log = progress ? LogSink(progress) : LogSink();
  const auto result = fit_model(sim.table, spec, 0, nullptr, log);
  for (const auto& fit : result.fits) {
    report.checks.push_back(below("below-fraction tau=" + format_double(fit.tau), std::abs(fit.below_fraction - fit.tau),
                                  0.03, "share of y <= fitted quantile: " + format_double(fit.below_fraction)));
  }
  return report;
}

SuiteReport verify_elicitation(std::uint64_t seed, int draws) {
  SuiteReport report{"elicitation", {}, 0.0};
  SuiteTimer timer(report);
  std::vector<double> x(100);
  for (int i = 0; i < 100; ++i) x[static_cast<std::size_t>(i)] = i / 99.0;
  EffectBlock block;
  block.id = "x:nonlinear";
  block.covariate = "x";
  block.design = nonlinear_block(x, BasisConfig{});
  block.hyper.a = 5.0;
  block.hyper.alpha = 0.1;
  block.hyper.c = 0.1;

  RandomStream base(seed);
  RandomStream rng = base.derive(1);
  const auto res = elicit_block(block, draws, rng);
  RandomStream slab_rng = base.derive(2);
  const double p_slab = forward_supnorm_probability(block.design, res.a, res.b, 1.0, res.c, draws, slab_rng);
  RandomStream spike_rng = base.derive(3);
  const double p_spike = forward_supnorm_probability(block.design, res.a, res.b, res.r, res.c, draws, spike_rng);
  const std::string fit = "b=" + format_double(res.b) + " r=" + format_double(res.r);
  report.checks.push_back(below("P(sup|f|<=c | slab) - 0.1", std::abs(p_slab - 0.1), 0.02,
                                fit + ", P=" + format_double(p_slab)));
  report.checks.push_back(below("P(sup|f|<=c | spike) - 0.9", std::abs(p_spike - 0.9), 0.02,
                                fit + ", P=" + format_double(p_spike)));
  return report;
}

SuiteReport verify_recovery(std::uint64_t seed, int replicates, int n, const ProgressSink& progress) {
  SuiteReport report{"recovery", {}, 0.0};
  SuiteTimer timer(report);
  int signal_ok = 0;
  int noise_ok = 0;
  std::string detail;
  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t rep_seed = mix_seed(seed) + static_cast<std::uint64_t>(rep);
    const auto sim = simulate_scenario("sparse-nonlinear", rep_seed, n);
    const auto spec = scenario_spec(sim, {0.5}, rep_seed);
    const auto result = fit_model(sim.table, spec, 0);
    const auto& fit = result.fits.front();
    bool s = true, z = true;
    std::string line;
    for (const auto& p : sim.active_parts) {
      const double v = inclusion_of(fit, p);
      s = s && v > 0.5;
      line += p + "=" + format_double(std::round(v * 1000) / 1000) + " ";
    }
    for (const auto& p : sim.noise_parts) {
      const double v = inclusion_of(fit, p);
      z = z && v < 0.5;
      line += p + "=" + format_double(std::round(v * 1000) / 1000) + " ";
    }
    signal_ok += s ? 1 : 0;
    noise_ok += z ? 1 : 0;
    say(progress, "replicate " + std::to_string(rep) + ": " + line);
    detail += line + "; ";
  }
  report.checks.push_back({"replicates with both signal parts selected", signal_ok >= (9 * replicates + 9) / 10,
                           static_cast<double>(signal_ok), 0.9 * replicates, detail});
  report.checks.push_back({"replicates with all noise parts excluded", noise_ok >= (9 * replicates + 9) / 10,
                           static_cast<double>(noise_ok), 0.9 * replicates, detail});
  return report;
}

SuiteReport verify_invariants(std::uint64_t seed, const std::string& work_dir) {
  SuiteReport report{"invariants", {}, 0.0};
  SuiteTimer timer(report);
  RandomStream rng(seed);

  // Partition of unity.
  double worst_sum = 0.0;
  for (int knots : {7, 20, 40}) {
    BasisConfig cfg{3, knots};
    std::vector<double> x(1000);
    for (auto& v : x) v = rng.uniform();
    x.front() = 0.0;
    x.back() = 1.0;
    const Matrix b = bspline_design(x, cfg);
    worst_sum = std::max(worst_sum, (b.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  report.checks.push_back(below("partition of unity", worst_sum, 1e-12, "max |row sum - 1|"));

  // Penalty rank.
  int rank_violations = 0;
  for (int d : {9, 22, 42}) {
    const auto pen = rw2_penalty(d);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(pen.matrix);
    const double top = eig.eigenvalues().maxCoeff();
    const auto rank = (eig.eigenvalues().array() > 1e-10 * top).count();
    rank_violations += (rank != d - 2 || pen.rank != d - 2) ? 1 : 0;
  }
  report.checks.push_back({"rank(K) = D - 2", rank_violations == 0, static_cast<double>(rank_violations), 0.0,
                           "violations over D in {9, 22, 42}"});

  // Full fits, twice.
  const std::filesystem::path dir(work_dir);
  std::filesystem::create_directories(dir);
  const auto sim = simulate_scenario("sparse-linear", seed, 200);
  write_csv(dir / "data.csv", sim.table);
  auto make_config = [&](const std::string& out) {
    nlohmann::json doc{{"data", (dir / "data.csv").string()},
                       {"output", (dir / out).string()},
                       {"model",
                        {{"response", "y"},
                         {"covariates",
                          {{{"name", "x1"}}, {{"name", "x2"}}, {{"name", "x3"}, {"kind", "linear"}},
                           {{"name", "x4"}, {"kind", "nonlinear"}}}}}},
                       {"quantiles", {0.5, 0.9}},
                       {"sampler", {{"iterations", 1500}, {"burn_in", 500}, {"thin", 5}, {"chains", 2}, {"seed", seed}}},
                       {"elicitation", {{"draws", 10000}}}};
    return parse_config(doc.dump());
  };
  std::filesystem::remove_all(dir / "run1");
  std::filesystem::remove_all(dir / "run2");
  const auto first = run_fit(make_config("run1"));
  run_fit(make_config("run2"));

  double worst_constraint = 0.0;
  int positivity = 0;
  std::size_t stored = 0;
  for (const auto& fit : first.fits) {
    for (const auto& chain : fit.chains) {
      stored += chain.size();
      for (double d2 : chain.delta2) positivity += (d2 > 0.0 && std::isfinite(d2)) ? 0 : 1;
      for (std::size_t j = 0; j < chain.blocks.size(); ++j) {
        const auto& trace = chain.blocks[j];
        const Matrix& a = first.model.blocks[j].design.constraint;
        if (a.rows() > 0 && trace.coefficients.rows() > 0) {
          worst_constraint = std::max(worst_constraint, (trace.coefficients * a.transpose()).cwiseAbs().maxCoeff());
        }
        for (std::size_t d = 0; d < trace.zeta2.size(); ++d) {
          positivity += trace.zeta2[d] > 0.0 ? 0 : 1;
          positivity += trace.psi2[d] > 0.0 ? 0 : 1;
          positivity += (trace.omega[d] > 0.0 && trace.omega[d] < 1.0) ? 0 : 1;
        }
      }
    }
  }
  report.checks.push_back(below("constraint on stored draws", worst_constraint, 1e-10,
                                "max |A beta| over " + std::to_string(stored) + " stored draws"));
  report.checks.push_back({"positivity of variance-type draws", positivity == 0, static_cast<double>(positivity), 0.0,
                           "zeta2, psi2, delta2 > 0 and omega in (0, 1)"});

  int differing = 0;
  for (const char* name : {"draws.csv", "inclusion_table.csv", "effect_curves.csv", "fitted_quantiles.csv",
                           "inclusion_table_wide.csv", "elicitation.json"}) {
    differing += read_file(dir / "run1" / name) == read_file(dir / "run2" / name) ? 0 : 1;
  }
  report.checks.push_back({"seed determinism of fit", differing == 0, static_cast<double>(differing), 0.0,
                           "output files differing between two identical runs"});
  return report;
}

std::vector<std::string> verify_suites() {
  return {"distributions", "geweke", "qr-mode", "calibration", "elicitation", "recovery", "invariants"};
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed, const std::string& work_dir,
                      const ProgressSink& progress) {
  if (name == "distributions") return verify_distributions(seed);
  if (name == "geweke") return verify_geweke(seed, 200000, progress);
  if (name == "qr-mode") return verify_qr_mode(seed);
  if (name == "calibration") return verify_calibration(seed, 1000, progress);
  if (name == "elicitation") return verify_elicitation(seed);
  if (name == "recovery") return verify_recovery(seed, 10, 500, progress);
  if (name == "invariants") return verify_invariants(seed, work_dir);
  throw ConfigError("unknown verification suite '" + name + "'");
}

}  // namespace staq
