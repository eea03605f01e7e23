#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace staq {

/// One checked quantity of a verification suite.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const;
  std::string to_json() const;
};

using ProgressSink = std::function<void(const std::string&)>;

/// KS tests of the GIG, inverse-Gaussian and beta-prime samplers against the
/// numeric CDF oracle, and the ALD mixture identity.
SuiteReport verify_distributions(std::uint64_t seed, int draws = 100000);

/// Joint-distribution test of the sampler plus a mutation run with a
/// corrupted hypervariance step.
SuiteReport verify_geweke(std::uint64_t seed, int sweeps = 200000, const ProgressSink& progress = {});

/// ALD posterior mode vs the exhaustive check-loss minimizer on random
/// instances (n = 15, p = 2).
SuiteReport verify_qr_mode(std::uint64_t seed, int instances = 5);

/// Below-fraction of fitted quantiles on the heteroskedastic-linear scenario.
SuiteReport verify_calibration(std::uint64_t seed, int n = 1000, const ProgressSink& progress = {});

/// Forward re-simulation with elicited (b, r) on the default 9-dimensional
/// block.
SuiteReport verify_elicitation(std::uint64_t seed, int draws = 100000);

/// Inclusion decisions over seeded replicates of the sparse-nonlinear
/// scenario.
SuiteReport verify_recovery(std::uint64_t seed, int replicates = 10, int n = 500, const ProgressSink& progress = {});

/// Partition of unity, penalty rank, constraint and positivity of stored
/// draws, and byte-identical reruns of a full fit in `work_dir`.
SuiteReport verify_invariants(std::uint64_t seed, const std::string& work_dir);

std::vector<std::string> verify_suites();

/// Run a suite by name; throws ConfigError for unknown names.
SuiteReport run_suite(const std::string& name, std::uint64_t seed, const std::string& work_dir,
                      const ProgressSink& progress = {});

}  // namespace staq
