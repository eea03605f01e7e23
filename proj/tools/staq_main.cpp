#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "staq/config.hpp"
#include "staq/data.hpp"
#include "staq/errors.hpp"
#include "staq/pipeline.hpp"
#include "staq/scenarios.hpp"
#include "staq/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4, kVerification = 5 };

const auto kStart = std::chrono::steady_clock::now();
bool quiet = false;

void log_line(const std::string& msg) {
  if (quiet) return;
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - kStart).count();
  std::fprintf(stderr, "[%8.2fs] %s\n", t, msg.c_str());
}

void error_line(const char* kind, const std::string& msg) {
  std::fprintf(stderr, "staq: %s error: %s\n", kind, msg.c_str());
}

int run_fit_command(const std::string& config_path, int threads) {
  auto cfg = staq::load_config(config_path);
  if (threads >= 0) cfg.threads = threads;
  log_line("fit " + config_path);
  const auto result = staq::run_fit(cfg, log_line);
  for (const auto& fit : result.fits) {
    log_line("tau=" + staq::format_double(fit.tau) + ": below-fraction " + staq::format_double(fit.below_fraction) +
             ", pinball " + staq::format_double(fit.pinball));
  }
  return kOk;
}

int run_simulate_command(const std::string& scenario, std::uint64_t seed, int n, const std::string& out,
                         std::string truth) {
  const auto sim = staq::simulate_scenario(scenario, seed, n);
  const std::filesystem::path path(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  staq::write_csv(path, sim.table);
  if (truth.empty()) truth = (path.parent_path() / (path.stem().string() + ".truth.json")).string();
  std::ofstream t(truth);
  if (!t) throw staq::DataError("cannot write " + truth);
  t << sim.truth_json << '\n';
  log_line("wrote " + out + " and " + truth);
  return kOk;
}

int run_verify_command(const std::string& suite, std::uint64_t seed, std::string report_path,
                       const std::string& work_dir) {
  log_line("verify " + suite + " (seed " + std::to_string(seed) + ")");
  const auto report = staq::run_suite(suite, seed, work_dir, log_line);
  for (const auto& c : report.checks) {
    log_line(std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + staq::format_double(c.value) +
             " (threshold " + staq::format_double(c.threshold) + ")");
  }
  if (report_path.empty()) report_path = "verify-" + suite + ".json";
  std::ofstream out(report_path);
  if (!out) throw staq::DataError("cannot write " + report_path);
  out << report.to_json() << '\n';
  log_line("report written to " + report_path);
  return report.passed() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian effect selection for structured additive quantile regression"};
  app.require_subcommand(1);
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");
  app.set_version_flag("--version", STAQ_VERSION);

  std::string config_path;
  int threads = -1;
  auto* fit = app.add_subcommand("fit", "Fit the model described by a configuration file");
  fit->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  fit->add_option("-j,--threads", threads, "Worker threads (overrides the config)");

  auto* elicit = app.add_subcommand("elicit", "Elicit (b, r) for every selectable block");
  elicit->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  std::string scenario;
  std::uint64_t seed = 1;
  int n = 500;
  std::string out_csv;
  std::string truth_path;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic data set from the scenario catalog");
  simulate->add_option("scenario", scenario, "Scenario id")
      ->required()
      ->check(CLI::IsMember(staq::scenario_catalog()));
  simulate->add_option("-s,--seed", seed, "Random seed");
  simulate->add_option("-n,--rows", n, "Number of rows")->check(CLI::PositiveNumber);
  simulate->add_option("-o,--out", out_csv, "Output CSV")->required();
  simulate->add_option("--truth", truth_path, "Ground-truth JSON (default: <out>.truth.json)");

  std::string suite;
  std::string report_path;
  std::string work_dir = "staq-verify";
  auto* verify = app.add_subcommand("verify", "Run an oracle-backed verification suite");
  verify->add_option("suite", suite, "Suite id")->required()->check(CLI::IsMember(staq::verify_suites()));
  verify->add_option("-s,--seed", seed, "Random seed");
  verify->add_option("-r,--report", report_path, "JSON report path (default: verify-<suite>.json)");
  verify->add_option("--work-dir", work_dir, "Scratch directory for suites that run full fits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit) return run_fit_command(config_path, threads);
    if (*elicit) {
      const auto cfg = staq::load_config(config_path);
      const auto path = staq::run_elicit(cfg, log_line);
      log_line("wrote " + path.string());
      return kOk;
    }
    if (*simulate) return run_simulate_command(scenario, seed, n, out_csv, truth_path);
    if (*verify) return run_verify_command(suite, seed, report_path, work_dir);
  } catch (const staq::ConfigError& e) {
    error_line("config", e.what());
    return kConfig;
  } catch (const staq::DataError& e) {
    error_line("data", e.what());
    return kData;
  } catch (const staq::NumericalError& e) {
    error_line("numerical", e.what());
    return kNumerical;
  } catch (const staq::VerificationFailure& e) {
    error_line("verification", e.what());
    return kVerification;
  } catch (const staq::DomainError& e) {
    error_line("data", e.what());
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    error_line("data", e.what());
    return kData;
  }
  return kOk;
}
