#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "staq/config.hpp"
#include "staq/data.hpp"
#include "staq/elicitation.hpp"
#include "staq/gibbs.hpp"
#include "staq/model.hpp"
#include "staq/summaries.hpp"

namespace staq {

/// Receives progress messages; the CLI prints them to stderr.
using LogSink = std::function<void(const std::string&)>;

/// Everything produced for one quantile level.
struct QuantileFit {
  double tau = 0.5;
  std::vector<PosteriorDraws> chains;
  InclusionTable inclusion;
  std::vector<EffectCurve> curves;
  FittedQuantiles fitted;
  std::vector<ScalarDiagnostic> diagnostics;
  double below_fraction = 0.0;  // share of y_i <= posterior mean eta_i
  double pinball = 0.0;
};

struct FitResult {
  BuiltModel model;
  std::vector<ElicitationResult> elicitation;
  std::vector<QuantileFit> fits;
};

/// Seed of the elicitation stream of block j.
std::uint64_t elicitation_seed(std::uint64_t base_seed, std::size_t block);
/// Seed of the chain stream for quantile index q.
std::uint64_t chain_seed(std::uint64_t base_seed, std::size_t quantile_index, int chain);

/// Elicit (b, r) for every selectable block.
std::vector<ElicitationResult> elicit_blocks(const BuiltModel& model, const ModelSpec& spec, const LogSink& log = {});

/// Copy elicited (b, r) into the matching blocks. Throws ConfigError when a
/// selectable block has no entry.
void apply_elicitation(BuiltModel& model, const std::vector<ElicitationResult>& results);

/// Rows with missing values in the used columns are dropped; returns the
/// count.
std::size_t drop_unused_missing(DataTable& data, const ModelSpec& spec);

/// In-memory fit: build, elicit (unless `preset` is given), sample every
/// (tau, chain) pair on up to `threads` workers, summarize.
FitResult fit_model(const DataTable& data, const ModelSpec& spec, int threads = 1,
                    const std::vector<ElicitationResult>* preset = nullptr, const LogSink& log = {});

/// Elicitation results as JSON text and back.
std::string elicitation_to_json(const std::vector<ElicitationResult>& results, std::uint64_t seed,
                                const std::string& data_checksum);
std::vector<ElicitationResult> elicitation_from_json(const std::string& text);

/// `staq fit`: runs the whole pipeline and writes inclusion_table.csv,
/// effect_curves.csv, fitted_quantiles.csv, draws.csv, diagnostics.json and
/// manifest.json (plus inclusion_table_wide.csv for several quantiles).
FitResult run_fit(const RunConfig& config, const LogSink& log = {});

/// `staq elicit`: writes elicitation.json into the output directory and
/// returns its path.
std::filesystem::path run_elicit(const RunConfig& config, const LogSink& log = {});

/// Writers used by run_fit.
void write_inclusion_table(const std::filesystem::path& path, const std::vector<QuantileFit>& fits);
void write_inclusion_table_wide(const std::filesystem::path& path, const std::vector<QuantileFit>& fits);
void write_effect_curves(const std::filesystem::path& path, const std::vector<QuantileFit>& fits);
void write_fitted_quantiles(const std::filesystem::path& path, const BuiltModel& model,
                            const std::vector<QuantileFit>& fits);
void write_draws(const std::filesystem::path& path, const BuiltModel& model, const std::vector<QuantileFit>& fits);
/// Column names of draws.csv.
std::vector<std::string> draws_columns(const BuiltModel& model);

}  // namespace staq
