#include "staq/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "staq/errors.hpp"

#ifndef STAQ_VERSION
#define STAQ_VERSION "unknown"
#endif

namespace staq {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void emit(const LogSink& log, const std::string& msg) {
  if (log) log(msg);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* bool_cell(bool v) { return v ? "1" : "0"; }

// Quantile level as it appears in file columns.
std::string tau_label(double tau) { return format_double(tau); }

}  // namespace

std::uint64_t elicitation_seed(std::uint64_t base_seed, std::size_t block) {
  return RandomStream(base_seed).derive(0x10000 + block).seed();
}

std::uint64_t chain_seed(std::uint64_t base_seed, std::size_t quantile_index, int chain) {
  return RandomStream(base_seed).derive(((quantile_index + 1) << 20) + static_cast<std::uint64_t>(chain)).seed();
}

std::vector<ElicitationResult> elicit_blocks(const BuiltModel& model, const ModelSpec& spec, const LogSink& log) {
  std::vector<ElicitationResult> out;
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    const auto& block = model.blocks[j];
    if (!block.selectable) continue;
    RandomStream rng(elicitation_seed(spec.sampler.seed, j));
    auto res = elicit_block(block, spec.elicitation_draws, rng);
    if (res.spike_not_smaller) {
      emit(log, "warning: block " + block.id + ": spike factor r >= 1; (c, alpha) are inconsistent");
    }
    emit(log, "elicited " + block.id + ": b=" + format_double(res.b) + " r=" + format_double(res.r));
    out.push_back(std::move(res));
  }
  return out;
}

void apply_elicitation(BuiltModel& model, const std::vector<ElicitationResult>& results) {
  for (auto& block : model.blocks) {
    if (!block.selectable) continue;
    const auto it = std::find_if(results.begin(), results.end(),
                                 [&](const ElicitationResult& r) { return r.block_id == block.id; });
    if (it == results.end()) throw ConfigError("no elicitation result for block '" + block.id + "'");
    block.hyper.b = it->b;
    block.hyper.r = it->r;
  }
}

std::size_t drop_unused_missing(DataTable& data, const ModelSpec& spec) {
  std::vector<std::string> used{spec.response};
  for (const auto& c : spec.covariates) used.push_back(c.name);
  for (const auto& t : spec.mandatory_terms) used.push_back(t.name);
  for (const auto& name : used) {
    if (!data.has_column(name)) throw DataError("column '" + name + "' not found in the data");
  }
  return data.drop_missing(used);
}

FitResult fit_model(const DataTable& data, const ModelSpec& spec, int threads,
                    const std::vector<ElicitationResult>* preset, const LogSink& log) {
  FitResult result;
  result.model = build_blocks(data, spec);
  result.elicitation = preset ? *preset : elicit_blocks(result.model, spec, log);
  apply_elicitation(result.model, result.elicitation);
  const BuiltModel& model = result.model;

  struct Task {
    std::size_t q;
    int chain;
  };
  std::vector<Task> tasks;
  for (std::size_t q = 0; q < spec.quantiles.size(); ++q) {
    for (int c = 0; c < spec.sampler.num_chains; ++c) tasks.push_back({q, c});
  }
  std::vector<PosteriorDraws> draws(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const auto [q, c] = tasks[k];
      const double tau = spec.quantiles[q];
      try {
        RandomStream rng(chain_seed(spec.sampler.seed, q, c));
        const auto start = Clock::now();
        draws[k] = run_chain(model, tau, spec.sampler, c, spec.hyper.a_delta, spec.hyper.b_delta, rng);
        std::lock_guard lock(log_mutex);
        emit(log, "chain " + std::to_string(c) + " tau=" + tau_label(tau) + " done in " +
                      format_double(std::round(seconds_since(start) * 100.0) / 100.0) + " s");
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const int workers = std::clamp(threads > 0 ? threads : hw, 1, static_cast<int>(tasks.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t q = 0; q < spec.quantiles.size(); ++q) {
    QuantileFit fit;
    fit.tau = spec.quantiles[q];
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (tasks[k].q == q) fit.chains.push_back(std::move(draws[k]));
    }
    fit.inclusion = inclusion_probabilities(model, fit.chains);
    fit.curves = effect_curves(model, fit.chains);
    fit.fitted = fitted_quantiles(fit.chains);
    fit.diagnostics = diagnostics(model, fit.chains);
    std::size_t below = 0;
    for (Eigen::Index i = 0; i < model.y.size(); ++i) below += model.y(i) <= fit.fitted.mean(i) ? 1 : 0;
    fit.below_fraction = static_cast<double>(below) / static_cast<double>(model.y.size());
    fit.pinball = pinball_score(std::span<const double>(model.y.data(), static_cast<std::size_t>(model.y.size())),
                                std::span<const double>(fit.fitted.mean.data(),
                                                        static_cast<std::size_t>(fit.fitted.mean.size())),
                                fit.tau);
    if (spec.sampler.num_chains < 2) emit(log, "notice: single chain, split-Rhat omitted");
    result.fits.push_back(std::move(fit));
  }
  return result;
}

std::string elicitation_to_json(const std::vector<ElicitationResult>& results, std::uint64_t seed,
                                const std::string& data_checksum) {
  json blocks = json::array();
  for (const auto& r : results) {
    blocks.push_back({{"block", r.block_id},
                      {"a", r.a},
                      {"b", r.b},
                      {"r", r.r},
                      {"c", r.c},
                      {"alpha", r.alpha},
                      {"draws", r.num_draws},
                      {"q_slab", r.q_slab},
                      {"q_spike", r.q_spike},
                      {"spike_not_smaller", r.spike_not_smaller}});
  }
  json doc{{"schema_version", 1}, {"seed", seed}, {"data_checksum", data_checksum}, {"blocks", blocks}};
  return doc.dump(2);
}

std::vector<ElicitationResult> elicitation_from_json(const std::string& text) {
  std::vector<ElicitationResult> out;
  try {
    const json doc = json::parse(text);
    for (const auto& b : doc.at("blocks")) {
      ElicitationResult r;
      r.block_id = b.at("block").get<std::string>();
      r.a = b.at("a").get<double>();
      r.b = b.at("b").get<double>();
      r.r = b.at("r").get<double>();
      r.c = b.at("c").get<double>();
      r.alpha = b.at("alpha").get<double>();
      r.num_draws = b.at("draws").get<int>();
      r.q_slab = b.at("q_slab").get<double>();
      r.q_spike = b.at("q_spike").get<double>();
      r.spike_not_smaller = !(r.r < 1.0);
      if (!(r.b > 0.0 && r.r > 0.0)) throw ConfigError("elicitation entry '" + r.block_id + "' has non-positive b or r");
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed elicitation file: ") + e.what());
  }
  return out;
}

void write_inclusion_table(const std::filesystem::path& path, const std::vector<QuantileFit>& fits) {
  auto out = open_output(path);
  out << "covariate,part,tau,inclusion_prob,selected\n";
  for (const auto& fit : fits) {
    for (const auto& row : fit.inclusion) {
      out << row.covariate << ',' << to_string(row.part) << ',' << tau_label(row.tau) << ','
          << format_double(row.inclusion_prob) << ',' << bool_cell(row.selected) << '\n';
    }
  }
}

void write_inclusion_table_wide(const std::filesystem::path& path, const std::vector<QuantileFit>& fits) {
  auto out = open_output(path);
  out << "covariate,part";
  for (const auto& fit : fits) out << ",tau=" << tau_label(fit.tau);
  out << '\n';
  if (fits.empty()) return;
  for (std::size_t r = 0; r < fits.front().inclusion.size(); ++r) {
    const auto& row = fits.front().inclusion[r];
    out << row.covariate << ',' << to_string(row.part);
    for (const auto& fit : fits) out << ',' << format_double(fit.inclusion.at(r).inclusion_prob);
    out << '\n';
  }
}

void write_effect_curves(const std::filesystem::path& path, const std::vector<QuantileFit>& fits) {
  auto out = open_output(path);
  out << "covariate,part,tau,x,mean,lo95,hi95\n";
  for (const auto& fit : fits) {
    for (const auto& c : fit.curves) {
      for (std::size_t g = 0; g < c.x.size(); ++g) {
        out << c.covariate << ',' << to_string(c.part) << ',' << tau_label(c.tau) << ',' << format_double(c.x[g])
            << ',' << format_double(c.mean[g]) << ',' << format_double(c.lower[g]) << ','
            << format_double(c.upper[g]) << '\n';
      }
    }
  }
}

void write_fitted_quantiles(const std::filesystem::path& path, const BuiltModel& model,
                            const std::vector<QuantileFit>& fits) {
  auto out = open_output(path);
  out << "row,tau,y,mean,lo95,hi95\n";
  for (const auto& fit : fits) {
    for (Eigen::Index i = 0; i < model.y.size(); ++i) {
      out << i << ',' << tau_label(fit.tau) << ',' << format_double(model.y(i)) << ','
          << format_double(fit.fitted.mean(i)) << ',' << format_double(fit.fitted.lower(i)) << ','
          << format_double(fit.fitted.upper(i)) << '\n';
    }
  }
}

std::vector<std::string> draws_columns(const BuiltModel& model) {
  std::vector<std::string> cols{"tau", "chain", "iteration"};
  PosteriorDraws empty;
  empty.blocks.resize(model.blocks.size());
  empty.mandatory.resize(0, model.mandatory_design.cols());
  for (auto& name : scalar_columns(model, empty).names) cols.push_back(std::move(name));
  for (const auto& block : model.blocks) {
    for (int k = 0; k < block.dimension(); ++k) cols.push_back(block.id + ".coef[" + std::to_string(k) + "]");
  }
  return cols;
}

void write_draws(const std::filesystem::path& path, const BuiltModel& model, const std::vector<QuantileFit>& fits) {
  auto out = open_output(path);
  const auto cols = draws_columns(model);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const auto& fit : fits) {
    for (const auto& chain : fit.chains) {
      const auto scalars = scalar_columns(model, chain);
      for (std::size_t d = 0; d < chain.size(); ++d) {
        out << tau_label(fit.tau) << ',' << chain.chain << ',' << chain.iterations[d];
        for (const auto& col : scalars.values) out << ',' << format_double(col[d]);
        for (const auto& trace : chain.blocks) {
          for (Eigen::Index k = 0; k < trace.coefficients.cols(); ++k) {
            out << ',' << format_double(trace.coefficients(static_cast<Eigen::Index>(d), k));
          }
        }
        out << '\n';
      }
    }
  }
}

namespace {

// Elicitation JSON in the output directory (or the configured file) is reused
// when it was produced for the same seed, data and block settings.
std::optional<std::vector<ElicitationResult>> reusable_elicitation(const RunConfig& cfg, const BuiltModel& model,
                                                                   const std::string& checksum, const LogSink& log) {
  std::filesystem::path path = cfg.output / "elicitation.json";
  const bool explicit_file = cfg.elicitation_file.has_value();
  if (explicit_file) path = *cfg.elicitation_file;
  if (!std::filesystem::exists(path)) {
    if (explicit_file) throw ConfigError("elicitation file " + path.string() + " does not exist");
    return std::nullopt;
  }
  const std::string text = read_text(path);
  auto results = elicitation_from_json(text);
  if (!explicit_file) {
    const json doc = json::parse(text);
    if (doc.value("seed", std::uint64_t{0}) != cfg.model.sampler.seed || doc.value("data_checksum", "") != checksum) {
      emit(log, "existing elicitation.json belongs to another seed or data set; re-eliciting");
      return std::nullopt;
    }
    for (const auto& block : model.blocks) {
      if (!block.selectable) continue;
      const auto it = std::find_if(results.begin(), results.end(),
                                   [&](const ElicitationResult& r) { return r.block_id == block.id; });
      if (it == results.end() || it->a != block.hyper.a || it->c != block.hyper.c ||
          it->alpha != block.hyper.alpha || it->num_draws != cfg.model.elicitation_draws) {
        emit(log, "existing elicitation.json does not match the model; re-eliciting");
        return std::nullopt;
      }
    }
  }
  emit(log, "reusing elicitation from " + path.string());
  return results;
}

json manifest_json(const RunConfig& cfg, const FitResult& partial, const std::vector<ElicitationResult>& elicitation,
                   const std::string& checksum, std::size_t rows, std::size_t dropped, const json& timings,
                   const std::string& status) {
  const auto& spec = cfg.model;
  json blocks = json::array();
  for (std::size_t j = 0; j < partial.model.blocks.size(); ++j) {
    const auto& b = partial.model.blocks[j];
    json item{{"id", b.id}, {"covariate", b.covariate}, {"part", std::string(to_string(b.part()))},
              {"dimension", b.dimension()}, {"prior_rank", b.prior_rank()}, {"selectable", b.selectable}};
    const auto it = std::find_if(elicitation.begin(), elicitation.end(),
                                 [&](const ElicitationResult& r) { return r.block_id == b.id; });
    if (it != elicitation.end()) {
      item["b"] = it->b;
      item["r"] = it->r;
      item["elicitation_seed"] = elicitation_seed(spec.sampler.seed, j);
    }
    blocks.push_back(std::move(item));
  }
  json chains = json::array();
  for (std::size_t q = 0; q < spec.quantiles.size(); ++q) {
    for (int c = 0; c < spec.sampler.num_chains; ++c) {
      chains.push_back({{"tau", spec.quantiles[q]}, {"chain", c}, {"seed", chain_seed(spec.sampler.seed, q, c)}});
    }
  }
  json standardization = json::object();
  for (const auto& [name, entry] : partial.model.standardization) {
    standardization[name] = {{"min", entry.min}, {"max", entry.max}};
  }
  return json{{"schema_version", 1},
              {"software", {{"name", "staq"}, {"version", STAQ_VERSION}}},
              {"status", status},
              {"config", json::parse(config_to_json(cfg))},
              {"data", {{"path", cfg.data.string()}, {"checksum_fnv1a64", checksum}, {"rows_used", rows},
                        {"rows_dropped", dropped}}},
              {"standardization", standardization},
              {"mandatory_columns", partial.model.mandatory_names},
              {"blocks", blocks},
              {"seeds", {{"base", spec.sampler.seed}, {"chains", chains}}},
              {"draws_columns", draws_columns(partial.model)},
              {"timings_seconds", timings}};
}

json diagnostics_json(const FitResult& result) {
  json quantiles = json::array();
  for (const auto& fit : result.fits) {
    json scalars = json::array();
    for (const auto& d : fit.diagnostics) {
      json item{{"name", d.name}, {"mean", d.mean}, {"ess", d.ess}};
      item["rhat"] = d.rhat ? json(*d.rhat) : json(nullptr);
      scalars.push_back(std::move(item));
    }
    std::size_t draws = 0;
    for (const auto& c : fit.chains) draws += c.size();
    quantiles.push_back({{"tau", fit.tau},
                         {"chains", fit.chains.size()},
                         {"stored_draws", draws},
                         {"below_fraction", fit.below_fraction},
                         {"pinball", fit.pinball},
                         {"scalars", scalars}});
  }
  // Fitted quantiles should increase with tau; crossings are reported only.
  json crossings = json::array();
  for (std::size_t q = 1; q < result.fits.size(); ++q) {
    const auto& lo = result.fits[q - 1].fitted.mean;
    const auto& hi = result.fits[q].fitted.mean;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) count += hi(i) < lo(i) ? 1 : 0;
    crossings.push_back({{"lower_tau", result.fits[q - 1].tau}, {"upper_tau", result.fits[q].tau},
                         {"rows_crossing", count}, {"mean_difference", (hi - lo).mean()}});
  }
  return json{{"schema_version", 1}, {"quantiles", quantiles}, {"quantile_crossings", crossings}};
}

}  // namespace

FitResult run_fit(const RunConfig& cfg, const LogSink& log) {
  const auto& spec = cfg.model;
  json timings = json::object();
  auto stage = Clock::now();

  DataTable data = read_csv(cfg.data);
  const std::string checksum = file_checksum(cfg.data);
  const std::size_t dropped = drop_unused_missing(data, spec);
  if (dropped > 0) emit(log, "dropped " + std::to_string(dropped) + " rows with missing values");
  emit(log, "read " + std::to_string(data.num_rows()) + " rows from " + cfg.data.string());
  timings["read"] = seconds_since(stage);

  stage = Clock::now();
  FitResult shell;
  shell.model = build_blocks(data, spec);
  emit(log, "built " + std::to_string(shell.model.blocks.size()) + " effect blocks (" +
                std::to_string(shell.model.num_selectable()) + " selectable), " +
                std::to_string(shell.model.mandatory_design.cols()) + " mandatory columns");
  timings["build"] = seconds_since(stage);

  std::filesystem::create_directories(cfg.output);
  stage = Clock::now();
  auto reused = reusable_elicitation(cfg, shell.model, checksum, log);
  const std::vector<ElicitationResult> elicitation = reused ? *reused : elicit_blocks(shell.model, spec, log);
  if (!reused) write_text(cfg.output / "elicitation.json", elicitation_to_json(elicitation, spec.sampler.seed, checksum));
  apply_elicitation(shell.model, elicitation);
  timings["elicitation"] = seconds_since(stage);

  write_text(cfg.output / "manifest.json",
             manifest_json(cfg, shell, elicitation, checksum, data.num_rows(), dropped, timings, "running").dump(2));

  stage = Clock::now();
  FitResult result = fit_model(data, spec, cfg.threads, &elicitation, log);
  timings["sampling_and_summaries"] = seconds_since(stage);

  stage = Clock::now();
  write_inclusion_table(cfg.output / "inclusion_table.csv", result.fits);
  if (result.fits.size() > 1) {
    write_inclusion_table_wide(cfg.output / "inclusion_table_wide.csv", result.fits);
  } else {
    std::filesystem::remove(cfg.output / "inclusion_table_wide.csv");
  }
  write_effect_curves(cfg.output / "effect_curves.csv", result.fits);
  write_fitted_quantiles(cfg.output / "fitted_quantiles.csv", result.model, result.fits);
  write_draws(cfg.output / "draws.csv", result.model, result.fits);
  write_text(cfg.output / "diagnostics.json", diagnostics_json(result).dump(2));
  timings["write"] = seconds_since(stage);

  auto manifest = manifest_json(cfg, result, elicitation, checksum, data.num_rows(), dropped, timings, "complete");
  json files = json::object();
  for (const char* name : {"inclusion_table.csv", "inclusion_table_wide.csv", "effect_curves.csv",
                           "fitted_quantiles.csv", "draws.csv", "diagnostics.json", "elicitation.json"}) {
    if (std::filesystem::exists(cfg.output / name)) files[name] = file_checksum(cfg.output / name);
  }
  manifest["outputs_fnv1a64"] = files;
  write_text(cfg.output / "manifest.json", manifest.dump(2));
  emit(log, "results written to " + cfg.output.string());
  return result;
}

std::filesystem::path run_elicit(const RunConfig& cfg, const LogSink& log) {
  DataTable data = read_csv(cfg.data);
  const std::string checksum = file_checksum(cfg.data);
  drop_unused_missing(data, cfg.model);
  const BuiltModel model = build_blocks(data, cfg.model);
  const auto results = elicit_blocks(model, cfg.model, log);
  std::filesystem::create_directories(cfg.output);
  const auto path = cfg.output / "elicitation.json";
  write_text(path, elicitation_to_json(results, cfg.model.sampler.seed, checksum));
  return path;
}

}  // namespace staq
