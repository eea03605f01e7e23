#include "staq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "staq/errors.hpp"

namespace staq {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": missing or of the wrong type");
  }
}

template <typename T>
void maybe(const json& obj, const std::string& key, const std::string& where, T& target) {
  if (obj.contains(key)) target = get<T>(obj, key, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"data", "output", "model", "quantiles", "hyper", "sampler", "elicitation", "threads"});

  RunConfig cfg;
  cfg.data = resolve(base_dir, get<std::string>(doc, "data", "config"));
  cfg.output = resolve(base_dir, doc.contains("output") ? get<std::string>(doc, "output", "config") : "staq-out");
  maybe(doc, "threads", "config", cfg.threads);
  if (cfg.threads < 0) throw ConfigError("config.threads must be non-negative");

  auto& spec = cfg.model;
  if (!doc.contains("model")) throw ConfigError("config: missing 'model' section");
  const json& model = doc.at("model");
  check_keys(model, "model", {"response", "covariates", "mandatory", "basis", "mandatory_precision"});
  spec.response = get<std::string>(model, "response", "model");
  if (model.contains("covariates")) {
    const auto& list = model.at("covariates");
    if (!list.is_array()) throw ConfigError("model.covariates: expected an array");
    for (const auto& item : list) {
      const std::string where = "model.covariates[]";
      check_keys(item, where, {"name", "kind", "selectable", "c", "alpha"});
      CovariateSpec cov;
      cov.name = get<std::string>(item, "name", where);
      if (item.contains("kind")) cov.kind = effect_kind_from_string(get<std::string>(item, "kind", where));
      maybe(item, "selectable", where, cov.selectable);
      if (item.contains("c")) cov.c = get<double>(item, "c", where);
      if (item.contains("alpha")) cov.alpha = get<double>(item, "alpha", where);
      spec.covariates.push_back(std::move(cov));
    }
  }
  if (model.contains("mandatory")) {
    const auto& list = model.at("mandatory");
    if (!list.is_array()) throw ConfigError("model.mandatory: expected an array");
    for (const auto& item : list) {
      const std::string where = "model.mandatory[]";
      check_keys(item, where, {"name", "reference"});
      spec.mandatory_terms.push_back({get<std::string>(item, "name", where), get<std::string>(item, "reference", where)});
    }
  }
  if (model.contains("basis")) {
    const auto& basis = model.at("basis");
    check_keys(basis, "model.basis", {"degree", "knots"});
    maybe(basis, "degree", "model.basis", spec.basis.degree);
    maybe(basis, "knots", "model.basis", spec.basis.num_knots);
  }
  maybe(model, "mandatory_precision", "model", spec.mandatory_precision);

  if (doc.contains("quantiles")) spec.quantiles = get<std::vector<double>>(doc, "quantiles", "config");

  if (doc.contains("hyper")) {
    const auto& h = doc.at("hyper");
    check_keys(h, "hyper", {"a", "a0", "b0", "alpha", "c", "a_delta", "b_delta"});
    maybe(h, "a", "hyper", spec.hyper.a);
    maybe(h, "a0", "hyper", spec.hyper.a0);
    maybe(h, "b0", "hyper", spec.hyper.b0);
    maybe(h, "alpha", "hyper", spec.hyper.alpha);
    maybe(h, "c", "hyper", spec.hyper.c);
    maybe(h, "a_delta", "hyper", spec.hyper.a_delta);
    maybe(h, "b_delta", "hyper", spec.hyper.b_delta);
  }

  if (doc.contains("sampler")) {
    const auto& s = doc.at("sampler");
    check_keys(s, "sampler", {"iterations", "burn_in", "thin", "chains", "seed"});
    maybe(s, "iterations", "sampler", spec.sampler.iterations);
    maybe(s, "burn_in", "sampler", spec.sampler.burn_in);
    maybe(s, "thin", "sampler", spec.sampler.thin);
    maybe(s, "chains", "sampler", spec.sampler.num_chains);
    maybe(s, "seed", "sampler", spec.sampler.seed);
  }

  if (doc.contains("elicitation")) {
    const auto& e = doc.at("elicitation");
    check_keys(e, "elicitation", {"draws", "file"});
    maybe(e, "draws", "elicitation", spec.elicitation_draws);
    if (e.contains("file")) cfg.elicitation_file = resolve(base_dir, get<std::string>(e, "file", "elicitation"));
  }

  spec.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const RunConfig& cfg) {
  const auto& spec = cfg.model;
  json covariates = json::array();
  for (const auto& c : spec.covariates) {
    json item{{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"selectable", c.selectable}};
    if (c.c) item["c"] = *c.c;
    if (c.alpha) item["alpha"] = *c.alpha;
    covariates.push_back(std::move(item));
  }
  json mandatory = json::array();
  for (const auto& t : spec.mandatory_terms) mandatory.push_back({{"name", t.name}, {"reference", t.reference}});

  json doc{
      {"data", cfg.data.string()},
      {"output", cfg.output.string()},
      {"threads", cfg.threads},
      {"model",
       {{"response", spec.response},
        {"covariates", covariates},
        {"mandatory", mandatory},
        {"basis", {{"degree", spec.basis.degree}, {"knots", spec.basis.num_knots}}},
        {"mandatory_precision", spec.mandatory_precision}}},
      {"quantiles", spec.quantiles},
      {"hyper",
       {{"a", spec.hyper.a},
        {"a0", spec.hyper.a0},
        {"b0", spec.hyper.b0},
        {"alpha", spec.hyper.alpha},
        {"c", spec.hyper.c},
        {"a_delta", spec.hyper.a_delta},
        {"b_delta", spec.hyper.b_delta}}},
      {"sampler",
       {{"iterations", spec.sampler.iterations},
        {"burn_in", spec.sampler.burn_in},
        {"thin", spec.sampler.thin},
        {"chains", spec.sampler.num_chains},
        {"seed", spec.sampler.seed}}},
      {"elicitation", {{"draws", spec.elicitation_draws}}},
  };
  if (cfg.elicitation_file) doc["elicitation"]["file"] = cfg.elicitation_file->string();
  return doc.dump(2);
}

}  // namespace staq
