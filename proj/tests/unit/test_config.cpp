#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "staq/config.hpp"
#include "staq/data.hpp"
#include "staq/errors.hpp"

using namespace staq;

namespace {

const char* kFull = R"({
  "data": "data/no2.csv",
  "output": "runs/a",
  "threads": 2,
  "model": {
    "response": "no2",
    "covariates": [
      {"name": "traffic"},
      {"name": "o3", "kind": "nonlinear", "c": 0.2},
      {"name": "wind", "kind": "linear", "selectable": false, "alpha": 0.05}
    ],
    "mandatory": [{"name": "year", "reference": "2016"}],
    "basis": {"degree": 3, "knots": 20},
    "mandatory_precision": 1e-4
  },
  "quantiles": [0.5, 0.9],
  "hyper": {"a": 4, "alpha": 0.2, "c": 0.3, "a_delta": 0.01},
  "sampler": {"iterations": 3000, "burn_in": 500, "thin": 5, "chains": 3, "seed": 99},
  "elicitation": {"draws": 20000, "file": "elic.json"}
})";

}  // namespace

TEST_SUITE("cli-io") {
  TEST_CASE("full configuration parses with relative paths resolved") {
    const auto cfg = parse_config(kFull, "/base");
    CHECK(cfg.data == std::filesystem::path("/base/data/no2.csv"));
    CHECK(cfg.output == std::filesystem::path("/base/runs/a"));
    CHECK(cfg.threads == 2);
    REQUIRE(cfg.elicitation_file.has_value());
    CHECK(*cfg.elicitation_file == std::filesystem::path("/base/elic.json"));
    const auto& m = cfg.model;
    CHECK(m.response == "no2");
    REQUIRE(m.covariates.size() == 3);
    CHECK(m.covariates[0].kind == EffectKind::Decomposed);
    CHECK(m.covariates[1].kind == EffectKind::NonlinearOnly);
    CHECK(*m.covariates[1].c == 0.2);
    CHECK_FALSE(m.covariates[2].selectable);
    CHECK(*m.covariates[2].alpha == 0.05);
    CHECK(m.mandatory_terms[0].reference == "2016");
    CHECK(m.basis.num_knots == 20);
    CHECK(m.mandatory_precision == 1e-4);
    CHECK(m.quantiles == std::vector<double>{0.5, 0.9});
    CHECK(m.hyper.a == 4.0);
    CHECK(m.hyper.a0 == 1.0);
    CHECK(m.hyper.a_delta == 0.01);
    CHECK(m.hyper.b_delta == 0.001);
    CHECK(m.sampler.num_chains == 3);
    CHECK(m.sampler.seed == 99);
    CHECK(m.elicitation_draws == 20000);
  }

  TEST_CASE("defaults for a minimal configuration") {
    const auto cfg = parse_config(R"({"data": "/abs/d.csv", "model": {"response": "y"}})", "/base");
    CHECK(cfg.data == std::filesystem::path("/abs/d.csv"));
    CHECK(cfg.output == std::filesystem::path("/base/staq-out"));
    CHECK(cfg.model.quantiles == std::vector<double>{0.6, 0.8, 0.9});
    CHECK(cfg.model.sampler.iterations == 12000);
    CHECK(cfg.model.sampler.burn_in == 2000);
    CHECK(cfg.model.sampler.thin == 10);
    CHECK(cfg.model.hyper.a == 5.0);
    CHECK(cfg.model.hyper.alpha == 0.1);
    CHECK(cfg.model.hyper.c == 0.1);
    CHECK(cfg.model.elicitation_draws == 100000);
    CHECK_FALSE(cfg.elicitation_file.has_value());
  }

  TEST_CASE("canonical JSON round-trips") {
    const auto cfg = parse_config(kFull, "/base");
    const auto text = config_to_json(cfg);
    const auto back = parse_config(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.data == cfg.data);
    CHECK(back.model.covariates.size() == 3);
  }

  TEST_CASE("schema violations are config errors") {
    const std::string base = R"("data": "d.csv", "model": {"response": "y"})";
    CHECK_THROWS_AS(parse_config("{" + base + R"(, "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"data": "d.csv", "model": {"response": "y", "extra": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"data": "d.csv", "model": {"response": "y", "covariates": [{"name": "x", "knd": "linear"}]}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"data": "d.csv", "model": {"response": "y", "covariates": [{"name": "x", "kind": "cubic"}]}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("{" + base + R"(, "sampler": {"iterations": "many"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{" + base + R"(, "quantiles": [0.9, 0.5]})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{" + base + R"(, "hyper": {"alpha": 2}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{" + base + R"(, "threads": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"response": "y"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"data": "d.csv"})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  }

  TEST_CASE("CSV reading and writing") {
    std::istringstream in("y,x,year\n1.5,2,2016\n-3e-2,4.25,2017\n");
    const auto t = read_csv(in);
    CHECK(t.num_rows() == 2);
    CHECK(t.num_columns() == 3);
    CHECK(t.numeric("x") == std::vector<double>{2.0, 4.25});
    CHECK(t.numeric("y")[1] == -0.03);
    CHECK(t.column("year")[1] == "2017");
    CHECK_THROWS_AS(t.numeric("year2"), DataError);
    CHECK_THROWS_AS(t.numeric("nope"), DataError);

    std::ostringstream out;
    write_csv(out, t);
    std::istringstream again(out.str());
    const auto t2 = read_csv(again);
    CHECK(t2.names() == t.names());
    CHECK(t2.numeric("y") == t.numeric("y"));

    std::istringstream ragged("a,b\n1,2\n3\n");
    CHECK_THROWS_AS(read_csv(ragged), DataError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), DataError);
    std::istringstream dup("a,a\n1,2\n");
    CHECK_THROWS_AS(read_csv(dup), DataError);
    std::istringstream text("a\nabc\n");
    CHECK_THROWS_AS(read_csv(text).numeric("a"), DataError);
    CHECK_THROWS_AS(read_csv(std::filesystem::path("/nonexistent.csv")), DataError);
  }

  TEST_CASE("missing values and formatting") {
    std::istringstream in("y,x,z\n1,NA,5\n2,3,\n3,4,6\n");
    auto t = read_csv(in);
    CHECK(is_missing("NA"));
    CHECK(is_missing(""));
    CHECK_FALSE(is_missing("0"));
    CHECK(t.drop_missing({"y", "x"}) == 1);
    CHECK(t.num_rows() == 2);
    CHECK(t.numeric("y") == std::vector<double>{2.0, 3.0});
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("file checksum changes with the content") {
    const auto dir = std::filesystem::temp_directory_path() / "staq-unit-checksum";
    std::filesystem::create_directories(dir);
    {
      std::ofstream(dir / "a.txt") << "abc";
      std::ofstream(dir / "b.txt") << "abd";
    }
    CHECK(file_checksum(dir / "a.txt") == file_checksum(dir / "a.txt"));
    CHECK(file_checksum(dir / "a.txt") != file_checksum(dir / "b.txt"));
    CHECK(file_checksum(dir / "a.txt").size() == 16);
    std::filesystem::remove_all(dir);
  }
}
