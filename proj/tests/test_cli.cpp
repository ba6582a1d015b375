#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssb/cli.hpp"
#include "ssb/errors.hpp"

using namespace ssb;
using namespace ssb::cli;
using nlohmann::json;

namespace {

std::string config_error_path(const json& tree) {
  try {
    load_config(tree);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "";
}

std::string plan_error_path(const json& tree) {
  try {
    validate(load_config(tree));
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("quantities with units") {
    CHECK(parse_quantity("1 mm", Dimension::length, "p.L") == doctest::Approx(1e-3));
    CHECK(parse_quantity("2 angstrom", Dimension::length, "p.l") == doctest::Approx(2e-10));
    CHECK(parse_quantity("1 eV", Dimension::energy, "p.E") == doctest::Approx(1.602176634e-19));
    CHECK(parse_quantity("1 m_p", Dimension::mass, "p.m") == doctest::Approx(1.67262192369e-27));
    CHECK(parse_quantity("3 km/s", Dimension::speed, "p.c") == doctest::Approx(3e3));
    CHECK(parse_quantity(2.5, Dimension::length, "p.L") == 2.5);
    CHECK_THROWS_AS(parse_quantity("1 eV", Dimension::length, "p.L"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("1 parsec", Dimension::length, "p.L"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("abc", Dimension::length, "p.L"), ConfigError);
    try {
      parse_quantity("1 eV", Dimension::length, "parameters.L");
    } catch (const ConfigError& e) {
      CHECK(e.key_path() == "parameters.L");
    }
  }

  TEST_CASE("bad configs name the failing key") {
    CHECK(config_error_path(json::object()) == "experiment");
    CHECK(config_error_path({{"experiment", "warp"}}) == "experiment");
    CHECK(config_error_path({{"experiment", "doublet"}, {"parameters", {{"bogus", 1}}}}) ==
          "parameters.bogus");
    CHECK(config_error_path({{"experiment", "doublet"}, {"extra", 1}}) == "extra");
    CHECK(config_error_path({{"experiment", "classical"}, {"parameters", {{"n_traj", "many"}}}}) ==
          "parameters.n_traj");
    CHECK(plan_error_path({{"experiment", "classical"}, {"parameters", {{"temperature", -1.0}}}}) ==
          "parameters.temperature");
    CHECK(plan_error_path({{"experiment", "histories"},
                           {"parameters", {{"family", "spectral"}, {"members", 4}, {"n_times", 20}}}}) ==
          "parameters.n_times");
  }

  TEST_CASE("echo reloads to the same config and hash") {
    const json tree = {{"experiment", "estimates"},
                       {"seed", 7},
                       {"parameters", {{"L", "2 mm"}, {"E", "0.5 eV"}}}};
    const auto c = load_config(tree);
    CHECK(c.parameters.at("L").get<double>() == doctest::Approx(2e-3));
    const auto again = load_config(echo(c));
    CHECK(echo(again) == echo(c));
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    auto other = c;
    other.seed = 8;
    CHECK(config_hash(other) != config_hash(c));
    auto moved = c;
    moved.output_dir = "/tmp/elsewhere";
    CHECK(config_hash(moved) == config_hash(c));
    CHECK(load_config(json{{"config", echo(c)}, {"version", kVersion}}).seed == 7);
  }

  TEST_CASE("dry run reports cost without computing") {
    const auto report = validate(load_config({{"experiment", "lattice"}}));
    CHECK(report.at("experiment") == "lattice");
    CHECK(report.at("cost").contains("spin_flips"));
    CHECK(report.at("config_hash").get<std::string>().size() == 16);
  }

  TEST_CASE("table rendering") {
    ResultTable t{"demo", {{"x", std::vector<double>{0.1, 2.0}}, {"label", std::vector<std::string>{"a", "b"}}}};
    CHECK(t.rows() == 2);
    const auto csv = render_csv(t, "0123456789abcdef");
    CHECK(csv == render_csv(t, "0123456789abcdef"));
    CHECK(csv.rfind("# config_hash: 0123456789abcdef\n", 0) == 0);
    CHECK(csv.find("x,label\n") != std::string::npos);
    CHECK(csv.find("0.10000000000000001,a\n") != std::string::npos);
    CHECK(t.columns[0].type() == "float64");
    t.columns.push_back({"n", std::vector<std::int64_t>{1}});
    CHECK_THROWS_AS(t.rows(), ShapeError);
  }

  TEST_CASE("estimates run writes deterministic outputs") {
    const auto dir = std::filesystem::temp_directory_path() / "ssb_cli_unit";
    std::filesystem::remove_all(dir);
    auto c = load_config({{"experiment", "estimates"}, {"output_dir", dir.string()}});
    const auto result = run(c);
    REQUIRE_FALSE(result.tables.empty());
    const auto files = write_outputs(c, result);
    REQUIRE_FALSE(files.empty());
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(slurp(f));
    const auto files2 = write_outputs(c, run(c));
    for (std::size_t i = 0; i < files2.size(); ++i)
      if (files2[i].string().find(".meta.json") == std::string::npos) CHECK(slurp(files2[i]) == first[i]);
    const auto record = json::parse(slurp(dir / "estimates.json"));
    CHECK(record.at("config_hash") == config_hash(c));
    const double density = record.at("data").at("action_density").get<double>();
    CHECK(density > 1e-4);
    CHECK(density < 1e-2);
    std::filesystem::remove_all(dir);
  }
}
