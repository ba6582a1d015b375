#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

namespace ssb::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class Experiment { spectrum, doublet, histories, classical, lattice, sigma, estimates };

std::string to_string(Experiment e);

// Physical dimension of a configuration value.  Natural-unit parameters are
// dimensionless; the estimates experiment takes SI quantities with unit suffixes.
enum class Dimension { none, length, energy, mass, time, speed };

// "1 mm" -> 1e-3 for Dimension::length.  Plain numbers are taken as SI.
double parse_quantity(const nlohmann::json& value, Dimension dim, const std::string& key_path);

struct ExperimentConfig {
  Experiment experiment = Experiment::spectrum;
  nlohmann::json parameters;  // every key resolved: defaults filled, units converted
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};

// Accepts a config tree or a metadata block carrying one under "config".
// Throws ConfigError naming the failing key path.
ExperimentConfig load_config(const nlohmann::json& tree);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Config echo: re-loads into an identical ExperimentConfig.
nlohmann::json echo(const ExperimentConfig& config);

// FNV-1a over the echo without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Dry-run report: resolved parameters and cost estimates.  Runs the same
// validation as run() and nothing else.
nlohmann::json validate(const ExperimentConfig& config);

struct Column {
  std::string name;
  std::variant<std::vector<double>, std::vector<std::int64_t>, std::vector<std::string>> data;
  std::size_t size() const;
  std::string type() const;
};

struct ResultTable {
  std::string name;
  std::vector<Column> columns;
  std::size_t rows() const;  // ShapeError on unequal column lengths
};

struct ResultRecord {
  std::string name;
  nlohmann::json data;
};

struct RunResult {
  std::vector<ResultTable> tables;
  std::vector<ResultRecord> records;
  std::vector<std::string> summary;  // human-readable lines
};

RunResult run(const ExperimentConfig& config);

// Writes <name>.csv / <name>.json plus one <name>.meta.json per file.  Data
// files are deterministic; timestamps live only in the metadata files.
std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& config,
                                                 const RunResult& result);

std::string render_csv(const ResultTable& table, const std::string& hash);

// Entry point used by the ssb executable; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace ssb::cli
