#pragma once

// JSON config files for the command-line tool.
//
// Top level:
//   schema_version  required, must equal kSchemaVersion
//   experiment      ExperimentConfig fields (train, sweep)
//   spectral        SpectralConfig fields (spectral)
//   sweep           axes for the Cartesian sweep (sweep)
// Unknown keys anywhere are rejected with their dotted path.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mosaic/engine.hpp"
#include "mosaic/spectral.hpp"

namespace mosaic {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NamedCorrelation {
    std::string name;
    CorrelationSpec spec;
};

struct SpectralConfig {
    SpectralSetup setup;  // setup.correlation is ignored; see correlations
    std::vector<NamedCorrelation> correlations;
    std::vector<std::size_t> fragments{1, 2, 4, 8, 16};
    std::vector<std::uint64_t> seeds;
    std::size_t rounds = 100;  // consensus recursion length
};

// An empty optional in `alpha` means IID.
struct SweepAxes {
    std::vector<std::size_t> fragments;
    std::vector<std::size_t> degree;
    std::vector<std::optional<double>> alpha;
    std::vector<std::uint64_t> seeds;
};

struct ConfigFile {
    std::optional<ExperimentConfig> experiment;
    std::optional<SpectralConfig> spectral;
    std::optional<SweepAxes> sweep;
};

// Throws ConfigError with the offending key path.
ConfigFile parse_config(const nlohmann::json& doc);
ConfigFile load_config(const std::filesystem::path& path);

// Replaces the master seed: experiment.seed, the first spectral seed (the
// list keeps its length and spacing) and the first sweep seed likewise.
void override_seed(ConfigFile& config, std::uint64_t seed);

// Fully resolved documents; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const SpectralConfig& config);
nlohmann::json to_json(const SweepAxes& axes);
nlohmann::json to_json(const ConfigFile& config);

}  // namespace mosaic
