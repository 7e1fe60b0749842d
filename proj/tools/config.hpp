#ifndef SSDDR_CLI_CONFIG_HPP
#define SSDDR_CLI_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssddr/datagen.hpp"
#include "ssddr/dataset.hpp"
#include "ssddr/model.hpp"
#include "ssddr/optimizer.hpp"

namespace ssddr::cli {

struct TuneSettings {
    std::vector<double> grid;  // empty: default 20-point log grid
    bool parallel = true;
};

struct DecisionSettings {
    std::vector<double> delta_grid;  // empty: default 101-point grid
    double delta = 0.1;              // band half-width for `decide`
    double ltu_threshold = 12.0;
    int importance_top_n = 5;
};

// Parsed and validated contents of the JSON run configuration.
struct RunConfig {
    DataSchema schema;
    Family family = Family::Gamma;
    std::optional<SplineConfig> spline;
    FitConfig fit;
    TuneSettings tune;
    DecisionSettings decision;
    DGPConfig datagen;
};

// Load and validate; collects every problem found and reports them all in
// one error, not just the first.
RunConfig load_config(const std::filesystem::path& path);

// Model structure implied by the config and the resolved feature list of a
// loaded dataset (linear features = all features minus the smooth one).
ModelSpec make_spec(const RunConfig& config, const DataSchema& resolved);

// "start:stop:step" -> inclusive grid (used by --delta-grid).
std::vector<double> parse_grid_spec(const std::string& text);

}  // namespace ssddr::cli

#endif
