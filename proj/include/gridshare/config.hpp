#pragma once

#include "gridshare/drs.hpp"
#include "gridshare/environment.hpp"
#include "gridshare/network.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridshare {

/// Invalid or inconsistent configuration; `field()` names the offending key
/// as a dotted path, e.g. "generation.means".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Algorithm { Drs, DrsAdjusted, MaNsdrs, MaNsdrsAdjusted, BanSaP };

std::optional<Algorithm> parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);
bool uses_adjustment(Algorithm a);
bool uses_ensemble(Algorithm a);

struct GraphSource {
    std::size_t nodes = 0;                       // for edge lists
    std::vector<Edge> edges;
    std::optional<std::vector<Point2>> positions;
    double threshold = 0.0;

    NetworkGraph build() const;
};

struct DemandSpec {
    DemandKind kind = DemandKind::Balanced;
    std::vector<double> values;                 // explicit constant demands
    std::optional<std::filesystem::path> file;  // explicit `t,node,demand` table
};

struct DiscountSpec {
    NodeId i = 0;
    NodeId j = 0;
    double factor = 1.0;
};

/// Optional overrides of the per-agent problem constants. Anything left
/// unset is derived from the box, demand and generation configuration.
struct ConstantOverrides {
    std::optional<double> loss_bound;        // F
    std::optional<double> constraint_bound;  // G
    std::optional<double> lipschitz;         // L
    std::optional<double> outer_radius;      // R
    std::optional<double> inner_radius;      // r
    std::optional<std::vector<double>> box_upper;  // x_max per node
};

struct AlgorithmSettings {
    Algorithm algorithm = Algorithm::Drs;
    std::size_t horizon = 1000;
    std::uint64_t seed = 1;
    double path_length = 0.0;  // P_T estimate for the base schedule (0 = stationary)
    AdjustMode adjust_mode = AdjustMode::Proportional;
    bool constant_delta = false;           // ensemble: freeze delta at its horizon value
    std::optional<double> meta_rate;       // ensemble learning-rate override
    std::optional<std::size_t> experts;    // ensemble size override
    double bansap_freeze = 0.5;            // baseline: freeze the schedule at this fraction of T
};

struct OutputSettings {
    std::filesystem::path dir = "out";
    std::string records = "records.csv";
    std::string summary = "summary.json";
    std::string series = "series.csv";
    std::string comparators = "comparators.csv";
    bool with_oracle = false;
    double oracle_tolerance = 1e-6;
    std::size_t satisfaction_window = 1000;
};

struct RunConfig {
    GraphSource graph;
    GenerationSpec generation;
    DemandSpec demand;
    std::vector<DiscountSpec> discounts;
    AlgorithmSettings algorithm;
    ConstantOverrides constants;
    OutputSettings output;
};

/// Parses the JSON sections {graph, generation, demand, algorithm,
/// constants, output}. Relative file paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks (node counts agree, horizon >= 1, ...). Throws ConfigError.
void validate(const RunConfig& config);

}  // namespace gridshare
