#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdd/data.hpp"
#include "pdd/trainer.hpp"

namespace pdd::cli {

struct IdxSource {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
};

struct SyntheticSource {
    SyntheticParams params;
    std::size_t test_per_class = 0;
};

struct SweepAxes {
    std::vector<double> tau;
    std::vector<std::size_t> epochs;

    bool empty() const noexcept { return tau.empty() && epochs.empty(); }
};

/// A training experiment as read from a JSON config file. Relative paths are
/// resolved against the config file's directory.
struct ExperimentConfig {
    RunConfig run;
    std::optional<IdxSource> idx;
    std::optional<SyntheticSource> synthetic;
    std::filesystem::path output_dir;
    SweepAxes sweep;
    /// The parsed document, with the effective seed written back.
    nlohmann::ordered_json echo;
};

/// Parses and validates a config document. Unknown keys are rejected.
/// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir,
                                         std::optional<std::uint64_t> seed_override = std::nullopt);

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Train/test datasets for the configured source.
std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg);

/// PDD_SEED, when set. Throws ConfigError if it is not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace pdd::cli
