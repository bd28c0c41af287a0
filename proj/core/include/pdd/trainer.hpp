#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pdd/data.hpp"
#include "pdd/mask.hpp"
#include "pdd/nn.hpp"
#include "pdd/policy.hpp"

namespace pdd {

struct RunConfig {
    DropoutPolicy policy;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
    OptimizerSettings optimizer;
    std::vector<std::size_t> hidden{128, 64};
    bool dry_run = false;

    std::size_t epochs() const noexcept { return policy.epochs; }
    std::size_t revision_epochs() const noexcept { return policy.revision_epochs; }

    /// Policy checks plus: batch size >= 1, R >= 1 for non-baseline training,
    /// dry runs only for model-free variants.
    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    std::size_t retained = 0;
    std::uint64_t backprop_cum = 0;
    std::optional<double> train_loss;  // mean over backpropagated samples
    double test_accuracy = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

struct RunMetrics {
    Variant variant = Variant::baseline;
    std::size_t dataset_size = 0;
    std::vector<EpochMetrics> epochs;
    std::uint64_t backprop_total = 0;
    std::vector<std::uint64_t> per_sample;
    double effective_epochs = 0.0;

    double final_accuracy() const noexcept { return epochs.empty() ? 0.0 : epochs.back().test_accuracy; }

    bool operator==(const RunMetrics&) const = default;
};

struct RunResult {
    RunMetrics metrics;
    ParameterSet params;
};

/// What the trainer decided for one batch, for observers and tests.
struct BatchEvent {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::size_t batch_size = 0;
    bool revision = false;
    /// Size of the confidence/loss mask from the same forward pass (dbpd and
    /// smrd-inline only).
    std::optional<std::size_t> difficulty_size;
    const BatchMask* mask = nullptr;
    const std::vector<std::size_t>* ids = nullptr;
};

using BatchObserver = std::function<void(const BatchEvent&)>;

/// The unified training loop. Epochs 1..E-R apply the policy's mask to each
/// batch (every batch still gets a full forward pass); the last R epochs train
/// on every sample. Empty masks skip the optimizer step entirely.
/// Throws ConfigError on invalid configuration and NumericalError on divergence.
RunResult run_training(const Dataset& train, const Dataset& test, const RunConfig& cfg,
                       const BatchObserver& observer = {});

struct DryRunResult {
    ScheduleRecord schedule;
    double effective_epochs = 0.0;
};

/// Simulates batching and mask sizes of a model-free variant without a model.
/// Retained counts equal those of a real run with the same config exactly.
DryRunResult dry_run_schedule(const RunConfig& cfg, std::size_t dataset_size);

/// Per-epoch retained counts of a dbpd run, for later smrd-replay.
ScheduleRecord record_dbpd_schedule(const RunMetrics& metrics);

/// Fraction of samples whose argmax logit equals the label.
double evaluate(const ParameterSet& params, const Dataset& test);

}  // namespace pdd
