#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdd/special.hpp"

namespace pdd {

enum class Variant { baseline, dbpd, srd, smrd_inline, smrd_replay, analytic };

enum class DecayKind { power_law, exponential, logarithmic, inverse_linear, sigmoid_complement };

/// How SRD turns the fraction r into per-batch counts.
///  - epoch: K = round(r * N) per epoch, apportioned to batches by largest remainder.
///  - batch: k = floor(r * n) independently in every batch.
enum class SrdGranularity { epoch, batch };

std::string_view to_string(Variant v) noexcept;
std::string_view to_string(DecayKind k) noexcept;
std::string_view to_string(SrdGranularity g) noexcept;
/// Throw ConfigError on unknown names.
Variant parse_variant(std::string_view name);
DecayKind parse_decay_kind(std::string_view name);
SrdGranularity parse_srd_granularity(std::string_view name);

/// True for variants whose mask sizes do not depend on model state.
bool is_model_free(Variant v) noexcept;

struct ScheduleEntry {
    std::size_t epoch = 0;
    std::size_t retained = 0;
    bool operator==(const ScheduleEntry&) const = default;
};

/// Per-epoch retained-sample counts of a run.
struct ScheduleRecord {
    std::size_t dataset_size = 0;
    std::size_t epochs = 0;
    std::vector<ScheduleEntry> entries;

    /// Epochs 1..E ascending, retained <= N, last retained == N.
    /// Throws ConfigError describing the first violation.
    void validate() const;

    std::size_t total_retained() const noexcept;
    double effective_epochs() const noexcept;

    bool operator==(const ScheduleRecord&) const = default;
};

struct DropoutPolicy {
    Variant variant = Variant::baseline;
    std::optional<double> tau;               // dbpd, smrd-inline
    std::optional<double> gamma;             // srd
    std::optional<DecayKind> decay;          // analytic
    std::optional<double> alpha;             // analytic
    std::optional<ScheduleRecord> replay;    // smrd-replay
    std::optional<double> loss_threshold;    // dbpd / smrd-inline, replaces tau
    SrdGranularity srd_granularity = SrdGranularity::epoch;
    std::size_t epochs = 1;
    std::size_t revision_epochs = 1;

    /// Checks ranges and that exactly the active variant's fields are set.
    void validate() const;

    /// True when `epoch` (1-based) falls in the trailing full-data revision window.
    bool is_revision_epoch(std::size_t epoch) const noexcept {
        return epoch + revision_epochs > epochs;
    }
};

std::size_t round_half_up(double x) noexcept;

/// gamma^(epoch-1) for epoch <= E-R, 1 in the revision window.
double srd_fraction(double gamma, std::size_t epoch, std::size_t epochs, std::size_t revision_epochs);

/// R + sum_{e=1}^{E-R} gamma^(e-1): effective epochs of SRD at dataset
/// granularity, ignoring count rounding.
double srd_effective_epochs_closed_form(double gamma, std::size_t epochs, std::size_t revision_epochs);

/// Unnormalized decay h(x; alpha). Throws ConfigError when the logarithmic
/// kind leaves its domain (x + alpha <= 1).
double decay_value(DecayKind kind, double alpha, double x);

/// round(N * h(x)/h(1)) for x < E, N at x = E.
std::size_t decay_count(DecayKind kind, double alpha, std::size_t epoch, std::size_t dataset_size,
                        std::size_t epochs);

/// Full analytic schedule; the last R epochs retain N.
ScheduleRecord analytic_schedule(DecayKind kind, double alpha, std::size_t dataset_size, std::size_t epochs,
                                 std::size_t revision_epochs);

/// round(N * I_tau(a, b)).
std::size_t smrd_count_model(double tau, double a, double b, std::size_t dataset_size);

/// Schedule file text: header "epoch,retained", then "e,k" lines.
std::string format_schedule(const ScheduleRecord& rec);

/// Parses schedule text. When `expected_size` is given, retained counts above
/// it are rejected and the last entry must equal it; otherwise N is taken as
/// the largest retained count. Throws ParseError (with line number).
ScheduleRecord parse_schedule(std::string_view text, std::optional<std::size_t> expected_size = std::nullopt,
                              const std::string& source = "<schedule>");

void write_schedule(const ScheduleRecord& rec, const std::filesystem::path& path);
ScheduleRecord read_schedule(const std::filesystem::path& path,
                             std::optional<std::size_t> expected_size = std::nullopt);

}  // namespace pdd
