#include "pdd/policy.hpp"

#include <cmath>
#include <fmt/format.h>

#include "pdd/error.hpp"

namespace pdd {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::dbpd: return "dbpd";
        case Variant::srd: return "srd";
        case Variant::smrd_inline: return "smrd-inline";
        case Variant::smrd_replay: return "smrd-replay";
        case Variant::analytic: return "analytic";
    }
    return "unknown";
}

std::string_view to_string(DecayKind k) noexcept {
    switch (k) {
        case DecayKind::power_law: return "power-law";
        case DecayKind::exponential: return "exponential";
        case DecayKind::logarithmic: return "logarithmic";
        case DecayKind::inverse_linear: return "inverse-linear";
        case DecayKind::sigmoid_complement: return "sigmoid-complement";
    }
    return "unknown";
}

std::string_view to_string(SrdGranularity g) noexcept {
    return g == SrdGranularity::epoch ? "epoch" : "batch";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::baseline, Variant::dbpd, Variant::srd, Variant::smrd_inline, Variant::smrd_replay,
                      Variant::analytic})
        if (to_string(v) == name) return v;
    throw ConfigError(fmt::format("unknown variant '{}'", name));
}

DecayKind parse_decay_kind(std::string_view name) {
    for (DecayKind k : {DecayKind::power_law, DecayKind::exponential, DecayKind::logarithmic,
                        DecayKind::inverse_linear, DecayKind::sigmoid_complement})
        if (to_string(k) == name) return k;
    throw ConfigError(fmt::format("unknown decay function '{}'", name));
}

SrdGranularity parse_srd_granularity(std::string_view name) {
    if (name == "epoch") return SrdGranularity::epoch;
    if (name == "batch") return SrdGranularity::batch;
    throw ConfigError(fmt::format("unknown srd granularity '{}'", name));
}

bool is_model_free(Variant v) noexcept {
    return v == Variant::srd || v == Variant::smrd_replay || v == Variant::analytic;
}

void DropoutPolicy::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (variant != Variant::baseline && revision_epochs >= epochs)
        throw ConfigError(fmt::format("revision epochs ({}) must be fewer than total epochs ({})", revision_epochs,
                                      epochs));

    const bool difficulty = variant == Variant::dbpd || variant == Variant::smrd_inline;
    auto forbid = [&](bool present, std::string_view field) {
        if (present) throw ConfigError(fmt::format("field '{}' does not apply to variant {}", field, to_string(variant)));
    };
    forbid(tau.has_value() && !difficulty, "tau");
    forbid(loss_threshold.has_value() && !difficulty, "loss_threshold");
    forbid(gamma.has_value() && variant != Variant::srd, "gamma");
    forbid((decay.has_value() || alpha.has_value()) && variant != Variant::analytic, "decay/alpha");
    forbid(replay.has_value() && variant != Variant::smrd_replay, "schedule");

    switch (variant) {
        case Variant::baseline:
            break;
        case Variant::dbpd:
        case Variant::smrd_inline:
            if (tau.has_value() == loss_threshold.has_value())
                throw ConfigError(fmt::format("variant {} needs exactly one of tau or loss_threshold", to_string(variant)));
            if (tau && !(*tau >= 0.0 && *tau <= 1.0)) throw ConfigError("tau must be in [0, 1]");
            if (loss_threshold && !(*loss_threshold >= 0.0)) throw ConfigError("loss_threshold must be >= 0");
            break;
        case Variant::srd:
            if (!gamma) throw ConfigError("variant srd needs gamma");
            if (!(*gamma > 0.0 && *gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
            break;
        case Variant::analytic:
            if (!decay || !alpha) throw ConfigError("variant analytic needs decay and alpha");
            if (!(*alpha > 0.0) || !std::isfinite(*alpha)) throw ConfigError("alpha must be > 0");
            break;
        case Variant::smrd_replay:
            if (!replay) throw ConfigError("variant smrd-replay needs a schedule");
            replay->validate();
            if (replay->epochs != epochs)
                throw ConfigError(fmt::format("schedule covers {} epochs, run has {}", replay->epochs, epochs));
            break;
    }
}

std::size_t round_half_up(double x) noexcept {
    return x <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(x + 0.5));
}

double srd_fraction(double gamma, std::size_t epoch, std::size_t epochs, std::size_t revision_epochs) {
    if (epoch < 1 || epoch > epochs) throw ContractViolation(fmt::format("epoch {} outside [1, {}]", epoch, epochs));
    if (epoch + revision_epochs > epochs) return 1.0;
    return std::pow(gamma, static_cast<double>(epoch - 1));
}

double srd_effective_epochs_closed_form(double gamma, std::size_t epochs, std::size_t revision_epochs) {
    if (revision_epochs > epochs) throw ContractViolation("revision epochs exceed total epochs");
    const std::size_t dropout_epochs = epochs - revision_epochs;
    double sum = 0.0;
    double term = 1.0;
    for (std::size_t e = 0; e < dropout_epochs; ++e) {
        sum += term;
        term *= gamma;
    }
    return static_cast<double>(revision_epochs) + sum;
}

double decay_value(DecayKind kind, double alpha, double x) {
    switch (kind) {
        case DecayKind::power_law: return 1.0 / std::pow(x, alpha);
        case DecayKind::exponential: return std::exp(-alpha * x);
        case DecayKind::logarithmic:
            if (x + alpha <= 1.0)
                throw ConfigError(fmt::format("logarithmic decay undefined for x + alpha = {} <= 1", x + alpha));
            return 1.0 / std::log(x + alpha);
        case DecayKind::inverse_linear: return 1.0 / (x + alpha);
        case DecayKind::sigmoid_complement: return 1.0 / (1.0 + std::exp(alpha * x));
    }
    return 0.0;
}

std::size_t decay_count(DecayKind kind, double alpha, std::size_t epoch, std::size_t dataset_size,
                        std::size_t epochs) {
    if (epoch < 1 || epoch > epochs) throw ContractViolation(fmt::format("epoch {} outside [1, {}]", epoch, epochs));
    if (!(alpha > 0.0)) throw ContractViolation("alpha must be > 0");
    if (epoch == epochs) return dataset_size;
    const double ratio = decay_value(kind, alpha, static_cast<double>(epoch)) / decay_value(kind, alpha, 1.0);
    return std::min(dataset_size, round_half_up(static_cast<double>(dataset_size) * ratio));
}

ScheduleRecord analytic_schedule(DecayKind kind, double alpha, std::size_t dataset_size, std::size_t epochs,
                                 std::size_t revision_epochs) {
    ScheduleRecord rec{dataset_size, epochs, {}};
    rec.entries.reserve(epochs);
    for (std::size_t e = 1; e <= epochs; ++e) {
        const bool revision = e + revision_epochs > epochs;
        rec.entries.push_back({e, revision ? dataset_size : decay_count(kind, alpha, e, dataset_size, epochs)});
    }
    return rec;
}

std::size_t smrd_count_model(double tau, double a, double b, std::size_t dataset_size) {
    return round_half_up(static_cast<double>(dataset_size) * beta_cdf(tau, a, b));
}

}  // namespace pdd
