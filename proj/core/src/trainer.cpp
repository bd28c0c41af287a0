#include "pdd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "pdd/error.hpp"
#include "pdd/rng.hpp"
#include "pdd/selection.hpp"

namespace pdd {

void RunConfig::validate() const {
    policy.validate();
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    for (std::size_t w : hidden)
        if (w == 0) throw ConfigError("hidden widths must be positive");
    if (dry_run) {
        if (!is_model_free(policy.variant))
            throw ConfigError(fmt::format("dry run needs a model-free variant (srd, smrd-replay, analytic), got {}",
                                          to_string(policy.variant)));
    } else if (policy.variant != Variant::baseline && policy.revision_epochs < 1) {
        throw ConfigError("training runs need at least one revision epoch");
    }
}

namespace {

// Epoch-level retained count for model-free variants outside revision.
std::size_t epoch_target(const DropoutPolicy& policy, std::size_t epoch, std::size_t n) {
    switch (policy.variant) {
        case Variant::srd:
            return round_half_up(srd_fraction(*policy.gamma, epoch, policy.epochs, policy.revision_epochs) *
                                 static_cast<double>(n));
        case Variant::smrd_replay: return policy.replay->entries[epoch - 1].retained;
        case Variant::analytic: return decay_count(*policy.decay, *policy.alpha, epoch, n, policy.epochs);
        default: throw ContractViolation("epoch target requested for a model-dependent variant");
    }
}

// Per-batch counts for a model-free variant in a non-revision epoch.
std::vector<std::size_t> planned_counts(const DropoutPolicy& policy, std::size_t epoch, std::size_t n,
                                        std::span<const std::size_t> sizes) {
    if (policy.variant == Variant::srd && policy.srd_granularity == SrdGranularity::batch) {
        const double r = srd_fraction(*policy.gamma, epoch, policy.epochs, policy.revision_epochs);
        std::vector<std::size_t> ks;
        ks.reserve(sizes.size());
        for (std::size_t s : sizes) ks.push_back(random_k_count(s, r));
        return ks;
    }
    return apportion(epoch_target(policy, epoch, n), sizes);
}

void check_replay_size(const DropoutPolicy& policy, std::size_t n) {
    if (policy.variant == Variant::smrd_replay && policy.replay->dataset_size != n)
        throw ConfigError(fmt::format("schedule was recorded for N = {}, dataset has N = {}",
                                      policy.replay->dataset_size, n));
}

BatchMask difficulty_mask(const DropoutPolicy& policy, const ForwardResult& fwd, std::span<const int> labels) {
    if (policy.loss_threshold) return select_by_loss(per_sample_loss(fwd, labels), *policy.loss_threshold);
    return select_by_confidence(fwd.probabilities, labels, *policy.tau);
}

}  // namespace

double evaluate(const ParameterSet& params, const Dataset& test) {
    if (test.size() == 0) return 0.0;
    constexpr std::size_t chunk = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < test.size(); start += chunk) {
        const std::size_t rows = std::min(chunk, test.size() - start);
        Matrix block(rows, test.dims());
        for (std::size_t r = 0; r < rows; ++r) {
            auto src = test.features.row(start + r);
            std::copy(src.begin(), src.end(), block.row(r).begin());
        }
        const ForwardResult fwd = forward(params, block);
        for (std::size_t r = 0; r < rows; ++r)
            if (argmax(fwd.logits.row(r)) == static_cast<std::size_t>(test.labels[start + r])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

RunResult run_training(const Dataset& train, const Dataset& test, const RunConfig& cfg,
                       const BatchObserver& observer) {
    cfg.validate();
    if (cfg.dry_run) throw ConfigError("run_training called with a dry-run config; use dry_run_schedule");
    train.validate();
    test.validate();
    if (train.classes != test.classes)
        throw ConfigError(fmt::format("train has {} classes, test has {}", train.classes, test.classes));
    if (train.dims() != test.dims())
        throw ConfigError(fmt::format("train has {} features, test has {}", train.dims(), test.dims()));

    const DropoutPolicy& policy = cfg.policy;
    const std::size_t n = train.size();
    check_replay_size(policy, n);

    std::vector<std::size_t> widths{train.dims()};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(train.classes);

    RunResult result;
    result.params = ParameterSet::init(widths, cfg.seed);
    Optimizer optimizer(cfg.optimizer, result.params);

    RunMetrics& metrics = result.metrics;
    metrics.variant = policy.variant;
    metrics.dataset_size = n;
    metrics.per_sample.assign(n, 0);

    const auto sizes = batch_sizes(n, cfg.batch_size);

    for (std::size_t epoch = 1; epoch <= policy.epochs; ++epoch) {
        const auto plan = make_batch_plan(n, cfg.seed, epoch, cfg.batch_size);
        const auto batches = epoch_batches(train, plan);
        const bool revision = policy.variant != Variant::baseline && policy.is_revision_epoch(epoch);
        const bool full = policy.variant == Variant::baseline || revision;

        std::vector<std::size_t> counts;
        if (!full && is_model_free(policy.variant)) counts = planned_counts(policy, epoch, n, sizes);

        std::size_t retained = 0;
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Batch& batch = batches[b];
            const ForwardResult fwd = forward(result.params, batch.features);
            RngStream rng = make_stream(cfg.seed, {stream_tag::select, epoch, b});

            BatchMask mask;
            std::optional<std::size_t> difficulty_size;
            if (full) {
                mask = full_mask(batch.size());
            } else {
                switch (policy.variant) {
                    case Variant::dbpd:
                        mask = difficulty_mask(policy, fwd, batch.labels);
                        difficulty_size = mask.size();
                        break;
                    case Variant::smrd_inline: {
                        const BatchMask hard = difficulty_mask(policy, fwd, batch.labels);
                        difficulty_size = hard.size();
                        mask = select_random_matched(hard, batch.size(), rng);
                        if (mask.size() != hard.size())
                            throw ContractViolation("smrd-inline mask size diverged from difficulty mask");
                        break;
                    }
                    case Variant::srd:
                        if (policy.srd_granularity == SrdGranularity::batch) {
                            const double r = srd_fraction(*policy.gamma, epoch, policy.epochs, policy.revision_epochs);
                            mask = select_random_k(batch.size(), r, rng);
                        } else {
                            mask = select_by_count(batch.size(), counts[b], rng);
                            mask.origin = MaskOrigin::random_k;
                        }
                        break;
                    case Variant::smrd_replay:
                    case Variant::analytic:
                        mask = select_by_count(batch.size(), counts[b], rng);
                        break;
                    case Variant::baseline:
                        break;
                }
            }

            if (observer)
                observer(BatchEvent{epoch, b, batch.size(), revision, difficulty_size, &mask, &batch.ids});
            if (mask.empty()) continue;

            LossAndGrad lg = loss_and_grad(result.params, fwd, batch.labels, mask);
            if (!std::isfinite(lg.loss)) throw NumericalError("non-finite loss", epoch, b + 1);
            try {
                optimizer.step(result.params, lg.grads);
            } catch (const NumericalError& e) {
                throw NumericalError(e.what(), epoch, b + 1);
            }

            retained += mask.size();
            loss_sum += lg.loss * static_cast<double>(mask.size());
            for (std::size_t i : mask.indices) ++metrics.per_sample[batch.ids[i]];
        }
        optimizer.end_epoch();

        metrics.backprop_total += retained;
        EpochMetrics em;
        em.epoch = epoch;
        em.retained = retained;
        em.backprop_cum = metrics.backprop_total;
        if (retained > 0) em.train_loss = loss_sum / static_cast<double>(retained);
        em.test_accuracy = evaluate(result.params, test);
        metrics.epochs.push_back(em);
    }
    metrics.effective_epochs = static_cast<double>(metrics.backprop_total) / static_cast<double>(n);
    return result;
}

DryRunResult dry_run_schedule(const RunConfig& cfg, std::size_t dataset_size) {
    RunConfig checked = cfg;
    checked.dry_run = true;
    checked.validate();
    if (dataset_size == 0) throw ConfigError("dataset size must be positive");
    const DropoutPolicy& policy = cfg.policy;
    check_replay_size(policy, dataset_size);

    const auto sizes = batch_sizes(dataset_size, cfg.batch_size);
    DryRunResult out;
    out.schedule.dataset_size = dataset_size;
    out.schedule.epochs = policy.epochs;
    std::size_t total = 0;
    for (std::size_t epoch = 1; epoch <= policy.epochs; ++epoch) {
        std::size_t retained = dataset_size;
        if (!policy.is_revision_epoch(epoch)) {
            const auto counts = planned_counts(policy, epoch, dataset_size, sizes);
            retained = 0;
            for (std::size_t k : counts) retained += k;
        }
        out.schedule.entries.push_back({epoch, retained});
        total += retained;
    }
    out.effective_epochs = static_cast<double>(total) / static_cast<double>(dataset_size);
    return out;
}

ScheduleRecord record_dbpd_schedule(const RunMetrics& metrics) {
    if (metrics.variant != Variant::dbpd)
        throw ConfigError(fmt::format("schedule recording needs a dbpd run, got {}", to_string(metrics.variant)));
    ScheduleRecord rec{metrics.dataset_size, metrics.epochs.size(), {}};
    for (const auto& e : metrics.epochs) rec.entries.push_back({e.epoch, e.retained});
    return rec;
}

}  // namespace pdd
