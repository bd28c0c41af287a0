#include "pdd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <iterator>
#include <numeric>

#include "pdd/error.hpp"
#include "pdd/nn.hpp"

namespace pdd {

std::string_view to_string(MaskOrigin origin) noexcept {
    switch (origin) {
        case MaskOrigin::confidence: return "confidence";
        case MaskOrigin::misclassification: return "misclassification";
        case MaskOrigin::random_k: return "random-k";
        case MaskOrigin::random_matched: return "random-matched";
        case MaskOrigin::loss_threshold: return "loss-threshold";
        case MaskOrigin::full: return "full";
    }
    return "unknown";
}

bool BatchMask::valid_for(std::size_t batch_size) const noexcept {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= batch_size) return false;
        if (i > 0 && indices[i] <= indices[i - 1]) return false;
    }
    return true;
}

BatchMask select_by_confidence(const Matrix& probabilities, std::span<const int> labels, double tau) {
    if (labels.size() != probabilities.rows())
        throw ContractViolation(fmt::format("{} labels for {} probability rows", labels.size(), probabilities.rows()));
    BatchMask mask;
    if (tau == 0.0) {
        mask.origin = MaskOrigin::misclassification;
        for (std::size_t i = 0; i < probabilities.rows(); ++i)
            if (argmax(probabilities.row(i)) != static_cast<std::size_t>(labels[i])) mask.indices.push_back(i);
        return mask;
    }
    mask.origin = MaskOrigin::confidence;
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        auto row = probabilities.row(i);
        if (*std::max_element(row.begin(), row.end()) < tau) mask.indices.push_back(i);
    }
    return mask;
}

BatchMask select_by_count(std::size_t n, std::size_t k, RngStream& rng) {
    if (k > n) throw ContractViolation(fmt::format("cannot select {} of {} indices", k, n));
    BatchMask mask;
    mask.origin = MaskOrigin::random_matched;
    mask.indices.reserve(k);
    // Selection sampling over a forward range keeps the output sorted.
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(mask.indices), k, rng);
    return mask;
}

std::size_t random_k_count(std::size_t n, double fraction) noexcept {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

BatchMask select_random_k(std::size_t n, double fraction, RngStream& rng) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ContractViolation("fraction must lie in [0, 1]");
    const std::size_t k = random_k_count(n, fraction);
    BatchMask mask = k == 0 ? BatchMask{} : select_by_count(n, k, rng);
    mask.origin = MaskOrigin::random_k;
    return mask;
}

BatchMask select_random_matched(const BatchMask& difficulty, std::size_t n, RngStream& rng) {
    return select_by_count(n, difficulty.size(), rng);
}

BatchMask select_by_loss(std::span<const double> losses, double theta) {
    BatchMask mask;
    mask.origin = MaskOrigin::loss_threshold;
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] >= theta) mask.indices.push_back(i);
    return mask;
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> sizes) {
    const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total > n) throw ContractViolation(fmt::format("cannot apportion {} over {} samples", total, n));
    std::vector<std::size_t> shares(sizes.size(), 0);
    if (n == 0) return shares;
    if (n > (std::uint64_t{1} << 32)) throw ContractViolation("apportion supports at most 2^32 samples");

    // Exact integer quotas: total * size / n = share + remainder / n.
    std::vector<std::size_t> remainders(sizes.size());
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        const std::uint64_t q = std::uint64_t{total} * sizes[b];
        shares[b] = static_cast<std::size_t>(q / n);
        remainders[b] = static_cast<std::size_t>(q % n);
        assigned += shares[b];
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < total; ++i) {
        ++shares[order[i]];
        ++assigned;
    }
    return shares;
}

}  // namespace pdd
