#pragma once

#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

namespace pdd {

enum class MaskOrigin {
    confidence,
    misclassification,
    random_k,
    random_matched,
    loss_threshold,
    full,
};

std::string_view to_string(MaskOrigin origin) noexcept;

/// Within-batch positions selected for backpropagation. Indices are strictly
/// increasing. An empty mask means the batch is skipped.
struct BatchMask {
    std::vector<std::size_t> indices;
    MaskOrigin origin = MaskOrigin::full;

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }

    /// True when indices are strictly increasing and all below `batch_size`.
    bool valid_for(std::size_t batch_size) const noexcept;

    bool operator==(const BatchMask&) const = default;
};

inline BatchMask full_mask(std::size_t n) {
    BatchMask m{std::vector<std::size_t>(n), MaskOrigin::full};
    std::iota(m.indices.begin(), m.indices.end(), std::size_t{0});
    return m;
}

}  // namespace pdd
