#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pdd/mask.hpp"
#include "pdd/matrix.hpp"
#include "pdd/rng.hpp"

namespace pdd {

/// tau > 0: rows whose max class probability is strictly below tau.
/// tau == 0: rows whose argmax differs from the label.
BatchMask select_by_confidence(const Matrix& probabilities, std::span<const int> labels, double tau);

/// floor(r * n), the per-batch count of select_random_k.
std::size_t random_k_count(std::size_t n, double fraction) noexcept;

/// k = floor(r * n) distinct uniform indices; k == 0 gives an empty mask.
BatchMask select_random_k(std::size_t n, double fraction, RngStream& rng);

/// A uniform random subset of {0..n-1} of the same size as `difficulty`.
BatchMask select_random_matched(const BatchMask& difficulty, std::size_t n, RngStream& rng);

/// Exactly k distinct uniform indices. k > n is a contract violation.
BatchMask select_by_count(std::size_t n, std::size_t k, RngStream& rng);

/// Rows whose loss is at least theta.
BatchMask select_by_loss(std::span<const double> losses, double theta);

/// Splits an epoch-level count `total` over batches in proportion to their
/// sizes (largest-remainder method, ties to the earlier batch). Each share is
/// at most its batch size and the shares sum to `total`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> sizes);

}  // namespace pdd
