#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pdd/matrix.hpp"

namespace pdd {

/// In-memory labelled dataset. Features are in [0,1]; ids are 0..N-1.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::size_t> ids;
    std::size_t classes = 0;
    // Image geometry for IDX round trips; rows * cols == features.cols().
    std::size_t image_rows = 1;
    std::size_t image_cols = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dims() const noexcept { return features.cols(); }

    /// Throws ConfigError when an invariant is broken.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

/// Reads an IDX image/label pair; pixels are divided by 255. The class count
/// defaults to max(label)+1. Throws IngestError naming the offending file.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::optional<std::size_t> classes = std::nullopt);

/// Writes `ds` as an IDX pair. Features are stored as round(x*255); datasets
/// whose features are multiples of 1/255 round-trip bit-exactly.
void save_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);

struct SyntheticParams {
    std::size_t classes = 10;
    std::size_t per_class = 800;
    std::size_t dims = 20;
    double spread = 0.2;
    std::uint64_t seed = 1;
};

/// Gaussian blobs with one center per class at 0.25 + 0.5 * e_c (requires
/// dims >= classes), clamped to [0,1] and quantized to multiples of 1/255.
/// Samples are emitted grouped by class in id order.
Dataset gen_synthetic(const SyntheticParams& params);

struct BatchPlan {
    std::uint64_t epoch_seed = 0;
    std::size_t batch_size = 32;
    std::vector<std::size_t> order;
};

/// Per-epoch shuffling seed, hash(run seed, epoch).
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) noexcept;

BatchPlan make_batch_plan(std::size_t dataset_size, std::uint64_t run_seed, std::size_t epoch,
                          std::size_t batch_size);

/// Sizes of the batches an epoch over `dataset_size` samples is cut into.
/// The final batch may be short.
std::vector<std::size_t> batch_sizes(std::size_t dataset_size, std::size_t batch_size);

struct Batch {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::size_t> ids;

    std::size_t size() const noexcept { return labels.size(); }
};

std::vector<Batch> epoch_batches(const Dataset& ds, const BatchPlan& plan);

}  // namespace pdd
