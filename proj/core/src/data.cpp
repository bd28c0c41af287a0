#include "pdd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "pdd/error.hpp"
#include "pdd/rng.hpp"

namespace pdd {

void Dataset::validate() const {
    const std::size_t n = labels.size();
    if (n == 0) throw ConfigError("dataset is empty");
    if (features.cols() == 0) throw ConfigError("dataset has zero feature width");
    if (features.rows() != n) throw ConfigError("feature rows do not match label count");
    if (ids.size() != n) throw ConfigError("id count does not match label count");
    if (image_rows * image_cols != features.cols()) throw ConfigError("image geometry does not match feature width");
    for (std::size_t i = 0; i < n; ++i) {
        if (ids[i] != i) throw ConfigError(fmt::format("sample id {} at position {}", ids[i], i));
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw ConfigError(fmt::format("label {} of sample {} outside [0, {})", labels[i], i, classes));
    }
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string(), "cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
    if (offset + 4 > buf.size()) throw IngestError(path.string(), "truncated header");
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                           static_cast<char>(v)};
    out.write(bytes, 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::optional<std::size_t> classes) {
    const auto img = read_file(images);
    const std::uint32_t img_magic = read_be32(img, 0, images);
    if (img_magic != idx_images_magic)
        throw IngestError(images.string(), fmt::format("bad magic number 0x{:08x}, expected 0x{:08x}", img_magic,
                                                       idx_images_magic));
    const std::size_t count = read_be32(img, 4, images);
    const std::size_t rows = read_be32(img, 8, images);
    const std::size_t cols = read_be32(img, 12, images);
    if (count == 0 || rows * cols == 0) throw IngestError(images.string(), "empty image set");
    if (img.size() != 16 + count * rows * cols)
        throw IngestError(images.string(), fmt::format("expected {} pixel bytes, found {}", count * rows * cols,
                                                       img.size() < 16 ? 0 : img.size() - 16));

    const auto lab = read_file(labels);
    const std::uint32_t lab_magic = read_be32(lab, 0, labels);
    if (lab_magic != idx_labels_magic)
        throw IngestError(labels.string(), fmt::format("bad magic number 0x{:08x}, expected 0x{:08x}", lab_magic,
                                                       idx_labels_magic));
    const std::size_t lab_count = read_be32(lab, 4, labels);
    if (lab_count != count)
        throw IngestError(labels.string(), fmt::format("label count {} != image count {}", lab_count, count));
    if (lab.size() != 8 + count)
        throw IngestError(labels.string(), fmt::format("expected {} label bytes, found {}", count,
                                                       lab.size() < 8 ? 0 : lab.size() - 8));

    Dataset ds;
    ds.image_rows = rows;
    ds.image_cols = cols;
    ds.features = Matrix(count, rows * cols);
    auto values = ds.features.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(img[16 + i]) / 255.0;
    ds.labels.resize(count);
    ds.ids.resize(count);
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = lab[8 + i];
        ds.ids[i] = i;
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = classes.value_or(static_cast<std::size_t>(max_label) + 1);
    if (static_cast<std::size_t>(max_label) >= ds.classes)
        throw IngestError(labels.string(), fmt::format("label {} exceeds class count {}", max_label, ds.classes));
    return ds;
}

void save_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels) {
    ds.validate();
    if (ds.classes > 256) throw ConfigError("IDX labels are single bytes; at most 256 classes");

    std::ofstream img(images, std::ios::binary | std::ios::trunc);
    if (!img) throw IngestError(images.string(), "cannot open for writing");
    put_be32(img, idx_images_magic);
    put_be32(img, static_cast<std::uint32_t>(ds.size()));
    put_be32(img, static_cast<std::uint32_t>(ds.image_rows));
    put_be32(img, static_cast<std::uint32_t>(ds.image_cols));
    std::vector<char> pixels(ds.features.size());
    auto values = ds.features.values();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double v = std::clamp(values[i], 0.0, 1.0);
        pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    img.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!img) throw IngestError(images.string(), "write failed");

    std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
    if (!lab) throw IngestError(labels.string(), "cannot open for writing");
    put_be32(lab, idx_labels_magic);
    put_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int y : ds.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
    if (!lab) throw IngestError(labels.string(), "write failed");
}

Dataset gen_synthetic(const SyntheticParams& params) {
    if (params.classes == 0 || params.per_class == 0 || params.dims == 0)
        throw ConfigError("synthetic data needs positive classes, per_class and dims");
    if (params.dims < params.classes)
        throw ConfigError(fmt::format("synthetic data needs dims >= classes ({} < {})", params.dims, params.classes));
    if (!(params.spread >= 0.0) || !std::isfinite(params.spread)) throw ConfigError("spread must be finite and >= 0");

    const std::size_t n = params.classes * params.per_class;
    Dataset ds;
    ds.classes = params.classes;
    ds.image_rows = 1;
    ds.image_cols = params.dims;
    ds.features = Matrix(n, params.dims);
    ds.labels.resize(n);
    ds.ids.resize(n);

    RngStream rng = make_stream(params.seed, {stream_tag::synth});
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / params.per_class;
        ds.labels[i] = static_cast<int>(c);
        ds.ids[i] = i;
        auto row = ds.features.row(i);
        for (std::size_t d = 0; d < params.dims; ++d) {
            const double center = d == c ? 0.75 : 0.25;
            const double v = std::clamp(center + params.spread * noise(rng), 0.0, 1.0);
            row[d] = static_cast<double>(std::lround(v * 255.0)) / 255.0;
        }
    }
    return ds;
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) noexcept {
    return derive_seed(run_seed, {stream_tag::shuffle, epoch});
}

BatchPlan make_batch_plan(std::size_t dataset_size, std::uint64_t run_seed, std::size_t epoch,
                          std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    BatchPlan plan;
    plan.epoch_seed = epoch_seed(run_seed, epoch);
    plan.batch_size = batch_size;
    plan.order.resize(dataset_size);
    std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
    RngStream rng(plan.epoch_seed);
    std::shuffle(plan.order.begin(), plan.order.end(), rng);
    return plan;
}

std::vector<std::size_t> batch_sizes(std::size_t dataset_size, std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    std::vector<std::size_t> sizes(dataset_size / batch_size, batch_size);
    if (dataset_size % batch_size != 0) sizes.push_back(dataset_size % batch_size);
    return sizes;
}

std::vector<Batch> epoch_batches(const Dataset& ds, const BatchPlan& plan) {
    if (plan.order.size() != ds.size()) throw ConfigError("batch plan does not cover the dataset");
    const auto sizes = batch_sizes(ds.size(), plan.batch_size);
    std::vector<Batch> out;
    out.reserve(sizes.size());
    std::size_t pos = 0;
    for (std::size_t n : sizes) {
        Batch b{Matrix(n, ds.dims()), std::vector<int>(n), std::vector<std::size_t>(n)};
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t id = plan.order[pos + k];
            auto src = ds.features.row(id);
            std::copy(src.begin(), src.end(), b.features.row(k).begin());
            b.labels[k] = ds.labels[id];
            b.ids[k] = ds.ids[id];
        }
        pos += n;
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace pdd
