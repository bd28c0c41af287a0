#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pdd {

using RngStream = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a root seed and a path of coordinates
/// (epoch, batch index, stream tag, ...). Order-sensitive.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

inline RngStream make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    return RngStream(derive_seed(root, path));
}

// Stream tags keep independent consumers of one run seed apart.
namespace stream_tag {
inline constexpr std::uint64_t init = 0x1a17;
inline constexpr std::uint64_t shuffle = 0x5bff;
inline constexpr std::uint64_t select = 0x5e1c;
inline constexpr std::uint64_t synth = 0x5a7d;
}  // namespace stream_tag

}  // namespace pdd
