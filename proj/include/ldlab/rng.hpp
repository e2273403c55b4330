#pragma once

#include <cstdint>

namespace ldlab {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based uniform stream: draw i depends only on (key, i), so any
/// subrange can be generated independently and in any order.
class CounterStream {
public:
    constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(mix64(key)) {}

    constexpr std::uint64_t bits(std::uint64_t i) const noexcept {
        return mix64(key_ ^ mix64(i * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform(std::uint64_t i) const noexcept {
        return (static_cast<double>(bits(i) >> 11) + 0.5) * 0x1.0p-53;
    }

    constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
};

/// Derive a child key from a parent and a (domain, index) pair. Used to give
/// every Monte Carlo replicate its own stream.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t domain,
                                   std::uint64_t index) noexcept {
    return mix64(mix64(parent ^ 0xA0761D6478BD642FULL) + mix64(domain * 0xE7037ED1A0B428DBULL) +
                 index * 0x9E3779B97F4A7C15ULL);
}

} // namespace ldlab
