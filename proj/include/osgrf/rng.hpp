#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit key and
// a counter, so results do not depend on evaluation order or worker count.
// Keys are derived by folding values into a seed with the splitmix64
// finalizer:
//
//   mix64(z): z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//             z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31
//   derive(key, v) = mix64(key + 0x9e3779b97f4a7c15 * (v + 1) ^ mix64(v))

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "osgrf/lattice.hpp"

namespace osgrf {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t value) noexcept
{
    return mix64((key + 0x9e3779b97f4a7c15ULL * (value + 1)) ^ mix64(value));
}

template <class... Values>
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t first, Values... rest) noexcept
{
    return derive(derive(key, first), static_cast<std::uint64_t>(rest)...);
}

inline std::uint64_t derive_point(std::uint64_t key, const LatticePoint& p) noexcept
{
    for (auto c : p) key = derive(key, static_cast<std::uint64_t>(c));
    return key;
}

// Domain tags keep streams used for different purposes disjoint.
enum class StreamDomain : std::uint64_t {
    Step = 0x5354455053ULL,
    Sign = 0x5349474e53ULL,
    Replica = 0x5245504cULL,
    Synthesis = 0x53594e54ULL,
    Walk = 0x57414c4bULL,
};

// Uniform in (0, 1], never 0.
constexpr double to_unit_open0(std::uint64_t bits) noexcept
{
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

class Stream {
public:
    constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}
    Stream(std::uint64_t seed, StreamDomain domain) noexcept
        : key_(derive(seed, static_cast<std::uint64_t>(domain)))
    {
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(++counter_ * 0x9e3779b97f4a7c15ULL)); }

    // Uniform in (0, 1].
    double uniform() noexcept { return to_unit_open0(next_u64()); }

    // Standard normal pair via Box-Muller.
    std::pair<double, double> normal_pair() noexcept
    {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    Stream substream(std::uint64_t index) const noexcept { return Stream(derive(key_, index)); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace osgrf
