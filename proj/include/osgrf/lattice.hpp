#pragma once

#include <array>
#include <cstdint>
#include <functional>

namespace osgrf {

inline constexpr int kMaxDim = 4;

// A point of Z^d, d <= kMaxDim. Unused trailing coordinates stay 0.
using LatticePoint = std::array<std::int64_t, kMaxDim>;

struct LatticePointHash {
    std::size_t operator()(const LatticePoint& p) const noexcept
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto c : p) {
            h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

// Colexicographic comparison (last axis most significant).
inline bool colex_less(const LatticePoint& a, const LatticePoint& b) noexcept
{
    for (int k = kMaxDim - 1; k >= 0; --k) {
        if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
}

} // namespace osgrf
