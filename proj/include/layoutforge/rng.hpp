#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace layoutforge {

// std::mt19937_64 output is pinned by the standard, but the standard
// distributions are not; these helpers keep seeded runs identical across
// standard libraries.

inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n) via rejection sampling.
inline std::uint64_t bounded_uint(std::mt19937_64& gen, std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t x = gen();
        if (x >= threshold) return x % n;
    }
}

// Standard normal via Box-Muller on raw engine output.
inline double standard_normal(std::mt19937_64& gen) {
    double u1 = uniform01(gen);
    while (u1 <= 0.0) u1 = uniform01(gen);
    double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Fisher-Yates with the explicit bounded draw above.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_uint(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace layoutforge
