#pragma once

// Deterministic seeded randomness. Every pipeline stage draws from a named
// substream derived from one root seed, so adding a stage never perturbs
// another stage's draws. Draw helpers avoid std::*_distribution, whose
// output is not pinned by the standard across implementations.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mjudge {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Substream keyed by (root seed, name). Stable across runs.
    static Rng substream(std::uint64_t root_seed, std::string_view name) {
        return Rng(detail::splitmix64(root_seed ^ detail::fnv1a64(name)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform in [0, 1).
    double uniform_real() { return (engine_() >> 11) * 0x1.0p-53; }

    bool coin_flip() { return (engine_() & 1) != 0; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform_real();
        double u2 = uniform_real();
        while (u1 <= 0.0) u1 = uniform_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_index(i)]);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mjudge
