#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stylerep {

/// splitmix64 step; used to derive independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random source. The raw engine is mt19937_64 (sequence fixed
/// by the standard); all derived draws use explicit transforms so results do
/// not depend on the C++ library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint32_t below(std::uint32_t bound) {
        // Lemire's multiply-shift with rejection of the biased band.
        std::uint64_t threshold = (~std::uint64_t{0} % bound + 1) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return static_cast<std::uint32_t>(r % bound);
        }
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    /// Standard normal via Box-Muller (spare value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    float normal_f(float mean, float stddev) { return static_cast<float>(normal(mean, stddev)); }

    /// Fisher-Yates with the deterministic `below` draw.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace stylerep
