#pragma once
// Seedable, bit-portable randomness. The engine is std::mt19937_64 (its output
// sequence is fixed by the language standard); every distribution is sampled
// by hand because the std:: distribution adapters are not portable across
// standard libraries. Sub-seeds are derived with splitmix64 so that work
// split across threads or processes draws the same numbers as a serial run.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace trajmeta {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based sub-seed: one master seed fans out into independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
    return splitmix64(splitmix64(master ^ 0x6a09e667f3bcc908ULL) + splitmix64(stream) * 0x100000001b3ULL +
                      counter);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n); rejection sampling keeps it portable.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller; the spare value is cached so draws come in a fixed sequence.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Inverse-CDF triangular draw on [lo, hi] with the given mode.
    double triangular(double lo, double mode, double hi) {
        if (hi <= lo) return lo;
        const double u = uniform01();
        const double cut = (mode - lo) / (hi - lo);
        if (u < cut) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
        return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace trajmeta
