#ifndef REPEATR_RANDOM_HPP
#define REPEATR_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>

namespace repeatr {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Hash of a master seed and task coordinates. Used for every sub-seed so
/// results depend only on (seed, coordinates), never on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = mix64(seed);
    for (auto c : coords) h = mix64(h ^ mix64(c + 0x632BE59BD9B4E019ULL));
    return h;
}

/**
 * Random source whose output is fixed by the standard: mt19937_64 plus
 * hand-written transforms (the standard distributions are
 * implementation-defined and would differ between standard libraries).
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), unbiased by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Standard normal by Box-Muller (one draw per call).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t k = items.size(); k > 1; --k) {
            const auto j = static_cast<std::size_t>(below(k));
            std::swap(items[k - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace repeatr

#endif
