#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace scen {

/// Deterministic random source. All draws go through hand-rolled conversions
/// (never std:: distributions) so that a seed reproduces the exact same
/// stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::size_t uniform_index(std::size_t bound) {
        return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(bound));
    }

    /// Standard normal via Box-Muller (one value per two uniforms).
    double normal();

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent child seed for a named stream of the same run.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace scen
