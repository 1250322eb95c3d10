#pragma once

#include <cstdint>
#include <numbers>

#include "errors.hpp"
#include "qseries.hpp"

namespace ellstab {

// splitmix64. Chosen over <random> engines because the byte-identical
// reproducibility of verification reports must not depend on the standard
// library's distribution implementations.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 bits
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

// A log drawn uniformly from the rectangle |Re| <= re_max, |Im| <= im_max.
// re_max = 3 keeps every derived magnitude well inside the band.
inline Complex draw_log(SplitMix64& rng, double re_max = 3.0,
                        double im_max = std::numbers::pi) {
    const double re = rng.uniform(-re_max, re_max);
    const double im = rng.uniform(-im_max, im_max);
    return {re, im};
}

// Rejection sampler: draws logs until pred accepts one.
template <class Pred>
Complex draw_log_until(SplitMix64& rng, Pred&& pred, double re_max = 3.0,
                       double im_max = std::numbers::pi, int max_tries = 1000) {
    for (int i = 0; i < max_tries; ++i) {
        const Complex u = draw_log(rng, re_max, im_max);
        if (pred(u)) return u;
    }
    throw draw_exhausted("draw_log_until: no admissible point found");
}

}  // namespace ellstab
