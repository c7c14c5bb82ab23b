// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace isocull {

// Seeded RNG with hand-rolled variate transforms. std::mt19937_64 output is
// fully specified by the standard; the distribution adaptors in <random> are
// not, so runs would stop being reproducible across library versions if we
// used them.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [0, n).
    std::size_t uniform_index(std::size_t n) {
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

// Cumulative sums of nonnegative weights, for inverse-CDF sampling.
inline std::vector<double> build_cdf(std::span<const double> weights) {
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw std::invalid_argument("build_cdf: negative weight");
        acc += weights[i];
        cdf[i] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("build_cdf: all weights zero");
    return cdf;
}

inline std::size_t sample_cdf(std::span<const double> cdf, double u01) {
    double target = u01 * cdf.back();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (cdf[mid] <= target)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace isocull
