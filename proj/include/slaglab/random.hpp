#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "slaglab/matrix.hpp"

namespace slaglab {

/// Seeded generator with a platform-independent mapping to doubles, so that
/// seeded experiments reproduce bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal by Box–Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Haar-distributed orthogonal matrix (Gram–Schmidt on a Gaussian matrix).
Matrix random_orthogonal(std::size_t n, Rng& rng);

/// Random symmetric matrix with i.i.d. N(0,1) upper-triangle entries.
SymMatrix random_symmetric(std::size_t n, Rng& rng, double scale = 1.0);

}  // namespace slaglab
