#pragma once

#include <cstdint>
#include <cstddef>

#include "shiftgen/types.hpp"

namespace shiftgen {

/// Deterministic counter-based generator: SplitMix64 on a 64-bit counter,
/// Gaussian draws via Box-Muller on the uniform stream (spare cached).
/// The same seed yields the same stream on every platform; every stochastic
/// operation in the library takes one of these explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform on [0,1) with 53 random bits.
    double uniform();

    /// Standard normal draw (Box-Muller; consumes two uniforms per pair).
    double normal();

    /// Uniform integer in [0, n) via 128-bit multiply-shift.
    std::size_t below(std::size_t n);

    Vec normals(std::size_t n);

    /// Derives an unrelated stream, e.g. one per parallel chain.
    Rng split();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace shiftgen
