#include "shiftgen/rng.hpp"

#include <cmath>
#include <numbers>

namespace shiftgen {

std::uint64_t Rng::next_u64() {
    // SplitMix64 (Steele, Lea, Flood 2014): golden-gamma counter + mix.
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

Vec Rng::normals(std::size_t n) {
    Vec v(n);
    for (double& x : v) x = normal();
    return v;
}

Rng Rng::split() {
    return Rng(next_u64() ^ 0x5851f42d4c957f2dULL);
}

}  // namespace shiftgen
