#pragma once

// Counter-based random numbers: every variate is a pure function of
// (seed, path, step, substep, channel), so concurrent paths never share
// state and reruns with equal seeds are bit-identical on one platform.

#include <cstdint>
#include <cmath>
#include <numbers>

namespace stratreg::rng {

/// splitmix64 finalizer; full-avalanche 64-bit mixing.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (0x9e3779b97f4a7c15ULL + b + (a << 6) + (a >> 2)));
}

/// Frozen per-trial seed derivation for Monte Carlo harnesses.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
    return combine(combine(master_seed, 0x6d635f747269616cULL), trial);
}

/// Uniform in (0,1), strictly excluding both endpoints.
inline double uniform01(std::uint64_t bits) {
    return (double(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

/// Identifies one Brownian driver: (seed, path) pins the whole path.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
};

/// Standard normal variate addressed by (key, step, substep, channel):
/// Box-Muller on two hashed uniforms.
inline double gaussian(const StreamKey& key, std::uint64_t step, std::uint64_t substep,
                       std::uint64_t channel) {
    std::uint64_t h = combine(key.seed, key.path);
    h = combine(h, step);
    h = combine(h, substep);
    h = combine(h, channel);
    const double u1 = uniform01(mix64(h ^ 0x517cc1b727220a95ULL));
    const double u2 = uniform01(mix64(h ^ 0x2545f4914f6cdd1dULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace stratreg::rng
