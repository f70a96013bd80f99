#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gsim {

/// Mixes a seed with a stream tag into a fresh 64-bit seed (splitmix64
/// finalizer). Used to derive independent sub-seeds for weight init,
/// batch sampling per iteration, and evaluation splits from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random source. std::mt19937_64 supplies the bits; the
/// distributions are implemented here because the standard library's
/// distribution objects are implementation-defined and would break
/// byte-for-byte reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi], inclusive. Rejection-free modulo is
    /// fine at desk-scale range sizes.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    /// Standard normal via Box-Muller. Stateless between calls (one draw
    /// consumes two uniforms) so call sequences stay easy to reason about.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace gsim
