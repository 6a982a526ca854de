#pragma once

#include <cstdint>

namespace nmrv {

// Deterministic, platform-independent generator so simulation outputs
// are reproducible from a seed alone. The core stream is splitmix64
// (Steele, Lea, Flood: finalizer constants 0x9e3779b97f4a7c15,
// 0xbf58476d1ce4e5b9, 0x94d049bb133111eb); uniform doubles take the top
// 53 bits, Gaussians come from Box-Muller on two uniforms with the
// second value cached.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, hi).
    double uniform(double hi) { return uniform() * hi; }

    // Standard normal via Box-Muller.
    double gaussian();

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace nmrv
