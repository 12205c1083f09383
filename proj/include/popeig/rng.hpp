#pragma once

#include <complex>
#include <cstdint>

namespace popeig {

// SplitMix64: tiny counter-style generator. Every random quantity in the
// library flows through this so that results are reproducible bit-for-bit
// across platforms and thread schedules.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Stream derivation for (seed, index) pairs: trial t of a run is reproducible
// in isolation, independent of scheduling.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index);

// Standard complex Gaussian CN(0,1): real and imaginary parts N(0, 1/2).
// Polar Box-Muller: modulus^2 ~ Exp(1), phase uniform.
std::complex<double> complex_gaussian(SplitMix64& gen);

}  // namespace popeig
