#include "popeig/rng.hpp"

#include <cmath>

namespace popeig {

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    g.next();
    return g.next();
}

std::complex<double> complex_gaussian(SplitMix64& gen) {
    const double u1 = gen.next_double();
    const double u2 = gen.next_double();
    const double r = std::sqrt(-std::log1p(-u1));  // |X|^2 ~ Exp(1)
    const double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace popeig
