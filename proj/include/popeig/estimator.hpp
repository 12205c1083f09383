#pragma once

#include <vector>

#include "popeig/model.hpp"
#include "popeig/sampling.hpp"

namespace popeig {

// The N ordered real roots of (1/N) sum_m lambda_m/(lambda_m - mu) = M/N,
// equivalently the zeros of the companion transform. They interlace the
// sample eigenvalues: mu_1 in (0, lambda_1), mu_i in [lambda_{i-1}, lambda_i].
struct MuRoots {
    std::vector<double> mus;
};

// Consecutive index ranges of sizes N_1..N_L over the ordered eigenvalues.
struct ClusterBlocks {
    // half-open [first, last) pairs, 0-based
    std::vector<std::pair<int, int>> blocks;
    int cluster_count() const { return static_cast<int>(blocks.size()); }
};

// Dual-path solve: ascending eigenvalues of diag(lambda) - (1/M) s s^T with
// s = sqrt(lambda), whose characteristic equation is exactly the defining
// secular equation, cross-checked against bracketed bisection of that
// equation on (0, lambda_1) and each (lambda_{i-1}, lambda_i). The two paths
// must agree to 1e-9 relative or MethodDisagreement is thrown. Repeated
// sample eigenvalues pin the corresponding roots to the repeated value.
MuRoots solve_mu(const SampleSpectrum& spec);

ClusterBlocks cluster_blocks(const PopulationModel& model);
ClusterBlocks blocks_from_mults(const std::vector<int>& mults);

// rho_k = (M/N_k) sum_{m in block k} (lambda_m - mu_m)
std::vector<double> estimate_rho(const SampleSpectrum& spec, const MuRoots& mus,
                                 const ClusterBlocks& blocks);
std::vector<double> estimate_rho(const SampleSpectrum& spec, const ClusterBlocks& blocks);

}  // namespace popeig
