#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "popeig/model.hpp"
#include "popeig/variance.hpp"

namespace popeig {

// Fluctuation samples M(rho_hat_k - rho_k) collected over seeded trials.
// Trial t draws its stream from (seed, t), so any trial is reproducible in
// isolation and the result is independent of scheduling.
struct TrialStats {
    PopulationModel model;
    int requested = 0;
    std::vector<std::vector<double>> fluct;      // [L][completed]
    std::vector<CovarianceMatrix> thetas;        // per-trial, when retained
    std::vector<int> failed_trials;              // indices of excluded trials
    std::uint64_t seed = 0;

    int completed() const {
        return fluct.empty() ? 0 : static_cast<int>(fluct.front().size());
    }
};

struct TrialOptions {
    bool compute_theta = false;  // per-trial residue covariance
    bool retain_theta = false;   // keep the matrices, not just compute them
    int threads = 0;             // 0: hardware concurrency
};

TrialStats run_trials(const PopulationModel& model, int trials, std::uint64_t seed,
                      const TrialOptions& opts = {});

// Per-cluster diagnostics of the fluctuation samples against a reference
// covariance.
struct ClusterSummary {
    double mean = 0.0;
    double sd = 0.0;
    double sd_ratio = 0.0;  // sd / sqrt(Theta_kk)
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

struct FluctuationSummary {
    std::vector<ClusterSummary> clusters;
    CovarianceMatrix sample_correlation;  // of the fluctuation vectors
    CovarianceMatrix theta_correlation;   // Theta_kl / sqrt(Theta_kk Theta_ll)
    int trials = 0;
    int excluded = 0;
};

FluctuationSummary summarize(const TrialStats& stats, const CovarianceMatrix& theta);

// Equal-width histogram of the rho_hat samples of one cluster, normalized to
// unit mass, with the theoretical normal density N(rho_k, Theta_kk/M^2) at
// the bin centers.
struct Histogram {
    std::vector<double> centers;
    std::vector<double> empirical_density;
    std::vector<double> theoretical_density;
    double bin_width = 0.0;
};

std::vector<Histogram> export_density(const TrialStats& stats, int bins,
                                      const CovarianceMatrix& theta);

}  // namespace popeig
