#pragma once

#include <vector>

#include "popeig/model.hpp"
#include "popeig/sampling.hpp"

namespace popeig {

// Uplink power-estimation scenario: K transmitters with powers P_1 < ... <
// P_K on n_k orthogonal codes each, received over N chips with white noise
// of variance sigma2.
struct RadioScenario {
    std::vector<double> powers;  // ascending, distinct, > 0
    std::vector<int> codes;      // n_k >= 1, sum n <= N
    int n_dim = 0;               // N
    int m_samples = 0;           // M
    double noise_var = 0.0;      // sigma^2 > 0
};

RadioScenario validate_scenario(RadioScenario raw);

// Covariance eigenstructure of the scenario: sigma^2 with multiplicity N-n
// (when n < N) plus P_k + sigma^2 with multiplicity n_k.
PopulationModel scenario_to_model(const RadioScenario& scenario);

// Power estimates P_k = rho_hat(signal cluster k) - sigma^2. With
// estimate_noise and n < N the noise variance is taken from the lowest
// cluster's estimate instead of the known value.
struct PowerEstimates {
    std::vector<double> p_hat;
    double sigma2 = 0.0;  // the value that was subtracted
};

PowerEstimates estimate_powers(const SampleSpectrum& spec, const RadioScenario& scenario,
                               bool estimate_noise = false);

// Standard normal upper-tail quantile z with P(Z > z) = q; rational
// approximation polished by one Newton step on the erfc-based tail.
double normal_upper_quantile(double q);

// One-sided confidence margin: P(P_K - P_hat_K > A) ~ q under the
// fluctuation law, so A = sqrt(theta_kk)/M * z(q).
double confidence_margin(double theta_kk, int m_samples, double q);

// The same guarantee read without the sqrt/M scaling; kept selectable for
// comparison.
double confidence_margin_literal(double theta_kk, double q);

}  // namespace popeig
