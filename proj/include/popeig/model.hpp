#pragma once

#include <string>
#include <vector>

namespace popeig {

// Population spectrum configuration: L distinct eigenvalues rho_1 < ... < rho_L
// with multiplicities N_k summing to the dimension N, observed through M
// samples. Immutable after validation; shared read-only by every pipeline.
struct PopulationModel {
    std::vector<double> rhos;   // ascending, distinct, > 0
    std::vector<int> mults;     // N_k >= 1, sum == n_dim
    int n_dim = 0;              // N
    int m_samples = 0;          // M

    int cluster_count() const { return static_cast<int>(rhos.size()); }
    double ratio() const { return static_cast<double>(n_dim) / m_samples; }  // c = N/M
    double cluster_ratio(int k) const { return static_cast<double>(mults[k]) / m_samples; }
    // spectral weights N_k/N of F^R
    std::vector<double> weights() const;
};

// Checks all model invariants; sorts (rho, mult) pairs jointly if the
// eigenvalues arrive unsorted. Idempotent. Throws InputError with codes
// NonPositiveEigenvalue, DuplicateEigenvalue, MultiplicitySumMismatch,
// SampleCountTooSmall.
PopulationModel validate_model(PopulationModel raw);

// JSON object form {"rhos":[...],"mults":[...],"N":...,"M":...}
PopulationModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const PopulationModel& model);

}  // namespace popeig
