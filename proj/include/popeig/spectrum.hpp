#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "popeig/model.hpp"
#include "popeig/sampling.hpp"

namespace popeig {

// Transform value and derivatives of order 1..3 at a point z.
struct StieltjesEval {
    cdouble z;
    cdouble m0, m1, m2, m3;
};

// L disjoint real intervals [a_l, b_l] carrying the limiting spectral law.
struct ClusterSupport {
    std::vector<std::pair<double, double>> intervals;  // ordered, disjoint
    int cluster_count() const { return static_cast<int>(intervals.size()); }
};

struct SeparabilityReport {
    std::vector<double> margins;  // M/N - Psi(i), one per cluster
    std::vector<double> alphas;   // L-1 ordered roots between the rho_k
    bool separable = false;
    bool single_cluster = false;  // L == 1: separable by convention
};

// Companion Stieltjes transform of one sample realization,
//   m(z) = (1/M) sum_i 1/(lambda_i - z) - ((M-N)/M)/z,
// with derivatives up to max_order by exact term-wise differentiation.
// Throws NumericalError("PoleHit") when z is within 1e-14 (relative) of an
// eigenvalue or of zero.
StieltjesEval empirical_companion_stieltjes(const SampleSpectrum& spec, cdouble z,
                                            int max_order = 3);

// Stieltjes transform (1/N) sum_i 1/(lambda_i - z) of the sample covariance
// itself; related to the companion transform by m = (M/N) m_comp - (1-M/N)/z.
cdouble empirical_sample_stieltjes(const SampleSpectrum& spec, cdouble z);

// Deterministic-equivalent companion transform at finite (N, M): the unique
// solution with Im(m).Im(z) > 0 of
//   m = -1 / ( z - (N/M) sum_k (N_k/N) rho_k / (1 + rho_k m) ),
// solved by damped fixed-point iteration to residual < 1e-12; derivatives by
// implicit differentiation through the inverse map z(m). For real z the point
// must lie strictly outside the support. Throws NumericalError with codes
// NoConvergence or WrongBranch.
StieltjesEval solve_limiting_stieltjes(const PopulationModel& model, cdouble z,
                                       int max_order = 3);

// Support of the limiting law: the 2L real roots of z'(m) = 0 bracketed per
// the sign analysis of the inverse map, mapped through z(m), sorted and
// paired. Throws NumericalError("SeparabilityViolated") if the clusters
// merge.
ClusterSupport support_clusters(const PopulationModel& model);

// Cluster-split condition: margins M/N - Psi(i) all positive. Psi uses the
// L-1 roots alpha of sum_r (N_r/N) rho_r^2/(rho_r - x)^3 = 0, one per
// (rho_i, rho_{i+1}).
SeparabilityReport separability_check(const PopulationModel& model);

// Inverse map z(m) of the limiting companion transform and its derivatives;
// shared by the fixed-point solver, the support computation and the
// separability margins so they cannot drift apart.
cdouble inverse_map_z(const PopulationModel& model, cdouble m);
cdouble inverse_map_dz(const PopulationModel& model, cdouble m);
cdouble inverse_map_d2z(const PopulationModel& model, cdouble m);
cdouble inverse_map_d3z(const PopulationModel& model, cdouble m);

}  // namespace popeig
