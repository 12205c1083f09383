#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "popeig/linalg.hpp"
#include "popeig/model.hpp"

namespace popeig {

// Ordered eigenvalues of one sample covariance realization. The only
// observable the estimators consume.
struct SampleSpectrum {
    std::vector<double> lambdas;  // ascending, > 0
    int n_dim = 0;
    int m_samples = 0;
};

struct SamplingOptions {
    // Conjugate R by a seeded Haar-ish unitary instead of keeping it
    // diagonal. Distributionally equivalent; exercised by the
    // rotation-invariance property test.
    bool rotate = false;
};

// Y = R^{1/2} X, with X i.i.d. CN(0,1) and R = diag(rho_k repeated N_k
// times) (optionally conjugated). Deterministic given (model, seed).
ComplexMatrix sample_data_matrix(const PopulationModel& model, std::uint64_t seed,
                                 const SamplingOptions& opts = {});

// (1/M) Y Y^H, Hermitian positive semidefinite.
HermitianMatrix sample_covariance(const ComplexMatrix& data);

// Full pipeline: synthesize, form covariance, extract ordered eigenvalues.
SampleSpectrum sample_spectrum(const PopulationModel& model, std::uint64_t seed,
                               const SamplingOptions& opts = {});

SampleSpectrum spectrum_from_matrix(const HermitianMatrix& cov, int m_samples);

// Recorded-data ingestion: N rows x M columns of complex numbers "a+bi"
// (whitespace-separated). Parse errors name row and column.
ComplexMatrix read_complex_matrix(std::istream& in);
ComplexMatrix read_complex_matrix_file(const std::string& path);

}  // namespace popeig
