#pragma once

#include <complex>
#include <vector>

namespace popeig {

using cdouble = std::complex<double>;

// Dense row-major complex matrix (rows are contiguous).
struct ComplexMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<cdouble> data;

    ComplexMatrix() = default;
    ComplexMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

    cdouble& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const cdouble& at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    cdouble* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const cdouble* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
};

// Hermitian matrix, full row-major storage. Construction enforces (up to
// rounding) A[i][j] == conj(A[j][i]) with a real diagonal.
struct HermitianMatrix {
    int n = 0;
    std::vector<cdouble> data;

    HermitianMatrix() = default;
    explicit HermitianMatrix(int dim) : n(dim), data(static_cast<std::size_t>(dim) * dim) {}

    cdouble& at(int i, int j) { return data[static_cast<std::size_t>(i) * n + j]; }
    const cdouble& at(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }
    cdouble* row(int i) { return data.data() + static_cast<std::size_t>(i) * n; }
    const cdouble* row(int i) const { return data.data() + static_cast<std::size_t>(i) * n; }

    // Frobenius norm, used for tolerance scaling
    double norm_bound() const;
};

// All eigenvalues of a Hermitian matrix, ascending. Two backends:
//   - cyclic two-sided Jacobi rotations (off-diagonal Frobenius tolerance
//     1e-12*||H||, sweep cap 100): very accurate, O(n^3) per sweep, the
//     default up to kJacobiMaxDim;
//   - Householder tridiagonalization + implicit-shift QL for larger n.
// Both deliver |error| <= 1e-10*||H||; they are cross-checked in the tests.
// Throws NumericalError("ConvergenceFailure") if the iteration cap is hit.
inline constexpr int kJacobiMaxDim = 160;

std::vector<double> hermitian_eigenvalues_jacobi(HermitianMatrix H);
std::vector<double> hermitian_eigenvalues_tridiag(HermitianMatrix H);
std::vector<double> hermitian_eigenvalues(const HermitianMatrix& H);

}  // namespace popeig
