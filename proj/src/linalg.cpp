#include "popeig/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "popeig/errors.hpp"

namespace popeig {

double HermitianMatrix::norm_bound() const {
    double sum = 0.0;
    for (const cdouble& v : data) sum += std::norm(v);
    return std::sqrt(sum);
}

namespace {

double offdiag_norm(const HermitianMatrix& A) {
    double sum = 0.0;
    for (int i = 0; i < A.n; ++i)
        for (int j = i + 1; j < A.n; ++j) sum += std::norm(A.at(i, j));
    return std::sqrt(2.0 * sum);
}

// One two-sided rotation zeroing A[p][q]. The unitary is a phase times a
// real Givens rotation; only rows/columns p and q change.
void jacobi_rotate(HermitianMatrix& A, int p, int q) {
    const cdouble apq = A.at(p, q);
    const double abs_pq = std::abs(apq);
    if (abs_pq == 0.0) return;
    const cdouble phase = apq / abs_pq;
    const double app = A.at(p, p).real();
    const double aqq = A.at(q, q).real();

    const double tau = (aqq - app) / (2.0 * abs_pq);
    double t;
    if (tau >= 0.0)
        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
    else
        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;

    const int n = A.n;
    for (int k = 0; k < n; ++k) {
        if (k == p || k == q) continue;
        const cdouble apk = A.at(p, k);
        const cdouble aqk = A.at(q, k);
        const cdouble new_pk = c * apk - s * phase * aqk;
        const cdouble new_qk = s * std::conj(phase) * apk + c * aqk;
        A.at(p, k) = new_pk;
        A.at(k, p) = std::conj(new_pk);
        A.at(q, k) = new_qk;
        A.at(k, q) = std::conj(new_qk);
    }
    A.at(p, p) = app * c * c - 2.0 * s * c * abs_pq + aqq * s * s;
    A.at(q, q) = app * s * s + 2.0 * s * c * abs_pq + aqq * c * c;
    A.at(p, q) = 0.0;
    A.at(q, p) = 0.0;
}

}  // namespace

std::vector<double> hermitian_eigenvalues_jacobi(HermitianMatrix A) {
    const int n = A.n;
    if (n == 0) return {};
    if (n == 1) return {A.at(0, 0).real()};

    const double tol = 1e-12 * A.norm_bound();
    const int max_sweeps = 100;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (offdiag_norm(A) <= tol) {
            converged = true;
            break;
        }
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) jacobi_rotate(A, p, q);
    }
    if (!converged && offdiag_norm(A) > tol)
        throw NumericalError("ConvergenceFailure",
                             "Jacobi sweep cap exceeded at n = " + std::to_string(n));

    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = A.at(i, i).real();
    std::sort(eig.begin(), eig.end());
    return eig;
}

namespace {

// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
// form (d, e); a diagonal phase similarity makes the subdiagonals real, so
// the eigenvalues are unchanged.
void tridiagonalize(HermitianMatrix& A, std::vector<double>& d, std::vector<double>& e) {
    const int n = A.n;
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    std::vector<cdouble> v(n), w(n);

    for (int k = 0; k + 2 < n; ++k) {
        double sigma2 = 0.0;
        for (int i = k + 1; i < n; ++i) sigma2 += std::norm(A.at(i, k));
        const double sigma = std::sqrt(sigma2);
        if (sigma == 0.0) {
            e[k + 1] = 0.0;
            continue;
        }
        const cdouble x0 = A.at(k + 1, k);
        const double ax0 = std::abs(x0);
        const cdouble phase = (ax0 == 0.0) ? cdouble(1.0, 0.0) : x0 / ax0;
        const cdouble alpha = -phase * sigma;

        const double vnorm2 = 2.0 * sigma * (sigma + ax0);
        if (vnorm2 == 0.0) {
            e[k + 1] = sigma;
            continue;
        }
        const double tau = 2.0 / vnorm2;

        for (int i = k + 1; i < n; ++i) v[i] = A.at(i, k);
        v[k + 1] -= alpha;

        // p = tau * B * v over the trailing block
        for (int i = k + 1; i < n; ++i) {
            cdouble acc = 0.0;
            const cdouble* arow = A.row(i);
            for (int j = k + 1; j < n; ++j) acc += arow[j] * v[j];
            w[i] = tau * acc;
        }
        cdouble vhp = 0.0;
        for (int i = k + 1; i < n; ++i) vhp += std::conj(v[i]) * w[i];
        const double K = 0.5 * tau * vhp.real();
        for (int i = k + 1; i < n; ++i) w[i] -= K * v[i];

        // B <- B - v w^H - w v^H
        for (int i = k + 1; i < n; ++i) {
            const cdouble vi = v[i];
            const cdouble wi = w[i];
            cdouble* arow = A.row(i);
            for (int j = k + 1; j < n; ++j)
                arow[j] -= vi * std::conj(w[j]) + wi * std::conj(v[j]);
        }
        A.at(k + 1, k) = alpha;
        e[k + 1] = std::abs(alpha);
    }
    if (n >= 2) e[n - 1] = std::abs(A.at(n - 1, n - 2));
    for (int i = 0; i < n; ++i) d[i] = A.at(i, i).real();
    // shift e so that e[i] couples d[i], d[i+1]
    for (int i = 0; i + 1 < n; ++i) e[i] = e[i + 1];
    e[n - 1] = 0.0;
}

// Implicit-shift QL on a real symmetric tridiagonal, eigenvalues only.
void tridiag_eigenvalues(std::vector<double>& d, std::vector<double>& e) {
    const int n = static_cast<int>(d.size());
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw NumericalError("ConvergenceFailure", "QL iteration cap exceeded");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

std::vector<double> hermitian_eigenvalues_tridiag(HermitianMatrix A) {
    const int n = A.n;
    if (n == 0) return {};
    if (n == 1) return {A.at(0, 0).real()};
    std::vector<double> d, e;
    tridiagonalize(A, d, e);
    tridiag_eigenvalues(d, e);
    std::sort(d.begin(), d.end());
    return d;
}

std::vector<double> hermitian_eigenvalues(const HermitianMatrix& H) {
    if (H.n <= kJacobiMaxDim) return hermitian_eigenvalues_jacobi(H);
    return hermitian_eigenvalues_tridiag(H);
}

}  // namespace popeig
