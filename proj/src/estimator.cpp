#include "popeig/estimator.hpp"

#include <cmath>

#include "popeig/errors.hpp"
#include "popeig/linalg.hpp"

namespace popeig {

namespace {

// secular function f(mu) = (1/N) sum lambda/(lambda - mu) - M/N, strictly
// increasing between poles
double secular(const std::vector<double>& lam, int m_samples, double mu) {
    double s = 0.0;
    for (double l : lam) s += l / (l - mu);
    return s / static_cast<double>(lam.size()) -
           static_cast<double>(m_samples) / static_cast<double>(lam.size());
}

double secular_deriv(const std::vector<double>& lam, double mu) {
    double s = 0.0;
    for (double l : lam) {
        const double d = l - mu;
        s += l / (d * d);
    }
    return s / static_cast<double>(lam.size());
}

double bisect_root(const std::vector<double>& lam, int m_samples, double lo, double hi,
                   bool first_interval) {
    // f(lo^+) -> -inf, f(hi^-) -> +inf inside (lambda_{i-1}, lambda_i);
    // and f(0) = (N-M)/N < 0 on the first interval
    double a = first_interval ? 0.0 : std::nextafter(lo, hi);
    double b = std::nextafter(hi, lo);
    if (!(a < b)) return hi;  // no representable interior: root pinned at hi
    double fa = secular(lam, m_samples, a);
    double fb = secular(lam, m_samples, b);
    // push toward the poles until the signs bracket
    for (int j = 0; !(fa < 0.0) && j < 60; ++j) {
        a = lo + (a - lo) * 0.25;
        fa = secular(lam, m_samples, a);
    }
    for (int j = 0; !(fb > 0.0) && j < 60; ++j) {
        b = hi - (hi - b) * 0.25;
        fb = secular(lam, m_samples, b);
    }
    if (!(fa < 0.0) || !(fb > 0.0))
        throw NumericalError("MethodDisagreement", "secular bracketing failed");

    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = secular(lam, m_samples, mid);
        if (fm < 0.0)
            a = mid;
        else
            b = mid;
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 5; ++it) {
        const double fx = secular(lam, m_samples, x);
        const double dx = secular_deriv(lam, x);
        if (dx <= 0.0) break;
        const double next = x - fx / dx;
        if (next <= a || next >= b) break;
        x = next;
    }
    return x;
}

std::vector<double> mu_by_bisection(const SampleSpectrum& spec) {
    const auto& lam = spec.lambdas;
    const int n = spec.n_dim;
    std::vector<double> mus(n);
    const double scale = lam.back();
    for (int i = 0; i < n; ++i) {
        const double lo = (i == 0) ? 0.0 : lam[i - 1];
        const double hi = lam[i];
        if (i > 0 && hi - lo <= 1e-14 * scale) {
            mus[i] = hi;  // repeated eigenvalue pins the root
            continue;
        }
        mus[i] = bisect_root(lam, spec.m_samples, lo, hi, i == 0);
    }
    return mus;
}

std::vector<double> mu_by_eigen(const SampleSpectrum& spec) {
    const int n = spec.n_dim;
    HermitianMatrix a(n);
    const double inv_m = 1.0 / spec.m_samples;
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = std::sqrt(spec.lambdas[i]);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a.at(i, j) = -inv_m * s[i] * s[j];
        a.at(i, i) += spec.lambdas[i];
    }
    return hermitian_eigenvalues(a);
}

}  // namespace

MuRoots solve_mu(const SampleSpectrum& spec) {
    if (spec.n_dim <= 0 || spec.lambdas.size() != static_cast<std::size_t>(spec.n_dim))
        throw InputError("DimensionMismatch", "spectrum length does not match N");
    if (spec.m_samples <= spec.n_dim)
        throw InputError("SampleCountTooSmall", "need M > N for the secular solve");
    for (double l : spec.lambdas)
        if (!(l > 0.0))
            throw InputError("NonPositiveEigenvalue", "sample eigenvalues must be positive");

    const std::vector<double> eig = mu_by_eigen(spec);
    const std::vector<double> bis = mu_by_bisection(spec);
    for (int i = 0; i < spec.n_dim; ++i) {
        const double ref = std::max(std::abs(bis[i]), std::abs(eig[i]));
        if (std::abs(eig[i] - bis[i]) > 1e-9 * ref)
            throw NumericalError("MethodDisagreement",
                                 "mu[" + std::to_string(i) + "]: eigen path " +
                                     std::to_string(eig[i]) + " vs bisection " +
                                     std::to_string(bis[i]));
    }
    return MuRoots{eig};
}

ClusterBlocks blocks_from_mults(const std::vector<int>& mults) {
    ClusterBlocks b;
    int start = 0;
    for (int nk : mults) {
        b.blocks.emplace_back(start, start + nk);
        start += nk;
    }
    return b;
}

ClusterBlocks cluster_blocks(const PopulationModel& model) {
    return blocks_from_mults(model.mults);
}

std::vector<double> estimate_rho(const SampleSpectrum& spec, const MuRoots& mus,
                                 const ClusterBlocks& blocks) {
    if (mus.mus.size() != spec.lambdas.size())
        throw InputError("DimensionMismatch", "mu roots do not match the spectrum");
    if (blocks.blocks.empty() || blocks.blocks.back().second != spec.n_dim)
        throw InputError("DimensionMismatch", "blocks do not partition 1..N");
    std::vector<double> rho;
    rho.reserve(blocks.blocks.size());
    for (const auto& [first, last] : blocks.blocks) {
        double sum = 0.0;
        for (int i = first; i < last; ++i) sum += spec.lambdas[i] - mus.mus[i];
        rho.push_back(sum * spec.m_samples / (last - first));
    }
    return rho;
}

std::vector<double> estimate_rho(const SampleSpectrum& spec, const ClusterBlocks& blocks) {
    return estimate_rho(spec, solve_mu(spec), blocks);
}

}  // namespace popeig
