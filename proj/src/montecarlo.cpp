#include "popeig/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "popeig/errors.hpp"
#include "popeig/rng.hpp"

namespace popeig {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

TrialStats run_trials(const PopulationModel& model, int trials, std::uint64_t seed,
                      const TrialOptions& opts) {
    if (trials < 1) throw InputError("InvalidTrialCount", "need at least one trial");
    const int L = model.cluster_count();
    const ClusterBlocks blocks = cluster_blocks(model);

    struct Slot {
        bool ok = false;
        std::vector<double> fluct;
        CovarianceMatrix theta;
    };
    std::vector<Slot> slots(trials);

    parallel_for(trials, opts.threads, [&](int t) {
        Slot& slot = slots[t];
        try {
            const SampleSpectrum spec = sample_spectrum(model, derive_stream(seed, t));
            const MuRoots mus = solve_mu(spec);
            const std::vector<double> rho = estimate_rho(spec, mus, blocks);
            slot.fluct.resize(L);
            for (int k = 0; k < L; ++k)
                slot.fluct[k] = model.m_samples * (rho[k] - model.rhos[k]);
            if (opts.compute_theta || opts.retain_theta)
                slot.theta = empirical_theta(spec, mus, blocks);
            slot.ok = true;
        } catch (const Error&) {
            slot.ok = false;  // excluded, counted below
        }
    });

    TrialStats stats;
    stats.model = model;
    stats.requested = trials;
    stats.seed = seed;
    stats.fluct.assign(L, {});
    for (int t = 0; t < trials; ++t) {
        if (!slots[t].ok) {
            stats.failed_trials.push_back(t);
            continue;
        }
        for (int k = 0; k < L; ++k) stats.fluct[k].push_back(slots[t].fluct[k]);
        if (opts.retain_theta) stats.thetas.push_back(std::move(slots[t].theta));
    }
    if (stats.completed() == 0)
        throw NumericalError("AllTrialsFailed", "every trial was excluded");
    return stats;
}

FluctuationSummary summarize(const TrialStats& stats, const CovarianceMatrix& theta) {
    const int L = static_cast<int>(stats.fluct.size());
    if (theta.dim != L) throw InputError("DimensionMismatch", "theta dimension != cluster count");
    const int n = stats.completed();
    if (n == 0) throw InputError("DimensionMismatch", "no completed trials to summarize");

    FluctuationSummary sum;
    sum.trials = n;
    sum.excluded = static_cast<int>(stats.failed_trials.size());
    sum.clusters.resize(L);

    std::vector<double> means(L);
    for (int k = 0; k < L; ++k) {
        const auto& xs = stats.fluct[k];
        if (static_cast<int>(xs.size()) != n)
            throw InputError("DimensionMismatch", "ragged fluctuation samples");
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double x : xs) {
            const double d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        ClusterSummary& cs = sum.clusters[k];
        cs.mean = mean;
        cs.sd = std::sqrt(m2 * n / std::max(1, n - 1));
        cs.sd_ratio = cs.sd / std::sqrt(theta.at(k, k));
        cs.skewness = (m2 > 0.0) ? m3 / std::pow(m2, 1.5) : 0.0;
        cs.excess_kurtosis = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
        means[k] = mean;
    }

    sum.sample_correlation = CovarianceMatrix(L);
    sum.theta_correlation = CovarianceMatrix(L);
    for (int k = 0; k < L; ++k)
        for (int l = 0; l < L; ++l) {
            double cov = 0.0;
            for (int t = 0; t < n; ++t)
                cov += (stats.fluct[k][t] - means[k]) * (stats.fluct[l][t] - means[l]);
            cov /= n;
            const double sk = std::sqrt(theta.at(k, k) * theta.at(l, l));
            double sxy = 0.0;
            {
                double vk = 0.0, vl = 0.0;
                for (int t = 0; t < n; ++t) {
                    vk += (stats.fluct[k][t] - means[k]) * (stats.fluct[k][t] - means[k]);
                    vl += (stats.fluct[l][t] - means[l]) * (stats.fluct[l][t] - means[l]);
                }
                sxy = std::sqrt(vk * vl) / n;
            }
            sum.sample_correlation.at(k, l) = (sxy > 0.0) ? cov / sxy : 0.0;
            sum.theta_correlation.at(k, l) = theta.at(k, l) / sk;
        }
    return sum;
}

std::vector<Histogram> export_density(const TrialStats& stats, int bins,
                                      const CovarianceMatrix& theta) {
    if (bins < 2) throw InputError("InvalidBinCount", "need at least 2 bins");
    const int L = static_cast<int>(stats.fluct.size());
    const double m_samples = stats.model.m_samples;
    std::vector<Histogram> out(L);
    for (int k = 0; k < L; ++k) {
        // back to rho_hat units
        std::vector<double> xs(stats.fluct[k]);
        for (double& x : xs) x = stats.model.rhos[k] + x / m_samples;
        double lo = xs.front(), hi = xs.front();
        for (double x : xs) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (!(hi > lo)) {  // degenerate range: unit-width window around the value
            lo -= 0.5;
            hi += 0.5;
        }
        const double width = (hi - lo) / bins;
        Histogram& h = out[k];
        h.bin_width = width;
        h.centers.resize(bins);
        h.empirical_density.assign(bins, 0.0);
        h.theoretical_density.resize(bins);
        for (int b = 0; b < bins; ++b) h.centers[b] = lo + (b + 0.5) * width;
        for (double x : xs) {
            int b = static_cast<int>((x - lo) / width);
            b = std::max(0, std::min(bins - 1, b));
            h.empirical_density[b] += 1.0;
        }
        const double norm = 1.0 / (xs.size() * width);
        for (double& d : h.empirical_density) d *= norm;
        const double var = theta.at(k, k) / (m_samples * m_samples);
        const double inv = 1.0 / std::sqrt(2.0 * M_PI * var);
        for (int b = 0; b < bins; ++b) {
            const double d = h.centers[b] - stats.model.rhos[k];
            h.theoretical_density[b] = inv * std::exp(-0.5 * d * d / var);
        }
    }
    return out;
}

}  // namespace popeig
