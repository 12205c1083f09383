#include "popeig/radio.hpp"

#include <algorithm>
#include <cmath>

#include "popeig/errors.hpp"
#include "popeig/estimator.hpp"

namespace popeig {

RadioScenario validate_scenario(RadioScenario raw) {
    if (raw.powers.empty() || raw.powers.size() != raw.codes.size())
        throw InputError("InvalidScenario", "powers and codes must be non-empty, equal length");
    long long n = 0;
    for (std::size_t k = 0; k < raw.powers.size(); ++k) {
        if (!(raw.powers[k] > 0.0))
            throw InputError("InvalidScenario", "powers must be positive");
        if (k > 0 && !(raw.powers[k] > raw.powers[k - 1]))
            throw InputError("InvalidScenario", "powers must be strictly increasing");
        if (raw.codes[k] < 1) throw InputError("InvalidScenario", "codes must be >= 1");
        n += raw.codes[k];
    }
    if (n > raw.n_dim)
        throw InputError("InvalidScenario",
                         "total codes n = " + std::to_string(n) + " exceed N = " +
                             std::to_string(raw.n_dim));
    if (raw.m_samples <= raw.n_dim)
        throw InputError("SampleCountTooSmall", "need M > N");
    if (!(raw.noise_var > 0.0)) throw InputError("InvalidScenario", "noise variance must be > 0");
    return raw;
}

PopulationModel scenario_to_model(const RadioScenario& scenario) {
    const RadioScenario s = validate_scenario(scenario);
    long long n = 0;
    for (int c : s.codes) n += c;

    PopulationModel m;
    m.n_dim = s.n_dim;
    m.m_samples = s.m_samples;
    if (n < s.n_dim) {  // noise cluster at sigma^2
        m.rhos.push_back(s.noise_var);
        m.mults.push_back(s.n_dim - static_cast<int>(n));
    }
    for (std::size_t k = 0; k < s.powers.size(); ++k) {
        const double eig = s.powers[k] + s.noise_var;
        for (double existing : m.rhos)
            if (existing == eig)
                throw InputError("EigenvalueCollision",
                                 "population eigenvalue " + std::to_string(eig) + " repeats");
        m.rhos.push_back(eig);
        m.mults.push_back(s.codes[k]);
    }
    return validate_model(m);
}

PowerEstimates estimate_powers(const SampleSpectrum& spec, const RadioScenario& scenario,
                               bool estimate_noise) {
    const RadioScenario s = validate_scenario(scenario);
    const PopulationModel model = scenario_to_model(s);
    if (spec.n_dim != s.n_dim || spec.m_samples != s.m_samples)
        throw InputError("DimensionMismatch", "spectrum does not match the scenario");

    const std::vector<double> rho = estimate_rho(spec, cluster_blocks(model));
    const int K = static_cast<int>(s.powers.size());
    const bool has_noise_cluster = model.cluster_count() == K + 1;

    PowerEstimates est;
    if (estimate_noise) {
        if (!has_noise_cluster)
            throw InputError("InvalidScenario",
                             "noise estimation requires n < N (a noise cluster)");
        est.sigma2 = rho.front();
    } else {
        est.sigma2 = s.noise_var;
    }
    const int offset = has_noise_cluster ? 1 : 0;
    est.p_hat.resize(K);
    for (int k = 0; k < K; ++k) est.p_hat[k] = rho[offset + k] - est.sigma2;
    return est;
}

namespace {

// Acklam-style rational approximation of the standard normal quantile.
double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Newton refinement against the erfc-based CDF
    for (int it = 0; it < 2; ++it) {
        const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        if (pdf == 0.0) break;
        x -= (cdf - p) / pdf;
    }
    return x;
}

}  // namespace

double normal_upper_quantile(double q) {
    if (!(q > 0.0) || !(q < 1.0))
        throw InputError("InvalidProbability", "q must lie in (0, 1)");
    return -inverse_normal_cdf(q);
}

double confidence_margin(double theta_kk, int m_samples, double q) {
    if (!(theta_kk > 0.0)) throw InputError("InvalidProbability", "theta_kk must be positive");
    return std::sqrt(theta_kk) / m_samples * normal_upper_quantile(q);
}

double confidence_margin_literal(double theta_kk, double q) {
    if (!(theta_kk > 0.0)) throw InputError("InvalidProbability", "theta_kk must be positive");
    return theta_kk * normal_upper_quantile(q);
}

}  // namespace popeig
