#include "popeig/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "popeig/errors.hpp"

namespace popeig {

namespace {

// sum_k w_k rho_k^j / (1 + rho_k m)^j  for j = 1..4
cdouble weighted_moment(const PopulationModel& model, int j, cdouble m) {
    cdouble sum = 0.0;
    for (std::size_t k = 0; k < model.rhos.size(); ++k) {
        const double rho = model.rhos[k];
        const double w = static_cast<double>(model.mults[k]) / model.n_dim;
        cdouble term = rho / (1.0 + rho * m);
        cdouble pw = term;
        for (int p = 1; p < j; ++p) pw *= term;
        sum += w * pw;
    }
    return sum;
}

double weighted_moment_real(const PopulationModel& model, int j, double m) {
    return weighted_moment(model, j, cdouble(m, 0.0)).real();
}

}  // namespace

cdouble inverse_map_z(const PopulationModel& model, cdouble m) {
    return -1.0 / m + model.ratio() * weighted_moment(model, 1, m);
}

cdouble inverse_map_dz(const PopulationModel& model, cdouble m) {
    return 1.0 / (m * m) - model.ratio() * weighted_moment(model, 2, m);
}

cdouble inverse_map_d2z(const PopulationModel& model, cdouble m) {
    return -2.0 / (m * m * m) + 2.0 * model.ratio() * weighted_moment(model, 3, m);
}

cdouble inverse_map_d3z(const PopulationModel& model, cdouble m) {
    const cdouble m2 = m * m;
    return 6.0 / (m2 * m2) - 6.0 * model.ratio() * weighted_moment(model, 4, m);
}

StieltjesEval empirical_companion_stieltjes(const SampleSpectrum& spec, cdouble z,
                                            int max_order) {
    const int n = spec.n_dim;
    const int m = spec.m_samples;
    const double scale = std::max(1.0, spec.lambdas.empty() ? 0.0 : spec.lambdas.back());
    if (std::abs(z) < 1e-14 * scale)
        throw NumericalError("PoleHit", "z coincides with the origin pole");
    for (double lam : spec.lambdas)
        if (std::abs(z - lam) < 1e-14 * scale)
            throw NumericalError("PoleHit", "z coincides with a sample eigenvalue");

    StieltjesEval ev;
    ev.z = z;
    cdouble s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (double lam : spec.lambdas) {
        const cdouble inv = 1.0 / (lam - z);
        const cdouble inv2 = inv * inv;
        s0 += inv;
        if (max_order >= 1) s1 += inv2;
        if (max_order >= 2) s2 += inv2 * inv;
        if (max_order >= 3) s3 += inv2 * inv2;
    }
    const double atom = static_cast<double>(m - n) / m;  // mass of the zero eigenvalues
    const cdouble zinv = 1.0 / z;
    const cdouble zinv2 = zinv * zinv;
    const double inv_m = 1.0 / m;
    ev.m0 = inv_m * s0 - atom * zinv;
    ev.m1 = (max_order >= 1) ? inv_m * s1 + atom * zinv2 : cdouble(0.0);
    ev.m2 = (max_order >= 2) ? 2.0 * inv_m * s2 - 2.0 * atom * zinv2 * zinv : cdouble(0.0);
    ev.m3 = (max_order >= 3) ? 6.0 * inv_m * s3 + 6.0 * atom * zinv2 * zinv2 : cdouble(0.0);
    return ev;
}

cdouble empirical_sample_stieltjes(const SampleSpectrum& spec, cdouble z) {
    cdouble s = 0.0;
    for (double lam : spec.lambdas) s += 1.0 / (lam - z);
    return s / static_cast<double>(spec.n_dim);
}

StieltjesEval solve_limiting_stieltjes(const PopulationModel& model, cdouble z,
                                       int max_order) {
    const double c = model.ratio();
    const auto step = [&](cdouble m) -> cdouble {
        return -1.0 / (z - c * weighted_moment(model, 1, m));
    };

    cdouble m = -1.0 / z;
    const int cap = 10000;
    for (int it = 0; it < cap; ++it) {
        const cdouble next = step(m);
        const double delta = std::abs(next - m);
        const bool damped = it >= 100;
        m = damped ? 0.5 * m + 0.5 * next : next;
        if (delta < 1e-15 * (1.0 + std::abs(m))) break;
    }
    // Newton on the inverse map polishes the slow contraction near support
    // edges; keeps the branch the iteration selected
    for (int it = 0; it < 50; ++it) {
        if (std::abs(m - step(m)) < 1e-14 * (1.0 + std::abs(m))) break;
        const cdouble g = inverse_map_z(model, m) - z;
        const cdouble dg = inverse_map_dz(model, m);
        if (dg == cdouble(0.0)) break;
        const cdouble next = m - g / dg;
        if (!(std::abs(next) < 1e300)) break;
        m = next;
    }
    const double residual = std::abs(m - step(m));
    if (residual > 1e-12 * (1.0 + std::abs(m)))
        throw NumericalError("NoConvergence",
                             "fixed-point iteration for the limiting transform stalled");
    if (z.imag() != 0.0) {
        if (m.imag() * z.imag() < 0.0)
            throw NumericalError("WrongBranch", "Im(m) and Im(z) have opposite signs");
    } else {
        // real z must be off the support: the attracting real solution there
        // satisfies z'(m) > 0
        if (std::abs(m.imag()) > 1e-10 * (1.0 + std::abs(m)) ||
            inverse_map_dz(model, m).real() <= 0.0)
            throw NumericalError("WrongBranch",
                                 "real evaluation point appears to lie inside the support");
    }

    StieltjesEval ev;
    ev.z = z;
    ev.m0 = m;
    if (max_order >= 1) ev.m1 = 1.0 / inverse_map_dz(model, m);
    if (max_order >= 2) ev.m2 = -inverse_map_d2z(model, m) * ev.m1 * ev.m1 * ev.m1;
    if (max_order >= 3)
        ev.m3 = -(inverse_map_d3z(model, m) * ev.m1 * ev.m1 * ev.m1 +
                  3.0 * inverse_map_d2z(model, m) * ev.m1 * ev.m2) *
                ev.m1;
    return ev;
}

namespace {

using RealFn = std::function<double(double)>;

// Bisection on a bracketing interval, then a few Newton polishing steps
// clamped to the bracket. 1e-13 absolute resolution on the variable.
double bracketed_root(const RealFn& f, const RealFn& df, double lo, double hi, double flo) {
    double a = lo, b = hi, fa = flo;
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 5; ++it) {
        const double fx = f(x);
        const double dx = df(x);
        if (dx == 0.0) break;
        const double next = x - fx / dx;
        if (next <= a || next >= b) break;
        x = next;
    }
    return x;
}

// Walk from an endpoint with a pole toward the interior until f takes the
// requested sign; returns the abscissa or NaN.
double walk_in(const RealFn& f, double from, double toward, bool want_negative) {
    for (int j = 0; j < 60; ++j) {
        const double t = std::ldexp(1.0, -j - 1);  // 2^-(j+1)
        const double x = from + (toward - from) * t;
        const double v = f(x);
        if (std::isfinite(v) && ((v < 0.0) == want_negative)) return x;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ClusterSupport support_clusters(const PopulationModel& model) {
    const int L = model.cluster_count();
    const auto dz = [&](double m) { return inverse_map_dz(model, cdouble(m, 0.0)).real(); };
    const auto d2z = [&](double m) { return inverse_map_d2z(model, cdouble(m, 0.0)).real(); };
    const auto d3z = [&](double m) { return inverse_map_d3z(model, cdouble(m, 0.0)).real(); };

    std::vector<double> roots;
    roots.reserve(2 * L);
    const auto fail = [&](const std::string& why) {
        throw NumericalError("SeparabilityViolated", why);
    };

    // one root in (-inf, -1/rho_1): z'(m) ~ (1-N/M)/m^2 > 0 far left, -inf at the pole
    {
        const double pole = -1.0 / model.rhos.front();
        double left = pole;
        double fleft = -1.0;
        bool found = false;
        for (int j = 1; j <= 60; ++j) {
            left = pole * (1.0 + std::ldexp(1.0, j - 10));
            fleft = dz(left);
            if (std::isfinite(fleft) && fleft > 0.0) {
                found = true;
                break;
            }
        }
        if (!found) fail("no sign change left of -1/rho_1");
        const double right = walk_in(dz, pole, left, true);
        if (!std::isfinite(right)) fail("no negative value near -1/rho_1 from the left");
        // bracket [left, right] has f(left) > 0, f(right) < 0
        roots.push_back(bracketed_root([&](double x) { return -dz(x); },
                                       [&](double x) { return -d2z(x); }, left, right, -fleft));
    }

    // two roots in each (-1/rho_i, -1/rho_{i+1}), split by the unique zero of z''
    for (int i = 0; i + 1 < L; ++i) {
        const double p = -1.0 / model.rhos[i];
        const double q = -1.0 / model.rhos[i + 1];
        const double lo = walk_in(d2z, p, q, false);  // z'' -> +inf at p
        const double hi = walk_in(d2z, q, p, true);   // z'' -> -inf at q
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
            fail("could not bracket the inflection between rho_" + std::to_string(i + 1) +
                 " and rho_" + std::to_string(i + 2));
        const double beta = bracketed_root(d2z, d3z, lo, hi, d2z(lo));
        if (!(dz(beta) > 0.0))
            fail("clusters " + std::to_string(i + 1) + " and " + std::to_string(i + 2) +
                 " merge (z' <= 0 at the inflection)");
        const double a1 = walk_in(dz, p, beta, true);
        const double b1 = walk_in(dz, q, beta, true);
        if (!std::isfinite(a1) || !std::isfinite(b1))
            fail("could not bracket the support roots in a gap");
        roots.push_back(bracketed_root(dz, d2z, a1, beta, dz(a1)));
        roots.push_back(bracketed_root(dz, d2z, beta, b1, dz(beta)));
    }

    // one root in (-1/rho_L, 0): -inf at the pole, +inf at 0^-
    {
        const double pole = -1.0 / model.rhos.back();
        const double lo = walk_in(dz, pole, 0.0, true);
        const double hi = walk_in(dz, 0.0, pole, false);
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
            fail("could not bracket the upper support edge");
        roots.push_back(bracketed_root(dz, d2z, lo, hi, dz(lo)));
    }

    if (static_cast<int>(roots.size()) != 2 * L) fail("fewer than 2L support-edge roots");

    std::vector<double> edges;
    edges.reserve(2 * L);
    for (double m : roots) edges.push_back(inverse_map_z(model, cdouble(m, 0.0)).real());
    std::sort(edges.begin(), edges.end());

    ClusterSupport support;
    for (int k = 0; k < L; ++k) {
        const double a = edges[2 * k];
        const double b = edges[2 * k + 1];
        if (!(a < b) || (k > 0 && !(support.intervals.back().second < a)))
            fail("support intervals overlap");
        support.intervals.emplace_back(a, b);
    }
    return support;
}

SeparabilityReport separability_check(const PopulationModel& model) {
    const int L = model.cluster_count();
    SeparabilityReport rep;
    const double mn_ratio = static_cast<double>(model.m_samples) / model.n_dim;

    if (L == 1) {
        rep.single_cluster = true;
        rep.margins = {mn_ratio};
        rep.separable = true;
        return rep;
    }

    // g(x) = sum_r w_r rho_r^2/(rho_r - x)^3, strictly increasing between
    // consecutive poles, -inf -> +inf on each (rho_i, rho_{i+1})
    const auto g = [&](double x) {
        double sum = 0.0;
        for (std::size_t r = 0; r < model.rhos.size(); ++r) {
            const double rho = model.rhos[r];
            const double w = static_cast<double>(model.mults[r]) / model.n_dim;
            const double d = rho - x;
            sum += w * rho * rho / (d * d * d);
        }
        return sum;
    };
    const auto dg = [&](double x) {
        double sum = 0.0;
        for (std::size_t r = 0; r < model.rhos.size(); ++r) {
            const double rho = model.rhos[r];
            const double w = static_cast<double>(model.mults[r]) / model.n_dim;
            const double d = rho - x;
            sum += 3.0 * w * rho * rho / (d * d * d * d);
        }
        return sum;
    };

    for (int i = 0; i + 1 < L; ++i) {
        const double lo = walk_in(g, model.rhos[i], model.rhos[i + 1], true);
        const double hi = walk_in(g, model.rhos[i + 1], model.rhos[i], false);
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
            throw NumericalError("RootBracketingFailure",
                                 "no sign change in (rho_" + std::to_string(i + 1) + ", rho_" +
                                     std::to_string(i + 2) + ")");
        rep.alphas.push_back(bracketed_root(g, dg, lo, hi, g(lo)));
    }

    // Psi sum via the shared moment kernel: sum w_r (rho_r/(rho_r-a))^2
    // equals weighted_moment(2, -1/a)/a^2.
    const auto psi_sum = [&](double alpha) {
        return weighted_moment_real(model, 2, -1.0 / alpha) / (alpha * alpha);
    };

    rep.margins.resize(L);
    for (int i = 0; i < L; ++i) {
        double psi;
        if (i == 0)
            psi = psi_sum(rep.alphas.front());
        else if (i == L - 1)
            psi = psi_sum(rep.alphas.back());
        else
            psi = std::max(psi_sum(rep.alphas[i - 1]), psi_sum(rep.alphas[i]));
        rep.margins[i] = mn_ratio - psi;
    }
    rep.separable =
        std::all_of(rep.margins.begin(), rep.margins.end(), [](double m) { return m > 0.0; });
    return rep;
}

}  // namespace popeig
