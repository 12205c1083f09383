#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "popeig/errors.hpp"
#include "popeig/rng.hpp"
#include "popeig/sampling.hpp"
#include "popeig/spectrum.hpp"

using namespace popeig;

namespace {

PopulationModel make_model(std::vector<double> rhos, std::vector<int> mults, int n, int m) {
    PopulationModel p;
    p.rhos = std::move(rhos);
    p.mults = std::move(mults);
    p.n_dim = n;
    p.m_samples = m;
    return validate_model(p);
}

SampleSpectrum toy_spectrum() {
    SampleSpectrum s;
    s.lambdas = {1.0, 2.0};
    s.n_dim = 2;
    s.m_samples = 4;
    return s;
}

// central differences with Richardson extrapolation, the independent
// derivative oracle
cdouble fd_derivative(const std::function<cdouble(cdouble)>& f, cdouble z, double h) {
    const auto d = [&](double step) { return (f(z + step) - f(z - step)) / (2.0 * step); };
    const cdouble d1 = d(h);
    const cdouble d2 = d(h / 2.0);
    return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

TEST_CASE("companion transform: hand-evaluated rational sum") {
    // (1/4)(1/2 + 1/3) + (2/4)(1/1) = 17/24 at z = -1
    const StieltjesEval ev = empirical_companion_stieltjes(toy_spectrum(), cdouble(-1.0, 0.0), 0);
    CHECK(ev.m0.real() == doctest::Approx(17.0 / 24.0).epsilon(1e-14));
    CHECK(ev.m0.imag() == doctest::Approx(0.0));
}

TEST_CASE("companion transform conjugate symmetry") {
    const cdouble z(0.7, 1.3);
    const StieltjesEval a = empirical_companion_stieltjes(toy_spectrum(), z, 3);
    const StieltjesEval b = empirical_companion_stieltjes(toy_spectrum(), std::conj(z), 3);
    CHECK(std::abs(a.m0 - std::conj(b.m0)) < 1e-15);
    CHECK(std::abs(a.m1 - std::conj(b.m1)) < 1e-15);
    CHECK(std::abs(a.m3 - std::conj(b.m3)) < 1e-15);
}

TEST_CASE("companion transform derivatives match finite differences") {
    const SampleSpectrum spec = toy_spectrum();
    const auto f = [&](cdouble z) { return empirical_companion_stieltjes(spec, z, 0).m0; };
    const auto f1 = [&](cdouble z) { return empirical_companion_stieltjes(spec, z, 1).m1; };
    const auto f2 = [&](cdouble z) { return empirical_companion_stieltjes(spec, z, 2).m2; };

    SUBCASE("order 1 at z = -1 against plain central differences") {
        const StieltjesEval ev = empirical_companion_stieltjes(spec, cdouble(-1.0, 0.0), 1);
        const cdouble fd =
            (f(cdouble(-1.0 + 1e-6, 0.0)) - f(cdouble(-1.0 - 1e-6, 0.0))) / cdouble(2e-6, 0.0);
        CHECK(std::abs(ev.m1 - fd) < 1e-8 * std::abs(fd));
    }
    SUBCASE("orders 1-3 at points off the support") {
        for (const cdouble z : {cdouble(-0.5, 0.0), cdouble(3.0, 0.4), cdouble(0.4, -0.9)}) {
            const StieltjesEval ev = empirical_companion_stieltjes(spec, z, 3);
            const double h = 1e-5 * std::abs(z);
            CHECK(std::abs(ev.m1 - fd_derivative(f, z, h)) <= 1e-6 * std::abs(ev.m1));
            CHECK(std::abs(ev.m2 - fd_derivative(f1, z, h)) <= 1e-6 * std::abs(ev.m2));
            CHECK(std::abs(ev.m3 - fd_derivative(f2, z, h)) <= 1e-6 * std::abs(ev.m3));
        }
    }
}

TEST_CASE("pole hits are reported") {
    CHECK_THROWS_WITH_AS(empirical_companion_stieltjes(toy_spectrum(), cdouble(1.0, 0.0), 0),
                         doctest::Contains("PoleHit"), NumericalError);
    CHECK_THROWS_WITH_AS(empirical_companion_stieltjes(toy_spectrum(), cdouble(0.0, 0.0), 0),
                         doctest::Contains("PoleHit"), NumericalError);
}

TEST_CASE("companion and sample transforms obey the M/N relation") {
    const PopulationModel model = make_model({1, 3, 10}, {20, 20, 20}, 60, 600);
    const SampleSpectrum spec = sample_spectrum(model, 3);
    SplitMix64 gen(11);
    const double ratio = 600.0 / 60.0;
    for (int i = 0; i < 100; ++i) {
        const cdouble z(30.0 * gen.next_double() - 10.0, 2.0 * gen.next_double() + 0.05);
        const cdouble lhs = empirical_sample_stieltjes(spec, z);
        const cdouble comp = empirical_companion_stieltjes(spec, z, 0).m0;
        const cdouble rhs = ratio * comp - (1.0 - ratio) / z;
        CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("limiting transform satisfies its fixed-point equation") {
    const PopulationModel mp = make_model({1.0}, {10}, 10, 100);  // c = 0.1
    const StieltjesEval ev = solve_limiting_stieltjes(mp, cdouble(2.0, 0.5), 0);
    const cdouble rhs = -1.0 / (cdouble(2.0, 0.5) - 0.1 * 1.0 / (1.0 + ev.m0));
    CHECK(std::abs(ev.m0 - rhs) < 1e-12);
}

TEST_CASE("limiting transform is real outside the support") {
    const PopulationModel mp = make_model({1.0}, {10}, 10, 100);
    // support is [(1-sqrt(0.1))^2, (1+sqrt(0.1))^2] ~ [0.468, 1.732]
    const StieltjesEval ev = solve_limiting_stieltjes(mp, cdouble(3.0, 0.0), 1);
    CHECK(ev.m0.imag() == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(ev.m0.real() < 0.0);
}

TEST_CASE("limiting transform matches the MP closed form") {
    // for a single unit eigenvalue the fixed point is a quadratic:
    // z m^2 + (z + 1 - c) m + 1 = 0, upper-half-plane branch
    const PopulationModel mp = make_model({1.0}, {10}, 10, 100);
    const double c = 0.1;
    for (const cdouble z : {cdouble(2, 1), cdouble(-1, 0.5), cdouble(0.9, 2.0)}) {
        const cdouble disc = std::sqrt((z + (1.0 - c)) * (z + (1.0 - c)) - 4.0 * z);
        cdouble m = (-(z + (1.0 - c)) + disc) / (2.0 * z);
        if (m.imag() * z.imag() < 0.0) m = (-(z + (1.0 - c)) - disc) / (2.0 * z);
        const StieltjesEval ev = solve_limiting_stieltjes(mp, z, 0);
        CHECK(std::abs(ev.m0 - m) < 1e-11 * std::abs(m));
    }
}

TEST_CASE("limiting derivatives match finite differences") {
    const PopulationModel model = make_model({1, 3, 10}, {20, 20, 20}, 60, 600);
    const auto f = [&](cdouble z) { return solve_limiting_stieltjes(model, z, 0).m0; };
    const auto f1 = [&](cdouble z) { return solve_limiting_stieltjes(model, z, 1).m1; };
    const auto f2 = [&](cdouble z) { return solve_limiting_stieltjes(model, z, 2).m2; };
    for (const cdouble z : {cdouble(5.0, 1.0), cdouble(1.9, 0.4), cdouble(-2.0, 0.0)}) {
        const StieltjesEval ev = solve_limiting_stieltjes(model, z, 3);
        const double h = 1e-5 * std::abs(z);
        CHECK(std::abs(ev.m1 - fd_derivative(f, z, h)) <= 1e-6 * std::abs(ev.m1));
        CHECK(std::abs(ev.m2 - fd_derivative(f1, z, h)) <= 1e-6 * std::abs(ev.m2));
        CHECK(std::abs(ev.m3 - fd_derivative(f2, z, h)) <= 1e-6 * std::abs(ev.m3));
    }
}

TEST_CASE("support endpoints: Marchenko-Pastur closed form at c = 1/4") {
    const PopulationModel mp = make_model({1.0}, {25}, 25, 100);
    const ClusterSupport s = support_clusters(mp);
    REQUIRE(s.cluster_count() == 1);
    CHECK(std::abs(s.intervals[0].first - 0.25) < 1e-10);
    CHECK(std::abs(s.intervals[0].second - 2.25) < 1e-10);
}

TEST_CASE("reference model: three disjoint intervals containing their rho_k") {
    const PopulationModel model = make_model({1, 3, 10}, {20, 20, 20}, 60, 600);
    const ClusterSupport s = support_clusters(model);
    REQUIRE(s.cluster_count() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(s.intervals[k].first < model.rhos[k]);
        CHECK(s.intervals[k].second > model.rhos[k]);
        if (k > 0) CHECK(s.intervals[k - 1].second < s.intervals[k].first);
    }
    // the first cluster sits inside the isolated-eigenvalue MP interval
    // (1 +- sqrt(0.1))^2; the other clusters squeeze it
    const double mp_lo = (1.0 - std::sqrt(0.1)) * (1.0 - std::sqrt(0.1));
    const double mp_hi = (1.0 + std::sqrt(0.1)) * (1.0 + std::sqrt(0.1));
    CHECK(s.intervals[0].first > mp_lo);
    CHECK(s.intervals[0].second < mp_hi);
    // and the sampled eigenvalue blocks land inside the computed intervals
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SampleSpectrum spec = sample_spectrum(model, seed);
        const double eps = 0.15;
        for (int k = 0; k < 3; ++k) {
            CHECK(spec.lambdas[20 * k] > s.intervals[k].first - eps);
            CHECK(spec.lambdas[20 * k + 19] < s.intervals[k].second + eps);
        }
    }
}

TEST_CASE("support endpoints scale homogeneously with the spectrum") {
    SplitMix64 gen(4);
    for (int rep = 0; rep < 10; ++rep) {
        const double s = 0.25 + 4.0 * gen.next_double();
        const PopulationModel base = make_model({1, 3, 10}, {20, 20, 20}, 60, 600);
        PopulationModel scaled = base;
        for (double& r : scaled.rhos) r *= s;
        const ClusterSupport sup1 = support_clusters(base);
        const ClusterSupport sup2 = support_clusters(scaled);
        for (int k = 0; k < 3; ++k) {
            CHECK(sup2.intervals[k].first ==
                  doctest::Approx(s * sup1.intervals[k].first).epsilon(1e-10));
            CHECK(sup2.intervals[k].second ==
                  doctest::Approx(s * sup1.intervals[k].second).epsilon(1e-10));
        }
    }
}

TEST_CASE("separability: reference model is separable, near-equal at c=1 is not") {
    const SeparabilityReport ok = separability_check(make_model({1, 3, 10}, {20, 20, 20}, 60, 600));
    REQUIRE(ok.margins.size() == 3);
    for (double m : ok.margins) CHECK(m > 0.0);
    CHECK(ok.separable);

    const PopulationModel bad = make_model({1.0, 1.05}, {30, 30}, 60, 61);  // c ~ 1
    const SeparabilityReport rep = separability_check(bad);
    CHECK(!rep.separable);
    CHECK(*std::min_element(rep.margins.begin(), rep.margins.end()) < 0.0);
    CHECK_THROWS_WITH_AS(support_clusters(bad), doctest::Contains("SeparabilityViolated"),
                         NumericalError);
}

TEST_CASE("single cluster is separable by convention") {
    const SeparabilityReport rep = separability_check(make_model({2.0}, {30}, 30, 120));
    CHECK(rep.single_cluster);
    CHECK(rep.separable);
    REQUIRE(rep.margins.size() == 1);
    CHECK(rep.margins[0] == doctest::Approx(4.0));
}

TEST_CASE("support splits into L clusters exactly when margins are positive") {
    SplitMix64 gen(17);
    int separable_seen = 0, merged_seen = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const double gap = 0.05 + 2.0 * gen.next_double();
        const int m_over_n = 1 + static_cast<int>(gen.next() % 10);
        PopulationModel p;
        p.rhos = {1.0, 1.0 + gap};
        p.mults = {15, 15};
        p.n_dim = 30;
        p.m_samples = 30 * m_over_n + 7;
        const PopulationModel model = validate_model(p);
        const SeparabilityReport rep2 = separability_check(model);
        if (rep2.separable) {
            ++separable_seen;
            CHECK(support_clusters(model).cluster_count() == 2);
        } else {
            ++merged_seen;
            CHECK_THROWS_AS(support_clusters(model), NumericalError);
        }
    }
    CHECK(separable_seen > 0);
    CHECK(merged_seen > 0);
}
