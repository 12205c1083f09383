#include "popeig/variance.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "popeig/errors.hpp"

namespace popeig {

namespace {

constexpr int kPanelOrder = 16;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre polynomial (symmetric, so only half are computed).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
}

struct PathNode {
    cdouble z;
    cdouble weight;  // quadrature weight times dz/dt
};

// Counterclockwise rectangle as four edges, each split into 16-node
// Gauss-Legendre panels.
std::vector<PathNode> contour_nodes(const Contour& c, int nodes_per_edge) {
    const int panels = std::max(1, nodes_per_edge / kPanelOrder);
    std::vector<double> gx, gw;
    gauss_legendre(kPanelOrder, gx, gw);

    const cdouble bl(c.x_lo, -c.half_height);
    const cdouble br(c.x_hi, -c.half_height);
    const cdouble tr(c.x_hi, c.half_height);
    const cdouble tl(c.x_lo, c.half_height);
    const std::array<std::pair<cdouble, cdouble>, 4> edges = {
        std::pair{bl, br}, {br, tr}, {tr, tl}, {tl, bl}};

    std::vector<PathNode> nodes;
    nodes.reserve(static_cast<std::size_t>(4) * panels * kPanelOrder);
    for (const auto& [from, to] : edges) {
        const cdouble step = (to - from) / static_cast<double>(panels);
        for (int p = 0; p < panels; ++p) {
            const cdouble a = from + step * static_cast<double>(p);
            const cdouble mid = a + 0.5 * step;
            const cdouble half = 0.5 * step;
            for (int i = 0; i < kPanelOrder; ++i)
                nodes.push_back({mid + half * gx[i], half * gw[i]});
        }
    }
    if (!c.counterclockwise)
        for (auto& nd : nodes) nd.weight = -nd.weight;
    return nodes;
}

struct NodeEval {
    cdouble z;
    cdouble weight;
    cdouble m0, m1;
};

std::vector<NodeEval> evaluate_nodes(const TransformFn& transform,
                                     const std::vector<PathNode>& nodes) {
    std::vector<NodeEval> out;
    out.reserve(nodes.size());
    for (const auto& nd : nodes) {
        const StieltjesEval ev = transform(nd.z, 1);
        out.push_back({nd.z, nd.weight, ev.m0, ev.m1});
    }
    return out;
}

double quadrature_pass(const TransformFn& transform, const Contour& ck, const Contour& cl,
                       double c_k, double c_l, int nodes_per_edge, cdouble& raw) {
    const std::vector<NodeEval> ek = evaluate_nodes(transform, contour_nodes(ck, nodes_per_edge));
    const std::vector<NodeEval> el = evaluate_nodes(transform, contour_nodes(cl, nodes_per_edge));

    double zscale = 1.0;
    for (const NodeEval& e : ek) zscale = std::max(zscale, std::abs(e.z));
    for (const NodeEval& e : el) zscale = std::max(zscale, std::abs(e.z));
    const double z_guard = 1e-14 * zscale;

    cdouble sum = 0.0;
    for (const NodeEval& e1 : ek) {
        cdouble inner = 0.0;
        for (const NodeEval& e2 : el) {
            const cdouble dz = e1.z - e2.z;
            const cdouble dm = e1.m0 - e2.m0;
            if (std::abs(dz) < z_guard ||
                std::abs(dm) < 1e-14 * std::max(std::abs(e1.m0), std::abs(e2.m0)))
                throw NumericalError("CoincidentPoints",
                                     "quadrature node pair too close to a kernel singularity");
            const cdouble kern = e1.m1 * e2.m1 / (dm * dm) - 1.0 / (dz * dz);
            inner += e2.weight * kern / e2.m0;
        }
        sum += e1.weight * inner / e1.m0;
    }
    raw = sum * (-1.0 / (4.0 * M_PI * M_PI * c_k * c_l));
    return raw.real();
}

// First-order distance (in the z metric) from the node pairs to the variety
// m(z1) = m(z2), where the kernel has genuine poles for z1 != z2. The double
// integral equals the residue value on any contour pair that stays clear of
// it, but the transform can fold (m' = 0 between clusters), and a folded
// image puts pole pairs arbitrarily close to a naively chosen torus.
double pair_clearance(const TransformFn& transform, const Contour& ck, const Contour& cl,
                      int nodes_per_edge) {
    const std::vector<NodeEval> ek = evaluate_nodes(transform, contour_nodes(ck, nodes_per_edge));
    const std::vector<NodeEval> el = evaluate_nodes(transform, contour_nodes(cl, nodes_per_edge));
    double best = std::numeric_limits<double>::infinity();
    for (const NodeEval& e1 : ek)
        for (const NodeEval& e2 : el) {
            if (std::abs(e1.z - e2.z) < 1e-12) continue;
            const double d = std::abs(e1.m0 - e2.m0) /
                             (std::abs(e1.m1) + std::abs(e2.m1) +
                              std::numeric_limits<double>::min());
            best = std::min(best, d);
        }
    return best;
}

double longest_edge(const Contour& c) {
    return std::max(c.x_hi - c.x_lo, 2.0 * c.half_height);
}

Contour reshape(const Contour& base, double widen, double height_mult) {
    // unset widen limits (manual contours) leave no widening room
    const bool has_limits = base.widen_limit_hi > base.widen_limit_lo;
    const double limit_lo = has_limits ? base.widen_limit_lo : base.x_lo;
    const double limit_hi = has_limits ? base.widen_limit_hi : base.x_hi;
    Contour c = base;
    c.x_lo = std::max(limit_lo, base.enclosed_lo - widen * (base.enclosed_lo - base.x_lo));
    c.x_hi = std::min(limit_hi, base.enclosed_hi + widen * (base.x_hi - base.enclosed_hi));
    c.half_height = height_mult * base.half_height;
    return c;
}

Contour shrink_inner(const Contour& base, double margin_shrink, double height_mult) {
    Contour c = base;
    c.x_lo = base.enclosed_lo - margin_shrink * (base.enclosed_lo - base.x_lo);
    c.x_hi = base.enclosed_hi + margin_shrink * (base.x_hi - base.enclosed_hi);
    c.half_height = height_mult * base.half_height;
    return c;
}

double real_m(const TransformFn& transform, double x) {
    return transform(cdouble(x, 0.0), 0).m0.real();
}

// abscissa in (lo, hi) where the (real, increasing) transform hits the
// target; clamps to the endpoint when the target is out of reach
double solve_real_anchor(const TransformFn& transform, double lo, double hi, double target) {
    double a = lo, b = hi;
    double fa = real_m(transform, a);
    double fb = real_m(transform, b);
    if (target <= fa) return a;
    if (target >= fb) return b;
    for (int it = 0; it < 80 && (b - a) > 1e-12 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        if (real_m(transform, mid) < target)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

// Nested pair for a diagonal entry. The transform maps each rectangle to a
// closed curve crossing the real axis at the two m-values of the rectangle's
// axis crossings ("anchors"); if the inner anchors do not lie between the
// outer ones the image curves must intersect and the kernel acquires a pole
// pair on the integration torus. So the inner crossings are placed by value:
// bisect the real-axis transform for targets strictly inside the outer
// anchor chord.
bool anchored_nested_pair(const TransformFn& transform, const Contour& base, double outer_height,
                          double inner_height, double t_left, double t_right, Contour& outer,
                          Contour& inner) {
    outer = reshape(base, 1e9, 1.0);  // widen to the stored limits
    outer.x_lo = base.enclosed_lo - 0.95 * (base.enclosed_lo - outer.x_lo);
    outer.x_hi = base.enclosed_hi + 0.95 * (outer.x_hi - base.enclosed_hi);
    outer.half_height = outer_height;
    const double span = outer.x_hi - outer.x_lo;
    const double anchor_lo = real_m(transform, outer.x_lo);
    const double anchor_hi = real_m(transform, outer.x_hi);
    if (!(anchor_hi > anchor_lo)) return false;

    const double va = anchor_lo + t_left * (anchor_hi - anchor_lo);
    const double vb = anchor_lo + t_right * (anchor_hi - anchor_lo);
    inner = outer;
    inner.half_height = inner_height;
    inner.x_lo = solve_real_anchor(transform, outer.x_lo + 1e-6 * span,
                                   base.enclosed_lo - 1e-9 * span, va);
    inner.x_hi = solve_real_anchor(transform, base.enclosed_hi + 1e-9 * span,
                                   outer.x_hi - 1e-6 * span, vb);
    return inner.x_lo < base.enclosed_lo && inner.x_hi > base.enclosed_hi;
}

}  // namespace

std::vector<Contour> build_contours(const ClusterSupport& support, double margin_frac,
                                    double height, int nodes) {
    if (!(margin_frac > 0.0) || !(height > 0.0))
        throw InputError("InvalidContourParameters", "margin_frac and height must be positive");
    const int L = support.cluster_count();
    std::vector<Contour> out;
    out.reserve(L);
    for (int k = 0; k < L; ++k) {
        const auto [a, b] = support.intervals[k];
        const double width = b - a;
        const double gap_left =
            (k == 0) ? width : a - support.intervals[k - 1].second;
        const double gap_right =
            (k == L - 1) ? width : support.intervals[k + 1].first - b;
        Contour c;
        c.cluster_index = k;
        c.enclosed_lo = a;
        c.enclosed_hi = b;
        c.x_lo = a - margin_frac * gap_left;
        c.x_hi = b + margin_frac * gap_right;
        c.widen_limit_lo = a - 0.45 * gap_left;
        if (k == 0) c.widen_limit_lo = std::max(c.widen_limit_lo, 0.05 * a);
        c.widen_limit_hi = b + 0.45 * gap_right;
        c.half_height = height;
        c.nodes_per_edge = nodes;
        out.push_back(c);
    }
    for (int k = 0; k < L; ++k) {
        if (k > 0 && !(out[k - 1].x_hi < out[k].x_lo))
            throw NumericalError("OverlapAfterMargin",
                                 "contours " + std::to_string(k) + " and " +
                                     std::to_string(k + 1) + " overlap");
        if (out[k].x_lo <= 0.0)
            throw NumericalError("OverlapAfterMargin",
                                 "left margin of the first contour crosses zero");
    }
    return out;
}

std::vector<Contour> contours_from_spectrum(const SampleSpectrum& spec,
                                            const ClusterBlocks& blocks, double margin_frac,
                                            double height, int nodes, const MuRoots* mus) {
    ClusterSupport s;
    for (const auto& [first, last] : blocks.blocks) {
        double lo = spec.lambdas[first];
        double hi = spec.lambdas[last - 1];
        if (mus)
            for (int i = first; i < last; ++i) {
                lo = std::min(lo, mus->mus[i]);
                hi = std::max(hi, mus->mus[i]);
            }
        s.intervals.emplace_back(lo, hi);
    }
    return build_contours(s, margin_frac, height, nodes);
}

std::vector<Contour> fit_contours(std::vector<Contour> contours, const SampleSpectrum& spec,
                                  const MuRoots& mus, const ClusterBlocks& blocks) {
    if (contours.size() != blocks.blocks.size())
        throw InputError("DimensionMismatch", "contours and blocks disagree");
    for (std::size_t k = 0; k < contours.size(); ++k) {
        Contour& c = contours[k];
        const auto [first, last] = blocks.blocks[k];
        double lo = c.enclosed_lo, hi = c.enclosed_hi;
        for (int i = first; i < last; ++i) {
            lo = std::min({lo, spec.lambdas[i], mus.mus[i]});
            hi = std::max({hi, spec.lambdas[i], mus.mus[i]});
        }
        // eigenvalues past the rectangle itself: nudge the wall out, keeping
        // a tenth of the original margin
        if (lo < c.x_lo) c.x_lo = lo - 0.1 * (c.enclosed_lo - c.x_lo);
        if (hi > c.x_hi) c.x_hi = hi + 0.1 * (c.x_hi - c.enclosed_hi);
        c.enclosed_lo = lo;
        c.enclosed_hi = hi;
    }
    for (std::size_t k = 1; k < contours.size(); ++k)
        if (!(contours[k - 1].x_hi < contours[k].x_lo))
            throw NumericalError("OverlapAfterMargin",
                                 "fitted contours overlap between clusters " +
                                     std::to_string(k) + " and " + std::to_string(k + 1));
    return contours;
}

Contour nested_copy(const Contour& outer, double shrink) {
    // margins shrink toward the enclosed interval, so the inner rectangle
    // still contains every pole of the integrand
    Contour inner = outer;
    inner.x_lo = outer.enclosed_lo - shrink * (outer.enclosed_lo - outer.x_lo);
    inner.x_hi = outer.enclosed_hi + shrink * (outer.x_hi - outer.enclosed_hi);
    inner.half_height = shrink * outer.half_height;
    return inner;
}

cdouble kappa(const StieltjesEval& e1, const StieltjesEval& e2) {
    const cdouble dz = e1.z - e2.z;
    const cdouble dm = e1.m0 - e2.m0;
    const double scale = std::max({1.0, std::abs(e1.z), std::abs(e2.z)});
    if (std::abs(dz) < 1e-14 * scale)
        throw NumericalError("CoincidentPoints", "z1 and z2 coincide");
    if (std::abs(dm) < 1e-14 * std::max(std::abs(e1.m0), std::abs(e2.m0)))
        throw NumericalError("CoincidentPoints", "m(z1) and m(z2) coincide");
    return e1.m1 * e2.m1 / (dm * dm) - 1.0 / (dz * dz);
}

TransformFn limiting_transform(const PopulationModel& model) {
    return [model](cdouble z, int order) { return solve_limiting_stieltjes(model, z, order); };
}

TransformFn empirical_transform(const SampleSpectrum& spec) {
    return [spec](cdouble z, int order) { return empirical_companion_stieltjes(spec, z, order); };
}

namespace {

// Doubling loop on one fixed contour pair: Cauchy criterion 1e-6 relative,
// imaginary residual below 1e-8 of the result.
double theta_on_pair(const TransformFn& transform, const Contour& ck, const Contour& cl,
                     double c_k, double c_l, const QuadratureOptions& opts) {
    int nodes = std::max(kPanelOrder, opts.nodes);
    cdouble raw;
    double prev = quadrature_pass(transform, ck, cl, c_k, c_l, nodes, raw);
    double value = prev;
    bool converged = nodes >= opts.max_nodes;  // caller pinned the node count
    while (nodes < opts.max_nodes) {
        nodes *= 2;
        value = quadrature_pass(transform, ck, cl, c_k, c_l, nodes, raw);
        if (std::abs(value - prev) <= 1e-6 * std::max(1.0, std::abs(value))) {
            converged = true;
            break;
        }
        prev = value;
    }
    if (!converged)
        throw NumericalError("QuadratureNonConvergence",
                             "node doubling did not settle at " + std::to_string(nodes) +
                                 " nodes/edge");
    if (std::abs(raw.imag()) > 1e-8 * std::abs(raw))
        throw NumericalError("NonRealResult",
                             "imaginary residual " + std::to_string(raw.imag()));
    return value;
}

}  // namespace

double theta_quadrature(const TransformFn& transform, const Contour& ck, const Contour& cl,
                        double c_k, double c_l, const QuadratureOptions& opts) {
    const bool diagonal = ck.cluster_index == cl.cluster_index;

    // Candidate contour pairs, most promising first. A tall outer rectangle
    // keeps the transform small and smooth on its horizontal edges, well
    // separated from the inner values; widening moves the real-axis anchor
    // values of the image curves apart.
    std::vector<std::pair<Contour, Contour>> candidates;
    if (diagonal) {
        const double h = ck.half_height;
        // anchor-targeted nested pairs first: (outer height, inner height,
        // inner anchor targets within the outer chord)
        for (const auto& [ho, hi, ta, tb] :
             std::initializer_list<std::array<double, 4>>{{4.0, 0.5, 0.7, 0.3},
                                                          {2.0, 0.35, 0.55, 0.2},
                                                          {4.0, 0.25, 0.85, 0.5},
                                                          {8.0, 0.75, 0.6, 0.4}}) {
            Contour outer, inner;
            if (anchored_nested_pair(transform, ck, ho * h, hi * h, ta, tb, outer, inner))
                candidates.emplace_back(outer, inner);
        }
        // plain margin-shrunk fallbacks
        const double s = opts.nested_shrink;
        for (const auto& [widen, ho, si, hi] : std::initializer_list<std::array<double, 4>>{
                 {1.0, 2.0, s, s}, {1.0, 1.0, s, s}, {1.6, 4.0, 0.5, 0.25}}) {
            const Contour outer = reshape(ck, widen, ho);
            candidates.emplace_back(outer, shrink_inner(outer, si, hi / ho));
        }
    } else {
        for (const auto& [hk, hl] : std::initializer_list<std::array<double, 2>>{
                 {1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}, {2.0, 0.5}, {0.5, 0.5}})
            candidates.emplace_back(reshape(ck, 1.0, hk), reshape(cl, 1.0, hl));
    }

    double best_clear = -1.0;
    std::string last_error;
    for (const auto& [ca, cb] : candidates) {
        const double clearance = pair_clearance(transform, ca, cb, std::max(32, opts.nodes / 2));
        best_clear = std::max(best_clear, clearance);
        const double panel_cap =
            std::max(longest_edge(ca), longest_edge(cb)) * kPanelOrder / opts.max_nodes;
#ifdef POPEIG_QUAD_DEBUG
        fprintf(stderr, "cand outer [%g,%g]x%g inner [%g,%g]x%g clr %.3e thresh %.3e\n", ca.x_lo,
                ca.x_hi, ca.half_height, cb.x_lo, cb.x_hi, cb.half_height, clearance,
                0.02 * panel_cap);
#endif
        // skip only catastrophically dirty pairs; the doubling criterion is
        // the real arbiter
        if (clearance < 0.02 * panel_cap) continue;
        try {
            return theta_on_pair(transform, ca, cb, c_k, c_l, opts);
        } catch (const NumericalError& e) {
            last_error = e.what();
#ifdef POPEIG_QUAD_DEBUG
            fprintf(stderr, "  -> failed: %s\n", e.what());
#endif
        }
    }
    throw NumericalError("QuadratureNonConvergence",
                         (last_error.empty() ? std::string("all contour candidates screened out")
                                             : last_error) +
                             " (best pair clearance " + std::to_string(best_clear) + ")");
}

CovarianceMatrix theta_matrix_quadrature(const TransformFn& transform,
                                         const std::vector<Contour>& contours,
                                         const std::vector<double>& cluster_ratios,
                                         const QuadratureOptions& opts) {
    const int L = static_cast<int>(contours.size());
    CovarianceMatrix theta(L);
    for (int k = 0; k < L; ++k)
        for (int l = k; l < L; ++l) {
            const double v = theta_quadrature(transform, contours[k], contours[l],
                                              cluster_ratios[k], cluster_ratios[l], opts);
            theta.at(k, l) = v;
            theta.at(l, k) = v;
        }
    return theta;
}

CovarianceMatrix limiting_theta(const PopulationModel& model, const QuadratureOptions& opts) {
    const ClusterSupport support = support_clusters(model);
    const std::vector<Contour> contours =
        build_contours(support, opts.margin_frac, opts.height, opts.nodes);
    std::vector<double> ratios(model.cluster_count());
    for (int k = 0; k < model.cluster_count(); ++k) ratios[k] = model.cluster_ratio(k);
    return theta_matrix_quadrature(limiting_transform(model), contours, ratios, opts);
}

CovarianceMatrix empirical_theta(const SampleSpectrum& spec, const MuRoots& mus,
                                 const ClusterBlocks& blocks) {
    const int L = blocks.cluster_count();
    const int n = spec.n_dim;
    if (static_cast<int>(mus.mus.size()) != n || blocks.blocks.back().second != n)
        throw InputError("DimensionMismatch", "mu roots / blocks inconsistent with spectrum");

    // derivatives of the companion transform at every mu root
    std::vector<double> d1(n), d2(n), d3(n);
    for (int i = 0; i < n; ++i) {
        const StieltjesEval ev = empirical_companion_stieltjes(spec, mus.mus[i], 3);
        d1[i] = ev.m1.real();
        d2[i] = ev.m2.real();
        d3[i] = ev.m3.real();
        if (std::abs(d1[i]) < 1e-12)
            throw NumericalError("ZeroDerivativeAtRoot",
                                 "m'(mu_" + std::to_string(i) + ") ~ 0");
    }

    CovarianceMatrix theta(L);
    const double m_samples = spec.m_samples;
    for (int k = 0; k < L; ++k) {
        const auto [kf, kl] = blocks.blocks[k];
        for (int l = k; l < L; ++l) {
            const auto [lf, ll] = blocks.blocks[l];
            double sum = 0.0;
            for (int i = kf; i < kl; ++i)
                for (int j = lf; j < ll; ++j) {
                    if (i == j) continue;
                    const double dmu = mus.mus[i] - mus.mus[j];
                    if (dmu == 0.0)
                        throw NumericalError("ZeroDerivativeAtRoot",
                                             "coincident mu roots in the pair sum");
                    sum += -1.0 / (dmu * dmu * d1[i] * d1[j]);
                }
            if (k == l)
                for (int i = kf; i < kl; ++i)
                    sum += d3[i] / (6.0 * d1[i] * d1[i] * d1[i]) -
                           d2[i] * d2[i] / (4.0 * d1[i] * d1[i] * d1[i] * d1[i]);
            const double pref =
                m_samples * m_samples / (static_cast<double>(kl - kf) * (ll - lf));
            theta.at(k, l) = pref * sum;
            theta.at(l, k) = pref * sum;
        }
    }
    return theta;
}

}  // namespace popeig
