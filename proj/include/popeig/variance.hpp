#pragma once

#include <functional>
#include <vector>

#include "popeig/estimator.hpp"
#include "popeig/model.hpp"
#include "popeig/sampling.hpp"
#include "popeig/spectrum.hpp"

namespace popeig {

// L x L covariance of the scaled estimation errors, symmetric with positive
// diagonal.
struct CovarianceMatrix {
    int dim = 0;
    std::vector<double> data;  // row-major

    CovarianceMatrix() = default;
    explicit CovarianceMatrix(int L) : dim(L), data(static_cast<std::size_t>(L) * L) {}
    double& at(int k, int l) { return data[static_cast<std::size_t>(k) * dim + l]; }
    const double& at(int k, int l) const { return data[static_cast<std::size_t>(k) * dim + l]; }
};

// Rectangular integration path around one support cluster, symmetric about
// the real axis. Traversed counterclockwise; the two orientation flips of
// the negatively oriented double integral cancel.
struct Contour {
    int cluster_index = 0;
    double enclosed_lo = 0.0;  // support interval the rectangle must contain
    double enclosed_hi = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double half_height = 0.0;
    // how far the rectangle may be widened without touching a neighbouring
    // cluster or the origin (used when the quadrature reshapes contours)
    double widen_limit_lo = 0.0;
    double widen_limit_hi = 0.0;
    int nodes_per_edge = 64;
    bool counterclockwise = true;
};

struct QuadratureOptions {
    double margin_frac = 0.25;
    double height = 0.5;
    int nodes = 64;              // starting nodes per edge
    int max_nodes = 512;         // doubling cap
    double nested_shrink = 0.6;  // inner copy factor for the diagonal entries
};

// Rectangle for cluster k spans the interval widened by margin_frac of the
// gap to each neighbour (outermost sides use margin_frac of the cluster
// width). Throws NumericalError("OverlapAfterMargin") if rectangles collide
// or the first one would cross zero.
std::vector<Contour> build_contours(const ClusterSupport& support, double margin_frac,
                                    double height, int nodes);

// Data-driven variant: rectangles around the eigenvalue blocks of one
// realization, margins from the observed gaps. When the mu roots are passed
// the enclosed intervals are widened to contain them (the first root of a
// block can sit in the gap below its smallest eigenvalue).
std::vector<Contour> contours_from_spectrum(const SampleSpectrum& spec,
                                            const ClusterBlocks& blocks, double margin_frac,
                                            double height, int nodes,
                                            const MuRoots* mus = nullptr);

Contour nested_copy(const Contour& outer, double shrink);

// Widen the enclosed intervals of support-based contours to cover one
// realization's eigenvalues and mu roots (they fluctuate past the limiting
// edges); required before running empirical-transform quadrature on them.
std::vector<Contour> fit_contours(std::vector<Contour> contours, const SampleSpectrum& spec,
                                  const MuRoots& mus, const ClusterBlocks& blocks);

// Covariance kernel of the fluctuation process,
//   kappa(z1,z2) = m'(z1) m'(z2) / (m(z1)-m(z2))^2 - 1/(z1-z2)^2,
// evaluated from two transform evaluations (limiting or empirical alike).
// Throws NumericalError("CoincidentPoints") when z1 ~ z2 or m(z1) ~ m(z2).
cdouble kappa(const StieltjesEval& e1, const StieltjesEval& e2);

// Transform evaluator: z and requested derivative order -> StieltjesEval.
using TransformFn = std::function<StieltjesEval(cdouble, int)>;

TransformFn limiting_transform(const PopulationModel& model);
TransformFn empirical_transform(const SampleSpectrum& spec);

// Tensor-product Gauss-Legendre quadrature of
//   -1/(4 pi^2 c_k c_l) oint oint kappa(z1,z2)/(m(z1) m(z2)) dz1 dz2
// over the two rectangles, panels of 16 nodes per edge, node count doubled
// until successive results agree to 1e-6 relative (cap max_nodes). For
// k == l the second rectangle is replaced by a nested copy so z1 != z2
// everywhere. The imaginary residual must stay below 1e-8 of the result.
// Throws NonRealResult / QuadratureNonConvergence.
double theta_quadrature(const TransformFn& transform, const Contour& ck, const Contour& cl,
                        double c_k, double c_l, const QuadratureOptions& opts = {});

// Full matrix via quadrature; symmetrized, entries for k > l mirrored.
CovarianceMatrix theta_matrix_quadrature(const TransformFn& transform,
                                         const std::vector<Contour>& contours,
                                         const std::vector<double>& cluster_ratios,
                                         const QuadratureOptions& opts = {});

// Limiting covariance of the model: support -> contours -> quadrature.
CovarianceMatrix limiting_theta(const PopulationModel& model,
                                const QuadratureOptions& opts = {});

// Residue-evaluated plug-in estimate from one realization:
//   Theta_kl = (M^2/(N_k N_l)) [ sum_{i!=j} -1/((mu_i-mu_j)^2 m'(mu_i) m'(mu_j))
//              + delta_kl sum_i ( m'''(mu_i)/(6 m'(mu_i)^3)
//                                - m''(mu_i)^2/(4 m'(mu_i)^4) ) ]
// with derivatives of the empirical companion transform at the mu roots.
CovarianceMatrix empirical_theta(const SampleSpectrum& spec, const MuRoots& mus,
                                 const ClusterBlocks& blocks);

}  // namespace popeig
