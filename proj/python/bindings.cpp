#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "popeig/errors.hpp"
#include "popeig/estimator.hpp"
#include "popeig/model.hpp"
#include "popeig/montecarlo.hpp"
#include "popeig/radio.hpp"
#include "popeig/sampling.hpp"
#include "popeig/spectrum.hpp"
#include "popeig/variance.hpp"

namespace py = pybind11;
using namespace popeig;

namespace {

PopulationModel make_model(std::vector<double> rhos, std::vector<int> mults, int m_samples) {
    PopulationModel p;
    p.rhos = std::move(rhos);
    p.mults = std::move(mults);
    p.n_dim = 0;
    for (int nk : p.mults) p.n_dim += nk;
    p.m_samples = m_samples;
    return validate_model(p);
}

std::vector<std::vector<double>> matrix_rows(const CovarianceMatrix& theta) {
    std::vector<std::vector<double>> rows(theta.dim, std::vector<double>(theta.dim));
    for (int k = 0; k < theta.dim; ++k)
        for (int l = 0; l < theta.dim; ++l) rows[k][l] = theta.at(k, l);
    return rows;
}

SampleSpectrum spectrum_from_lambdas(std::vector<double> lambdas, int m_samples) {
    SampleSpectrum s;
    s.n_dim = static_cast<int>(lambdas.size());
    s.lambdas = std::move(lambdas);
    s.m_samples = m_samples;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "population eigenvalue estimation from sample covariance matrices";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<PopulationModel>(m, "PopulationModel")
        .def(py::init(&make_model), py::arg("rhos"), py::arg("mults"), py::arg("samples"))
        .def_readonly("rhos", &PopulationModel::rhos)
        .def_readonly("mults", &PopulationModel::mults)
        .def_readonly("n_dim", &PopulationModel::n_dim)
        .def_readonly("m_samples", &PopulationModel::m_samples)
        .def_property_readonly("c", &PopulationModel::ratio)
        .def("__repr__", [](const PopulationModel& p) { return model_to_json_text(p); });

    m.def("sample_eigenvalues",
          [](const PopulationModel& model, std::uint64_t seed) {
              return sample_spectrum(model, seed).lambdas;
          },
          py::arg("model"), py::arg("seed"),
          "ordered sample covariance eigenvalues of one synthesized realization");

    m.def("support_intervals",
          [](const PopulationModel& model) { return support_clusters(model).intervals; },
          py::arg("model"), "support intervals [a_k, b_k] of the limiting spectral law");

    m.def("separability",
          [](const PopulationModel& model) {
              const SeparabilityReport r = separability_check(model);
              py::dict d;
              d["margins"] = r.margins;
              d["separable"] = r.separable;
              d["single_cluster"] = r.single_cluster;
              return d;
          },
          py::arg("model"), "cluster-split margins M/N - Psi(i)");

    m.def("mu_roots",
          [](std::vector<double> lambdas, int m_samples) {
              return solve_mu(spectrum_from_lambdas(std::move(lambdas), m_samples)).mus;
          },
          py::arg("lambdas"), py::arg("m_samples"),
          "ordered roots of the secular equation for the given sample eigenvalues");

    m.def("estimate",
          [](const PopulationModel& model, std::uint64_t seed) {
              const SampleSpectrum spec = sample_spectrum(model, seed);
              const MuRoots mus = solve_mu(spec);
              const std::vector<double> rho = estimate_rho(spec, mus, cluster_blocks(model));
              py::dict d;
              d["rho_hat"] = rho;
              d["mu_hat"] = mus.mus;
              d["lambdas"] = spec.lambdas;
              return d;
          },
          py::arg("model"), py::arg("seed"),
          "synthesize one realization and estimate the population eigenvalues");

    m.def("estimate_from_eigenvalues",
          [](std::vector<double> lambdas, std::vector<int> mults, int m_samples) {
              const SampleSpectrum spec = spectrum_from_lambdas(std::move(lambdas), m_samples);
              const MuRoots mus = solve_mu(spec);
              const std::vector<double> rho =
                  estimate_rho(spec, mus, blocks_from_mults(mults));
              py::dict d;
              d["rho_hat"] = rho;
              d["mu_hat"] = mus.mus;
              return d;
          },
          py::arg("lambdas"), py::arg("mults"), py::arg("m_samples"));

    m.def("empirical_theta",
          [](std::vector<double> lambdas, std::vector<int> mults, int m_samples) {
              const SampleSpectrum spec = spectrum_from_lambdas(std::move(lambdas), m_samples);
              return matrix_rows(
                  empirical_theta(spec, solve_mu(spec), blocks_from_mults(mults)));
          },
          py::arg("lambdas"), py::arg("mults"), py::arg("m_samples"),
          "residue-evaluated covariance estimate from one realization");

    m.def("limiting_theta",
          [](const PopulationModel& model, double margin_frac, double height, int nodes) {
              QuadratureOptions opts;
              opts.margin_frac = margin_frac;
              opts.height = height;
              opts.nodes = nodes;
              return matrix_rows(limiting_theta(model, opts));
          },
          py::arg("model"), py::arg("margin_frac") = 0.25, py::arg("height") = 0.5,
          py::arg("nodes") = 64, "limiting fluctuation covariance by contour quadrature");

    m.def("run_trials",
          [](const PopulationModel& model, int trials, std::uint64_t seed, int threads) {
              TrialOptions opts;
              opts.threads = threads;
              const TrialStats stats = run_trials(model, trials, seed, opts);
              py::dict d;
              d["fluctuations"] = stats.fluct;
              d["failed_trials"] = stats.failed_trials;
              return d;
          },
          py::arg("model"), py::arg("trials"), py::arg("seed"), py::arg("threads") = 0,
          "fluctuation samples M(rho_hat - rho) over seeded trials");

    py::class_<RadioScenario>(m, "RadioScenario")
        .def(py::init([](std::vector<double> powers, std::vector<int> codes, int n_dim,
                         int m_samples, double noise_var) {
                 RadioScenario s;
                 s.powers = std::move(powers);
                 s.codes = std::move(codes);
                 s.n_dim = n_dim;
                 s.m_samples = m_samples;
                 s.noise_var = noise_var;
                 return validate_scenario(s);
             }),
             py::arg("powers"), py::arg("codes"), py::arg("n_dim"), py::arg("m_samples"),
             py::arg("noise_var"));

    m.def("scenario_to_model", &scenario_to_model, py::arg("scenario"));

    m.def("estimate_powers",
          [](const RadioScenario& scenario, std::uint64_t seed, bool estimate_noise) {
              const SampleSpectrum spec =
                  sample_spectrum(scenario_to_model(scenario), seed);
              const PowerEstimates est = estimate_powers(spec, scenario, estimate_noise);
              py::dict d;
              d["p_hat"] = est.p_hat;
              d["sigma2"] = est.sigma2;
              return d;
          },
          py::arg("scenario"), py::arg("seed"), py::arg("estimate_noise") = false);

    m.def("confidence_margin", &confidence_margin, py::arg("theta_kk"), py::arg("m_samples"),
          py::arg("q"), "one-sided margin sqrt(theta)/M * z(q)");
    m.def("normal_upper_quantile", &normal_upper_quantile, py::arg("q"));

    m.attr("__version__") = "0.1.0";
}
