// popeig: population eigenvalue estimation from sample covariance matrices,
// with fluctuation covariance, Monte Carlo validation and the power-sensing
// application. Every randomized subcommand requires an explicit --seed so
// reports are reproducible byte for byte (timing aside).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "popeig/errors.hpp"
#include "popeig/estimator.hpp"
#include "popeig/model.hpp"
#include "popeig/montecarlo.hpp"
#include "popeig/radio.hpp"
#include "popeig/sampling.hpp"
#include "popeig/spectrum.hpp"
#include "popeig/variance.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace popeig;

constexpr const char* kVersion = "0.1.0";

struct CommonModelArgs {
    std::vector<double> rhos;
    std::vector<int> mults;
    int samples = 0;
    std::string model_file;
    std::string data_file;
};

struct OutputArgs {
    std::string out_path;
    std::string format = "json";
};

void add_model_flags(CLI::App* cmd, CommonModelArgs& args, bool data_allowed) {
    cmd->add_option("--rhos", args.rhos, "population eigenvalues (comma separated)")
        ->delimiter(',');
    cmd->add_option("--mults", args.mults, "cluster multiplicities (comma separated)")
        ->delimiter(',');
    cmd->add_option("--samples", args.samples, "sample count M");
    cmd->add_option("--model", args.model_file, "model as JSON file {rhos, mults, N, M}");
    if (data_allowed)
        cmd->add_option("--data", args.data_file,
                        "recorded N x M complex data file (entries a+bi); requires --mults");
}

void add_output_flags(CLI::App* cmd, OutputArgs& args) {
    cmd->add_option("--out", args.out_path, "write the JSON report to this path");
    cmd->add_option("--format", args.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
}

int sum_of(const std::vector<int>& v) {
    int s = 0;
    for (int x : v) s += x;
    return s;
}

PopulationModel model_from_args(const CommonModelArgs& args) {
    if (!args.model_file.empty()) {
        std::ifstream f(args.model_file);
        if (!f) throw InputError("InputError", "cannot open model file " + args.model_file);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return model_from_json_text(text);
    }
    if (args.rhos.empty() || args.mults.empty() || args.samples == 0)
        throw InputError("InputError", "need --rhos, --mults and --samples (or --model)");
    PopulationModel m;
    m.rhos = args.rhos;
    m.mults = args.mults;
    m.n_dim = sum_of(args.mults);
    m.m_samples = args.samples;
    return validate_model(m);
}

// spectrum either synthesized from a model+seed or ingested from a file
SampleSpectrum spectrum_from_args(const CommonModelArgs& args,
                                  const std::optional<std::uint64_t>& seed,
                                  std::optional<PopulationModel>& model_out) {
    if (!args.data_file.empty()) {
        if (args.mults.empty())
            throw InputError("InputError", "--data requires --mults for the cluster sizes");
        const ComplexMatrix y = read_complex_matrix_file(args.data_file);
        if (sum_of(args.mults) != y.rows)
            throw InputError("InputError", "--mults must sum to the data row count");
        model_out.reset();
        return spectrum_from_matrix(sample_covariance(y), y.cols);
    }
    const PopulationModel model = model_from_args(args);
    if (!seed)
        throw InputError("UsageError", "--seed is required when synthesizing data");
    model_out = model;
    return sample_spectrum(model, *seed);
}

json metadata(const std::string& command, const json& config,
              const std::optional<std::uint64_t>& seed,
              std::chrono::steady_clock::time_point start) {
    json meta;
    meta["version"] = kVersion;
    meta["command"] = command;
    if (seed) meta["seed"] = *seed;
    meta["config"] = config;
    meta["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start)
            .count();
    return meta;
}

// csv rendering of the report's main payload: one "key,values..." line per
// top-level array or scalar (matrices: one line per row)
std::string to_csv(const json& report) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [key, value] : report.items()) {
        if (key == "meta") continue;
        if (value.is_array() && !value.empty() && value.front().is_object()) continue;
        if (value.is_array() && !value.empty() && value.front().is_array()) {
            int row = 0;
            for (const auto& r : value) {
                os << key << '[' << row++ << ']';
                for (const auto& v : r) os << ',' << v.dump();
                os << '\n';
            }
        } else if (value.is_array()) {
            os << key;
            for (const auto& v : value) os << ',' << v.dump();
            os << '\n';
        } else if (value.is_structured()) {
            continue;  // nested objects stay JSON-only
        } else {
            os << key << ',' << value.dump() << '\n';
        }
    }
    return os.str();
}

void emit(const json& report, const OutputArgs& out) {
    const std::string text =
        out.format == "csv" ? to_csv(report) : report.dump(2) + "\n";
    if (out.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out.out_path);
        if (!f) throw InputError("InputError", "cannot write " + out.out_path);
        f << text;
    }
}

json matrix_to_json(const CovarianceMatrix& theta) {
    json rows = json::array();
    for (int k = 0; k < theta.dim; ++k) {
        json row = json::array();
        for (int l = 0; l < theta.dim; ++l) row.push_back(theta.at(k, l));
        rows.push_back(row);
    }
    return rows;
}

void write_histogram_csv(const std::string& path, const Histogram& h) {
    std::ofstream f(path);
    if (!f) throw InputError("InputError", "cannot write " + path);
    f << "bin_center,empirical_density,theoretical_density\n";
    f.precision(17);
    for (std::size_t b = 0; b < h.centers.size(); ++b)
        f << h.centers[b] << ',' << h.empirical_density[b] << ',' << h.theoretical_density[b]
          << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"population eigenvalue estimation in the comparable-dimensions regime"};
    app.require_subcommand(1);

    // --- separability ---
    CommonModelArgs sep_args;
    OutputArgs sep_out;
    CLI::App* sep = app.add_subcommand("separability", "cluster-split margins of a model");
    add_model_flags(sep, sep_args, false);
    add_output_flags(sep, sep_out);

    // --- support ---
    CommonModelArgs sup_args;
    OutputArgs sup_out;
    CLI::App* sup = app.add_subcommand("support", "support intervals of the limiting law");
    add_model_flags(sup, sup_args, false);
    add_output_flags(sup, sup_out);

    // --- estimate ---
    CommonModelArgs est_args;
    OutputArgs est_out;
    std::optional<std::uint64_t> est_seed;
    CLI::App* est = app.add_subcommand("estimate", "estimate population eigenvalues");
    add_model_flags(est, est_args, true);
    est->add_option("--seed", est_seed, "synthesis seed (required unless --data)");
    add_output_flags(est, est_out);

    // --- variance ---
    CommonModelArgs var_args;
    OutputArgs var_out;
    std::optional<std::uint64_t> var_seed;
    std::string var_method = "residue";
    bool var_limiting = false;
    double var_margin = 0.25, var_height = 0.5;
    int var_nodes = 64;
    CLI::App* var = app.add_subcommand("variance", "fluctuation covariance matrix");
    add_model_flags(var, var_args, true);
    var->add_option("--seed", var_seed, "synthesis seed (required unless --data)");
    var->add_option("--method", var_method, "residue | quadrature")
        ->check(CLI::IsMember({"residue", "quadrature"}));
    var->add_flag("--limiting", var_limiting,
                  "limiting-law covariance by quadrature (needs a model, no data)");
    var->add_option("--quad-nodes", var_nodes, "starting quadrature nodes per edge");
    var->add_option("--contour-margin", var_margin, "contour margin fraction");
    var->add_option("--contour-height", var_height, "contour half-height");
    add_output_flags(var, var_out);

    // --- simulate ---
    CommonModelArgs sim_args;
    OutputArgs sim_out;
    std::optional<std::uint64_t> sim_seed;
    int sim_trials = 0, sim_bins = 40, sim_threads = 0;
    bool sim_retain = false;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo fluctuation validation");
    add_model_flags(sim, sim_args, false);
    sim->add_option("--trials", sim_trials, "trial count")->required();
    sim->add_option("--seed", sim_seed, "base seed")->required();
    sim->add_option("--bins", sim_bins, "histogram bins");
    sim->add_flag("--retain-theta", sim_retain, "keep per-trial covariance estimates");
    sim->add_option("--threads", sim_threads, "worker threads (0 = hardware)");
    add_output_flags(sim, sim_out);

    // --- radio ---
    OutputArgs rad_out;
    std::vector<double> rad_powers;
    std::vector<int> rad_codes;
    int rad_n = 0, rad_m = 0;
    double rad_sigma2 = 0.0, rad_q = 0.05;
    std::optional<std::uint64_t> rad_seed;
    bool rad_estimate_noise = false, rad_literal = false;
    CLI::App* rad = app.add_subcommand("radio", "primary-user power estimation with margin");
    rad->add_option("--powers", rad_powers, "transmit powers")->required()->delimiter(',');
    rad->add_option("--codes", rad_codes, "codes per user")->required()->delimiter(',');
    rad->add_option("--n-dim", rad_n, "chip dimension N")->required();
    rad->add_option("--samples", rad_m, "sample count M")->required();
    rad->add_option("--noise-var", rad_sigma2, "noise variance sigma^2")->required();
    rad->add_option("--q", rad_q, "interference probability for the margin");
    rad->add_option("--seed", rad_seed, "synthesis seed")->required();
    rad->add_flag("--estimate-noise", rad_estimate_noise,
                  "estimate sigma^2 from the lowest cluster (requires n < N)");
    rad->add_flag("--literal-margin", rad_literal,
                  "margin theta * z(q) without the sqrt/M scaling");
    add_output_flags(rad, rad_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (sep->parsed()) {
            const PopulationModel model = model_from_args(sep_args);
            const SeparabilityReport rep = separability_check(model);
            json r;
            r["margins"] = rep.margins;
            r["separable"] = rep.separable;
            if (rep.single_cluster) r["single_cluster_convention"] = true;
            r["alphas"] = rep.alphas;
            json cfg;
            cfg["model"] = json::parse(model_to_json_text(model));
            r["meta"] = metadata("separability", cfg, std::nullopt, start);
            emit(r, sep_out);
        } else if (sup->parsed()) {
            const PopulationModel model = model_from_args(sup_args);
            const ClusterSupport support = support_clusters(model);
            json intervals = json::array();
            for (const auto& [a, b] : support.intervals) intervals.push_back({a, b});
            json r;
            r["intervals"] = intervals;
            json cfg;
            cfg["model"] = json::parse(model_to_json_text(model));
            r["meta"] = metadata("support", cfg, std::nullopt, start);
            emit(r, sup_out);
        } else if (est->parsed()) {
            std::optional<PopulationModel> model;
            const SampleSpectrum spec = spectrum_from_args(est_args, est_seed, model);
            const ClusterBlocks blocks =
                model ? cluster_blocks(*model) : blocks_from_mults(est_args.mults);
            const MuRoots mus = solve_mu(spec);
            const std::vector<double> rho = estimate_rho(spec, mus, blocks);
            json r;
            r["rho_hat"] = rho;
            r["mu_hat"] = mus.mus;
            json cfg;
            if (model) cfg["model"] = json::parse(model_to_json_text(*model));
            if (!est_args.data_file.empty()) cfg["data"] = est_args.data_file;
            r["meta"] = metadata("estimate", cfg, est_seed, start);
            emit(r, est_out);
        } else if (var->parsed()) {
            json r;
            json cfg;
            QuadratureOptions qopts;
            qopts.margin_frac = var_margin;
            qopts.height = var_height;
            qopts.nodes = var_nodes;
            qopts.max_nodes = std::max(qopts.max_nodes, 4 * var_nodes);
            if (var_limiting) {
                const PopulationModel model = model_from_args(var_args);
                const CovarianceMatrix theta = limiting_theta(model, qopts);
                r["theta_hat"] = matrix_to_json(theta);
                r["method"] = "quadrature";
                cfg["model"] = json::parse(model_to_json_text(model));
            } else {
                std::optional<PopulationModel> model;
                const SampleSpectrum spec = spectrum_from_args(var_args, var_seed, model);
                const ClusterBlocks blocks =
                    model ? cluster_blocks(*model) : blocks_from_mults(var_args.mults);
                const MuRoots mus = solve_mu(spec);
                CovarianceMatrix theta;
                if (var_method == "residue") {
                    theta = empirical_theta(spec, mus, blocks);
                } else {
                    const std::vector<Contour> contours = contours_from_spectrum(
                        spec, blocks, qopts.margin_frac, qopts.height, qopts.nodes, &mus);
                    std::vector<double> ratios(blocks.cluster_count());
                    for (int k = 0; k < blocks.cluster_count(); ++k) {
                        const auto& [f, l] = blocks.blocks[k];
                        ratios[k] = static_cast<double>(l - f) / spec.m_samples;
                    }
                    theta =
                        theta_matrix_quadrature(empirical_transform(spec), contours, ratios, qopts);
                }
                r["theta_hat"] = matrix_to_json(theta);
                r["method"] = var_method;
                if (model) cfg["model"] = json::parse(model_to_json_text(*model));
                if (!var_args.data_file.empty()) cfg["data"] = var_args.data_file;
            }
            cfg["quad_nodes"] = var_nodes;
            cfg["contour_margin"] = var_margin;
            cfg["contour_height"] = var_height;
            r["meta"] = metadata("variance", cfg, var_seed, start);
            emit(r, var_out);
        } else if (sim->parsed()) {
            const PopulationModel model = model_from_args(sim_args);
            TrialOptions topts;
            topts.retain_theta = sim_retain;
            topts.threads = sim_threads;
            const TrialStats stats = run_trials(model, sim_trials, *sim_seed, topts);
            const CovarianceMatrix theta = limiting_theta(model);
            const FluctuationSummary sum = summarize(stats, theta);
            json r;
            r["trials"] = stats.requested;
            r["completed"] = stats.completed();
            r["excluded"] = stats.failed_trials;
            json clusters = json::array();
            for (int k = 0; k < model.cluster_count(); ++k) {
                const ClusterSummary& cs = sum.clusters[k];
                json c;
                c["rho"] = model.rhos[k];
                c["fluct_mean"] = cs.mean;
                c["fluct_sd"] = cs.sd;
                c["sd_ratio"] = cs.sd_ratio;
                c["skewness"] = cs.skewness;
                c["excess_kurtosis"] = cs.excess_kurtosis;
                clusters.push_back(c);
            }
            r["clusters"] = clusters;
            r["theta_limiting"] = matrix_to_json(theta);
            r["sample_correlation"] = matrix_to_json(sum.sample_correlation);
            r["theta_correlation"] = matrix_to_json(sum.theta_correlation);
            if (sim_retain && !stats.thetas.empty()) {
                CovarianceMatrix mean_theta(theta.dim);
                for (const CovarianceMatrix& t : stats.thetas)
                    for (int k = 0; k < theta.dim; ++k)
                        for (int l = 0; l < theta.dim; ++l)
                            mean_theta.at(k, l) += t.at(k, l) / stats.thetas.size();
                r["theta_hat_mean"] = matrix_to_json(mean_theta);
            }
            if (!sim_out.out_path.empty()) {
                const auto hists = export_density(stats, sim_bins, theta);
                json files = json::array();
                for (int k = 0; k < model.cluster_count(); ++k) {
                    const std::string path =
                        sim_out.out_path + ".cluster" + std::to_string(k + 1) + ".csv";
                    write_histogram_csv(path, hists[k]);
                    files.push_back(path);
                }
                r["histograms"] = files;
            }
            json cfg;
            cfg["model"] = json::parse(model_to_json_text(model));
            cfg["trials"] = sim_trials;
            cfg["bins"] = sim_bins;
            r["meta"] = metadata("simulate", cfg, sim_seed, start);
            emit(r, sim_out);
        } else if (rad->parsed()) {
            RadioScenario scenario;
            scenario.powers = rad_powers;
            scenario.codes = rad_codes;
            scenario.n_dim = rad_n;
            scenario.m_samples = rad_m;
            scenario.noise_var = rad_sigma2;
            const PopulationModel model = scenario_to_model(scenario);
            const SampleSpectrum spec = sample_spectrum(model, *rad_seed);
            const PowerEstimates est2 = estimate_powers(spec, scenario, rad_estimate_noise);
            const MuRoots mus = solve_mu(spec);
            const CovarianceMatrix theta = empirical_theta(spec, mus, cluster_blocks(model));
            const int top = theta.dim - 1;  // strongest user's cluster
            const double margin =
                rad_literal ? confidence_margin_literal(theta.at(top, top), rad_q)
                            : confidence_margin(theta.at(top, top), rad_m, rad_q);
            json r;
            r["p_hat"] = est2.p_hat;
            r["sigma2"] = est2.sigma2;
            r["margin"] = margin;
            r["worst_case"] = est2.p_hat.back() + margin;
            r["theta_hat_top"] = theta.at(top, top);
            json cfg;
            cfg["powers"] = rad_powers;
            cfg["codes"] = rad_codes;
            cfg["N"] = rad_n;
            cfg["M"] = rad_m;
            cfg["noise_var"] = rad_sigma2;
            cfg["q"] = rad_q;
            cfg["estimate_noise"] = rad_estimate_noise;
            cfg["literal_margin"] = rad_literal;
            cfg["sigma2_note"] = "snr_db maps to noise_var = 10^(-snr/10) against unit power";
            r["meta"] = metadata("radio", cfg, rad_seed, start);
            emit(r, rad_out);
        }
    } catch (const InputError& e) {
        json err;
        err["error"] = {{"code", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        json err;
        err["error"] = {{"code", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 4;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"code", "Internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 4;
    }
    return 0;
}
