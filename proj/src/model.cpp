#include "popeig/model.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "popeig/errors.hpp"

namespace popeig {

std::vector<double> PopulationModel::weights() const {
    std::vector<double> w(rhos.size());
    for (std::size_t k = 0; k < rhos.size(); ++k)
        w[k] = static_cast<double>(mults[k]) / n_dim;
    return w;
}

PopulationModel validate_model(PopulationModel raw) {
    if (raw.rhos.empty() || raw.rhos.size() != raw.mults.size())
        throw InputError("MultiplicitySumMismatch",
                         "rhos and mults must be non-empty and equally sized");

    // joint sort of (rho, mult) pairs
    std::vector<std::size_t> order(raw.rhos.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return raw.rhos[a] < raw.rhos[b]; });
    PopulationModel m;
    m.n_dim = raw.n_dim;
    m.m_samples = raw.m_samples;
    m.rhos.reserve(order.size());
    m.mults.reserve(order.size());
    for (std::size_t idx : order) {
        m.rhos.push_back(raw.rhos[idx]);
        m.mults.push_back(raw.mults[idx]);
    }

    long long total = 0;
    for (std::size_t k = 0; k < m.rhos.size(); ++k) {
        if (!(m.rhos[k] > 0.0))
            throw InputError("NonPositiveEigenvalue",
                             "rho[" + std::to_string(k) + "] = " + std::to_string(m.rhos[k]));
        if (k > 0 && !(m.rhos[k] > m.rhos[k - 1]))
            throw InputError("DuplicateEigenvalue",
                             "rho[" + std::to_string(k - 1) + "] == rho[" + std::to_string(k) + "]");
        if (m.mults[k] < 1)
            throw InputError("MultiplicitySumMismatch",
                             "mult[" + std::to_string(k) + "] must be >= 1");
        total += m.mults[k];
    }
    if (total != m.n_dim)
        throw InputError("MultiplicitySumMismatch",
                         "multiplicities sum to " + std::to_string(total) +
                         ", expected N = " + std::to_string(m.n_dim));
    if (m.m_samples <= m.n_dim)
        throw InputError("SampleCountTooSmall",
                         "need M > N, got M = " + std::to_string(m.m_samples) +
                         ", N = " + std::to_string(m.n_dim));
    return m;
}

PopulationModel model_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("ModelParseError", e.what());
    }
    PopulationModel m;
    try {
        m.rhos = j.at("rhos").get<std::vector<double>>();
        m.mults = j.at("mults").get<std::vector<int>>();
        m.n_dim = j.at("N").get<int>();
        m.m_samples = j.at("M").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("ModelParseError", e.what());
    }
    return validate_model(m);
}

std::string model_to_json_text(const PopulationModel& model) {
    nlohmann::ordered_json j;
    j["rhos"] = model.rhos;
    j["mults"] = model.mults;
    j["N"] = model.n_dim;
    j["M"] = model.m_samples;
    return j.dump();
}

}  // namespace popeig
