#include "popeig/sampling.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "popeig/errors.hpp"
#include "popeig/rng.hpp"

namespace popeig {

namespace {

// Haar-like random unitary: QR of a Gaussian matrix via modified
// Gram-Schmidt. Good enough for the rotation-invariance test.
ComplexMatrix random_unitary(int n, SplitMix64& gen) {
    ComplexMatrix U(n, n);
    for (auto& v : U.data) v = complex_gaussian(gen);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < j; ++k) {
            cdouble proj = 0.0;
            for (int i = 0; i < n; ++i) proj += std::conj(U.at(i, k)) * U.at(i, j);
            for (int i = 0; i < n; ++i) U.at(i, j) -= proj * U.at(i, k);
        }
        double norm = 0.0;
        for (int i = 0; i < n; ++i) norm += std::norm(U.at(i, j));
        norm = std::sqrt(norm);
        for (int i = 0; i < n; ++i) U.at(i, j) /= norm;
    }
    return U;
}

}  // namespace

ComplexMatrix sample_data_matrix(const PopulationModel& model, std::uint64_t seed,
                                 const SamplingOptions& opts) {
    const int n = model.n_dim;
    const int m = model.m_samples;
    SplitMix64 gen(seed);

    std::vector<double> sqrt_rho(n);
    {
        int i = 0;
        for (std::size_t k = 0; k < model.rhos.size(); ++k)
            for (int r = 0; r < model.mults[k]; ++r) sqrt_rho[i++] = std::sqrt(model.rhos[k]);
    }

    ComplexMatrix y(n, m);
    for (int i = 0; i < n; ++i) {
        cdouble* row = y.row(i);
        for (int j = 0; j < m; ++j) row[j] = sqrt_rho[i] * complex_gaussian(gen);
    }
    if (!opts.rotate) return y;

    // R^{1/2} = U diag(sqrt rho) U^H: left-multiply the diagonal-path sample by U
    ComplexMatrix u = random_unitary(n, gen);
    ComplexMatrix out(n, m);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cdouble uik = u.at(i, k);
            const cdouble* yrow = y.row(k);
            cdouble* orow = out.row(i);
            for (int j = 0; j < m; ++j) orow[j] += uik * yrow[j];
        }
    return out;
}

HermitianMatrix sample_covariance(const ComplexMatrix& data) {
    const int n = data.rows;
    const int m = data.cols;
    if (n == 0 || m == 0) throw InputError("EmptyData", "data matrix has no entries");

    HermitianMatrix cov(n);
    const double inv_m = 1.0 / m;
    for (int i = 0; i < n; ++i) {
        const cdouble* ri = data.row(i);
        for (int j = 0; j <= i; ++j) {
            const cdouble* rj = data.row(j);
            double acc_re = 0.0, acc_im = 0.0;
            for (int t = 0; t < m; ++t) {
                // ri[t] * conj(rj[t])
                acc_re += ri[t].real() * rj[t].real() + ri[t].imag() * rj[t].imag();
                acc_im += ri[t].imag() * rj[t].real() - ri[t].real() * rj[t].imag();
            }
            const cdouble v(acc_re * inv_m, acc_im * inv_m);
            cov.at(i, j) = v;
            cov.at(j, i) = std::conj(v);
        }
        cov.at(i, i) = cov.at(i, i).real();
    }
    return cov;
}

SampleSpectrum spectrum_from_matrix(const HermitianMatrix& cov, int m_samples) {
    SampleSpectrum spec;
    spec.lambdas = hermitian_eigenvalues(cov);
    spec.n_dim = cov.n;
    spec.m_samples = m_samples;
    return spec;
}

SampleSpectrum sample_spectrum(const PopulationModel& model, std::uint64_t seed,
                               const SamplingOptions& opts) {
    const ComplexMatrix y = sample_data_matrix(model, seed, opts);
    return spectrum_from_matrix(sample_covariance(y), model.m_samples);
}

namespace {

// one token of the form "a", "a+bi" or "a-bi"
cdouble parse_complex_token(const std::string& tok, int row, int col) {
    const auto fail = [&](const std::string& why) {
        throw InputError("DataParseError", "row " + std::to_string(row + 1) + ", column " +
                                               std::to_string(col + 1) + ": " + why + " in '" +
                                               tok + "'");
    };
    std::size_t pos = 0;
    const auto read_number = [&]() -> double {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok.substr(pos), &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        if (used == 0) fail("malformed number");
        pos += used;
        return v;
    };
    const double re = read_number();
    if (pos == tok.size()) return {re, 0.0};
    if (tok[pos] != '+' && tok[pos] != '-') fail("expected '+' or '-' before imaginary part");
    const double im = read_number();
    if (pos + 1 != tok.size() || (tok[pos] != 'i' && tok[pos] != 'j'))
        fail("expected trailing 'i'");
    return {re, im};
}

}  // namespace

ComplexMatrix read_complex_matrix(std::istream& in) {
    std::vector<std::vector<cdouble>> rows;
    std::string line;
    int lineno = -1;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<cdouble> row;
        std::string tok;
        int col = 0;
        while (ls >> tok) row.push_back(parse_complex_token(tok, static_cast<int>(rows.size()), col++));
        if (row.empty()) continue;  // blank line
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError("DataParseError",
                             "row " + std::to_string(rows.size() + 1) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("EmptyData", "no rows in data file");
    ComplexMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return m;
}

ComplexMatrix read_complex_matrix_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("InputError", "cannot open data file '" + path + "'");
    return read_complex_matrix(f);
}

}  // namespace popeig
