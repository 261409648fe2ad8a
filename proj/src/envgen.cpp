#include "bdris/envgen.hpp"

#include <omp.h>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bdris/rng.hpp"

namespace bdris {

using nlohmann::json;

namespace {

// First-order smoothing coefficient across the grid; gives channels a finite
// correlation bandwidth instead of white frequency dependence.
constexpr double kFreqCorrelation = 0.9;

} // namespace

Environment EnvironmentSweep::at(int f_index) const {
    if (f_index < 0 || f_index >= n_freq())
        throw StructuralError("EnvironmentSweep: frequency index " + std::to_string(f_index) +
                              " outside grid of size " + std::to_string(n_freq()));
    return Environment{ScatteringMatrix(matrices[f_index], frequencies_hz[f_index]), partition};
}

bool EnvironmentSweep::operator==(const EnvironmentSweep& other) const {
    if (label != other.label || seed != other.seed || frequencies_hz != other.frequencies_hz)
        return false;
    if (partition.tx != other.partition.tx || partition.rx != other.partition.rx ||
        partition.ris != other.partition.ris)
        return false;
    if (matrices.size() != other.matrices.size()) return false;
    for (size_t f = 0; f < matrices.size(); ++f) {
        if (matrices[f].rows() != other.matrices[f].rows() ||
            matrices[f].cols() != other.matrices[f].cols())
            return false;
        if (matrices[f] != other.matrices[f]) return false;
    }
    return true;
}

EnvironmentSweep generate_environment(const GenParams& p) {
    if (p.n < 3) throw StructuralError("generate_environment: need n >= 3");
    if (p.n_tx < 1 || p.n_rx < 1 || p.n_tx + p.n_rx >= p.n)
        throw StructuralError("generate_environment: partition sizes must leave >= 1 RIS port");
    if (p.n_freq < 1) throw StructuralError("generate_environment: need n_freq >= 1");
    if (!(p.loss_factor > 0.0 && p.loss_factor <= 1.0))
        throw StructuralError("generate_environment: loss_factor must be in (0, 1]");
    if (!(p.coupling_strength >= 0.0 && p.coupling_strength <= 1.0))
        throw StructuralError("generate_environment: coupling_strength must be in [0, 1]");

    EnvironmentSweep env;
    env.label = p.label;
    env.seed = p.seed;
    env.frequencies_hz.resize(p.n_freq);
    for (int f = 0; f < p.n_freq; ++f)
        env.frequencies_hz[f] =
            p.n_freq == 1 ? p.f_start_hz
                          : p.f_start_hz + (p.f_stop_hz - p.f_start_hz) * f / (p.n_freq - 1);

    env.partition.tx.resize(p.n_tx);
    env.partition.rx.resize(p.n_rx);
    env.partition.ris.resize(p.n - p.n_tx - p.n_rx);
    for (int i = 0; i < p.n_tx; ++i) env.partition.tx[i] = i;
    for (int i = 0; i < p.n_rx; ++i) env.partition.rx[i] = p.n_tx + i;
    for (int i = 0; i < p.n - p.n_tx - p.n_rx; ++i) env.partition.ris[i] = p.n_tx + p.n_rx + i;

    // Raw draws are keyed by frequency index so the result does not depend
    // on scheduling.
    std::vector<CMat> raw(p.n_freq);
#pragma omp parallel for schedule(static)
    for (int f = 0; f < p.n_freq; ++f) {
        auto engine = make_engine(p.seed, static_cast<std::uint64_t>(f));
        std::normal_distribution<double> gauss(0.0, 1.0);
        CMat g(p.n, p.n);
        for (int i = 0; i < p.n; ++i)
            for (int j = 0; j < p.n; ++j) {
                const double re = gauss(engine);
                const double im = gauss(engine);
                g(i, j) = Cplx{re, im};
            }
        raw[f] = std::move(g);
    }

    // Low-order recursive filter across the grid (serial by construction).
    env.matrices.resize(p.n_freq);
    const double blend = std::sqrt(1.0 - kFreqCorrelation * kFreqCorrelation);
    env.matrices[0] = raw[0];
    for (int f = 1; f < p.n_freq; ++f)
        env.matrices[f] = kFreqCorrelation * env.matrices[f - 1] + blend * raw[f];

#pragma omp parallel for schedule(static)
    for (int f = 0; f < p.n_freq; ++f) {
        CMat m = 0.5 * (env.matrices[f] + env.matrices[f].transpose().eval());
        for (int a : env.partition.ris)
            for (int b : env.partition.ris)
                if (a != b) m(a, b) *= p.coupling_strength;
        Eigen::JacobiSVD<CMat> svd(m);
        const double smax = svd.singularValues()(0);
        if (smax > 0.0) m *= p.loss_factor / smax;
        env.matrices[f] = std::move(m);
    }
    return env;
}

void check_sweep(const EnvironmentSweep& env, double tol) {
    if (env.n_freq() == 0 || env.matrices.size() != env.frequencies_hz.size())
        throw ValidationError("environment sweep: matrix count does not match grid size");
    for (int f = 1; f < env.n_freq(); ++f)
        if (!(env.frequencies_hz[f] > env.frequencies_hz[f - 1]))
            throw ValidationError("environment sweep: grid not strictly increasing at index " +
                                  std::to_string(f));
    env.partition.check_against(env.n_ports());

    std::string bad;
    for (int f = 0; f < env.n_freq(); ++f) {
        if (env.matrices[f].rows() != env.n_ports() || env.matrices[f].cols() != env.n_ports()) {
            bad += (bad.empty() ? "" : ", ") + std::to_string(f) + " (shape)";
            continue;
        }
        ValidationReport rep = validate(ScatteringMatrix(env.matrices[f]), tol);
        if (!rep.pass()) bad += (bad.empty() ? "" : ", ") + std::to_string(f);
    }
    if (!bad.empty())
        throw ValidationError("environment sweep: invariants violated at frequency indices " + bad);
}

namespace {

json complex_vector_to_json(const CMat& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            arr.push_back({m(i, j).real(), m(i, j).imag()});
    return arr;
}

CMat complex_matrix_from_json(const json& arr, int n, const std::string& where) {
    if (!arr.is_array() || arr.size() != static_cast<size_t>(n) * n)
        throw ParseError(where + ": expected " + std::to_string(n * n) + " [re, im] pairs");
    CMat m(n, n);
    size_t k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j, ++k) {
            const json& pair = arr[k];
            if (!pair.is_array() || pair.size() != 2)
                throw ParseError(where + ": entry " + std::to_string(k) +
                                 " is not a [re, im] pair");
            m(i, j) = Cplx{pair[0].get<double>(), pair[1].get<double>()};
        }
    return m;
}

} // namespace

void save_environment(const EnvironmentSweep& env, const std::filesystem::path& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "environment_sweep";
    doc["label"] = env.label;
    doc["seed"] = env.seed;
    doc["n_ports"] = env.n_ports();
    doc["partition"] = {{"tx", env.partition.tx}, {"rx", env.partition.rx},
                        {"ris", env.partition.ris}};
    doc["frequencies_hz"] = env.frequencies_hz;
    json mats = json::array();
    for (const CMat& m : env.matrices) mats.push_back(complex_vector_to_json(m));
    doc["matrices"] = std::move(mats);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << doc.dump() << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EnvironmentSweep load_environment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }

    EnvironmentSweep env;
    try {
        if (doc.at("kind").get<std::string>() != "environment_sweep")
            throw ParseError("'" + path.string() + "': not an environment_sweep document");
        env.label = doc.value("label", std::string{});
        env.seed = doc.value("seed", std::uint64_t{0});
        const int n = doc.at("n_ports").get<int>();
        env.partition.tx = doc.at("partition").at("tx").get<std::vector<int>>();
        env.partition.rx = doc.at("partition").at("rx").get<std::vector<int>>();
        env.partition.ris = doc.at("partition").at("ris").get<std::vector<int>>();
        env.frequencies_hz = doc.at("frequencies_hz").get<std::vector<double>>();
        const json& mats = doc.at("matrices");
        if (!mats.is_array() || mats.size() != env.frequencies_hz.size())
            throw ParseError("'" + path.string() +
                             "': 'matrices' length does not match 'frequencies_hz'");
        env.matrices.reserve(mats.size());
        for (size_t f = 0; f < mats.size(); ++f)
            env.matrices.push_back(complex_matrix_from_json(
                mats[f], n, "'" + path.string() + "' matrix " + std::to_string(f)));
    } catch (const json::exception& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }

    check_sweep(env);
    return env;
}

} // namespace bdris
