#include "bdris/vvna.hpp"

#include <omp.h>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "bdris/rng.hpp"

namespace bdris {

using nlohmann::json;

namespace {

std::vector<int> complement(int n, std::span<const int> nda) {
    std::vector<bool> is_nda(n, false);
    for (int p : nda) {
        if (p < 0 || p >= n)
            throw StructuralError("vvna: NDA port " + std::to_string(p) + " out of range");
        if (is_nda[p]) throw StructuralError("vvna: duplicate NDA port " + std::to_string(p));
        is_nda[p] = true;
    }
    std::vector<int> acc;
    for (int p = 0; p < n; ++p)
        if (!is_nda[p]) acc.push_back(p);
    return acc;
}

CMat pick_block(const CMat& s, std::span<const int> rows, std::span<const int> cols) {
    CMat out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s(rows[i], cols[j]);
    return out;
}

CMat accessible_reading(const CMat& s_aa, const CMat& s_as, const CMat& s_sa, const CMat& s_ss,
                        const CMat& s_l) {
    if (s_ss.rows() == 0) return s_aa;
    const Eigen::Index n_s = s_l.rows();
    CMat cavity = CMat::Identity(n_s, n_s) - s_ss * s_l;
    Eigen::PartialPivLU<CMat> lu(cavity);
    if (lu.rcond() < 1e-12)
        throw DegenerateCavityError("forward_measure: (I - S_SS S_L) numerically singular");
    return s_aa + s_as * s_l * lu.solve(s_sa);
}

} // namespace

CMat forward_measure(const ScatteringMatrix& S_true, std::span<const int> nda, const CMat& S_L) {
    const std::vector<int> acc = complement(S_true.n_ports(), nda);
    if (S_L.rows() != S_L.cols() || S_L.rows() != static_cast<Eigen::Index>(nda.size()))
        throw StructuralError("forward_measure: S_L must match the NDA port count");
    const std::vector<int> nda_v(nda.begin(), nda.end());
    return accessible_reading(pick_block(S_true.s, acc, acc), pick_block(S_true.s, acc, nda_v),
                              pick_block(S_true.s, nda_v, acc), pick_block(S_true.s, nda_v, nda_v),
                              S_L);
}

MeasurementSet simulate_campaign(const ScatteringMatrix& S_true, std::span<const int> nda,
                                 const LoadCatalog& cat, int f_index, int n_meas,
                                 std::uint64_t seed, double noise_std,
                                 bool with_disambiguation) {
    if (n_meas < 1) throw StructuralError("simulate_campaign: n_meas must be >= 1");
    if (noise_std < 0.0) throw StructuralError("simulate_campaign: noise_std must be >= 0");
    if (f_index < 0 || f_index >= cat.n_freq())
        throw StructuralError("simulate_campaign: frequency index outside catalog grid");

    MeasurementSet out;
    out.nda.assign(nda.begin(), nda.end());
    out.accessible = complement(S_true.n_ports(), nda);
    out.f_index = f_index;
    out.frequency_hz = cat.frequencies_hz[f_index];

    const int n_s = static_cast<int>(nda.size());
    ConfigSpace space;
    space.n_ports = n_s;
    const std::vector<SwitchConfig> all_cfgs = enumerate_configs(space);
    const PortMapping ident = PortMapping::identity(n_s);

    // Configuration draws come from one serial stream; per-record noise
    // streams are derived by index, so the parallel fill below cannot change
    // the result.
    auto cfg_engine = make_engine(seed, 0);
    std::uniform_int_distribution<size_t> pick(0, all_cfgs.size() - 1);
    out.records.resize(n_meas);
    for (int r = 0; r < n_meas; ++r) out.records[r].config = all_cfgs[pick(cfg_engine)];

#pragma omp parallel for schedule(static)
    for (int r = 0; r < n_meas; ++r) {
        const CMat s_l = build_load_scattering(out.records[r].config, cat, f_index, ident);
        CMat reading = forward_measure(S_true, nda, s_l);
        if (noise_std > 0.0) {
            auto noise_engine = make_engine(seed, 1 + static_cast<std::uint64_t>(r));
            std::normal_distribution<double> gauss(0.0, noise_std / std::sqrt(2.0));
            for (Eigen::Index i = 0; i < reading.rows(); ++i)
                for (Eigen::Index j = 0; j < reading.cols(); ++j)
                    reading(i, j) += Cplx{gauss(noise_engine), gauss(noise_engine)};
            reading = 0.5 * (reading + reading.transpose().eval());
        }
        out.records[r].s_acc = std::move(reading);
    }

    if (with_disambiguation && n_s >= 1) {
        DisambiguationMeasurement d;
        d.redesignated_port = out.nda[0];
        std::vector<int> nda_rest(out.nda.begin() + 1, out.nda.end());
        if (!nda_rest.empty()) {
            d.config.states.assign(nda_rest.size(), SwitchState::Load1);
            if (nda_rest.size() >= 2) { // engage a coupled load on the remaining ports
                d.config.states[0] = SwitchState::ConnectRight;
                d.config.states[1] = SwitchState::ConnectLeft;
            } else {
                d.config.states[0] = SwitchState::Load2;
            }
        }
        CMat s_l_rest(0, 0);
        if (!nda_rest.empty())
            s_l_rest = build_load_scattering(d.config, cat, f_index,
                                             PortMapping::identity(static_cast<int>(nda_rest.size())));
        CMat reading = forward_measure(S_true, nda_rest, s_l_rest);
        if (noise_std > 0.0) {
            auto noise_engine = make_engine(seed, 999999937ULL);
            std::normal_distribution<double> gauss(0.0, noise_std / std::sqrt(2.0));
            for (Eigen::Index i = 0; i < reading.rows(); ++i)
                for (Eigen::Index j = 0; j < reading.cols(); ++j)
                    reading(i, j) += Cplx{gauss(noise_engine), gauss(noise_engine)};
            reading = 0.5 * (reading + reading.transpose().eval());
        }
        d.s_acc = std::move(reading);
        out.disambiguation = std::move(d);
    }
    return out;
}

namespace {

/// Free parameters of the fit, kept as matrices: A = S_AA (symmetric),
/// B = S_AS, C = S_SS (symmetric). S_SA is tied to B by reciprocity.
struct FitState {
    CMat a, b, c;

    static int param_count(int n_a, int n_s) {
        return n_a * (n_a + 1) + 2 * n_a * n_s + n_s * (n_s + 1); // real dof
    }

    Eigen::VectorXd pack() const {
        const int n_a = static_cast<int>(a.rows());
        const int n_s = static_cast<int>(c.rows());
        Eigen::VectorXd v(param_count(n_a, n_s));
        int k = 0;
        auto push = [&](Cplx z) {
            v(k++) = z.real();
            v(k++) = z.imag();
        };
        for (int i = 0; i < n_a; ++i)
            for (int j = i; j < n_a; ++j) push(a(i, j));
        for (int i = 0; i < n_a; ++i)
            for (int j = 0; j < n_s; ++j) push(b(i, j));
        for (int i = 0; i < n_s; ++i)
            for (int j = i; j < n_s; ++j) push(c(i, j));
        return v;
    }

    static FitState unpack(const Eigen::VectorXd& v, int n_a, int n_s) {
        FitState st;
        st.a.resize(n_a, n_a);
        st.b.resize(n_a, n_s);
        st.c.resize(n_s, n_s);
        int k = 0;
        auto pull = [&]() {
            Cplx z{v(k), v(k + 1)};
            k += 2;
            return z;
        };
        for (int i = 0; i < n_a; ++i)
            for (int j = i; j < n_a; ++j) st.a(i, j) = st.a(j, i) = pull();
        for (int i = 0; i < n_a; ++i)
            for (int j = 0; j < n_s; ++j) st.b(i, j) = pull();
        for (int i = 0; i < n_s; ++i)
            for (int j = i; j < n_s; ++j) st.c(i, j) = st.c(j, i) = pull();
        return st;
    }
};

struct FitProblem {
    std::vector<CMat> loads;    // S_L per record
    std::vector<CMat> readings; // measured matrices per record
    int n_a = 0;
    int n_s = 0;

    double residual(const FitState& st, std::uint64_t& evals) const {
        ++evals;
        double j = 0.0;
        for (size_t m = 0; m < loads.size(); ++m) {
            const CMat w = loads[m] * Eigen::PartialPivLU<CMat>(
                                          CMat::Identity(n_s, n_s) - st.c * loads[m])
                                          .solve(CMat::Identity(n_s, n_s));
            const CMat r = st.a + st.b * w * st.b.transpose() - readings[m];
            j += r.squaredNorm();
        }
        return j;
    }

    /// Residual and its gradient wrt the packed parameter vector.
    double residual_grad(const FitState& st, Eigen::VectorXd& grad, std::uint64_t& evals) const {
        ++evals;
        const CMat eye = CMat::Identity(n_s, n_s);
        CMat g_a = CMat::Zero(n_a, n_a);
        CMat g_b = CMat::Zero(n_a, n_s);
        CMat g_c = CMat::Zero(n_s, n_s);
        double j = 0.0;
        for (size_t m = 0; m < loads.size(); ++m) {
            const CMat w = loads[m] * Eigen::PartialPivLU<CMat>(eye - st.c * loads[m]).solve(eye);
            const CMat r = st.a + st.b * w * st.b.transpose() - readings[m];
            j += r.squaredNorm();
            const CMat r_conj = r.conjugate();
            g_a += r_conj;
            g_b += r_conj * st.b * w.transpose() + r_conj.transpose() * st.b * w;
            g_c += w.transpose() * st.b.transpose() * r_conj * st.b * w.transpose();
        }

        grad.resize(FitState::param_count(n_a, n_s));
        int k = 0;
        auto push = [&](Cplx g) {
            grad(k++) = 2.0 * g.real();
            grad(k++) = -2.0 * g.imag();
        };
        for (int i = 0; i < n_a; ++i)
            for (int jj = i; jj < n_a; ++jj)
                push(i == jj ? g_a(i, i) : g_a(i, jj) + g_a(jj, i));
        for (int i = 0; i < n_a; ++i)
            for (int jj = 0; jj < n_s; ++jj) push(g_b(i, jj));
        for (int i = 0; i < n_s; ++i)
            for (int jj = i; jj < n_s; ++jj)
                push(i == jj ? g_c(i, i) : g_c(i, jj) + g_c(jj, i));
        return j;
    }
};

struct DescentOutcome {
    FitState state;
    double residual = std::numeric_limits<double>::infinity();
    int iters = 0;
};

DescentOutcome adaptive_descent(const FitProblem& prob, FitState init, int max_iters,
                                std::uint64_t& evals) {
    DescentOutcome out;
    Eigen::VectorXd x = init.pack();
    Eigen::VectorXd g;
    double j = prob.residual_grad(init, g, evals);
    double step = 1e-2 / (1.0 + g.norm());

    int window_start_iter = 0;
    double window_start_j = j;
    int it = 0;
    for (; it < max_iters; ++it) {
        if (j <= 1e-14 || g.norm() < 1e-14) break;
        const Eigen::VectorXd x_new = x - step * g;
        const FitState st_new = FitState::unpack(x_new, prob.n_a, prob.n_s);
        const double j_new = prob.residual(st_new, evals);
        if (!(j_new <= j)) { // increase (or NaN): shrink and retry from x
            step *= 0.5;
            if (step < 1e-18) break;
            continue;
        }
        x = x_new;
        j = j_new;
        step *= 1.1;
        prob.residual_grad(st_new, g, evals);

        // A noise floor eventually drops the per-window improvement to
        // essentially nothing; healthy descent stays orders above this.
        if (it - window_start_iter >= 100) {
            if (window_start_j - j < 1e-7 * j) break;
            window_start_iter = it;
            window_start_j = j;
        }
    }
    out.state = FitState::unpack(x, prob.n_a, prob.n_s);
    out.residual = j;
    out.iters = it;
    return out;
}

} // namespace

std::pair<ScatteringMatrix, EstimateReport>
estimate_scattering(const MeasurementSet& m, const LoadCatalog& cat, std::uint64_t seed,
                    const EstimateOptions& opts) {
    if (m.records.empty()) throw StructuralError("estimate_scattering: no measurements");
    const int n_a = static_cast<int>(m.accessible.size());
    const int n_s = static_cast<int>(m.nda.size());
    if (n_a < 1 || n_s < 1)
        throw StructuralError("estimate_scattering: need accessible and NDA ports");

    FitProblem prob;
    prob.n_a = n_a;
    prob.n_s = n_s;
    const PortMapping ident = PortMapping::identity(n_s);
    std::set<std::vector<SwitchState>> distinct;
    for (const Measurement& rec : m.records) {
        if (rec.s_acc.rows() != n_a || rec.s_acc.cols() != n_a)
            throw StructuralError("estimate_scattering: record shape mismatch");
        prob.loads.push_back(build_load_scattering(rec.config, cat, m.f_index, ident));
        prob.readings.push_back(rec.s_acc);
        distinct.insert(rec.config.states);
    }

    CMat mean_reading = CMat::Zero(n_a, n_a);
    for (const CMat& r : prob.readings) mean_reading += r;
    mean_reading /= static_cast<double>(prob.readings.size());
    mean_reading = 0.5 * (mean_reading + mean_reading.transpose().eval());

    EstimateReport rep;
    rep.n_records = static_cast<int>(m.records.size());
    rep.n_distinct_configs = static_cast<int>(distinct.size());
    rep.n_free_params = FitState::param_count(n_a, n_s);

    DescentOutcome best;
    for (int start = 0; start < opts.starts; ++start) {
        auto engine = make_engine(seed, 424242ULL + static_cast<std::uint64_t>(start));
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto draw = [&](double scale) { return Cplx{gauss(engine) * scale, gauss(engine) * scale}; };

        FitState init;
        init.a = mean_reading;
        init.b.resize(n_a, n_s);
        init.c = CMat::Zero(n_s, n_s);
        // B = 0 is a stationary point of the fit; start well away from it.
        for (int i = 0; i < n_a; ++i)
            for (int j = 0; j < n_s; ++j) init.b(i, j) = draw(0.3);
        for (int i = 0; i < n_s; ++i)
            for (int j = i; j < n_s; ++j) init.c(i, j) = init.c(j, i) = draw(start == 0 ? 0.0 : 0.1);
        if (start > 0)
            for (int i = 0; i < n_a; ++i)
                for (int j = i; j < n_a; ++j) {
                    const Cplx d = draw(0.05);
                    init.a(i, j) += d;
                    if (i != j) init.a(j, i) += d;
                }

        DescentOutcome run = adaptive_descent(prob, std::move(init), opts.max_iters, rep.evaluations);
        if (run.residual < best.residual) best = std::move(run);
        if (best.residual <= 1e-13) break; // already at the numerical floor
    }

    rep.residual = best.residual;
    rep.iters = best.iters;
    rep.converged = best.residual <= opts.target_residual;
    rep.sign_ambiguous = true;

    const int n = n_a + n_s;
    CMat full = CMat::Zero(n, n);
    for (int i = 0; i < n_a; ++i)
        for (int j = 0; j < n_a; ++j) full(m.accessible[i], m.accessible[j]) = best.state.a(i, j);
    for (int i = 0; i < n_a; ++i)
        for (int j = 0; j < n_s; ++j) {
            full(m.accessible[i], m.nda[j]) = best.state.b(i, j);
            full(m.nda[j], m.accessible[i]) = best.state.b(i, j);
        }
    for (int i = 0; i < n_s; ++i)
        for (int j = 0; j < n_s; ++j) full(m.nda[i], m.nda[j]) = best.state.c(i, j);

    double freq = m.frequency_hz;
    return {ScatteringMatrix(std::move(full), freq), rep};
}

ScatteringMatrix flip_cross_blocks(const ScatteringMatrix& s, std::span<const int> accessible,
                                   std::span<const int> nda) {
    ScatteringMatrix out = s;
    for (int a : accessible)
        for (int d : nda) {
            out.s(a, d) = -out.s(a, d);
            out.s(d, a) = -out.s(d, a);
        }
    return out;
}

SignResult resolve_sign(const ScatteringMatrix& estimate, const MeasurementSet& m,
                        const LoadCatalog& cat) {
    if (!m.disambiguation)
        throw StructuralError("resolve_sign: measurement set carries no disambiguation record");
    const DisambiguationMeasurement& d = *m.disambiguation;

    std::vector<int> nda_rest;
    for (int p : m.nda)
        if (p != d.redesignated_port) nda_rest.push_back(p);

    CMat s_l(0, 0);
    if (!nda_rest.empty())
        s_l = build_load_scattering(d.config, cat, m.f_index,
                                    PortMapping::identity(static_cast<int>(nda_rest.size())));

    const ScatteringMatrix flipped = flip_cross_blocks(estimate, m.accessible, m.nda);
    const double r_kept = (forward_measure(estimate, nda_rest, s_l) - d.s_acc).squaredNorm();
    const double r_flip = (forward_measure(flipped, nda_rest, s_l) - d.s_acc).squaredNorm();

    SignResult res;
    res.residual_kept = r_kept;
    res.residual_flipped = r_flip;
    const double scale = std::max(r_kept, r_flip);
    if (std::abs(r_kept - r_flip) < 1e-9 * scale || scale == 0.0) {
        res.estimate = estimate;
        res.resolution = SignResolution::Unresolved;
        return res;
    }
    res.estimate = r_kept <= r_flip ? estimate : flipped;
    res.resolution = SignResolution::Resolved;
    return res;
}

namespace {

json config_to_json(const SwitchConfig& cfg) {
    json arr = json::array();
    for (SwitchState s : cfg.states) arr.push_back(to_string(s));
    return arr;
}

SwitchConfig config_from_json(const json& arr) {
    SwitchConfig cfg;
    for (const auto& tok : arr) cfg.states.push_back(switch_state_from_string(tok.get<std::string>()));
    return cfg;
}

json matrix_to_json(const CMat& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            arr.push_back({m(i, j).real(), m(i, j).imag()});
    return arr;
}

CMat matrix_from_json(const json& arr, int n) {
    if (!arr.is_array() || arr.size() != static_cast<size_t>(n) * n)
        throw ParseError("measurement matrix: expected " + std::to_string(n * n) + " entries");
    CMat m(n, n);
    size_t k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j, ++k) m(i, j) = Cplx{arr[k][0].get<double>(), arr[k][1].get<double>()};
    return m;
}

} // namespace

void save_measurements(const MeasurementSet& m, const std::filesystem::path& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "measurement_set";
    doc["accessible"] = m.accessible;
    doc["nda"] = m.nda;
    doc["f_index"] = m.f_index;
    doc["frequency_hz"] = m.frequency_hz;
    json records = json::array();
    for (const Measurement& rec : m.records)
        records.push_back({{"config", config_to_json(rec.config)},
                           {"s_acc", matrix_to_json(rec.s_acc)}});
    doc["records"] = std::move(records);
    if (m.disambiguation) {
        doc["disambiguation"] = {{"redesignated_port", m.disambiguation->redesignated_port},
                                 {"config", config_to_json(m.disambiguation->config)},
                                 {"s_acc", matrix_to_json(m.disambiguation->s_acc)}};
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << doc.dump() << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }

    MeasurementSet m;
    try {
        if (doc.at("kind").get<std::string>() != "measurement_set")
            throw ParseError("'" + path.string() + "': not a measurement_set document");
        m.accessible = doc.at("accessible").get<std::vector<int>>();
        m.nda = doc.at("nda").get<std::vector<int>>();
        m.f_index = doc.at("f_index").get<int>();
        m.frequency_hz = doc.at("frequency_hz").get<double>();
        const int n_a = static_cast<int>(m.accessible.size());
        for (const auto& rec : doc.at("records")) {
            Measurement r;
            r.config = config_from_json(rec.at("config"));
            r.s_acc = matrix_from_json(rec.at("s_acc"), n_a);
            m.records.push_back(std::move(r));
        }
        if (doc.contains("disambiguation")) {
            const auto& dj = doc.at("disambiguation");
            DisambiguationMeasurement d;
            d.redesignated_port = dj.at("redesignated_port").get<int>();
            d.config = config_from_json(dj.at("config"));
            const int side = d.redesignated_port >= 0 ? n_a + 1 : n_a;
            d.s_acc = matrix_from_json(dj.at("s_acc"), side);
            m.disambiguation = std::move(d);
        }
    } catch (const json::exception& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
    return m;
}

} // namespace bdris
