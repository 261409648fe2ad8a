#include "bdris/optim.hpp"

#include <omp.h>

#include <Eigen/LU>

#include <cmath>
#include <limits>

#include "bdris/bfgs.hpp"
#include "bdris/rng.hpp"

namespace bdris {

const char* to_string(ChannelModel m) {
    return m == ChannelModel::Full ? "full" : "cascaded";
}

namespace {

struct Candidate {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t index = 0;

    // Higher value wins; ties go to the lexicographically smaller
    // configuration, which is the smaller enumeration index.
    bool better_than(const Candidate& other) const {
        if (value != other.value) return value > other.value;
        return index < other.index;
    }
};

double score_config(const ChannelBlocks& blocks, const CMat& s_l, Kpi kpi, SnrConfig snr,
                    ChannelModel model) {
    const ChannelMatrix h = model == ChannelModel::Full ? blocks.full(s_l) : blocks.cascaded(s_l);
    return evaluate_kpi(kpi, h, snr);
}

SearchResult finalize_search(const ChannelBlocks& blocks, const std::vector<SwitchConfig>& configs,
                             const LoadCatalog& cat, int f_index, const PortMapping& map, Kpi kpi,
                             SnrConfig snr, ChannelModel model, const Candidate& best) {
    SearchResult res;
    res.model = model;
    res.evaluations = configs.size();
    res.best_config = configs[best.index];
    // The reported value always comes from the full model, whatever drove the argmax.
    const CMat s_l = build_load_scattering(res.best_config, cat, f_index, map);
    res.best_value = score_config(blocks, s_l, kpi, snr, ChannelModel::Full);
    return res;
}

} // namespace

SearchResult exhaustive_search_serial(const Environment& env, const LoadCatalog& cat, int f_index,
                                      const ConfigSpace& space, const PortMapping& map, Kpi kpi,
                                      SnrConfig snr, ChannelModel model) {
    const std::vector<SwitchConfig> configs = enumerate_configs(space);
    const ChannelBlocks blocks = ChannelBlocks::from(env.S, env.partition);

    Candidate best;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const CMat s_l = build_load_scattering(configs[i], cat, f_index, map);
        const Candidate cand{score_config(blocks, s_l, kpi, snr, model), i};
        if (cand.better_than(best)) best = cand;
    }
    return finalize_search(blocks, configs, cat, f_index, map, kpi, snr, model, best);
}

SearchResult exhaustive_search(const Environment& env, const LoadCatalog& cat, int f_index,
                               const ConfigSpace& space, const PortMapping& map, Kpi kpi,
                               SnrConfig snr, ChannelModel model, int threads) {
    const std::vector<SwitchConfig> configs = enumerate_configs(space);
    const ChannelBlocks blocks = ChannelBlocks::from(env.S, env.partition);
    const int n_threads = threads > 0 ? threads : omp_get_max_threads();

    Candidate best;
#pragma omp parallel num_threads(n_threads)
    {
        Candidate local;
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(configs.size()); ++i) {
            const CMat s_l = build_load_scattering(configs[i], cat, f_index, map);
            const Candidate cand{score_config(blocks, s_l, kpi, snr, model),
                                 static_cast<std::size_t>(i)};
            if (cand.better_than(local)) local = cand;
        }
#pragma omp critical
        {
            if (local.better_than(best)) best = local;
        }
    }
    return finalize_search(blocks, configs, cat, f_index, map, kpi, snr, model, best);
}

CMat reactance_to_scattering(const Eigen::MatrixXd& x) {
    if (x.rows() != x.cols()) throw StructuralError("reactance_to_scattering: X must be square");
    const Eigen::Index n = x.rows();
    const Cplx j{0.0, 1.0};
    const CMat z_l = j * x.cast<Cplx>();
    const CMat z0 = kReferenceImpedanceOhm * CMat::Identity(n, n);
    // (Z_L + Z0 I) is always invertible for real symmetric X.
    CMat s_l = Eigen::PartialPivLU<CMat>(z_l + z0).solve(z_l - z0);
    s_l = 0.5 * (s_l + s_l.transpose()).eval();
    return s_l;
}

namespace {

int ideal_param_count(int n, IdealMode mode) {
    return mode == IdealMode::Diagonal ? n : n * (n + 1) / 2;
}

Eigen::MatrixXd unpack_reactance(const Eigen::VectorXd& params, int n, IdealMode mode) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
    if (mode == IdealMode::Diagonal) {
        x.diagonal() = params;
        return x;
    }
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            x(i, j) = params(k);
            x(j, i) = params(k);
            ++k;
        }
    return x;
}

Eigen::VectorXd pack_reactance(const Eigen::MatrixXd& x, IdealMode mode) {
    const int n = static_cast<int>(x.rows());
    Eigen::VectorXd params(ideal_param_count(n, mode));
    if (mode == IdealMode::Diagonal) {
        params = x.diagonal();
        return params;
    }
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) params(k++) = x(i, j);
    return params;
}

} // namespace

IdealResult ideal_optimize(const Environment& env, Kpi kpi, SnrConfig snr, IdealMode mode,
                           ChannelModel model, int restarts, std::uint64_t seed,
                           const IdealOptions& opts) {
    if (restarts < 1) throw StructuralError("ideal_optimize: restarts must be >= 1");
    const int n = env.partition.n_ris();
    const ChannelBlocks blocks = ChannelBlocks::from(env.S, env.partition);
    const int n_params = ideal_param_count(n, mode);

    auto objective = [&](const Eigen::VectorXd& params) -> double {
        const CMat s_l = reactance_to_scattering(unpack_reactance(params, n, mode));
        try {
            return -score_config(blocks, s_l, kpi, snr, model);
        } catch (const DegenerateCavityError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    BfgsOptions bopts;
    bopts.max_iters = opts.max_iters;
    bopts.grad_tol = opts.grad_tol;

    IdealResult res;
    res.model = model;

    std::vector<Eigen::VectorXd> starts;
    // Fully-connected subsumes diagonal; seeding it with the diagonal optimum
    // turns the mode ordering into a structural guarantee of the monotone
    // line search instead of a matter of restart luck.
    if (mode == IdealMode::FullyConnected && n > 1) {
        IdealResult diag =
            ideal_optimize(env, kpi, snr, IdealMode::Diagonal, model, restarts, seed, opts);
        res.evaluations += diag.evaluations;
        res.discarded_restarts += diag.discarded_restarts;
        starts.push_back(pack_reactance(diag.reactance, mode));
    }
    for (int r = 0; r < restarts; ++r) {
        auto engine = make_engine(seed, static_cast<std::uint64_t>(r) * 2 +
                                            (mode == IdealMode::Diagonal ? 1 : 0));
        std::uniform_real_distribution<double> dist(-opts.init_range_ohm, opts.init_range_ohm);
        Eigen::VectorXd x0(n_params);
        for (int i = 0; i < n_params; ++i) x0(i) = dist(engine);
        starts.push_back(std::move(x0));
    }

    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_params;
    for (const auto& x0 : starts) {
        BfgsResult run = bfgs_minimize(objective, x0, bopts);
        res.evaluations += run.evals;
        if (run.hit_nonfinite) {
            ++res.discarded_restarts;
            continue;
        }
        if (run.f < best_obj) {
            best_obj = run.f;
            best_params = run.x;
        }
    }
    if (best_params.size() == 0)
        throw ValidationError("ideal_optimize: every restart hit a non-finite objective");

    res.reactance = unpack_reactance(best_params, n, mode);
    res.s_l = reactance_to_scattering(res.reactance);
    res.best_value = score_config(blocks, res.s_l, kpi, snr, ChannelModel::Full);
    return res;
}

McGap mc_unawareness_gap(const Environment& env, const LoadCatalog& cat, int f_index,
                         const ConfigSpace& space, const PortMapping& map, Kpi kpi,
                         SnrConfig snr, int threads) {
    McGap g;
    g.aware_value = exhaustive_search(env, cat, f_index, space, map, kpi, snr,
                                      ChannelModel::Full, threads)
                        .best_value;
    g.unaware_value = exhaustive_search(env, cat, f_index, space, map, kpi, snr,
                                        ChannelModel::Cascaded, threads)
                          .best_value;
    return g;
}

McGap mc_unawareness_gap_ideal(const Environment& env, Kpi kpi, SnrConfig snr, IdealMode mode,
                               int restarts, std::uint64_t seed, const IdealOptions& opts) {
    McGap g;
    g.aware_value =
        ideal_optimize(env, kpi, snr, mode, ChannelModel::Full, restarts, seed, opts).best_value;
    g.unaware_value =
        ideal_optimize(env, kpi, snr, mode, ChannelModel::Cascaded, restarts, seed, opts)
            .best_value;
    return g;
}

} // namespace bdris
