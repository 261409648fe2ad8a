#include "bdris/optim.hpp"

#include <cmath>

#include "bdris/bfgs.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bdris;
using testutil::consecutive_partition;
using testutil::random_symmetric_passive;

namespace {

Environment random_environment(std::mt19937_64& eng, int n_tx, int n_rx, int n_ris,
                               double smax = 0.9) {
    const int n = n_tx + n_rx + n_ris;
    return Environment{ScatteringMatrix(random_symmetric_passive(eng, n, smax)),
                       consecutive_partition(n_tx, n_rx, n_ris)};
}

ConfigSpace make_space(int n, int n_individual, bool coupled) {
    ConfigSpace sp;
    sp.n_ports = n;
    if (n_individual == 2) sp = restrict_individual_loads(sp, {1, 2});
    sp.allow_coupled = coupled;
    return sp;
}

LoadCatalog lossless_catalog() {
    LoadCatalog cat;
    cat.frequencies_hz = {1e9};
    cat.individual[0] = {Cplx{-1.0, 0.0}};
    cat.individual[1] = {Cplx{0.0, 1.0}};
    cat.individual[2] = {std::polar(1.0, 1.0)};
    cat.coupled.s11 = {Cplx{0.0, 0.0}};
    cat.coupled.s21 = {std::polar(1.0, -0.785398163397448)};
    cat.coupled.s22 = {Cplx{0.0, 0.0}};
    return cat;
}

} // namespace

TEST_CASE("bfgs minimizes a shifted quadratic") {
    auto f = [](const Eigen::VectorXd& x) {
        return (x(0) - 1.5) * (x(0) - 1.5) + 3.0 * (x(1) + 0.5) * (x(1) + 0.5);
    };
    BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Zero(2));
    REQUIRE_FALSE(r.hit_nonfinite);
    CHECK(r.x(0) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("bfgs handles the rosenbrock valley") {
    auto f = [](const Eigen::VectorXd& x) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        return a * a + 100.0 * b * b;
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    BfgsResult r = bfgs_minimize(f, x0);
    REQUIRE_FALSE(r.hit_nonfinite);
    CHECK(r.f <= 1e-10);
}

TEST_CASE("bfgs discards runs with non-finite objectives") {
    auto f = [](const Eigen::VectorXd& x) {
        return x(0) < -0.5 ? std::numeric_limits<double>::quiet_NaN() : (x(0) - 2.0) * (x(0) - 2.0);
    };
    BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, -1.0));
    CHECK(r.hit_nonfinite);
}

TEST_CASE("exhaustive search over one port equals the best of three loads") {
    auto eng = testutil::rng(101);
    Environment env = random_environment(eng, 1, 1, 1);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});

    ConfigSpace sp = make_space(1, 3, true);
    SearchResult res = exhaustive_search_serial(env, cat, 0, sp, PortMapping::identity(1),
                                                Kpi::SisoGain, SnrConfig{}, ChannelModel::Full);
    CHECK(res.evaluations == 3);

    // hand evaluation over the three scalar loads
    const Cplx s_rt = env.S.s(1, 0), s_rs = env.S.s(1, 2), s_st = env.S.s(2, 0),
               s_ss = env.S.s(2, 2);
    double best = -1.0;
    for (int k = 0; k < 3; ++k) {
        const Cplx rho = cat.individual[k][0];
        const Cplx h = s_rt + s_rs * rho * s_st / (1.0 - s_ss * rho);
        best = std::max(best, std::norm(h));
    }
    CHECK(res.best_value == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("a single-candidate space returns the baseline value") {
    auto eng = testutil::rng(103);
    Environment env = random_environment(eng, 1, 1, 3);
    // every selectable load is an open circuit, so all configurations
    // realize S_L = I and the search value equals the baseline evaluation
    LoadCatalog cat;
    cat.frequencies_hz = {1e9};
    cat.individual[0] = {Cplx{1.0, 0.0}};
    cat.individual[1] = {Cplx{1.0, 0.0}};
    cat.individual[2] = {Cplx{1.0, 0.0}};
    cat.coupled.s11 = {Cplx{0.0, 0.0}};
    cat.coupled.s21 = {Cplx{1.0, 0.0}};
    cat.coupled.s22 = {Cplx{0.0, 0.0}};

    ConfigSpace sp = make_space(3, 3, false);
    SearchResult res = exhaustive_search_serial(env, cat, 0, sp, PortMapping::identity(3),
                                                Kpi::SisoGain, SnrConfig{}, ChannelModel::Full);
    const double oc = evaluate_kpi(Kpi::SisoGain,
                                   channel_mnt(env.S, env.partition, CMat::Identity(3, 3)),
                                   SnrConfig{});
    CHECK(res.best_value == doctest::Approx(oc).epsilon(1e-14));
    // ties resolve to the lexicographically smallest configuration
    CHECK(res.best_config.states == std::vector<SwitchState>(3, SwitchState::Load1));
}

TEST_CASE("nested spaces can only improve the optimum") {
    auto eng = testutil::rng(107);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});
    for (int trial = 0; trial < 5; ++trial) {
        Environment env = random_environment(eng, 1, 1, 4);
        const PortMapping map = PortMapping::identity(4);
        auto value = [&](int k, bool coupled) {
            return exhaustive_search_serial(env, cat, 0, make_space(4, k, coupled), map,
                                            Kpi::SisoGain, SnrConfig{}, ChannelModel::Full)
                .best_value;
        };
        const double bd123 = value(3, true);
        const double d123 = value(3, false);
        const double d12 = value(2, false);
        const double bd12 = value(2, true);
        CHECK(bd123 >= d123);
        CHECK(d123 >= d12);
        CHECK(bd123 >= bd12);
        CHECK(bd12 >= d12);
    }
}

TEST_CASE("parallel search kernel agrees with the serial reference") {
    auto eng = testutil::rng(109);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});
    Environment env = random_environment(eng, 2, 2, 5);
    ConfigSpace sp = make_space(5, 3, true);
    const PortMapping map = PortMapping::identity(5);

    for (Kpi kpi : {Kpi::SisoGain, Kpi::SpectralNormSq, Kpi::LogdetCapacity}) {
        Environment cell = env;
        if (kpi_is_siso(kpi)) {
            auto [sub, part] = restrict_to_active(env.S, env.partition,
                                                  std::vector<int>{env.partition.tx[0]},
                                                  std::vector<int>{env.partition.rx[0]});
            cell = Environment{std::move(sub), std::move(part)};
        }
        for (ChannelModel model : {ChannelModel::Full, ChannelModel::Cascaded}) {
            SearchResult serial =
                exhaustive_search_serial(cell, cat, 0, sp, map, kpi, SnrConfig{}, model);
            for (int threads : {1, 2, 4}) {
                SearchResult par =
                    exhaustive_search(cell, cat, 0, sp, map, kpi, SnrConfig{}, model, threads);
                CHECK(par.best_value == serial.best_value);
                CHECK(par.best_config == serial.best_config);
                CHECK(par.evaluations == serial.evaluations);
            }
        }
    }
}

TEST_CASE("global optimality certificate against an independent loop") {
    auto eng = testutil::rng(113);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});
    for (int n_s = 1; n_s <= 3; ++n_s) {
        Environment env = random_environment(eng, 1, 1, n_s);
        ConfigSpace sp = make_space(n_s, 3, true);
        const PortMapping map = PortMapping::identity(n_s);
        SearchResult res = exhaustive_search(env, cat, 0, sp, map, Kpi::SisoGain, SnrConfig{},
                                             ChannelModel::Full);

        // brute-force re-evaluation, written without the search machinery
        double best = -std::numeric_limits<double>::infinity();
        SwitchConfig best_cfg;
        for (const SwitchConfig& cfg : enumerate_configs(sp)) {
            const CMat s_l = build_load_scattering(cfg, cat, 0, map);
            const ChannelMatrix h = channel_mnt(env.S, env.partition, s_l);
            const double v = evaluate_kpi(Kpi::SisoGain, h, SnrConfig{});
            if (v > best) {
                best = v;
                best_cfg = cfg;
            }
        }
        CHECK(res.best_value == best);
        CHECK(res.best_config == best_cfg);

        // reported value must re-evaluate exactly under the full model
        const CMat s_l = build_load_scattering(res.best_config, cat, 0, map);
        const double again =
            evaluate_kpi(Kpi::SisoGain, channel_mnt(env.S, env.partition, s_l), SnrConfig{});
        CHECK(std::abs(res.best_value - again) <= 1e-12);
    }
}

TEST_CASE("ideal diagonal optimum on one port matches a reactance sweep") {
    auto eng = testutil::rng(127);
    Environment env = random_environment(eng, 1, 1, 1);
    const Cplx s_rt = env.S.s(1, 0), s_rs = env.S.s(1, 2), s_st = env.S.s(2, 0),
               s_ss = env.S.s(2, 2);

    // independent 1-D oracle: sweep the reactance, then refine the bracket
    auto value_at = [&](double x) {
        const Cplx rho = (Cplx{0.0, x} - 50.0) / (Cplx{0.0, x} + 50.0);
        const Cplx h = s_rt + s_rs * rho * s_st / (1.0 - s_ss * rho);
        return std::norm(h);
    };
    const int grid = 200000;
    double best_x = 0.0, best_v = -1.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = -1e4 + 2e4 * i / grid;
        const double v = value_at(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    double lo = best_x - 2e4 / grid, hi = best_x + 2e4 / grid;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (value_at(m1) < value_at(m2))
            lo = m1;
        else
            hi = m2;
    }
    best_v = std::max(best_v, value_at(0.5 * (lo + hi)));

    IdealResult res = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::Diagonal,
                                     ChannelModel::Full, 8, 2024);
    CHECK(std::abs(res.best_value - best_v) <= 1e-4 * std::abs(best_v));
}

TEST_CASE("fully connected dominates diagonal and stays unitary") {
    auto eng = testutil::rng(131);
    for (int trial = 0; trial < 3; ++trial) {
        Environment env = random_environment(eng, 1, 1, 3);
        const std::uint64_t seed = 555 + trial;
        IdealResult diag = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::Diagonal,
                                          ChannelModel::Full, 8, seed);
        IdealResult fc = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::FullyConnected,
                                        ChannelModel::Full, 8, seed);
        CHECK(fc.best_value >= diag.best_value - 1e-9);

        for (const IdealResult& r : {diag, fc}) {
            const CMat gram = r.s_l * r.s_l.adjoint();
            CHECK((gram - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((r.s_l - r.s_l.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((r.reactance - r.reactance.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
        // diagonal mode keeps off-diagonal parameters at zero
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) CHECK(diag.reactance(i, j) == 0.0);
    }
}

TEST_CASE("ideal optimization is deterministic in the seed") {
    auto eng = testutil::rng(137);
    Environment env = random_environment(eng, 1, 1, 2);
    IdealResult a = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::FullyConnected,
                                   ChannelModel::Full, 4, 99);
    IdealResult b = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::FullyConnected,
                                   ChannelModel::Full, 4, 99);
    CHECK(a.best_value == b.best_value);
    CHECK(a.reactance == b.reactance);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("fully connected reaches any unitary discrete optimum") {
    auto eng = testutil::rng(139);
    Environment env = random_environment(eng, 1, 1, 3);
    LoadCatalog cat = lossless_catalog();
    SearchResult discrete =
        exhaustive_search_serial(env, cat, 0, make_space(3, 3, true), PortMapping::identity(3),
                                 Kpi::SisoGain, SnrConfig{}, ChannelModel::Full);
    IdealResult fc = ideal_optimize(env, Kpi::SisoGain, SnrConfig{}, IdealMode::FullyConnected,
                                    ChannelModel::Full, 16, 777);
    CHECK(fc.best_value >= discrete.best_value * (1.0 - 1e-6));
}

TEST_CASE("coupling-unawareness gap vanishes without coupling and never helps") {
    auto eng = testutil::rng(149);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});
    const PortMapping map = PortMapping::identity(3);
    ConfigSpace sp = make_space(3, 3, true);

    SUBCASE("zero RIS block means the models coincide") {
        Environment env = random_environment(eng, 1, 1, 3);
        CMat m = env.S.s;
        for (int a : env.partition.ris)
            for (int b : env.partition.ris) m(a, b) = 0.0;
        env.S = ScatteringMatrix(m);
        McGap g = mc_unawareness_gap(env, cat, 0, sp, map, Kpi::SisoGain, SnrConfig{});
        CHECK(g.gap() == 0.0);
    }

    SUBCASE("aware search dominates by global optimality") {
        for (int trial = 0; trial < 10; ++trial) {
            Environment env = random_environment(eng, 1, 1, 3);
            McGap g = mc_unawareness_gap(env, cat, 0, sp, map, Kpi::SisoGain, SnrConfig{});
            CHECK(g.aware_value >= g.unaware_value);
        }
    }
}

TEST_CASE("strong coupling produces a strictly positive unawareness gap") {
    // constructed instance: heavy RIS-block scattering makes the cascaded
    // argmax differ from the coupling-aware one
    auto eng = testutil::rng(4242);
    LoadCatalog cat = LoadCatalog::synthetic_default({1e9});
    const PortMapping map = PortMapping::identity(3);
    ConfigSpace sp = make_space(3, 3, true);

    double best_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const PortPartition p = consecutive_partition(1, 1, 3);
        CMat m = random_symmetric_passive(eng, 5, 0.98);
        CMat boosted = m;
        for (int a : p.ris)
            for (int b : p.ris) boosted(a, b) *= 3.0;
        Eigen::JacobiSVD<CMat> svd(boosted);
        boosted *= 0.98 / svd.singularValues()(0);

        CMat ss(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) ss(i, j) = boosted(p.ris[i], p.ris[j]);
        Eigen::JacobiSVD<CMat> svd_ss(ss);
        if (svd_ss.singularValues()(0) < 0.5) continue;

        Environment env{ScatteringMatrix(boosted), p};
        McGap g = mc_unawareness_gap(env, cat, 0, sp, map, Kpi::SisoGain, SnrConfig{});
        best_gap = std::max(best_gap, g.gap());
    }
    CHECK(best_gap > 1e-6);
}
