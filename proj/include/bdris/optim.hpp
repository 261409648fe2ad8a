#pragma once

#include <cstdint>
#include <utility>

#include "bdris/kpi.hpp"
#include "bdris/loadnet.hpp"
#include "bdris/netmodel.hpp"

namespace bdris {

/// Which channel model drives the optimization objective. The full model
/// keeps the load-network/environment interaction; the cascaded model drops
/// the S_SS term (coupling-unaware optimization). Reported values are always
/// re-evaluated under the full model.
enum class ChannelModel { Full, Cascaded };

const char* to_string(ChannelModel m);

struct SearchResult {
    double best_value = 0.0;     ///< KPI of best_config under the full model
    SwitchConfig best_config;
    std::uint64_t evaluations = 0;
    ChannelModel model = ChannelModel::Full;
};

/// Globally optimal configuration by trying every element of the space.
/// Ties are broken toward the lexicographically smallest configuration.
/// With model == Cascaded the argmax is taken under the cascaded objective
/// and the winner is then re-scored under the full model.
SearchResult exhaustive_search(const Environment& env, const LoadCatalog& cat, int f_index,
                               const ConfigSpace& space, const PortMapping& map, Kpi kpi,
                               SnrConfig snr, ChannelModel model, int threads = 0);

/// Single-threaded reference implementation; the parallel kernel must agree
/// with it exactly.
SearchResult exhaustive_search_serial(const Environment& env, const LoadCatalog& cat,
                                      int f_index, const ConfigSpace& space,
                                      const PortMapping& map, Kpi kpi, SnrConfig snr,
                                      ChannelModel model);

/// Idealized load network: any purely imaginary symmetric impedance matrix
/// Z_L = jX, i.e. any symmetric unitary S_L. Diagonal mode restricts X to
/// its diagonal (ideal conventional RIS).
enum class IdealMode { FullyConnected, Diagonal };

struct IdealOptions {
    int restarts = 8;
    double init_range_ohm = 200.0; ///< X entries drawn uniform on [-r, r]
    int max_iters = 500;
    double grad_tol = 1e-7;
};

struct IdealResult {
    double best_value = 0.0;       ///< KPI of the optimum under the full model
    Eigen::MatrixXd reactance;     ///< optimal X (symmetric, Ohm)
    CMat s_l;                      ///< corresponding load scattering matrix
    std::uint64_t evaluations = 0;
    int discarded_restarts = 0;    ///< restarts aborted on non-finite objectives
    ChannelModel model = ChannelModel::Full;
};

/// S_L = (jX + Z0 I)^-1 (jX - Z0 I): symmetric and unitary for symmetric real X.
CMat reactance_to_scattering(const Eigen::MatrixXd& x);

/// Quasi-Newton (BFGS, finite-difference gradients) maximization over the
/// ideal load parametrization, multi-started from 'restarts' random draws.
/// Fully-connected runs additionally warm-start from the diagonal-mode
/// optimum, which makes the mode ordering exact rather than statistical.
IdealResult ideal_optimize(const Environment& env, Kpi kpi, SnrConfig snr, IdealMode mode,
                           ChannelModel model, int restarts, std::uint64_t seed,
                           const IdealOptions& opts = {});

struct McGap {
    double aware_value = 0.0;   ///< optimized and scored under the full model
    double unaware_value = 0.0; ///< optimized under cascaded, scored under full
    double gap() const { return aware_value - unaware_value; }
};

/// Coupling-unawareness study over a discrete configuration space.
McGap mc_unawareness_gap(const Environment& env, const LoadCatalog& cat, int f_index,
                         const ConfigSpace& space, const PortMapping& map, Kpi kpi,
                         SnrConfig snr, int threads = 0);

/// Same study for the idealized continuous load network.
McGap mc_unawareness_gap_ideal(const Environment& env, Kpi kpi, SnrConfig snr, IdealMode mode,
                               int restarts, std::uint64_t seed,
                               const IdealOptions& opts = {});

} // namespace bdris
