#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bdris/netmodel.hpp"

namespace bdris {

/// Frequency-swept environment scattering data plus the port roles.
struct EnvironmentSweep {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<double> frequencies_hz;
    PortPartition partition;
    std::vector<CMat> matrices; ///< one N x N matrix per grid point

    int n_ports() const { return matrices.empty() ? 0 : static_cast<int>(matrices[0].rows()); }
    int n_freq() const { return static_cast<int>(frequencies_hz.size()); }

    Environment at(int f_index) const;

    bool operator==(const EnvironmentSweep& other) const;
};

struct GenParams {
    int n = 15;
    int n_tx = 3;
    int n_rx = 4;
    int n_freq = 201;
    double f_start_hz = 700e6;
    double f_stop_hz = 900e6;
    std::uint64_t seed = 1;
    double loss_factor = 0.95;      ///< sigma_max of every matrix, in (0, 1]
    double coupling_strength = 0.5; ///< scaling of RIS-block off-diagonals, in [0, 1]
    std::string label = "synthetic";
};

/// Synthetic rich-scattering stand-in: per-frequency random complex
/// symmetric draws, low-order filtered across frequency for realistic
/// frequency selectivity, then rescaled so sigma_max == loss_factor.
/// Bit-identical for a fixed seed regardless of thread count.
EnvironmentSweep generate_environment(const GenParams& params);

/// Full invariant check (reciprocity/passivity per frequency, strictly
/// increasing grid). Throws ValidationError naming the offending indices.
void check_sweep(const EnvironmentSweep& env, double tol = 1e-9);

void save_environment(const EnvironmentSweep& env, const std::filesystem::path& path);
EnvironmentSweep load_environment(const std::filesystem::path& path);

} // namespace bdris
