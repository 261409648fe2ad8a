#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bdris/loadnet.hpp"
#include "bdris/netmodel.hpp"

namespace bdris {

/// One campaign record: the termination of the not-directly-accessible (NDA)
/// ports and the resulting accessible-port scattering matrix.
struct Measurement {
    SwitchConfig config; ///< one state per NDA port, in NDA-set order
    CMat s_acc;          ///< |A| x |A|, symmetric
};

/// The extra measurement used to settle the blockwise sign: one NDA port is
/// re-designated as accessible (the switch-to-auxiliary route), so the
/// accessible/NDA cross blocks enter the reading linearly and the two sign
/// candidates explain it differently. redesignated_port = -1 keeps the
/// campaign port split, which leaves the flip symmetry intact.
struct DisambiguationMeasurement {
    int redesignated_port = -1;
    SwitchConfig config; ///< one state per remaining NDA port
    CMat s_acc;
};

struct MeasurementSet {
    std::vector<int> accessible;
    std::vector<int> nda;
    int f_index = 0;
    double frequency_hz = 0.0;
    std::vector<Measurement> records;
    std::optional<DisambiguationMeasurement> disambiguation;
};

/// What a VNA attached to the accessible ports reads when the NDA ports are
/// terminated by a network with scattering S_L:
/// S_AA + S_AS S_L (I - S_SS S_L)^-1 S_SA. nda may be empty (full access).
CMat forward_measure(const ScatteringMatrix& S_true, std::span<const int> nda, const CMat& S_L);

/// Draws n_meas uniform valid NDA configurations, simulates the readings,
/// optionally adds complex Gaussian noise (then re-symmetrizes), and appends
/// a sign-disambiguation measurement. Deterministic in seed.
MeasurementSet simulate_campaign(const ScatteringMatrix& S_true, std::span<const int> nda,
                                 const LoadCatalog& cat, int f_index, int n_meas,
                                 std::uint64_t seed, double noise_std,
                                 bool with_disambiguation = true);

struct EstimateOptions {
    int starts = 4;
    int max_iters = 20000;
    double target_residual = 1e-9; ///< convergence declaration (noiseless data)
};

struct EstimateReport {
    double residual = 0.0; ///< sum over records of squared Frobenius deviation
    int iters = 0;
    bool converged = false;
    bool sign_ambiguous = true; ///< cleared only by resolve_sign
    int n_records = 0;
    int n_distinct_configs = 0;
    int n_free_params = 0; ///< real degrees of freedom of the fit
    std::uint64_t evaluations = 0;
};

/// Least-squares recovery of the full scattering matrix from the campaign:
/// free parameters are S_AA (symmetric), S_AS, and S_SS (symmetric); the
/// fit runs gradient descent with an adaptive step (halved on increase,
/// grown 1.1x on decrease), multi-started. The result is determined only up
/// to the joint sign of the S_AS/S_SA blocks.
std::pair<ScatteringMatrix, EstimateReport>
estimate_scattering(const MeasurementSet& m, const LoadCatalog& cat, std::uint64_t seed,
                    const EstimateOptions& opts = {});

/// The sign twin of an estimate: S_AS and S_SA negated, everything else kept.
ScatteringMatrix flip_cross_blocks(const ScatteringMatrix& s, std::span<const int> accessible,
                                   std::span<const int> nda);

enum class SignResolution { Resolved, Unresolved };

struct SignResult {
    ScatteringMatrix estimate;
    SignResolution resolution = SignResolution::Unresolved;
    double residual_kept = 0.0;
    double residual_flipped = 0.0;
};

/// Scores both sign candidates against the disambiguation measurement and
/// returns the one that explains it better; candidates within 1e-9 relative
/// of each other come back flagged Unresolved.
SignResult resolve_sign(const ScatteringMatrix& estimate, const MeasurementSet& m,
                        const LoadCatalog& cat);

void save_measurements(const MeasurementSet& m, const std::filesystem::path& path);
MeasurementSet load_measurements(const std::filesystem::path& path);

} // namespace bdris
