#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "bdris/errors.hpp"

namespace bdris {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// End-to-end channel H (N_R x N_T), entries h_ji = gain from TX i to RX j.
using ChannelMatrix = Eigen::MatrixXcd;

/// Scattering matrix of a passive reciprocal multi-port network, optionally
/// tagged with the frequency it was taken at.
struct ScatteringMatrix {
    CMat s;
    std::optional<double> frequency_hz;

    ScatteringMatrix() = default;
    explicit ScatteringMatrix(CMat entries, std::optional<double> freq = std::nullopt)
        : s(std::move(entries)), frequency_hz(freq) {
        if (s.rows() != s.cols())
            throw StructuralError("ScatteringMatrix: entries must be square, got " +
                                  std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
    }

    int n_ports() const { return static_cast<int>(s.rows()); }
};

/// Disjoint ordered index sets over the N environment ports.
struct PortPartition {
    std::vector<int> tx;
    std::vector<int> rx;
    std::vector<int> ris;

    int n_tx() const { return static_cast<int>(tx.size()); }
    int n_rx() const { return static_cast<int>(rx.size()); }
    int n_ris() const { return static_cast<int>(ris.size()); }

    /// Throws StructuralError unless the three sets are pairwise disjoint
    /// and contained in {0..n_ports-1}.
    void check_against(int n_ports) const;
};

/// One single-frequency problem instance.
struct Environment {
    ScatteringMatrix S;
    PortPartition partition;
};

struct ValidationReport {
    double max_asymmetry = 0.0;
    double max_singular_value = 0.0;
    bool symmetric_ok = false;
    bool passive_ok = false;

    bool pass() const { return symmetric_ok && passive_ok; }
};

/// Reference impedance defining all port quantities.
inline constexpr double kReferenceImpedanceOhm = 50.0;

/// Checks reciprocity (max |S_ij - S_ji| <= tol) and passivity (sigma_max <= 1 + tol).
ValidationReport validate(const ScatteringMatrix& S, double tol = 1e-9);

/// Environment blocks extracted once and reused across many load sweeps.
struct ChannelBlocks {
    CMat s_rt, s_rs, s_st, s_ss;

    static ChannelBlocks from(const ScatteringMatrix& S, const PortPartition& p);

    /// H = S_RT + S_RS S_L (I - S_SS S_L)^-1 S_ST (load-inversion-free form).
    ChannelMatrix full(const CMat& S_L) const;
    /// H = S_RT + S_RS S_L S_ST.
    ChannelMatrix cascaded(const CMat& S_L) const;
};

/// Physics-consistent channel: H = S_RT + S_RS S_L (I - S_SS S_L)^-1 S_ST.
/// The (I - S_SS S_L) form tolerates singular S_L (fully absorptive loads).
/// Throws DegenerateCavityError when (I - S_SS S_L) has rcond below 1e-12.
ChannelMatrix channel_mnt(const ScatteringMatrix& S, const PortPartition& p,
                          const CMat& S_L);

/// Coupling-unaware cascaded model: H = S_RT + S_RS S_L S_ST.
ChannelMatrix channel_cascaded(const ScatteringMatrix& S, const PortPartition& p,
                               const CMat& S_L);

/// Keeps the given TX/RX ports plus all RIS ports; unused antenna ports are
/// matched-terminated, which for reference-impedance loads just drops their
/// rows and columns. Returns the submatrix and the re-indexed partition.
std::pair<ScatteringMatrix, PortPartition>
restrict_to_active(const ScatteringMatrix& S, const PortPartition& p,
                   std::span<const int> active_tx, std::span<const int> active_rx);

} // namespace bdris
