#include "bdris/netmodel.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <unordered_set>

namespace bdris {

void PortPartition::check_against(int n_ports) const {
    std::unordered_set<int> seen;
    auto check_set = [&](const std::vector<int>& set, const char* name) {
        for (int idx : set) {
            if (idx < 0 || idx >= n_ports)
                throw StructuralError(std::string("PortPartition: ") + name + " index " +
                                      std::to_string(idx) + " out of range [0," +
                                      std::to_string(n_ports) + ")");
            if (!seen.insert(idx).second)
                throw StructuralError(std::string("PortPartition: port ") +
                                      std::to_string(idx) + " appears in more than one set");
        }
    };
    check_set(tx, "tx");
    check_set(rx, "rx");
    check_set(ris, "ris");
}

ValidationReport validate(const ScatteringMatrix& S, double tol) {
    if (S.n_ports() < 1)
        throw StructuralError("validate: matrix must have at least one port");

    ValidationReport rep;
    rep.max_asymmetry = (S.s - S.s.transpose()).cwiseAbs().maxCoeff();
    Eigen::JacobiSVD<CMat> svd(S.s);
    rep.max_singular_value = svd.singularValues()(0);
    rep.symmetric_ok = rep.max_asymmetry <= tol;
    rep.passive_ok = rep.max_singular_value <= 1.0 + tol;
    return rep;
}

namespace {

CMat select_block(const CMat& s, const std::vector<int>& rows, const std::vector<int>& cols) {
    CMat out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s(rows[i], cols[j]);
    return out;
}

void check_channel_inputs(const ScatteringMatrix& S, const PortPartition& p, const CMat& S_L) {
    p.check_against(S.n_ports());
    if (S_L.rows() != S_L.cols() || S_L.rows() != p.n_ris())
        throw StructuralError("channel: S_L must be N_S x N_S with N_S = " +
                              std::to_string(p.n_ris()) + ", got " +
                              std::to_string(S_L.rows()) + "x" + std::to_string(S_L.cols()));
}

} // namespace

ChannelBlocks ChannelBlocks::from(const ScatteringMatrix& S, const PortPartition& p) {
    p.check_against(S.n_ports());
    ChannelBlocks b;
    b.s_rt = select_block(S.s, p.rx, p.tx);
    b.s_rs = select_block(S.s, p.rx, p.ris);
    b.s_st = select_block(S.s, p.ris, p.tx);
    b.s_ss = select_block(S.s, p.ris, p.ris);
    return b;
}

ChannelMatrix ChannelBlocks::full(const CMat& S_L) const {
    if (s_ss.rows() == 0) return s_rt;
    const Eigen::Index n_s = S_L.rows();
    CMat cavity = CMat::Identity(n_s, n_s) - s_ss * S_L;
    Eigen::PartialPivLU<CMat> lu(cavity);
    if (lu.rcond() < 1e-12)
        throw DegenerateCavityError("channel: (I - S_SS S_L) numerically singular, rcond = " +
                                    std::to_string(lu.rcond()));
    return s_rt + s_rs * S_L * lu.solve(s_st);
}

ChannelMatrix ChannelBlocks::cascaded(const CMat& S_L) const {
    if (s_ss.rows() == 0) return s_rt;
    return s_rt + s_rs * S_L * s_st;
}

ChannelMatrix channel_mnt(const ScatteringMatrix& S, const PortPartition& p, const CMat& S_L) {
    check_channel_inputs(S, p, S_L);
    return ChannelBlocks::from(S, p).full(S_L);
}

ChannelMatrix channel_cascaded(const ScatteringMatrix& S, const PortPartition& p, const CMat& S_L) {
    check_channel_inputs(S, p, S_L);
    return ChannelBlocks::from(S, p).cascaded(S_L);
}

std::pair<ScatteringMatrix, PortPartition>
restrict_to_active(const ScatteringMatrix& S, const PortPartition& p,
                   std::span<const int> active_tx, std::span<const int> active_rx) {
    p.check_against(S.n_ports());
    if (active_tx.empty() || active_rx.empty())
        throw StructuralError("restrict_to_active: active TX and RX sets must be non-empty");

    auto require_subset = [](std::span<const int> sub, const std::vector<int>& super,
                             const char* name) {
        for (int idx : sub)
            if (std::find(super.begin(), super.end(), idx) == super.end())
                throw StructuralError(std::string("restrict_to_active: port ") +
                                      std::to_string(idx) + " is not a " + name + " port");
    };
    require_subset(active_tx, p.tx, "tx");
    require_subset(active_rx, p.rx, "rx");

    // Kept ports in ascending original order; matched terminations at the
    // reference impedance leave the submatrix over the kept ports unchanged.
    std::vector<int> kept;
    kept.insert(kept.end(), active_tx.begin(), active_tx.end());
    kept.insert(kept.end(), active_rx.begin(), active_rx.end());
    kept.insert(kept.end(), p.ris.begin(), p.ris.end());
    std::sort(kept.begin(), kept.end());

    std::vector<int> new_index(S.n_ports(), -1);
    for (size_t i = 0; i < kept.size(); ++i) new_index[kept[i]] = static_cast<int>(i);

    ScatteringMatrix sub(select_block(S.s, kept, kept), S.frequency_hz);

    PortPartition q;
    auto remap = [&](std::span<const int> old_set, std::vector<int>& out) {
        for (int idx : old_set) out.push_back(new_index[idx]);
    };
    remap(active_tx, q.tx);
    remap(active_rx, q.rx);
    remap(p.ris, q.ris);
    return {std::move(sub), std::move(q)};
}

} // namespace bdris
