#include "bdris/loadnet.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace bdris {

const char* to_string(SwitchState s) {
    switch (s) {
        case SwitchState::Load1: return "L1";
        case SwitchState::Load2: return "L2";
        case SwitchState::Load3: return "L3";
        case SwitchState::ConnectLeft: return "CL";
        case SwitchState::ConnectRight: return "CR";
    }
    return "?";
}

SwitchState switch_state_from_string(const std::string& token) {
    if (token == "L1") return SwitchState::Load1;
    if (token == "L2") return SwitchState::Load2;
    if (token == "L3") return SwitchState::Load3;
    if (token == "CL") return SwitchState::ConnectLeft;
    if (token == "CR") return SwitchState::ConnectRight;
    throw ParseError("unknown switch state token '" + token + "'");
}

void SwitchConfig::check() const {
    const int n = static_cast<int>(states.size());
    if (n == 0) throw StructuralError("SwitchConfig: empty state list");
    for (int i = 0; i < n; ++i) {
        const bool right = states[i] == SwitchState::ConnectRight;
        const bool next_left = i + 1 < n && states[i + 1] == SwitchState::ConnectLeft;
        if (right != next_left)
            throw StructuralError("SwitchConfig: unmatched connection at port " +
                                  std::to_string(i));
        if (i == 0 && states[i] == SwitchState::ConnectLeft)
            throw StructuralError("SwitchConfig: port 0 cannot connect left");
        if (i == n - 1 && right)
            throw StructuralError("SwitchConfig: last port cannot connect right");
    }
}

CMat LoadCatalog::coupled_block(int f_index) const {
    CMat b(2, 2);
    b(0, 0) = coupled.s11.at(f_index);
    b(0, 1) = coupled.s21.at(f_index);
    b(1, 0) = coupled.s21.at(f_index);
    b(1, 1) = coupled.s22.at(f_index);
    return b;
}

void LoadCatalog::check(double tol) const {
    const size_t nf = frequencies_hz.size();
    if (nf == 0) throw ValidationError("LoadCatalog: empty frequency grid");
    for (int k = 0; k < 3; ++k)
        if (individual[k].size() != nf)
            throw ValidationError("LoadCatalog: individual load " + std::to_string(k + 1) +
                                  " has " + std::to_string(individual[k].size()) +
                                  " samples, grid has " + std::to_string(nf));
    if (coupled.s11.size() != nf || coupled.s21.size() != nf || coupled.s22.size() != nf)
        throw ValidationError("LoadCatalog: coupled-load sweep does not match the grid");

    for (size_t f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k)
            if (std::abs(individual[k][f]) > 1.0 + tol)
                throw ValidationError("LoadCatalog: individual load " + std::to_string(k + 1) +
                                      " non-passive at frequency index " + std::to_string(f));
        ValidationReport rep = validate(ScatteringMatrix(coupled_block(static_cast<int>(f))), tol);
        if (!rep.pass())
            throw ValidationError("LoadCatalog: coupled load invalid at frequency index " +
                                  std::to_string(f));
    }
}

LoadCatalog LoadCatalog::synthetic_default(std::vector<double> grid) {
    const size_t nf = grid.size();
    LoadCatalog cat;
    cat.frequencies_hz = std::move(grid);
    const Cplx rho1{0.95, 0.0};
    const Cplx rho2 = 0.95 * std::polar(1.0, std::numbers::pi);
    const Cplx rho3{0.02, 0.0};
    const Cplx thru = 0.93 * std::polar(1.0, -std::numbers::pi / 4.0);
    cat.individual[0].assign(nf, rho1);
    cat.individual[1].assign(nf, rho2);
    cat.individual[2].assign(nf, rho3);
    cat.coupled.s11.assign(nf, Cplx{0.05, 0.0});
    cat.coupled.s21.assign(nf, thru);
    cat.coupled.s22.assign(nf, Cplx{0.05, 0.0});
    return cat;
}

PortMapping PortMapping::identity(int n) {
    PortMapping m;
    m.element_to_port.resize(n);
    for (int i = 0; i < n; ++i) m.element_to_port[i] = i;
    return m;
}

PortMapping PortMapping::interleaved(int n) {
    PortMapping m;
    m.element_to_port.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < n; ++i)
        m.element_to_port[i] = (i % 2 == 0) ? i / 2 : half + i / 2;
    return m;
}

void PortMapping::check() const {
    std::vector<bool> hit(element_to_port.size(), false);
    for (int p : element_to_port) {
        if (p < 0 || p >= n() || hit[p])
            throw StructuralError("PortMapping: not a permutation of {0.." +
                                  std::to_string(n() - 1) + "}");
        hit[p] = true;
    }
}

ConfigSpace restrict_individual_loads(const ConfigSpace& space, std::array<int, 2> kept) {
    if (kept[0] == kept[1])
        throw StructuralError("restrict_individual_loads: exactly two distinct loads required");
    ConfigSpace out = space;
    out.individual_allowed = {false, false, false};
    for (int k : kept) {
        if (k < 1 || k > 3)
            throw StructuralError("restrict_individual_loads: load index " + std::to_string(k) +
                                  " outside {1,2,3}");
        out.individual_allowed[k - 1] = true;
    }
    return out;
}

namespace {

void emit_configs(const ConfigSpace& space, std::vector<SwitchState>& prefix,
                  std::vector<SwitchConfig>& out) {
    const int n = space.n_ports;
    const int i = static_cast<int>(prefix.size());
    if (i == n) {
        out.push_back(SwitchConfig{prefix});
        return;
    }
    // A ConnectRight at i-1 forces ConnectLeft here; otherwise the port is
    // free and the branch order realizes the lexicographic enumeration.
    if (i > 0 && prefix[i - 1] == SwitchState::ConnectRight) {
        prefix.push_back(SwitchState::ConnectLeft);
        emit_configs(space, prefix, out);
        prefix.pop_back();
        return;
    }
    for (int k = 0; k < 3; ++k) {
        if (!space.individual_allowed[k]) continue;
        prefix.push_back(static_cast<SwitchState>(k));
        emit_configs(space, prefix, out);
        prefix.pop_back();
    }
    if (space.allow_coupled && i + 1 < n) {
        prefix.push_back(SwitchState::ConnectRight);
        emit_configs(space, prefix, out);
        prefix.pop_back();
    }
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 0; i < k; ++i) r = r * static_cast<std::uint64_t>(n - i) / (i + 1);
    return r;
}

std::uint64_t ipow(std::uint64_t base, int e) {
    std::uint64_t r = 1;
    while (e-- > 0) r *= base;
    return r;
}

} // namespace

std::vector<SwitchConfig> enumerate_configs(const ConfigSpace& space) {
    if (space.n_ports < 1) throw StructuralError("enumerate_configs: need at least one port");
    if (space.n_individual() < 2)
        throw StructuralError("enumerate_configs: at least two individual loads required");
    std::vector<SwitchConfig> out;
    out.reserve(count_configs(space));
    std::vector<SwitchState> prefix;
    prefix.reserve(space.n_ports);
    emit_configs(space, prefix, out);
    return out;
}

std::uint64_t count_configs(const ConfigSpace& space) {
    if (space.n_ports < 1) throw StructuralError("count_configs: need at least one port");
    const int n = space.n_ports;
    const auto k = static_cast<std::uint64_t>(space.n_individual());
    if (!space.allow_coupled) return ipow(k, n);
    std::uint64_t total = 0;
    for (int m = 0; m <= n / 2; ++m) total += binomial(n - m, m) * ipow(k, n - 2 * m);
    return total;
}

CMat build_load_scattering(const SwitchConfig& cfg, const LoadCatalog& cat, int f_index,
                           const PortMapping& map) {
    cfg.check();
    map.check();
    const int n = static_cast<int>(cfg.states.size());
    if (map.n() != n)
        throw StructuralError("build_load_scattering: mapping size " + std::to_string(map.n()) +
                              " does not match configuration size " + std::to_string(n));
    if (f_index < 0 || f_index >= cat.n_freq())
        throw StructuralError("build_load_scattering: frequency index " +
                              std::to_string(f_index) + " outside catalog grid");

    // Tridiagonal network matrix in port order.
    CMat t = CMat::Zero(n, n);
    for (int p = 0; p < n; ++p) {
        switch (cfg.states[p]) {
            case SwitchState::Load1: t(p, p) = cat.individual[0][f_index]; break;
            case SwitchState::Load2: t(p, p) = cat.individual[1][f_index]; break;
            case SwitchState::Load3: t(p, p) = cat.individual[2][f_index]; break;
            case SwitchState::ConnectRight: {
                const CMat b = cat.coupled_block(f_index);
                t(p, p) = b(0, 0);
                t(p, p + 1) = b(0, 1);
                t(p + 1, p) = b(1, 0);
                t(p + 1, p + 1) = b(1, 1);
                break;
            }
            case SwitchState::ConnectLeft: break; // written by the paired ConnectRight
        }
    }

    // Re-express at the element ports: element i is wired to network port map[i].
    CMat s_l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            s_l(i, j) = t(map.element_to_port[i], map.element_to_port[j]);
    return s_l;
}

} // namespace bdris
