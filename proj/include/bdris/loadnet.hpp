#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bdris/netmodel.hpp"

namespace bdris {

/// Per-port switch position: one of the three individual loads, or a
/// connection to the neighbouring port's switch.
enum class SwitchState : std::uint8_t {
    Load1 = 0,
    Load2 = 1,
    Load3 = 2,
    ConnectLeft = 3,
    ConnectRight = 4,
};

const char* to_string(SwitchState s);
SwitchState switch_state_from_string(const std::string& token);

/// One switch state per tunable-network port. Connections must pair up:
/// port i is ConnectRight iff port i+1 is ConnectLeft, so the set of
/// engaged coupled loads forms a matching on the path graph of ports.
struct SwitchConfig {
    std::vector<SwitchState> states;

    bool operator==(const SwitchConfig&) const = default;
    auto operator<=>(const SwitchConfig&) const = default;

    /// Throws StructuralError if the matching constraint is violated.
    void check() const;
};

/// Frequency-swept scattering data for the three individual loads and the
/// coupled load. coupled(f) = [[s11, s21], [s21, s22]] at grid point f.
struct LoadCatalog {
    std::vector<double> frequencies_hz;
    std::array<std::vector<Cplx>, 3> individual;
    struct CoupledLoad {
        std::vector<Cplx> s11, s21, s22;
    } coupled;

    int n_freq() const { return static_cast<int>(frequencies_hz.size()); }
    CMat coupled_block(int f_index) const;

    /// Passivity/symmetry/grid-consistency checks; throws ValidationError.
    void check(double tol = 1e-9) const;

    /// Synthetic frequency-flat catalog: two strongly reflective loads of
    /// roughly opposite phase, one strongly absorptive load, and a low-loss
    /// coupled two-port.
    static LoadCatalog synthetic_default(std::vector<double> grid);
};

/// Bijection element index -> tunable-network port index.
struct PortMapping {
    std::vector<int> element_to_port;

    static PortMapping identity(int n);
    /// Elements attached to alternating halves of the port line, the
    /// interleaved pattern: 8 elements -> ports 0,4,1,5,2,6,3,7.
    static PortMapping interleaved(int n);

    int n() const { return static_cast<int>(element_to_port.size()); }
    void check() const;
};

/// Search-space descriptor: which individual loads are selectable and
/// whether coupled loads may be engaged.
struct ConfigSpace {
    int n_ports = 0;
    std::array<bool, 3> individual_allowed{true, true, true};
    bool allow_coupled = true;

    int n_individual() const {
        return (individual_allowed[0] ? 1 : 0) + (individual_allowed[1] ? 1 : 0) +
               (individual_allowed[2] ? 1 : 0);
    }
};

/// Keeps exactly two of the three individual loads (the 1-bit benchmark);
/// coupled-load availability is untouched.
ConfigSpace restrict_individual_loads(const ConfigSpace& space, std::array<int, 2> kept);

/// All valid configurations in lexicographic state order
/// (Load1 < Load2 < Load3 < ConnectLeft < ConnectRight).
std::vector<SwitchConfig> enumerate_configs(const ConfigSpace& space);

/// Closed form sum_m C(n-m, m) k^(n-2m) with k selectable individual loads
/// and m engaged coupled pairs (m = 0 only when coupling is disallowed).
std::uint64_t count_configs(const ConfigSpace& space);

/// S_L of the tunable network for one configuration at one grid point,
/// expressed in element order via the port mapping. Identity mapping gives a
/// tridiagonal matrix; the interleaved mapping gives the permuted pattern.
CMat build_load_scattering(const SwitchConfig& cfg, const LoadCatalog& cat, int f_index,
                           const PortMapping& map);

} // namespace bdris
