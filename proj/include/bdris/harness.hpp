#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdris/envgen.hpp"
#include "bdris/optim.hpp"

namespace bdris {

/// Benchmark variants: the open-circuit baseline, the hardware-constrained
/// network (full or 1-bit load subsets, with and without coupled loads),
/// the interleaved port attachment, and the idealized continuous networks.
enum class Variant {
    OC,
    BD123,
    BD12,
    BD13,
    BD23,
    D123,
    D12,
    D13,
    D23,
    IBD123,
    IdealBD,
    IdealD,
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);

enum class McMode { Aware, Unaware };

const char* to_string(McMode m);

struct PlanEntry {
    Variant variant = Variant::OC;
    McMode mode = McMode::Aware;
};

struct BenchmarkPlan {
    std::vector<PlanEntry> entries;
    std::vector<Kpi> kpis;
    std::vector<int> freq_indices; ///< empty = every grid point
    SnrConfig snr;
    std::uint64_t seed = 1;
    int threads = 0; ///< 0 = runtime default; results identical for any value
    IdealOptions ideal;

    /// OC is a fixed configuration, so pairing it with the coupling-unaware
    /// mode is meaningless and rejected here.
    void check(int n_freq) const;
};

struct RawCell {
    int entry_index = 0;
    int kpi_index = 0;
    int f_index = 0;
    int txrx_index = 0;
    double value = 0.0;
};

struct ReportRow {
    Variant variant = Variant::OC;
    McMode mode = McMode::Aware;
    Kpi kpi = Kpi::SisoGain;
    double mean = 0.0;
    std::optional<double> pct_vs_oc; ///< absent when the plan has no OC row
    int n_cells = 0;
};

struct KpiReport {
    int schema_version = 1;
    std::uint64_t seed = 0;
    std::string env_label;
    std::string txrx_convention = "unordered_pairs_first_tx_to_first_rx";
    std::vector<ReportRow> rows;
    std::vector<RawCell> cells; ///< full per-cell values, deterministic order
};

/// Runs every (variant, kpi, frequency, TX/RX choice) cell of the plan.
/// SISO KPIs sweep all single-TX/single-RX pairs; MIMO KPIs sweep all
/// unordered TX pairs x unordered RX pairs. Unused antennas are dropped via
/// matched termination. Deterministic for a fixed seed and any thread count.
KpiReport run_plan(const EnvironmentSweep& env, const LoadCatalog& cat,
                   const BenchmarkPlan& plan);

enum class ReportFormat { Csv, Json };

std::string report_to_csv(const KpiReport& report);
std::string report_to_json(const KpiReport& report);
void write_report(const KpiReport& report, const std::filesystem::path& path,
                  ReportFormat format);

} // namespace bdris
