#include "bdris/harness.hpp"

#include <omp.h>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

#include "bdris/rng.hpp"

namespace bdris {

using nlohmann::json;

const char* to_string(Variant v) {
    switch (v) {
        case Variant::OC: return "OC";
        case Variant::BD123: return "BD-123";
        case Variant::BD12: return "BD-12";
        case Variant::BD13: return "BD-13";
        case Variant::BD23: return "BD-23";
        case Variant::D123: return "D-123";
        case Variant::D12: return "D-12";
        case Variant::D13: return "D-13";
        case Variant::D23: return "D-23";
        case Variant::IBD123: return "IBD-123";
        case Variant::IdealBD: return "Ideal-BD";
        case Variant::IdealD: return "Ideal-D";
    }
    return "?";
}

Variant variant_from_string(const std::string& name) {
    for (Variant v : {Variant::OC, Variant::BD123, Variant::BD12, Variant::BD13, Variant::BD23,
                      Variant::D123, Variant::D12, Variant::D13, Variant::D23, Variant::IBD123,
                      Variant::IdealBD, Variant::IdealD})
        if (name == to_string(v)) return v;
    throw StructuralError("unknown variant '" + name + "'");
}

const char* to_string(McMode m) { return m == McMode::Aware ? "mc_aware" : "mc_unaware"; }

void BenchmarkPlan::check(int n_freq) const {
    if (entries.empty()) throw StructuralError("plan: no variants");
    if (kpis.empty()) throw StructuralError("plan: no KPIs");
    for (const PlanEntry& e : entries)
        if (e.variant == Variant::OC && e.mode == McMode::Unaware)
            throw StructuralError("plan: OC has no optimization step, mc_unaware is meaningless");
    for (int f : freq_indices)
        if (f < 0 || f >= n_freq)
            throw StructuralError("plan: frequency index " + std::to_string(f) +
                                  " outside grid of size " + std::to_string(n_freq));
}

namespace {

struct TxRxChoice {
    std::vector<int> tx;
    std::vector<int> rx;
};

std::vector<TxRxChoice> txrx_choices(const PortPartition& p, Kpi kpi) {
    std::vector<TxRxChoice> out;
    if (kpi_is_siso(kpi)) {
        for (int t : p.tx)
            for (int r : p.rx) out.push_back({{t}, {r}});
        return out;
    }
    for (size_t t1 = 0; t1 < p.tx.size(); ++t1)
        for (size_t t2 = t1 + 1; t2 < p.tx.size(); ++t2)
            for (size_t r1 = 0; r1 < p.rx.size(); ++r1)
                for (size_t r2 = r1 + 1; r2 < p.rx.size(); ++r2)
                    out.push_back({{p.tx[t1], p.tx[t2]}, {p.rx[r1], p.rx[r2]}});
    return out;
}

struct VariantSpec {
    bool is_oc = false;
    bool is_ideal = false;
    IdealMode ideal_mode = IdealMode::FullyConnected;
    ConfigSpace space;
    bool interleaved = false;
};

VariantSpec variant_spec(Variant v, int n_ris) {
    VariantSpec spec;
    spec.space.n_ports = n_ris;
    switch (v) {
        case Variant::OC: spec.is_oc = true; break;
        case Variant::BD123: break;
        case Variant::BD12: spec.space = restrict_individual_loads(spec.space, {1, 2}); break;
        case Variant::BD13: spec.space = restrict_individual_loads(spec.space, {1, 3}); break;
        case Variant::BD23: spec.space = restrict_individual_loads(spec.space, {2, 3}); break;
        case Variant::D123: spec.space.allow_coupled = false; break;
        case Variant::D12:
            spec.space = restrict_individual_loads(spec.space, {1, 2});
            spec.space.allow_coupled = false;
            break;
        case Variant::D13:
            spec.space = restrict_individual_loads(spec.space, {1, 3});
            spec.space.allow_coupled = false;
            break;
        case Variant::D23:
            spec.space = restrict_individual_loads(spec.space, {2, 3});
            spec.space.allow_coupled = false;
            break;
        case Variant::IBD123: spec.interleaved = true; break;
        case Variant::IdealBD:
            spec.is_ideal = true;
            spec.ideal_mode = IdealMode::FullyConnected;
            break;
        case Variant::IdealD:
            spec.is_ideal = true;
            spec.ideal_mode = IdealMode::Diagonal;
            break;
    }
    return spec;
}

struct CellCoord {
    int entry_index;
    int kpi_index;
    int f_index;
    int txrx_index;
};

} // namespace

KpiReport run_plan(const EnvironmentSweep& env, const LoadCatalog& cat,
                   const BenchmarkPlan& plan) {
    plan.check(env.n_freq());
    if (env.frequencies_hz != cat.frequencies_hz)
        throw ValidationError("run_plan: environment and catalog frequency grids differ");

    const int n_ris = env.partition.n_ris();
    std::vector<int> freqs = plan.freq_indices;
    if (freqs.empty()) {
        freqs.resize(env.n_freq());
        for (int f = 0; f < env.n_freq(); ++f) freqs[f] = f;
    }

    // Per-KPI TX/RX choices over the full partition (choices only depend on
    // whether the KPI is SISO or MIMO).
    std::vector<std::vector<TxRxChoice>> choices_per_kpi;
    for (Kpi k : plan.kpis) choices_per_kpi.push_back(txrx_choices(env.partition, k));

    std::vector<CellCoord> coords;
    for (int e = 0; e < static_cast<int>(plan.entries.size()); ++e)
        for (int k = 0; k < static_cast<int>(plan.kpis.size()); ++k)
            for (int fi = 0; fi < static_cast<int>(freqs.size()); ++fi)
                for (int c = 0; c < static_cast<int>(choices_per_kpi[k].size()); ++c)
                    coords.push_back({e, k, freqs[fi], c});

    std::vector<double> values(coords.size(), 0.0);
    const int n_threads = plan.threads > 0 ? plan.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(coords.size()); ++ci) {
        const CellCoord& cc = coords[ci];
        const PlanEntry& entry = plan.entries[cc.entry_index];
        const Kpi kpi = plan.kpis[cc.kpi_index];
        const TxRxChoice& choice = choices_per_kpi[cc.kpi_index][cc.txrx_index];
        const VariantSpec spec = variant_spec(entry.variant, n_ris);
        const ChannelModel model =
            entry.mode == McMode::Aware ? ChannelModel::Full : ChannelModel::Cascaded;

        const Environment full_env = env.at(cc.f_index);
        auto [sub, part] = restrict_to_active(full_env.S, full_env.partition, choice.tx, choice.rx);
        const Environment cell_env{std::move(sub), std::move(part)};

        double value = 0.0;
        if (spec.is_oc) {
            const CMat s_l = CMat::Identity(n_ris, n_ris);
            value = evaluate_kpi(kpi, channel_mnt(cell_env.S, cell_env.partition, s_l), plan.snr);
        } else if (spec.is_ideal) {
            const std::uint64_t cell_seed = derive_seed(plan.seed, static_cast<std::uint64_t>(ci));
            value = ideal_optimize(cell_env, kpi, plan.snr, spec.ideal_mode, model,
                                   plan.ideal.restarts, cell_seed, plan.ideal)
                        .best_value;
        } else {
            const PortMapping map =
                spec.interleaved ? PortMapping::interleaved(n_ris) : PortMapping::identity(n_ris);
            // Cells are the parallel unit; the search below runs serially.
            value = exhaustive_search_serial(cell_env, cat, cc.f_index, spec.space, map, kpi,
                                             plan.snr, model)
                        .best_value;
        }
        values[ci] = value;
    }

    KpiReport report;
    report.seed = plan.seed;
    report.env_label = env.label;
    report.cells.reserve(coords.size());
    for (size_t ci = 0; ci < coords.size(); ++ci)
        report.cells.push_back({coords[ci].entry_index, coords[ci].kpi_index, coords[ci].f_index,
                                coords[ci].txrx_index, values[ci]});

    // Row aggregation in plan order; the mean is an index-ordered sum, so it
    // does not depend on the parallel schedule above.
    for (int e = 0; e < static_cast<int>(plan.entries.size()); ++e)
        for (int k = 0; k < static_cast<int>(plan.kpis.size()); ++k) {
            ReportRow row;
            row.variant = plan.entries[e].variant;
            row.mode = plan.entries[e].mode;
            row.kpi = plan.kpis[k];
            double sum = 0.0;
            int n = 0;
            for (size_t ci = 0; ci < coords.size(); ++ci)
                if (coords[ci].entry_index == e && coords[ci].kpi_index == k) {
                    sum += values[ci];
                    ++n;
                }
            row.mean = n > 0 ? sum / n : 0.0;
            row.n_cells = n;
            report.rows.push_back(row);
        }

    for (ReportRow& row : report.rows) {
        for (const ReportRow& oc : report.rows)
            if (oc.variant == Variant::OC && oc.kpi == row.kpi && oc.mean != 0.0)
                row.pct_vs_oc = 100.0 * (row.mean - oc.mean) / oc.mean;
    }
    return report;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string report_to_csv(const KpiReport& report) {
    std::string out = "# schema_version " + std::to_string(report.schema_version) + "\n";
    out += "variant,kpi,mc_mode,mean,pct_vs_oc,n_cells\n";
    for (const ReportRow& row : report.rows) {
        out += to_string(row.variant);
        out += ',';
        out += to_string(row.kpi);
        out += ',';
        out += to_string(row.mode);
        out += ',';
        out += format_double(row.mean);
        out += ',';
        out += row.pct_vs_oc ? format_double(*row.pct_vs_oc) : "";
        out += ',';
        out += std::to_string(row.n_cells);
        out += '\n';
    }
    return out;
}

std::string report_to_json(const KpiReport& report) {
    json doc;
    doc["schema_version"] = report.schema_version;
    doc["kind"] = "kpi_report";
    doc["seed"] = report.seed;
    doc["env_label"] = report.env_label;
    doc["txrx_convention"] = report.txrx_convention;
    json rows = json::array();
    size_t cell_cursor = 0;
    for (size_t ri = 0; ri < report.rows.size(); ++ri) {
        const ReportRow& row = report.rows[ri];
        json jr;
        jr["variant"] = to_string(row.variant);
        jr["kpi"] = to_string(row.kpi);
        jr["mc_mode"] = to_string(row.mode);
        jr["mean"] = row.mean;
        if (row.pct_vs_oc)
            jr["pct_vs_oc"] = *row.pct_vs_oc;
        else
            jr["pct_vs_oc"] = nullptr;
        jr["n_cells"] = row.n_cells;
        json raw = json::array();
        for (int i = 0; i < row.n_cells; ++i) raw.push_back(report.cells[cell_cursor + i].value);
        cell_cursor += row.n_cells;
        jr["raw"] = std::move(raw);
        rows.push_back(std::move(jr));
    }
    doc["rows"] = std::move(rows);
    return doc.dump();
}

void write_report(const KpiReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << (format == ReportFormat::Csv ? report_to_csv(report) : report_to_json(report));
    if (format == ReportFormat::Json) out << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace bdris
