#include "imcguard/overhead.hpp"

#include <bit>

namespace imcguard {

std::uint64_t cells_for_value(std::uint64_t v) {
    return static_cast<std::uint64_t>(std::bit_width(v));
}

OverheadReport area_overhead(const FabricConfig &cfg) {
    cfg.validate();
    if (cfg.protected_bits == 0)
        throw ConfigError("area overhead needs protected_bits >= 1");
    const std::uint64_t R = cfg.rows, n = cfg.pes_per_batch, batches = cfg.num_batches;
    const std::uint64_t c_prot = cfg.weight_cols * static_cast<std::uint64_t>(cfg.protected_bits);

    OverheadReport r;
    r.original_cells = batches * n * R * c_prot;
    r.crossbar_checksum_cells = batches * n * R * cells_for_value(c_prot);
    r.pe_checksum_cells = batches * R * c_prot * cells_for_value(n);
    r.parity_cells = batches * R * cells_for_value(c_prot * n);
    r.checksum_cells = r.crossbar_checksum_cells + r.pe_checksum_cells + r.parity_cells;
    r.area_overhead_pct = 100.0 * static_cast<double>(r.checksum_cells) / static_cast<double>(r.original_cells);
    return r;
}

OverheadReport tmr_area_overhead(const FabricConfig &cfg, TmrScope scope) {
    cfg.validate();
    const std::uint64_t bits = scope == TmrScope::all_columns ? static_cast<std::uint64_t>(cfg.weight_bits)
                                                              : static_cast<std::uint64_t>(cfg.protected_bits);
    OverheadReport r;
    r.original_cells = cfg.num_batches * cfg.pes_per_batch * cfg.rows * cfg.weight_cols * bits;
    r.checksum_cells = 2 * r.original_cells;
    r.area_overhead_pct = r.original_cells == 0 ? 0.0 : 200.0;
    return r;
}

OverheadReport latency_overhead(const CycleStats &stats, Mode mode) {
    if (stats.runs == 0)
        throw ConfigError("latency overhead needs at least one baseline cycle");
    OverheadReport r;
    r.baseline_cycles = stats.runs;
    switch (mode) {
    case Mode::unprotected:
        r.extra_cycles = 0;
        break;
    case Mode::checksum:
        r.extra_cycles = stats.extra_cycles();
        break;
    case Mode::tmr:
        r.extra_cycles = 2 * stats.runs;
        break;
    }
    r.latency_overhead_pct = 100.0 * static_cast<double>(r.extra_cycles) / static_cast<double>(r.baseline_cycles);
    return r;
}

OverheadReport overhead_for(const FabricConfig &cfg, const CycleStats &stats, Mode mode, TmrScope tmr_scope) {
    OverheadReport r;
    if (mode == Mode::checksum)
        r = area_overhead(cfg);
    else if (mode == Mode::tmr)
        r = tmr_area_overhead(cfg, tmr_scope);
    if (stats.runs > 0) {
        const auto lat = latency_overhead(stats, mode);
        r.baseline_cycles = lat.baseline_cycles;
        r.extra_cycles = lat.extra_cycles;
        r.latency_overhead_pct = lat.latency_overhead_pct;
    }
    return r;
}

} // namespace imcguard
