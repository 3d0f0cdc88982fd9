#pragma once

#include <cstdint>

#include "imcguard/fabric.hpp"
#include "imcguard/mode.hpp"
#include "imcguard/stats.hpp"
#include "imcguard/tmr.hpp"

namespace imcguard {

/// Area counts are in binary-cell equivalents and summed over all batches.
/// A checksum cell holding an integer up to v is charged ceil(log2(v + 1)) cells.
struct OverheadReport {
    std::uint64_t original_cells = 0; // in-scope device cells
    std::uint64_t crossbar_checksum_cells = 0;
    std::uint64_t pe_checksum_cells = 0;
    std::uint64_t parity_cells = 0;
    std::uint64_t checksum_cells = 0; // redundant cells of any kind
    double area_overhead_pct = 0.0;

    std::uint64_t baseline_cycles = 0;
    std::uint64_t extra_cycles = 0;
    double latency_overhead_pct = 0.0;

    bool operator==(const OverheadReport &) const = default;
};

/// ceil(log2(v + 1)) for v >= 0; bits needed to store v unsigned.
std::uint64_t cells_for_value(std::uint64_t v);

/// Checksum area. Per batch, with C_prot = weight_cols * protected_bits:
/// original n*R*C_prot, crossbar checksum n*R*ceil(log2(C_prot+1)),
/// PE checksum R*C_prot*ceil(log2(n+1)), parity R*ceil(log2(C_prot*n+1)).
OverheadReport area_overhead(const FabricConfig &cfg);

/// TMR area: two extra copies of every in-scope cell (200%).
OverheadReport tmr_area_overhead(const FabricConfig &cfg, TmrScope scope);

/// Latency in whole batch-evaluation cycles. Checksum mode charges every
/// stall and recompute; TMR charges two extra evaluations per run.
OverheadReport latency_overhead(const CycleStats &stats, Mode mode);

/// Area and latency for `mode` combined in one report.
OverheadReport overhead_for(const FabricConfig &cfg, const CycleStats &stats, Mode mode, TmrScope tmr_scope);

} // namespace imcguard
