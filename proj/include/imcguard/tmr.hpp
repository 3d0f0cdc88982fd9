#pragma once

#include <cstdint>

#include "imcguard/fabric.hpp"
#include "imcguard/fault.hpp"
#include "imcguard/stats.hpp"

namespace imcguard {

enum class TmrScope : std::uint8_t { protected_only, all_columns };

/// Column-level temporal TMR. Three-way disagreement falls back to the median.
struct TmrConfig {
    TmrScope scope = TmrScope::all_columns;
    bool operator==(const TmrConfig &) const = default;
};

/// 2-of-3 majority, else the median. Sets `all_distinct` on a three-way split.
acc_t tmr_vote(acc_t a, acc_t b, acc_t c, bool &all_distinct);

struct TmrResult {
    RawOutputs outputs; // device columns only; in-scope columns hold the voted value
    CycleStats stats;
};

/// Evaluate the device columns three times with independent draws (cycles
/// 0..2, device scope) and vote every in-scope column. Out-of-scope columns
/// keep the first replica.
TmrResult tmr_forward(const Batch &batch, const IntVector &input, FaultSource &faults, const TmrConfig &cfg);

TmrResult tmr_forward(const Batch &batch, const IntVector &input, const FaultModelConfig &fault_cfg,
                      const SeededRng &rng, std::uint64_t trial_id, std::uint64_t batch_id,
                      const TmrConfig &cfg);

} // namespace imcguard
