#pragma once

#include <cstdint>

namespace imcguard {

/// Counters for one or many protected batch runs. All fields are plain sums,
/// so merging is order-independent.
struct CycleStats {
    std::uint64_t runs = 0;                  // batch runs (baseline cycles)
    std::uint64_t evaluations = 0;           // full batch evaluations
    std::uint64_t checksum_evaluations = 0;  // checksum-only re-evaluations
    std::uint64_t checksum_stalls = 0;       // StallChecksumRecheck verdicts
    std::uint64_t recompute_stalls = 0;      // StallRecompute verdicts
    std::uint64_t forced_checksum_stalls = 0;

    std::uint64_t faulty_runs = 0;           // runs with any injected fault
    std::uint64_t fault_events = 0;          // runs whose first draw touched in-scope logic
    std::uint64_t detected = 0;              // fault_events flagged on the first cycle
    std::uint64_t false_alarms = 0;          // flagged without any in-scope fault
    std::uint64_t recovered = 0;             // fault_events whose final in-scope output is golden
    std::uint64_t corrections = 0;           // arithmetic corrections applied
    std::uint64_t exact_corrections = 0;     // ... that reproduced golden
    std::uint64_t miscorrections = 0;        // ... that did not
    std::uint64_t uncorrected = 0;           // recompute budget exhausted
    std::uint64_t silent_errors = 0;         // wrong in-scope output that was never flagged

    std::uint64_t tmr_votes = 0;
    std::uint64_t tmr_disagreements = 0;     // votes with all three replicas distinct

    CycleStats &operator+=(const CycleStats &o);
    bool operator==(const CycleStats &) const = default;

    /// Evaluation cycles beyond one per run.
    std::uint64_t extra_cycles() const noexcept {
        return evaluations + checksum_evaluations - runs;
    }
};

inline CycleStats &CycleStats::operator+=(const CycleStats &o) {
    runs += o.runs;
    evaluations += o.evaluations;
    checksum_evaluations += o.checksum_evaluations;
    checksum_stalls += o.checksum_stalls;
    recompute_stalls += o.recompute_stalls;
    forced_checksum_stalls += o.forced_checksum_stalls;
    faulty_runs += o.faulty_runs;
    fault_events += o.fault_events;
    detected += o.detected;
    false_alarms += o.false_alarms;
    recovered += o.recovered;
    corrections += o.corrections;
    exact_corrections += o.exact_corrections;
    miscorrections += o.miscorrections;
    uncorrected += o.uncorrected;
    silent_errors += o.silent_errors;
    tmr_votes += o.tmr_votes;
    tmr_disagreements += o.tmr_disagreements;
    return *this;
}

} // namespace imcguard
