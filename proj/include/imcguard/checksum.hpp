#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "imcguard/fabric.hpp"
#include "imcguard/fault.hpp"
#include "imcguard/stats.hpp"

namespace imcguard {

// Checksum weight derivation ------------------------------------------------

/// Row sums of one PE over its protected columns: out[k] = sum_b cells[k][b].
std::vector<std::int32_t> derive_crossbar_checksum(const BinaryMatrix &pe_cells,
                                                   std::span<const std::size_t> protected_cols);

/// Element-wise sum of the batch's protected cells: out[k][p] = sum_n cells_n[k][protected[p]].
Matrix<std::int32_t> derive_pe_checksum(std::span<const BinaryMatrix> batch_cells,
                                        std::span<const std::size_t> protected_cols);

/// Row sums of the checksum PE: out[k] = sum_p pe_checksum_weights[k][p].
std::vector<std::int32_t> derive_parity(const Matrix<std::int32_t> &pe_checksum_weights);

// Detection -------------------------------------------------------------------

struct DeltaReport {
    std::vector<acc_t> delta_n; // crossch_out[n] - acc_by_pe[n]
    std::vector<acc_t> delta_b; // pech_out[p] - acc_by_col[p], p over protected columns
    acc_t sum_n = 0;
    acc_t sum_b = 0;
    std::vector<std::size_t> faulty_pes;  // n with delta_n != 0
    std::vector<std::size_t> faulty_cols; // physical column b with delta_b != 0
    bool parity_consistent = true;        // parity_out == sum of pech_out

    bool all_zero() const noexcept { return faulty_pes.empty() && faulty_cols.empty(); }
};

DeltaReport compute_deltas(const RawOutputs &raw);

enum class VerdictKind : std::uint8_t {
    no_fault,
    corrected_single_column,
    corrected_single_pe,
    stall_checksum_recheck,
    stall_recompute,
    uncorrected_give_up,
};

std::string_view to_string(VerdictKind k);

struct Correction {
    std::size_t pe = 0;
    std::size_t column = 0; // physical column
    acc_t delta = 0;
};

struct Verdict {
    VerdictKind kind = VerdictKind::no_fault;
    std::optional<std::size_t> column; // b* for corrected_single_column
    std::optional<std::size_t> pe;     // n* for corrected_single_pe
    std::vector<Correction> applied;
    std::optional<std::vector<acc_t>> corrected_outputs; // corrected col_out, b-major

    bool is_correction() const noexcept {
        return kind == VerdictKind::corrected_single_column || kind == VerdictKind::corrected_single_pe;
    }
};

/// One pass of the detection and correction routine over a delta report.
Verdict iedcr_step(const DeltaReport &report, const RawOutputs &raw);

// Stall and recompute loop ---------------------------------------------------------

struct StallPolicy {
    std::uint32_t max_recompute_cycles = 5;
    std::uint32_t max_consecutive_checksum_stalls = 3;

    void validate() const;
    bool operator==(const StallPolicy &) const = default;
};

struct ProtectedResult {
    RawOutputs outputs; // last evaluated outputs with any correction applied
    VerdictKind final_verdict = VerdictKind::no_fault;
    CycleStats stats;
};

/// Evaluate the batch, check, and stall/recompute until the outputs are
/// accepted or the recompute budget runs out.
///
/// Cycle 0 draws faults over every column. A checksum recheck redraws faults
/// on the checksum and parity columns only; a recompute redraws everything.
/// After max_consecutive_checksum_stalls back-to-back checksum stalls the next
/// cycle is forced to be a full re-evaluation, which is charged to the
/// recompute budget. The run gives up once a recompute would exceed
/// max_recompute_cycles and returns what it has.
ProtectedResult run_with_protection(const Batch &batch, const IntVector &input, FaultSource &faults,
                                    const StallPolicy &policy);

ProtectedResult run_with_protection(const Batch &batch, const IntVector &input,
                                    const FaultModelConfig &fault_cfg, const StallPolicy &policy,
                                    const SeededRng &rng, std::uint64_t trial_id, std::uint64_t batch_id);

/// True when every protected column of `a` equals `b`.
bool protected_outputs_equal(const RawOutputs &a, const RawOutputs &b);

} // namespace imcguard
