#include "imcguard/checksum.hpp"

#include <string>

namespace imcguard {

std::vector<std::int32_t> derive_crossbar_checksum(const BinaryMatrix &pe_cells,
                                                   std::span<const std::size_t> protected_cols) {
    if (protected_cols.empty())
        throw ConfigError("crossbar checksum needs at least one protected column");
    std::vector<std::int32_t> out(pe_cells.rows, 0);
    for (std::size_t b : protected_cols) {
        if (b >= pe_cells.cols)
            throw ConfigError("protected column " + std::to_string(b) + " outside the crossbar");
        for (std::size_t k = 0; k < pe_cells.rows; ++k)
            out[k] += pe_cells(k, b);
    }
    return out;
}

Matrix<std::int32_t> derive_pe_checksum(std::span<const BinaryMatrix> batch_cells,
                                        std::span<const std::size_t> protected_cols) {
    if (batch_cells.empty())
        throw ConfigError("PE checksum needs at least one PE");
    if (protected_cols.empty())
        throw ConfigError("PE checksum needs at least one protected column");
    const std::size_t R = batch_cells.front().rows, C = batch_cells.front().cols;
    for (const auto &cells : batch_cells)
        if (cells.rows != R || cells.cols != C)
            throw ConfigError("PE cell grids differ in shape");

    Matrix<std::int32_t> out(R, protected_cols.size(), 0);
    for (std::size_t p = 0; p < protected_cols.size(); ++p) {
        const std::size_t b = protected_cols[p];
        if (b >= C)
            throw ConfigError("protected column " + std::to_string(b) + " outside the crossbar");
        for (const auto &cells : batch_cells)
            for (std::size_t k = 0; k < R; ++k)
                out(k, p) += cells(k, b);
    }
    return out;
}

std::vector<std::int32_t> derive_parity(const Matrix<std::int32_t> &pe_checksum_weights) {
    std::vector<std::int32_t> out(pe_checksum_weights.rows, 0);
    for (std::size_t k = 0; k < pe_checksum_weights.rows; ++k)
        for (std::size_t p = 0; p < pe_checksum_weights.cols; ++p)
            out[k] += pe_checksum_weights(k, p);
    return out;
}

DeltaReport compute_deltas(const RawOutputs &raw) {
    DeltaReport r;
    if (raw.protected_cols.empty())
        return r;

    r.delta_n.resize(raw.num_pes);
    for (std::size_t n = 0; n < raw.num_pes; ++n) {
        r.delta_n[n] = raw.crossch_out[n] - raw.acc_by_pe[n];
        r.sum_n += r.delta_n[n];
        if (r.delta_n[n] != 0)
            r.faulty_pes.push_back(n);
    }
    r.delta_b.resize(raw.protected_cols.size());
    acc_t pech_total = 0;
    for (std::size_t p = 0; p < raw.protected_cols.size(); ++p) {
        r.delta_b[p] = raw.pech_out[p] - raw.acc_by_col[p];
        r.sum_b += r.delta_b[p];
        pech_total += raw.pech_out[p];
        if (r.delta_b[p] != 0)
            r.faulty_cols.push_back(raw.protected_cols[p]);
    }
    r.parity_consistent = raw.parity_out == pech_total;
    return r;
}

std::string_view to_string(VerdictKind k) {
    switch (k) {
    case VerdictKind::no_fault:
        return "NoFault";
    case VerdictKind::corrected_single_column:
        return "CorrectedSingleColumn";
    case VerdictKind::corrected_single_pe:
        return "CorrectedSinglePE";
    case VerdictKind::stall_checksum_recheck:
        return "StallChecksumRecheck";
    case VerdictKind::stall_recompute:
        return "StallRecompute";
    case VerdictKind::uncorrected_give_up:
        return "UncorrectedGiveUp";
    }
    return "?";
}

Verdict iedcr_step(const DeltaReport &report, const RawOutputs &raw) {
    Verdict v;
    if (report.all_zero() && report.parity_consistent) {
        v.kind = VerdictKind::no_fault;
        return v;
    }
    // Unequal sums or a broken parity column point at the safety blocks.
    if (!report.parity_consistent || report.sum_n != report.sum_b) {
        v.kind = VerdictKind::stall_checksum_recheck;
        return v;
    }

    auto pos_of = [&](std::size_t b) {
        for (std::size_t p = 0; p < raw.protected_cols.size(); ++p)
            if (raw.protected_cols[p] == b)
                return p;
        return raw.protected_cols.size();
    };

    if (report.faulty_cols.size() == 1) {
        // One faulty column: each indicted PE's delta is its error in that column.
        const std::size_t b = report.faulty_cols.front();
        v.kind = VerdictKind::corrected_single_column;
        v.column = b;
        auto out = raw.col_out;
        for (std::size_t n : report.faulty_pes) {
            out[b * raw.num_pes + n] += report.delta_n[n];
            v.applied.push_back({n, b, report.delta_n[n]});
        }
        v.corrected_outputs = std::move(out);
        return v;
    }
    if (report.faulty_pes.size() == 1 && report.faulty_cols.size() > 1) {
        // One faulty PE: each indicted column's delta is that PE's error there.
        const std::size_t n = report.faulty_pes.front();
        v.kind = VerdictKind::corrected_single_pe;
        v.pe = n;
        auto out = raw.col_out;
        for (std::size_t b : report.faulty_cols) {
            const acc_t d = report.delta_b[pos_of(b)];
            out[b * raw.num_pes + n] += d;
            v.applied.push_back({n, b, d});
        }
        v.corrected_outputs = std::move(out);
        return v;
    }
    v.kind = VerdictKind::stall_recompute;
    return v;
}

void StallPolicy::validate() const {
    if (max_recompute_cycles < 1)
        throw ConfigError("policy.max_recompute_cycles must be >= 1");
    if (max_consecutive_checksum_stalls < 1)
        throw ConfigError("policy.max_consecutive_checksum_stalls must be >= 1");
}

bool protected_outputs_equal(const RawOutputs &a, const RawOutputs &b) {
    for (std::size_t col : a.protected_cols)
        for (std::size_t n = 0; n < a.num_pes; ++n)
            if (a.col(col, n) != b.col(col, n))
                return false;
    return true;
}

namespace {

bool touches_protected(const Batch &batch, const FaultSet &faults) {
    for (const auto &f : faults.sites()) {
        if (f.target.is_checksum())
            return true;
        if (batch.protected_pos[f.target.column] >= 0)
            return true;
    }
    return false;
}

} // namespace

ProtectedResult run_with_protection(const Batch &batch, const IntVector &input, FaultSource &faults,
                                    const StallPolicy &policy) {
    policy.validate();
    ProtectedResult res;
    CycleStats &st = res.stats;
    st.runs = 1;

    std::uint32_t cycle = 0;
    const FaultSet first = faults.draw(cycle, EvalScope::full);
    RawOutputs raw = batch_forward(batch, input, first);
    st.evaluations = 1;

    bool any_faults = !first.empty();
    const bool touched = touches_protected(batch, first);
    bool flagged = false;
    bool corrected = false;
    std::uint32_t recomputes = 0;
    std::uint32_t consecutive_checksum = 0;

    auto full_recompute = [&] {
        const FaultSet fs = faults.draw(++cycle, EvalScope::full);
        any_faults = any_faults || !fs.empty();
        raw = batch_forward(batch, input, fs);
        ++st.evaluations;
    };

    for (bool first_pass = true;; first_pass = false) {
        const Verdict v = iedcr_step(compute_deltas(raw), raw);
        if (first_pass)
            flagged = v.kind != VerdictKind::no_fault;

        if (v.kind == VerdictKind::no_fault) {
            res.final_verdict = v.kind;
            break;
        }
        if (v.is_correction()) {
            raw.col_out = *v.corrected_outputs;
            raw.recompute_accumulators();
            ++st.corrections;
            corrected = true;
            res.final_verdict = v.kind;
            break;
        }

        // Back-to-back checksum stalls past the threshold force a full cycle.
        const bool full = v.kind == VerdictKind::stall_recompute ||
                          consecutive_checksum >= policy.max_consecutive_checksum_stalls;
        if (full) {
            consecutive_checksum = 0;
            if (recomputes >= policy.max_recompute_cycles) {
                res.final_verdict = VerdictKind::uncorrected_give_up;
                ++st.uncorrected;
                break;
            }
            ++recomputes;
            if (v.kind == VerdictKind::stall_recompute)
                ++st.recompute_stalls;
            else
                ++st.forced_checksum_stalls;
            full_recompute();
        } else {
            ++consecutive_checksum;
            ++st.checksum_stalls;
            const FaultSet fs = faults.draw(++cycle, EvalScope::checksums_only);
            any_faults = any_faults || !fs.empty();
            evaluate_checksum_columns(batch, input, fs, raw);
            ++st.checksum_evaluations;
        }
    }

    bool final_ok = true;
    if (any_faults) {
        const RawOutputs golden = batch_forward(batch, input, FaultSet{});
        final_ok = protected_outputs_equal(raw, golden);
    }
    st.faulty_runs = first.empty() ? 0 : 1;
    if (touched) {
        st.fault_events = 1;
        st.detected = flagged ? 1 : 0;
        st.recovered = final_ok ? 1 : 0;
    } else if (flagged) {
        st.false_alarms = 1;
    }
    if (corrected)
        (final_ok ? st.exact_corrections : st.miscorrections) = 1;
    if (!final_ok && res.final_verdict == VerdictKind::no_fault)
        st.silent_errors = 1;

    res.outputs = std::move(raw);
    return res;
}

ProtectedResult run_with_protection(const Batch &batch, const IntVector &input,
                                    const FaultModelConfig &fault_cfg, const StallPolicy &policy,
                                    const SeededRng &rng, std::uint64_t trial_id, std::uint64_t batch_id) {
    SampledFaults src(fault_cfg, BatchShape::of(batch), rng, trial_id, batch_id);
    return run_with_protection(batch, input, src, policy);
}

} // namespace imcguard
