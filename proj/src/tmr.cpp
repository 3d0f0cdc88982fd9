#include "imcguard/tmr.hpp"

#include <array>

namespace imcguard {

acc_t tmr_vote(acc_t a, acc_t b, acc_t c, bool &all_distinct) {
    all_distinct = false;
    if (a == b || a == c)
        return a;
    if (b == c)
        return b;
    all_distinct = true;
    if ((a <= b && b <= c) || (c <= b && b <= a))
        return b;
    if ((b <= a && a <= c) || (c <= a && a <= b))
        return a;
    return c;
}

TmrResult tmr_forward(const Batch &batch, const IntVector &input, FaultSource &faults, const TmrConfig &cfg) {
    const std::size_t N = batch.num_pes(), C = batch.physical_cols();
    std::array<RawOutputs, 3> rep;
    bool any_faults = false;
    bool touched = false;
    auto in_scope = [&](std::size_t b) { return cfg.scope == TmrScope::all_columns || batch.cfg.is_protected(b); };

    for (std::uint32_t r = 0; r < 3; ++r) {
        const FaultSet fs = faults.draw(r, EvalScope::device_only);
        any_faults = any_faults || !fs.empty();
        for (const auto &f : fs.sites())
            touched = touched || in_scope(f.target.column);
        evaluate_device_columns(batch, input, fs, rep[r]);
    }

    TmrResult res;
    CycleStats &st = res.stats;
    st.runs = 1;
    st.evaluations = 3;
    res.outputs = rep[0];
    bool disagreement_seen = false;
    for (std::size_t b = 0; b < C; ++b) {
        if (!in_scope(b))
            continue;
        for (std::size_t n = 0; n < N; ++n) {
            const acc_t x = rep[0].col(b, n), y = rep[1].col(b, n), z = rep[2].col(b, n);
            bool distinct = false;
            res.outputs.col(b, n) = tmr_vote(x, y, z, distinct);
            ++st.tmr_votes;
            if (distinct)
                ++st.tmr_disagreements;
            disagreement_seen = disagreement_seen || x != y || x != z;
        }
    }
    res.outputs.recompute_accumulators();

    bool final_ok = true;
    if (any_faults) {
        RawOutputs golden;
        evaluate_device_columns(batch, input, FaultSet{}, golden);
        for (std::size_t b = 0; b < C && final_ok; ++b)
            if (in_scope(b))
                for (std::size_t n = 0; n < N; ++n)
                    if (res.outputs.col(b, n) != golden.col(b, n)) {
                        final_ok = false;
                        break;
                    }
    }
    st.faulty_runs = any_faults ? 1 : 0;
    if (touched) {
        st.fault_events = 1;
        st.detected = disagreement_seen ? 1 : 0;
        st.recovered = final_ok ? 1 : 0;
        if (!final_ok && !disagreement_seen)
            st.silent_errors = 1;
    }
    return res;
}

TmrResult tmr_forward(const Batch &batch, const IntVector &input, const FaultModelConfig &fault_cfg,
                      const SeededRng &rng, std::uint64_t trial_id, std::uint64_t batch_id,
                      const TmrConfig &cfg) {
    SampledFaults src(fault_cfg, BatchShape::of(batch), rng, trial_id, batch_id);
    return tmr_forward(batch, input, src, cfg);
}

} // namespace imcguard
