#include <doctest.h>

#include "imcguard/overhead.hpp"
#include "imcguard/tmr.hpp"
#include "support.hpp"

using namespace imcguard;
using testing::Gen;

namespace {

TmrResult run(const Batch &b, const IntVector &x, std::vector<FaultSet> script, TmrConfig cfg = {}) {
    ScriptedFaults src(std::move(script));
    return tmr_forward(b, x, src, cfg);
}

} // namespace

TEST_SUITE("tmr") {
    TEST_CASE("vote") {
        bool distinct = true;
        CHECK(tmr_vote(4, 4, 11, distinct) == 4);
        CHECK_FALSE(distinct);
        CHECK(tmr_vote(11, 4, 4, distinct) == 4);
        CHECK(tmr_vote(4, 11, 4, distinct) == 4);
        CHECK(tmr_vote(5, 9, 12, distinct) == 9);
        CHECK(distinct);
        CHECK(tmr_vote(12, 5, 9, distinct) == 9);
        CHECK(tmr_vote(9, 12, 5, distinct) == 9);
    }

    TEST_CASE("no faults reproduce the clean outputs") {
        const Batch b = testing::tiny_batch();
        const auto r = run(b, testing::tiny_input(), {});
        CHECK(r.outputs.col_out == std::vector<acc_t>{5, 3, 3, 2});
        CHECK(r.stats.tmr_disagreements == 0);
        CHECK(r.stats.evaluations == 3);
    }

    TEST_CASE("one faulted replica is outvoted") {
        const Batch b = testing::tiny_batch();
        std::vector<FaultSet> script(3);
        script[1].add(FaultTarget::device(0, 1), 7);
        const auto r = run(b, testing::tiny_input(), script);
        CHECK(r.outputs.col_out == std::vector<acc_t>{5, 3, 3, 2});
        CHECK(r.stats.fault_events == 1);
        CHECK(r.stats.detected == 1);
        CHECK(r.stats.recovered == 1);
    }

    TEST_CASE("two identically faulted replicas win the vote") {
        const Batch b = testing::tiny_batch();
        std::vector<FaultSet> script(3);
        script[0].add(FaultTarget::device(1, 0), 2);
        script[2].add(FaultTarget::device(1, 0), 2);
        const auto r = run(b, testing::tiny_input(), script);
        CHECK(r.outputs.col(0, 1) == 5);
        CHECK(r.stats.recovered == 0);
    }

    TEST_CASE("three-way split takes the median") {
        const Batch b = testing::tiny_batch();
        std::vector<FaultSet> script(3);
        script[0].add(FaultTarget::device(0, 0), 4);
        script[1].add(FaultTarget::device(0, 0), 7);
        const auto r = run(b, testing::tiny_input(), script);
        CHECK(r.outputs.col(0, 0) == 9);
        CHECK(r.stats.tmr_disagreements == 1);
    }

    TEST_CASE("protected-only scope leaves other columns on the first replica") {
        FabricConfig f;
        f.rows = 3;
        f.weight_cols = 1;
        f.weight_bits = 2;
        f.protected_bits = 1;
        f.pes_per_batch = 1;
        Gen g(41);
        const Batch b = g.batch(f);
        const IntVector x = g.input(3, 8);
        std::vector<FaultSet> script(3);
        script[0].add(FaultTarget::device(0, 1), 3);
        script[0].add(FaultTarget::device(0, 0), 3);
        const auto r = run(b, x, script, TmrConfig{TmrScope::protected_only});
        const RawOutputs clean = batch_forward(b, x, {});
        CHECK(r.outputs.col(0, 0) == clean.col(0, 0));
        CHECK(r.outputs.col(1, 0) == clean.col(1, 0) + 3);
        CHECK(r.stats.tmr_votes == 1);
    }

    TEST_CASE("any single-replica fault set is voted to golden (property)") {
        Gen g(42);
        for (int t = 0; t < 1000; ++t) {
            const FabricConfig f = g.fabric();
            const Batch b = g.batch(f);
            const IntVector x = g.input(f.rows, 8);
            std::vector<FaultSet> script(3);
            const std::size_t replica = g.size(0, 2);
            for (std::size_t n = 0; n < f.pes_per_batch; ++n)
                for (std::size_t c = 0; c < f.physical_cols(); ++c)
                    if (g.range(0, 3) == 0)
                        script[replica].add(FaultTarget::device(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(c)),
                                            g.nonzero(1 << 20));
            const auto r = run(b, x, script);
            REQUIRE(r.outputs.col_out == batch_forward(b, x, {}).col_out);
        }
    }

    TEST_CASE("overheads are 200 percent") {
        FabricConfig f;
        f.rows = 16;
        f.weight_cols = 8;
        f.protected_bits = 3;
        f.pes_per_batch = 4;
        CHECK(tmr_area_overhead(f, TmrScope::all_columns).area_overhead_pct == 200.0);
        CHECK(tmr_area_overhead(f, TmrScope::protected_only).area_overhead_pct == 200.0);
        CycleStats st;
        st.runs = 7;
        st.evaluations = 21;
        CHECK(latency_overhead(st, Mode::tmr).latency_overhead_pct == 200.0);
    }
}
