#include "imcguard/verify.hpp"

#include <functional>
#include <sstream>

#include "imcguard/checksum.hpp"
#include "imcguard/error.hpp"
#include "imcguard/overhead.hpp"
#include "imcguard/tmr.hpp"
#include "imcguard/trials.hpp"

namespace imcguard {

namespace {

constexpr std::uint64_t kSeed = 0x5eed;
constexpr std::size_t kMaxNotes = 8;

class Checker {
  public:
    explicit Checker(std::string name) { rep_.scenario = std::move(name); }

    void check(bool ok, const std::function<std::string()> &describe) {
        ++rep_.cases;
        if (ok)
            return;
        ++rep_.failures;
        if (rep_.failure_notes.size() < kMaxNotes)
            rep_.failure_notes.push_back(describe());
    }

    VerifyReport take() { return std::move(rep_); }

  private:
    VerifyReport rep_;
};

/// R=8, two weights of four bits, three MSB planes protected, three PEs.
FabricConfig reference_fabric() {
    FabricConfig f;
    f.rows = 8;
    f.weight_cols = 2;
    f.weight_bits = 4;
    f.protected_bits = 3;
    f.pes_per_batch = 3;
    return f;
}

std::string site(const FaultTarget &t) {
    std::ostringstream os;
    switch (t.kind) {
    case SiteKind::pe_column:
        os << "device(n=" << t.pe << ", b=" << t.column << ")";
        break;
    case SiteKind::crossbar_checksum:
        os << "crossch(n=" << t.pe << ")";
        break;
    case SiteKind::pe_checksum:
        os << "pech(b=" << t.column << ")";
        break;
    case SiteKind::parity:
        os << "parity";
        break;
    }
    return os.str();
}

std::string describe_set(const FaultSet &fs) {
    std::string s;
    for (const auto &f : fs.sites())
        s += site(f.target) + "+=" + std::to_string(f.magnitude) + " ";
    return s;
}

/// Faults only on the first cycle; later cycles are clean.
ProtectedResult run_once(const Batch &batch, const IntVector &input, const FaultSet &fs,
                         StallPolicy policy = {}) {
    ScriptedFaults src({fs});
    return run_with_protection(batch, input, src, policy);
}

bool golden_after(const ProtectedResult &r, const Batch &batch, const IntVector &input) {
    return protected_outputs_equal(r.outputs, batch_forward(batch, input, {}));
}

acc_t random_magnitude(RngStream &rng) {
    const acc_t m = static_cast<acc_t>(rng.below(200)) + 1;
    return rng.below(2) ? m : -m;
}

VerifyReport soundness() {
    Checker c("soundness");
    SeededRng seeds(kSeed);
    for (std::uint64_t t = 0; t < 1000; ++t) {
        RngStream rng = seeds.stream(t, 0, 0);
        FabricConfig f;
        f.rows = 1 + rng.below(16);
        f.weight_cols = 1 + rng.below(4);
        f.weight_bits = 2 + static_cast<int>(rng.below(7));
        f.protected_bits = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.weight_bits)));
        f.pes_per_batch = 1 + rng.below(8);
        const Batch batch = random_batch(f, rng.next());
        const IntVector input = random_activations(f.rows, 8, rng);
        const RawOutputs raw = batch_forward(batch, input, {});
        const DeltaReport d = compute_deltas(raw);
        const Verdict v = iedcr_step(d, raw);
        c.check(d.all_zero() && d.parity_consistent && d.sum_n == 0 && d.sum_b == 0 &&
                    v.kind == VerdictKind::no_fault,
                [&] { return "case " + std::to_string(t) + ": nonzero delta without faults"; });
    }
    return c.take();
}

VerifyReport single_column() {
    Checker c("single-column");

    // Tiny fabric: two PEs of 2x2 cells, one-bit weights, input [2, 3].
    FabricConfig tiny;
    tiny.rows = 2;
    tiny.weight_cols = 2;
    tiny.weight_bits = 1;
    tiny.protected_bits = 1;
    tiny.pes_per_batch = 2;
    BinaryMatrix pe1(2, 2), pe2(2, 2);
    pe1.data = {1, 0, 1, 1};
    pe2.data = {0, 1, 1, 0};
    const Batch tb = build_batch({pe1, pe2}, tiny);
    const IntVector tin({2, 3}, 8);
    const RawOutputs clean = batch_forward(tb, tin, {});
    c.check(clean.col_out == std::vector<acc_t>{5, 3, 3, 2} && clean.crossch_out == std::vector<acc_t>{8, 5} &&
                clean.pech_out == std::vector<acc_t>{8, 5} && clean.parity_out == 13,
            [] { return std::string("tiny fabric clean outputs differ from the hand-computed values"); });
    // Column 0 hit in both PEs.
    const FaultSet two{{FaultTarget::device(0, 0), 4}, {FaultTarget::device(1, 0), -2}};
    const RawOutputs hit = batch_forward(tb, tin, two);
    const Verdict v = iedcr_step(compute_deltas(hit), hit);
    c.check(v.kind == VerdictKind::corrected_single_column && v.column == 0u &&
                v.corrected_outputs == clean.col_out,
            [&] { return "tiny fabric: verdict " + std::string(to_string(v.kind)); });

    const FabricConfig f = reference_fabric();
    const Batch batch = random_batch(f, kSeed);
    SeededRng seeds(kSeed);
    const auto prot = f.protected_columns();

    // Every protected site, fixed magnitudes.
    std::vector<FaultTarget> sites;
    for (std::uint32_t n = 0; n < f.pes_per_batch; ++n)
        for (auto b : prot)
            sites.push_back(FaultTarget::device(n, static_cast<std::uint32_t>(b)));
    for (const acc_t m : {1, -1, 7, -7, 100, -100}) {
        RngStream rng = seeds.stream(static_cast<std::uint64_t>(m + 1000), 1, 0);
        const IntVector input = random_activations(f.rows, 8, rng);
        for (const auto &t : sites) {
            const FaultSet fs{{t, m}};
            const auto r = run_once(batch, input, fs);
            c.check(r.stats.detected == 1 && r.stats.exact_corrections == 1 && r.stats.miscorrections == 0 &&
                        golden_after(r, batch, input),
                    [&] { return "single fault " + describe_set(fs) + "not corrected"; });
        }
    }

    // One column, two PEs, random magnitudes.
    for (std::uint64_t s = 0; s < 100; ++s) {
        RngStream rng = seeds.stream(s, 2, 0);
        const IntVector input = random_activations(f.rows, 8, rng);
        for (auto b : prot)
            for (std::uint32_t n1 = 0; n1 < f.pes_per_batch; ++n1)
                for (std::uint32_t n2 = n1 + 1; n2 < f.pes_per_batch; ++n2) {
                    const auto col = static_cast<std::uint32_t>(b);
                    const FaultSet fs{{FaultTarget::device(n1, col), random_magnitude(rng)},
                                      {FaultTarget::device(n2, col), random_magnitude(rng)}};
                    const auto r = run_once(batch, input, fs);
                    c.check(r.stats.miscorrections == 0 && golden_after(r, batch, input),
                            [&] { return "column pair " + describe_set(fs) + "not restored"; });
                }
    }
    return c.take();
}

VerifyReport single_pe() {
    Checker c("single-pe");
    const FabricConfig f = reference_fabric();
    const Batch batch = random_batch(f, kSeed);
    const auto prot = f.protected_columns();
    SeededRng seeds(kSeed);
    for (std::uint64_t s = 0; s < 100; ++s) {
        RngStream rng = seeds.stream(s, 3, 0);
        const IntVector input = random_activations(f.rows, 8, rng);
        for (std::uint32_t n = 0; n < f.pes_per_batch; ++n)
            for (std::size_t i = 0; i < prot.size(); ++i)
                for (std::size_t j = i + 1; j < prot.size(); ++j) {
                    const FaultSet fs{{FaultTarget::device(n, static_cast<std::uint32_t>(prot[i])), random_magnitude(rng)},
                                      {FaultTarget::device(n, static_cast<std::uint32_t>(prot[j])), random_magnitude(rng)}};
                    const RawOutputs raw = batch_forward(batch, input, fs);
                    const DeltaReport d = compute_deltas(raw);
                    const Verdict v = iedcr_step(d, raw);
                    const bool cancels = fs.sites()[0].magnitude + fs.sites()[1].magnitude == 0;
                    const bool verdict_ok = cancels ? v.kind == VerdictKind::stall_recompute
                                                    : v.kind == VerdictKind::corrected_single_pe && v.pe == n;
                    const auto r = run_once(batch, input, fs);
                    c.check(verdict_ok && r.stats.miscorrections == 0 && golden_after(r, batch, input),
                            [&] { return "PE pair " + describe_set(fs) + "verdict " + std::string(to_string(v.kind)); });
                }
    }
    return c.take();
}

VerifyReport stall_classification() {
    Checker c("stall-classification");
    const FabricConfig f = reference_fabric();
    const Batch batch = random_batch(f, kSeed);
    const auto prot = f.protected_columns();
    SeededRng seeds(kSeed);
    RngStream rng = seeds.stream(0, 4, 0);
    const IntVector input = random_activations(f.rows, 8, rng);
    StallPolicy policy;
    policy.max_recompute_cycles = 5;
    for (std::uint32_t n1 = 0; n1 < f.pes_per_batch; ++n1)
        for (std::uint32_t n2 = 0; n2 < f.pes_per_batch; ++n2)
            for (std::size_t i = 0; i < prot.size(); ++i)
                for (std::size_t j = 0; j < prot.size(); ++j) {
                    if (n1 >= n2 || i == j)
                        continue;
                    const FaultSet fs{{FaultTarget::device(n1, static_cast<std::uint32_t>(prot[i])), random_magnitude(rng)},
                                      {FaultTarget::device(n2, static_cast<std::uint32_t>(prot[j])), random_magnitude(rng)}};
                    const RawOutputs raw = batch_forward(batch, input, fs);
                    const Verdict v = iedcr_step(compute_deltas(raw), raw);
                    const auto r = run_once(batch, input, fs, policy);
                    c.check(v.kind == VerdictKind::stall_recompute && r.stats.recompute_stalls == 1 &&
                                r.stats.evaluations == 2 && golden_after(r, batch, input),
                            [&] { return "diagonal pair " + describe_set(fs) + "verdict " + std::string(to_string(v.kind)); });
                }
    return c.take();
}

VerifyReport checksum_malfunction() {
    Checker c("checksum-malfunction");
    const FabricConfig f = reference_fabric();
    const Batch batch = random_batch(f, kSeed);
    SeededRng seeds(kSeed);
    RngStream rng = seeds.stream(0, 5, 0);
    const IntVector input = random_activations(f.rows, 8, rng);

    std::vector<FaultTarget> sites;
    for (std::uint32_t n = 0; n < f.pes_per_batch; ++n)
        sites.push_back(FaultTarget::crossch(n));
    for (auto b : f.protected_columns())
        sites.push_back(FaultTarget::pech(static_cast<std::uint32_t>(b)));
    sites.push_back(FaultTarget::parity_column());
    for (const auto &t : sites)
        for (const acc_t m : {1, -1, 7, -7, 100, -100}) {
            const FaultSet fs{{t, m}};
            const RawOutputs raw = batch_forward(batch, input, fs);
            const Verdict v = iedcr_step(compute_deltas(raw), raw);
            const auto r = run_once(batch, input, fs);
            c.check(v.kind == VerdictKind::stall_checksum_recheck && r.stats.corrections == 0 &&
                        r.stats.checksum_stalls == 1 && golden_after(r, batch, input),
                    [&] { return "safety fault " + describe_set(fs) + "verdict " + std::string(to_string(v.kind)); });
        }

    // Equal errors on crossch(n), pech(b) and parity look like a device fault at (n, b).
    const auto b = static_cast<std::uint32_t>(f.protected_columns().front());
    const FaultSet alias{{FaultTarget::crossch(1), 9}, {FaultTarget::pech(b), 9}, {FaultTarget::parity_column(), 9}};
    const auto r = run_once(batch, input, alias);
    c.check(r.final_verdict == VerdictKind::corrected_single_column && r.stats.miscorrections == 1 &&
                r.stats.exact_corrections == 0 && !golden_after(r, batch, input),
            [&] { return "aliasing case not counted as a miscorrection"; });
    return c.take();
}

VerifyReport tmr_vote_scenario() {
    Checker c("tmr-vote");
    const FabricConfig f = reference_fabric();
    const Batch batch = random_batch(f, kSeed);
    SeededRng seeds(kSeed);
    RngStream rng = seeds.stream(0, 6, 0);
    const IntVector input = random_activations(f.rows, 8, rng);
    const RawOutputs clean = batch_forward(batch, input, {});
    for (std::uint32_t replica = 0; replica < 3; ++replica)
        for (std::uint32_t n = 0; n < f.pes_per_batch; ++n)
            for (std::uint32_t b = 0; b < f.physical_cols(); ++b) {
                std::vector<FaultSet> script(3);
                script[replica].add(FaultTarget::device(n, b), random_magnitude(rng));
                ScriptedFaults src(script);
                const TmrResult r = tmr_forward(batch, input, src, TmrConfig{});
                c.check(r.outputs.col_out == clean.col_out && r.stats.recovered == r.stats.fault_events,
                        [&] { return "replica " + std::to_string(replica) + " fault at " +
                                     site(FaultTarget::device(n, b)) + " not voted out"; });
            }
    CycleStats st;
    st.runs = 10;
    st.evaluations = 30;
    const OverheadReport o = overhead_for(f, st, Mode::tmr, TmrScope::all_columns);
    c.check(o.area_overhead_pct == 200.0 && o.latency_overhead_pct == 200.0,
            [&] { return "TMR overheads " + std::to_string(o.area_overhead_pct) + "% / " +
                         std::to_string(o.latency_overhead_pct) + "%"; });
    return c.take();
}

} // namespace

const std::vector<std::string_view> &verify_scenarios() {
    static const std::vector<std::string_view> names = {"soundness",         "single-column",
                                                        "single-pe",         "stall-classification",
                                                        "checksum-malfunction", "tmr-vote"};
    return names;
}

VerifyReport run_verify(std::string_view scenario) {
    if (scenario == "soundness")
        return soundness();
    if (scenario == "single-column")
        return single_column();
    if (scenario == "single-pe")
        return single_pe();
    if (scenario == "stall-classification")
        return stall_classification();
    if (scenario == "checksum-malfunction")
        return checksum_malfunction();
    if (scenario == "tmr-vote")
        return tmr_vote_scenario();
    throw ConfigError("unknown scenario '" + std::string(scenario) + "'");
}

} // namespace imcguard
