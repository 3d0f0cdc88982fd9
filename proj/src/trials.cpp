#include "imcguard/trials.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "imcguard/parallel.hpp"

namespace imcguard {

namespace {

constexpr std::uint64_t kBatchStream = ~std::uint64_t{0};
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kFaultStream = 2;

struct TrialOutcome {
    CycleStats stats;
    bool exact = true;
};

} // namespace

Batch random_batch(const FabricConfig &cfg, std::uint64_t seed) {
    cfg.validate();
    RngStream rng = SeededRng(seed).stream(kBatchStream, 0, 0);
    std::vector<BinaryMatrix> grids(cfg.pes_per_batch, BinaryMatrix(cfg.rows, cfg.physical_cols()));
    for (auto &g : grids)
        for (auto &c : g.data)
            c = static_cast<std::uint8_t>(rng.next() >> 63);
    return build_batch(grids, cfg);
}

IntVector random_activations(std::size_t len, int bits, RngStream &rng) {
    std::vector<acc_t> v(len);
    const auto span = static_cast<std::uint64_t>(signed_max(bits)) + 1;
    for (auto &x : v)
        x = static_cast<acc_t>(rng.below(span));
    return IntVector(std::move(v), bits);
}

TrialSummary run_batch_trials(const TrialConfig &cfg, int workers) {
    cfg.fault.validate();
    cfg.policy.validate();
    const Batch batch = random_batch(cfg.fabric, cfg.seed);
    const SeededRng rng(cfg.seed);

    std::vector<TrialOutcome> out(cfg.trials);
    for_each_index(cfg.trials, workers, [&](std::size_t t) {
        RngStream in_rng = rng.stream(t, kInputStream, 0);
        const IntVector input = random_activations(cfg.fabric.rows, 8, in_rng);
        TrialOutcome &o = out[t];
        switch (cfg.mode) {
        case Mode::checksum: {
            auto r = run_with_protection(batch, input, cfg.fault, cfg.policy, rng, t, kFaultStream);
            o.stats = r.stats;
            o.exact = r.stats.faulty_runs == 0 || r.stats.fault_events == r.stats.recovered;
            break;
        }
        case Mode::tmr: {
            auto r = tmr_forward(batch, input, cfg.fault, rng, t, kFaultStream, cfg.tmr);
            o.stats = r.stats;
            o.exact = r.stats.fault_events == r.stats.recovered;
            break;
        }
        case Mode::unprotected: {
            SampledFaults src(cfg.fault, BatchShape::of(batch), rng, t, kFaultStream);
            const FaultSet fs = src.draw(0, EvalScope::device_only);
            o.stats.runs = 1;
            o.stats.evaluations = 1;
            o.stats.faulty_runs = fs.empty() ? 0 : 1;
            bool touched = false;
            for (const auto &f : fs.sites())
                touched = touched || batch.cfg.is_protected(f.target.column);
            o.stats.fault_events = touched ? 1 : 0;
            o.stats.silent_errors = o.stats.fault_events;
            o.exact = !touched;
            break;
        }
        }
    });

    TrialSummary s;
    s.trials = cfg.trials;
    std::uint64_t sum = 0, sum_sq = 0;
    for (const auto &o : out) {
        s.stats += o.stats;
        s.exact_outputs += o.exact;
        const std::uint64_t x = cfg.mode == Mode::tmr ? 2 : (cfg.mode == Mode::checksum ? o.stats.extra_cycles() : 0);
        sum += x;
        sum_sq += x * x;
    }
    if (cfg.trials > 0) {
        const auto n = static_cast<double>(cfg.trials);
        s.mean_extra_cycles = static_cast<double>(sum) / n;
        if (cfg.trials > 1) {
            const double var = (static_cast<double>(sum_sq) - n * s.mean_extra_cycles * s.mean_extra_cycles) / (n - 1);
            s.stderr_extra_cycles = std::sqrt(std::max(var, 0.0) / n);
        }
    }
    return s;
}

} // namespace imcguard
