// Serial reference loop vs OpenMP loop for the two parallel kernels:
// Monte Carlo batch trials and per-sample inference.

#include <benchmark/benchmark.h>

#include "imcguard/model_io.hpp"
#include "imcguard/nn.hpp"
#include "imcguard/trials.hpp"

using namespace imcguard;

namespace {

TrialConfig trial_config() {
    TrialConfig tc;
    tc.fabric.rows = 16;
    tc.fabric.weight_cols = 16;
    tc.fabric.weight_bits = 4;
    tc.fabric.protected_bits = 3;
    tc.fabric.pes_per_batch = 8;
    tc.fault = fefet_preset();
    tc.mode = Mode::checksum;
    tc.trials = 2000;
    tc.seed = 1;
    return tc;
}

void BM_batch_trials(benchmark::State &state) {
    const TrialConfig tc = trial_config();
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(run_batch_trials(tc, workers));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tc.trials));
}

struct Fixture {
    CompiledModel cm;
    Dataset data;
};

const Fixture &fixture() {
    static const Fixture f = [] {
        FabricConfig fab;
        fab.rows = 16;
        fab.weight_cols = 4;
        fab.weight_bits = 4;
        fab.protected_bits = 3;
        fab.pes_per_batch = 4;
        fab.num_batches = 4;
        return Fixture{compile_model(load_model(std::string(IMCGUARD_FIXTURE_DIR) + "/model.imcg"), fab),
                       load_dataset(std::string(IMCGUARD_FIXTURE_DIR) + "/dataset.imcg")};
    }();
    return f;
}

void BM_infer(benchmark::State &state) {
    const Fixture &f = fixture();
    InferOptions opts;
    opts.max_samples = 50;
    opts.workers = static_cast<int>(state.range(0));
    const FaultModelConfig fault = fefet_preset();
    for (auto _ : state)
        benchmark::DoNotOptimize(infer(f.cm, f.data, Mode::checksum, fault, {}, {}, SeededRng(3), opts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opts.max_samples));
}

} // namespace

// workers = 1 runs the serial reference loop.
BENCHMARK(BM_batch_trials)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_infer)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
