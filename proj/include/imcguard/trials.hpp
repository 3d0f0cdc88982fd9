#pragma once

#include <cstddef>
#include <cstdint>

#include "imcguard/checksum.hpp"
#include "imcguard/fabric.hpp"
#include "imcguard/fault.hpp"
#include "imcguard/mode.hpp"
#include "imcguard/stats.hpp"
#include "imcguard/tmr.hpp"

namespace imcguard {

/// Monte Carlo over one randomly programmed batch with a fresh random input
/// and fresh faults per trial.
struct TrialConfig {
    FabricConfig fabric;
    FaultModelConfig fault;
    StallPolicy policy;
    TmrConfig tmr;
    Mode mode = Mode::checksum;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

struct TrialSummary {
    CycleStats stats;
    std::size_t trials = 0;
    double mean_extra_cycles = 0.0;
    double stderr_extra_cycles = 0.0; // standard error of the mean
    std::size_t exact_outputs = 0;    // trials whose in-scope outputs equal golden
};

/// Cells drawn uniformly from {0, 1}, deterministic in `seed`.
Batch random_batch(const FabricConfig &cfg, std::uint64_t seed);

/// Activations uniform in [0, 2^(bits-1) - 1].
IntVector random_activations(std::size_t len, int bits, RngStream &rng);

/// Runs trials with `workers` OpenMP threads (1 = serial reference loop).
TrialSummary run_batch_trials(const TrialConfig &cfg, int workers = 1);

} // namespace imcguard
