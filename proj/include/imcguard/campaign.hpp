#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imcguard/config.hpp"
#include "imcguard/nn.hpp"
#include "imcguard/overhead.hpp"
#include "imcguard/stats.hpp"

namespace imcguard {

/// Result of one sweep point. `point` is a single-point campaign
/// (one mode, one batch size, one protected-bit count) that reproduces the
/// row when run on its own.
struct CampaignResultRow {
    CampaignConfig point;
    Mode mode = Mode::unprotected;
    std::size_t pes_per_batch = 0;
    int protected_bits = 0;

    std::optional<AccuracyReport> accuracy; // set when a model is attached

    std::size_t trials = 0;            // batch trials or inference samples
    std::size_t exact_outputs = 0;     // trials / samples with golden in-scope outputs
    double mean_extra_cycles = 0.0;    // per batch run
    std::optional<double> stderr_extra_cycles;
    std::optional<double> detection_rate;
    std::optional<double> correction_rate;

    OverheadReport overhead;
    CycleStats stats;

    bool operator==(const CampaignResultRow &) const = default;
};

struct RunOptions {
    int workers = 1;
    std::string output_dir; // empty: do not write files
    std::function<void(const CampaignResultRow &)> on_row;
};

/// The single-point config for (mode, n, P) taken from `cfg`.
CampaignConfig point_config(const CampaignConfig &cfg, Mode mode, std::size_t pes_per_batch, int protected_bits);

/// Runs a config that sweeps exactly one point.
CampaignResultRow run_point(const CampaignConfig &point, int workers = 1);

/// Cartesian sweep in the order pes_per_batch, protected_bits, mode.
/// Files written to opts.output_dir:
///   results.csv, results.jsonl      one record per point, flushed as produced
///   plot_area_vs_batch.csv          mode, protected_bits, pes_per_batch, area_overhead_pct
///   plot_latency_vs_batch.csv       mode, protected_bits, pes_per_batch, latency_overhead_pct, ...
///   plot_accuracy_vs_bits.csv       mode, pes_per_batch, protected_bits, normalized_accuracy, ...
/// Missing model or dataset files raise ConfigError; write failures IoError.
std::vector<CampaignResultRow> run_campaign(const CampaignConfig &cfg, const RunOptions &opts = {});

std::string csv_header();
std::string to_csv(const CampaignResultRow &row);
/// One JSON object on one line, tagged with kResultsSchema.
std::string to_jsonl(const CampaignResultRow &row);

/// Re-run the point echoed in a results.jsonl line.
CampaignResultRow replay_jsonl(std::string_view line, int workers = 1);

} // namespace imcguard
