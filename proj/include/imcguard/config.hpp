#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "imcguard/checksum.hpp"
#include "imcguard/fabric.hpp"
#include "imcguard/fault.hpp"
#include "imcguard/mode.hpp"
#include "imcguard/tmr.hpp"

namespace imcguard {

/// A campaign: the base fabric, fault model and policy, plus the sweep axes.
///
/// Text form is sectioned key/value, one `key = value` per line, `#` starts a
/// comment, lists are comma separated:
///
///   [fabric]   rows weight_cols weight_bits pes_per_batch num_batches
///              protected_bits partition (column_split | row_split)
///   [fault]    preset (none | fefet | rram) p_column
///              distribution (uniform | discrete | gaussian)
///              magnitude_lo magnitude_hi values probabilities sigma
///              include_checksum_columns
///   [policy]   max_recompute_cycles max_consecutive_checksum_stalls
///   [tmr]      scope (all_columns | protected_only)
///   [campaign] modes sweep_pes_per_batch sweep_protected_bits samples
///              trials seed model dataset output
///
/// A preset is applied first; every other [fault] key overrides it.
/// Unset sweep axes default to the [fabric] value; an unset
/// fabric.protected_bits defaults to weight_bits.
struct CampaignConfig {
    FabricConfig fabric;
    FaultModelConfig fault;
    StallPolicy policy;
    TmrConfig tmr;
    std::vector<Mode> modes;
    std::vector<std::size_t> sweep_pes;
    std::vector<int> sweep_bits;
    std::size_t samples = 0; // 0 = whole dataset
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    std::string model_path;
    std::string dataset_path;
    std::string output_dir;

    bool has_model() const noexcept { return !model_path.empty(); }
    /// Range and consistency checks; does not touch the file system.
    void validate() const;
    bool operator==(const CampaignConfig &) const = default;
};

/// Throws ConfigError("line N: key 'k': ...") on any schema violation.
CampaignConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const CampaignConfig &cfg);

std::string_view to_string(PartitionScheme p);
std::string_view to_string(TmrScope s);
/// Compact text form, e.g. "uniform:192:320", "gaussian:96", "discrete:5@0.5;-5@0.5".
std::string describe(const MagnitudeDist &d);

} // namespace imcguard
