#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "imcguard/fabric.hpp"
#include "imcguard/fault_set.hpp"

namespace imcguard {

/// Uniform magnitude in [lo, hi] with a random sign.
struct UniformMagnitude {
    acc_t lo = 1;
    acc_t hi = 1;
    bool operator==(const UniformMagnitude &) const = default;
};

/// Signed values drawn with the given probabilities (normalized on use).
struct DiscreteMagnitude {
    std::vector<acc_t> values;
    std::vector<double> probabilities;
    bool operator==(const DiscreteMagnitude &) const = default;
};

/// round(N(0, sigma)), redrawn while it rounds to zero.
struct GaussianMagnitude {
    double sigma = 1.0;
    bool operator==(const GaussianMagnitude &) const = default;
};

using MagnitudeDist = std::variant<UniformMagnitude, DiscreteMagnitude, GaussianMagnitude>;

struct FaultModelConfig {
    double p_column = 0.0; // per physical column per evaluation
    MagnitudeDist magnitude = UniformMagnitude{};
    bool include_checksum_columns = true;
    std::string preset_name;

    void validate() const;
    bool operator==(const FaultModelConfig &) const = default;
};

/// Calibration stand-ins for the two technologies. The published error
/// distributions are not available, so every parameter is overridable.
FaultModelConfig fefet_preset();
FaultModelConfig rram_preset();
std::optional<FaultModelConfig> preset_by_name(const std::string &name);

/// 64-bit finalizer from splitmix64.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream. The engine is mt19937_64, whose output
/// sequence is fixed by the standard; the distributions below are written
/// out by hand so draws agree across standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, bound). bound > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via Box-Muller.
    double normal();

  private:
    std::mt19937_64 engine_;
};

/// Master seed plus the stream derivation rule
/// seed(trial, batch, cycle) = mix(mix(mix(master ^ trial) ^ batch) ^ cycle).
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t master_seed = 0) : master_(master_seed) {}

    std::uint64_t master_seed() const noexcept { return master_; }
    std::uint64_t stream_seed(std::uint64_t trial, std::uint64_t batch, std::uint64_t cycle) const noexcept;
    RngStream stream(std::uint64_t trial, std::uint64_t batch, std::uint64_t cycle) const {
        return RngStream(stream_seed(trial, batch, cycle));
    }

  private:
    std::uint64_t master_;
};

/// Column groups eligible for a draw.
enum class EvalScope : std::uint8_t {
    full,           // device, crossbar checksum, PE checksum, parity
    device_only,    // device columns only (unprotected and TMR fabrics)
    checksums_only, // checksum and parity columns only (checksum recheck)
};

struct BatchShape {
    std::size_t num_pes = 0;
    std::size_t physical_cols = 0;
    std::vector<std::size_t> protected_cols;

    static BatchShape of(const Batch &b) { return {b.num_pes(), b.physical_cols(), b.protected_cols}; }
    /// Eligible site count under `scope` for a given config.
    std::size_t eligible_sites(EvalScope scope, bool include_checksum_columns) const;
};

/// Draw a magnitude from `dist`; never zero.
acc_t sample_magnitude(const MagnitudeDist &dist, RngStream &rng);

/// Each eligible column is faulted independently with probability p_column.
/// Sites are visited in a fixed order: device columns (n-major), crossbar
/// checksums, PE checksum columns, parity.
FaultSet sample_faults(const FaultModelConfig &cfg, const BatchShape &shape, RngStream &rng,
                       EvalScope scope = EvalScope::full);

/// Restrict a fault set to the sites that `scope` evaluates.
FaultSet filter_scope(const FaultSet &faults, EvalScope scope);

/// Supplies the fault draw for each evaluation cycle of one batch run.
class FaultSource {
  public:
    virtual ~FaultSource() = default;
    virtual FaultSet draw(std::uint32_t cycle, EvalScope scope) = 0;
};

/// Fresh independent draws from the stochastic model, one stream per cycle.
class SampledFaults final : public FaultSource {
  public:
    SampledFaults(const FaultModelConfig &cfg, BatchShape shape, const SeededRng &rng,
                  std::uint64_t trial_id, std::uint64_t batch_id)
        : cfg_(cfg), shape_(std::move(shape)), rng_(rng), trial_(trial_id), batch_(batch_id) {}

    FaultSet draw(std::uint32_t cycle, EvalScope scope) override;

  private:
    const FaultModelConfig &cfg_;
    BatchShape shape_;
    SeededRng rng_;
    std::uint64_t trial_;
    std::uint64_t batch_;
};

/// Test hook: a fixed fault set per cycle. Cycles past the script repeat the
/// last entry when `repeat_last` is set, otherwise they are fault-free.
class ScriptedFaults final : public FaultSource {
  public:
    explicit ScriptedFaults(std::vector<FaultSet> per_cycle, bool repeat_last = false)
        : script_(std::move(per_cycle)), repeat_last_(repeat_last) {}

    FaultSet draw(std::uint32_t cycle, EvalScope scope) override;

  private:
    std::vector<FaultSet> script_;
    bool repeat_last_;
};

} // namespace imcguard
