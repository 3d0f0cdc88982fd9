#include "imcguard/fault.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace imcguard {

void FaultModelConfig::validate() const {
    if (!(p_column >= 0.0 && p_column <= 1.0))
        throw ConfigError("fault.p_column must be in [0, 1], got " + std::to_string(p_column));
    std::visit(
        [](const auto &d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, UniformMagnitude>) {
                if (d.lo < 1 || d.hi < d.lo)
                    throw ConfigError("fault.magnitude_lo and fault.magnitude_hi need 1 <= lo <= hi");
            } else if constexpr (std::is_same_v<D, DiscreteMagnitude>) {
                if (d.values.empty() || d.values.size() != d.probabilities.size())
                    throw ConfigError("fault.values and fault.probabilities must be non-empty and of equal length");
                double total = 0.0;
                for (std::size_t i = 0; i < d.values.size(); ++i) {
                    if (d.values[i] == 0)
                        throw ConfigError("fault.values must be nonzero");
                    if (!(d.probabilities[i] >= 0.0))
                        throw ConfigError("fault.probabilities must be >= 0");
                    total += d.probabilities[i];
                }
                if (!(total > 0.0))
                    throw ConfigError("fault.probabilities must not all be zero");
            } else {
                if (!(d.sigma >= 0.5))
                    throw ConfigError("fault.sigma must be >= 0.5");
            }
        },
        magnitude);
}

// Both presets are placeholders tuned once against the fixture network.
// FeFET: rare, large, tightly clustered deviations. RRAM: more frequent
// deviations whose magnitudes spread wider but are mostly small.
FaultModelConfig fefet_preset() {
    FaultModelConfig c;
    c.p_column = 0.003;
    c.magnitude = UniformMagnitude{768, 1280};
    c.include_checksum_columns = true;
    c.preset_name = "fefet";
    return c;
}

FaultModelConfig rram_preset() {
    FaultModelConfig c;
    c.p_column = 0.006;
    c.magnitude = GaussianMagnitude{640.0};
    c.include_checksum_columns = true;
    c.preset_name = "rram";
    return c;
}

std::optional<FaultModelConfig> preset_by_name(const std::string &name) {
    if (name == "fefet")
        return fefet_preset();
    if (name == "rram")
        return rram_preset();
    return std::nullopt;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold)
            return r % bound;
    }
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::stream_seed(std::uint64_t trial, std::uint64_t batch,
                                     std::uint64_t cycle) const noexcept {
    std::uint64_t h = mix64(master_ ^ 0x243f6a8885a308d3ULL);
    h = mix64(h ^ trial);
    h = mix64(h ^ batch);
    return mix64(h ^ cycle);
}

std::size_t BatchShape::eligible_sites(EvalScope scope, bool include_checksum_columns) const {
    const std::size_t device = num_pes * physical_cols;
    const std::size_t checks = protected_cols.empty() ? 0 : num_pes + protected_cols.size() + 1;
    switch (scope) {
    case EvalScope::device_only:
        return device;
    case EvalScope::checksums_only:
        return include_checksum_columns ? checks : 0;
    case EvalScope::full:
        return device + (include_checksum_columns ? checks : 0);
    }
    return 0;
}

acc_t sample_magnitude(const MagnitudeDist &dist, RngStream &rng) {
    return std::visit(
        [&](const auto &d) -> acc_t {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, UniformMagnitude>) {
                const auto span = static_cast<std::uint64_t>(d.hi - d.lo + 1);
                const acc_t mag = d.lo + static_cast<acc_t>(rng.below(span));
                return (rng.next() & 1u) ? mag : -mag;
            } else if constexpr (std::is_same_v<D, DiscreteMagnitude>) {
                const double total = std::accumulate(d.probabilities.begin(), d.probabilities.end(), 0.0);
                const double u = rng.uniform() * total;
                double cum = 0.0;
                for (std::size_t i = 0; i < d.values.size(); ++i) {
                    cum += d.probabilities[i];
                    if (u < cum)
                        return d.values[i];
                }
                // u landed on the rounding tail; take the last value with mass
                for (std::size_t i = d.values.size(); i-- > 0;)
                    if (d.probabilities[i] > 0.0)
                        return d.values[i];
                return d.values.back();
            } else {
                for (;;) {
                    const auto v = static_cast<acc_t>(std::llround(rng.normal() * d.sigma));
                    if (v != 0)
                        return v;
                }
            }
        },
        dist);
}

FaultSet sample_faults(const FaultModelConfig &cfg, const BatchShape &shape, RngStream &rng, EvalScope scope) {
    FaultSet out;
    if (cfg.p_column <= 0.0)
        return out;

    auto maybe = [&](FaultTarget t) {
        if (rng.uniform() < cfg.p_column)
            out.add(t, sample_magnitude(cfg.magnitude, rng));
    };

    if (scope != EvalScope::checksums_only) {
        for (std::size_t n = 0; n < shape.num_pes; ++n)
            for (std::size_t b = 0; b < shape.physical_cols; ++b)
                maybe(FaultTarget::device(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(b)));
    }
    const bool checks = scope != EvalScope::device_only && cfg.include_checksum_columns &&
                        !shape.protected_cols.empty();
    if (checks) {
        for (std::size_t n = 0; n < shape.num_pes; ++n)
            maybe(FaultTarget::crossch(static_cast<std::uint32_t>(n)));
        for (std::size_t b : shape.protected_cols)
            maybe(FaultTarget::pech(static_cast<std::uint32_t>(b)));
        maybe(FaultTarget::parity_column());
    }
    return out;
}

FaultSet filter_scope(const FaultSet &faults, EvalScope scope) {
    if (scope == EvalScope::full)
        return faults;
    FaultSet out;
    for (const auto &f : faults.sites()) {
        const bool keep = scope == EvalScope::checksums_only ? f.target.is_checksum() : !f.target.is_checksum();
        if (keep)
            out.add(f.target, f.magnitude);
    }
    return out;
}

FaultSet SampledFaults::draw(std::uint32_t cycle, EvalScope scope) {
    auto stream = rng_.stream(trial_, batch_, cycle);
    return sample_faults(cfg_, shape_, stream, scope);
}

FaultSet ScriptedFaults::draw(std::uint32_t cycle, EvalScope scope) {
    if (cycle < script_.size())
        return filter_scope(script_[cycle], scope);
    if (repeat_last_ && !script_.empty())
        return filter_scope(script_.back(), scope);
    return {};
}

} // namespace imcguard
