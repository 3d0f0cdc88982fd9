#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace imcguard {

/// Outcome of one verification scenario. Only the first few failure
/// descriptions are kept.
struct VerifyReport {
    std::string scenario;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_notes;

    bool passed() const noexcept { return cases > 0 && failures == 0; }
};

/// soundness, single-column, single-pe, stall-classification,
/// checksum-malfunction, tmr-vote
const std::vector<std::string_view> &verify_scenarios();

/// Runs a scenario with its fixed seed. Unknown names throw ConfigError.
VerifyReport run_verify(std::string_view scenario);

} // namespace imcguard
