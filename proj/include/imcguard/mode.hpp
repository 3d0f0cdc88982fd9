#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace imcguard {

enum class Mode : std::uint8_t { unprotected, checksum, tmr };

constexpr std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::unprotected:
        return "unprotected";
    case Mode::checksum:
        return "checksum";
    case Mode::tmr:
        return "tmr";
    }
    return "?";
}

constexpr std::optional<Mode> mode_from_string(std::string_view s) {
    if (s == "unprotected")
        return Mode::unprotected;
    if (s == "checksum")
        return Mode::checksum;
    if (s == "tmr")
        return Mode::tmr;
    return std::nullopt;
}

} // namespace imcguard
