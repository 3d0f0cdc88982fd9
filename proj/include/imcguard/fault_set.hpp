#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "imcguard/quant.hpp"

namespace imcguard {

enum class SiteKind : std::uint8_t {
    pe_column,         // physical column b of PE n
    crossbar_checksum, // redundant column inside PE n
    pe_checksum,       // column b of the batch's checksum PE
    parity,            // parity column of the checksum PE
};

struct FaultTarget {
    SiteKind kind = SiteKind::pe_column;
    std::uint32_t pe = 0;
    std::uint32_t column = 0;

    static FaultTarget device(std::uint32_t n, std::uint32_t b) { return {SiteKind::pe_column, n, b}; }
    static FaultTarget crossch(std::uint32_t n) { return {SiteKind::crossbar_checksum, n, 0}; }
    static FaultTarget pech(std::uint32_t b) { return {SiteKind::pe_checksum, 0, b}; }
    static FaultTarget parity_column() { return {SiteKind::parity, 0, 0}; }

    bool is_checksum() const noexcept { return kind != SiteKind::pe_column; }

    auto operator<=>(const FaultTarget &) const = default;
};

struct Fault {
    FaultTarget target;
    acc_t magnitude = 0;

    bool operator==(const Fault &) const = default;
};

/// Additive column faults for one evaluation of one batch. Targets are
/// unique and magnitudes are nonzero.
class FaultSet {
  public:
    FaultSet() = default;
    FaultSet(std::initializer_list<Fault> faults);

    /// Throws ConfigError on a duplicate target or a zero magnitude.
    void add(FaultTarget target, acc_t magnitude);

    const std::vector<Fault> &sites() const noexcept { return sites_; }
    std::size_t size() const noexcept { return sites_.size(); }
    bool empty() const noexcept { return sites_.empty(); }

    bool operator==(const FaultSet &) const = default;

  private:
    std::vector<Fault> sites_;
};

} // namespace imcguard
