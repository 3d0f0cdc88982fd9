#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "imcguard/fault_set.hpp"
#include "imcguard/quant.hpp"

namespace imcguard {

/// How a layer tile is spread across the PEs of one batch.
enum class PartitionScheme : std::uint8_t {
    column_split, // each PE holds a distinct slice of weight columns over all tile rows
    row_split,    // each PE holds a slice of tile rows, zeros elsewhere
};

/// Geometry of the simulated accelerator.
///
/// Physical column layout inside a PE is weight-major: physical column
/// `w * weight_bits + j` holds bit plane `j` (MSB first) of weight column `w`.
/// A physical column is protected when its plane rank is below
/// `protected_bits`.
struct FabricConfig {
    std::size_t rows = 1;          // crossbar rows per PE
    std::size_t weight_cols = 1;   // weights per PE row
    int weight_bits = 4;
    std::size_t pes_per_batch = 1;
    std::size_t num_batches = 1;
    int protected_bits = 0;
    PartitionScheme partition = PartitionScheme::column_split;

    std::size_t physical_cols() const noexcept { return weight_cols * static_cast<std::size_t>(weight_bits); }
    int plane_of(std::size_t phys_col) const noexcept {
        return static_cast<int>(phys_col % static_cast<std::size_t>(weight_bits));
    }
    std::size_t weight_col_of(std::size_t phys_col) const noexcept {
        return phys_col / static_cast<std::size_t>(weight_bits);
    }
    bool is_protected(std::size_t phys_col) const noexcept { return plane_of(phys_col) < protected_bits; }
    std::vector<std::size_t> protected_columns() const;

    /// Throws ConfigError when a field is out of range.
    void validate() const;

    bool operator==(const FabricConfig &) const = default;
};

struct PE {
    BinaryMatrix cells;                                 // R x C_phys
    std::vector<std::int32_t> crossbar_checksum_weights; // length R
};

/// n PE crossbars sharing one input vector, with the crossbar checksum
/// columns, the checksum PE and its parity column derived at build time.
struct Batch {
    FabricConfig cfg;
    std::vector<PE> pes;
    Matrix<std::int32_t> pe_checksum_weights; // R x |protected|
    std::vector<std::int32_t> parity_weights; // length R
    std::vector<std::size_t> protected_cols;
    std::vector<int> protected_pos;           // phys col -> index into protected_cols, or -1

    std::size_t rows() const noexcept { return cfg.rows; }
    std::size_t num_pes() const noexcept { return pes.size(); }
    std::size_t physical_cols() const noexcept { return cfg.physical_cols(); }
    bool has_checksums() const noexcept { return !protected_cols.empty(); }
};

/// One evaluation's column outputs. col_out is b-major: col(b, n).
/// acc_by_col and pech_out are indexed by position in protected_cols.
struct RawOutputs {
    std::size_t num_pes = 0;
    std::size_t num_cols = 0;
    std::vector<acc_t> col_out;
    std::vector<acc_t> crossch_out;
    std::vector<acc_t> pech_out;
    acc_t parity_out = 0;
    std::vector<acc_t> acc_by_col;
    std::vector<acc_t> acc_by_pe;
    std::vector<std::size_t> protected_cols;

    acc_t &col(std::size_t b, std::size_t n) { return col_out[b * num_pes + n]; }
    acc_t col(std::size_t b, std::size_t n) const { return col_out[b * num_pes + n]; }

    /// Recompute both adder trees from col_out.
    void recompute_accumulators();

    bool operator==(const RawOutputs &) const = default;
};

/// Build a batch from per-PE cell grids (each R x C_phys, binary).
Batch build_batch(const std::vector<BinaryMatrix> &cell_grids, const FabricConfig &cfg);

/// sum_k input[k] * cells[k][b]
acc_t evaluate_column(const PE &pe, std::size_t b, const IntVector &input);

/// Full evaluation of device, checksum and parity columns under additive faults.
RawOutputs batch_forward(const Batch &batch, const IntVector &input, const FaultSet &faults);

/// Re-evaluate only the device columns of `raw` (faults on checksum sites are ignored).
void evaluate_device_columns(const Batch &batch, const IntVector &input, const FaultSet &faults,
                             RawOutputs &raw);

/// Re-evaluate only crossbar checksum, PE checksum and parity columns.
void evaluate_checksum_columns(const Batch &batch, const IntVector &input, const FaultSet &faults,
                               RawOutputs &raw);

} // namespace imcguard
