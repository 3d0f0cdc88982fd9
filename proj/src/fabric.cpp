#include "imcguard/fabric.hpp"

#include <algorithm>
#include <string>

#include "imcguard/checksum.hpp"

namespace imcguard {

FaultSet::FaultSet(std::initializer_list<Fault> faults) {
    for (const auto &f : faults)
        add(f.target, f.magnitude);
}

void FaultSet::add(FaultTarget target, acc_t magnitude) {
    if (magnitude == 0)
        throw ConfigError("fault magnitude must be nonzero");
    if (std::any_of(sites_.begin(), sites_.end(), [&](const Fault &f) { return f.target == target; }))
        throw ConfigError("duplicate fault target");
    sites_.push_back({target, magnitude});
}

std::vector<std::size_t> FabricConfig::protected_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < physical_cols(); ++b)
        if (is_protected(b))
            out.push_back(b);
    return out;
}

void FabricConfig::validate() const {
    if (rows < 1)
        throw ConfigError("fabric.rows must be >= 1");
    if (weight_cols < 1)
        throw ConfigError("fabric.weight_cols must be >= 1");
    if (weight_bits < 1 || weight_bits > 16)
        throw ConfigError("fabric.weight_bits must be in [1, 16]");
    if (pes_per_batch < 1)
        throw ConfigError("fabric.pes_per_batch must be >= 1");
    if (num_batches < 1)
        throw ConfigError("fabric.num_batches must be >= 1");
    if (protected_bits < 0 || protected_bits > weight_bits)
        throw ConfigError("fabric.protected_bits must be in [0, weight_bits]");
}

void RawOutputs::recompute_accumulators() {
    acc_by_col.assign(protected_cols.size(), 0);
    acc_by_pe.assign(num_pes, 0);
    for (std::size_t p = 0; p < protected_cols.size(); ++p) {
        const std::size_t b = protected_cols[p];
        for (std::size_t n = 0; n < num_pes; ++n) {
            const acc_t v = col(b, n);
            acc_by_col[p] += v;
            acc_by_pe[n] += v;
        }
    }
}

Batch build_batch(const std::vector<BinaryMatrix> &cell_grids, const FabricConfig &cfg) {
    cfg.validate();
    if (cell_grids.size() != cfg.pes_per_batch)
        throw ConfigError("batch needs " + std::to_string(cfg.pes_per_batch) + " cell grids, got " +
                          std::to_string(cell_grids.size()));
    for (const auto &g : cell_grids) {
        if (g.rows != cfg.rows || g.cols != cfg.physical_cols())
            throw ConfigError("cell grid is " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                              ", fabric expects " + std::to_string(cfg.rows) + "x" +
                              std::to_string(cfg.physical_cols()));
        if (std::any_of(g.data.begin(), g.data.end(), [](std::uint8_t c) { return c > 1; }))
            throw ConfigError("cell grid entries must be 0 or 1");
    }

    Batch batch;
    batch.cfg = cfg;
    batch.protected_cols = cfg.protected_columns();
    batch.protected_pos.assign(cfg.physical_cols(), -1);
    for (std::size_t p = 0; p < batch.protected_cols.size(); ++p)
        batch.protected_pos[batch.protected_cols[p]] = static_cast<int>(p);

    batch.pes.reserve(cell_grids.size());
    for (const auto &g : cell_grids) {
        PE pe;
        pe.cells = g;
        if (batch.has_checksums())
            pe.crossbar_checksum_weights = derive_crossbar_checksum(g, batch.protected_cols);
        batch.pes.push_back(std::move(pe));
    }
    if (batch.has_checksums()) {
        batch.pe_checksum_weights = derive_pe_checksum(cell_grids, batch.protected_cols);
        batch.parity_weights = derive_parity(batch.pe_checksum_weights);
    }
    return batch;
}

acc_t evaluate_column(const PE &pe, std::size_t b, const IntVector &input) {
    if (b >= pe.cells.cols)
        throw DimensionError("column index " + std::to_string(b) + " out of range");
    if (input.size() != pe.cells.rows)
        throw DimensionError("input length does not match crossbar rows");
    acc_t sum = 0;
    for (std::size_t k = 0; k < pe.cells.rows; ++k)
        sum += input.values[k] * static_cast<acc_t>(pe.cells(k, b));
    return sum;
}

namespace {

void check_input(const Batch &batch, const IntVector &input) {
    if (input.size() != batch.rows())
        throw DimensionError("input length " + std::to_string(input.size()) +
                             " does not match crossbar rows " + std::to_string(batch.rows()));
}

void check_target(const Batch &batch, const FaultTarget &t) {
    switch (t.kind) {
    case SiteKind::pe_column:
        if (t.pe >= batch.num_pes() || t.column >= batch.physical_cols())
            throw DimensionError("fault targets a device column outside the batch");
        break;
    case SiteKind::crossbar_checksum:
        if (!batch.has_checksums() || t.pe >= batch.num_pes())
            throw DimensionError("fault targets a crossbar checksum outside the batch");
        break;
    case SiteKind::pe_checksum:
        if (!batch.has_checksums() || t.column >= batch.physical_cols() || batch.protected_pos[t.column] < 0)
            throw DimensionError("fault targets an unprotected PE checksum column");
        break;
    case SiteKind::parity:
        if (!batch.has_checksums())
            throw DimensionError("fault targets parity on a batch without checksums");
        break;
    }
}

acc_t dot(const IntVector &input, std::span<const std::int32_t> w) {
    acc_t s = 0;
    for (std::size_t k = 0; k < w.size(); ++k)
        s += input.values[k] * static_cast<acc_t>(w[k]);
    return s;
}

} // namespace

void evaluate_device_columns(const Batch &batch, const IntVector &input, const FaultSet &faults,
                             RawOutputs &raw) {
    check_input(batch, input);
    const std::size_t N = batch.num_pes(), C = batch.physical_cols(), R = batch.rows();
    raw.num_pes = N;
    raw.num_cols = C;
    raw.protected_cols = batch.protected_cols;
    raw.col_out.assign(C * N, 0);
    for (std::size_t n = 0; n < N; ++n) {
        const auto &cells = batch.pes[n].cells;
        for (std::size_t k = 0; k < R; ++k) {
            const acc_t x = input.values[k];
            if (x == 0)
                continue;
            const std::uint8_t *row = cells.data.data() + k * C;
            for (std::size_t b = 0; b < C; ++b)
                if (row[b])
                    raw.col_out[b * N + n] += x;
        }
    }
    for (const auto &f : faults.sites()) {
        if (f.target.kind != SiteKind::pe_column)
            continue;
        check_target(batch, f.target);
        raw.col(f.target.column, f.target.pe) += f.magnitude;
    }
    raw.recompute_accumulators();
}

void evaluate_checksum_columns(const Batch &batch, const IntVector &input, const FaultSet &faults,
                               RawOutputs &raw) {
    check_input(batch, input);
    const std::size_t N = batch.num_pes(), P = batch.protected_cols.size(), R = batch.rows();
    raw.crossch_out.assign(batch.has_checksums() ? N : 0, 0);
    raw.pech_out.assign(P, 0);
    raw.parity_out = 0;
    if (!batch.has_checksums())
        return;

    for (std::size_t n = 0; n < N; ++n)
        raw.crossch_out[n] = dot(input, batch.pes[n].crossbar_checksum_weights);
    for (std::size_t k = 0; k < R; ++k) {
        const acc_t x = input.values[k];
        if (x == 0)
            continue;
        for (std::size_t p = 0; p < P; ++p)
            raw.pech_out[p] += x * static_cast<acc_t>(batch.pe_checksum_weights(k, p));
    }
    raw.parity_out = dot(input, batch.parity_weights);

    for (const auto &f : faults.sites()) {
        if (!f.target.is_checksum())
            continue;
        check_target(batch, f.target);
        switch (f.target.kind) {
        case SiteKind::crossbar_checksum:
            raw.crossch_out[f.target.pe] += f.magnitude;
            break;
        case SiteKind::pe_checksum:
            raw.pech_out[static_cast<std::size_t>(batch.protected_pos[f.target.column])] += f.magnitude;
            break;
        case SiteKind::parity:
            raw.parity_out += f.magnitude;
            break;
        case SiteKind::pe_column:
            break;
        }
    }
}

RawOutputs batch_forward(const Batch &batch, const IntVector &input, const FaultSet &faults) {
    RawOutputs raw;
    evaluate_device_columns(batch, input, faults, raw);
    evaluate_checksum_columns(batch, input, faults, raw);
    return raw;
}

} // namespace imcguard
