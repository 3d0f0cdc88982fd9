#pragma once

// Generators and brute-force oracles shared by the unit tests. The random
// source here is std::mt19937_64 with std distributions, deliberately separate
// from the simulator's own streams.

#include <cstdint>
#include <random>
#include <vector>

#include "imcguard/fabric.hpp"
#include "imcguard/quant.hpp"

namespace testing {

using imcguard::acc_t;

class Gen {
  public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
    }
    std::size_t size(std::size_t lo, std::size_t hi) {
        return static_cast<std::size_t>(range(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    }
    bool coin() { return range(0, 1) == 1; }
    acc_t nonzero(acc_t bound) {
        const acc_t m = range(1, bound);
        return coin() ? m : -m;
    }

    imcguard::QuantizedMatrix weights(std::size_t k, std::size_t m, int bits) {
        imcguard::Matrix<std::int32_t> v(k, m);
        for (auto &x : v.data)
            x = static_cast<std::int32_t>(range(imcguard::signed_min(bits), imcguard::signed_max(bits)));
        return imcguard::QuantizedMatrix(std::move(v), bits);
    }
    imcguard::IntVector input(std::size_t len, int bits = 8, bool non_negative = false) {
        std::vector<acc_t> v(len);
        for (auto &x : v)
            x = range(non_negative ? 0 : imcguard::signed_min(bits), imcguard::signed_max(bits));
        return imcguard::IntVector(std::move(v), bits);
    }
    imcguard::BinaryMatrix cells(std::size_t r, std::size_t c) {
        imcguard::BinaryMatrix m(r, c);
        for (auto &x : m.data)
            x = static_cast<std::uint8_t>(range(0, 1));
        return m;
    }
    imcguard::FabricConfig fabric() {
        imcguard::FabricConfig f;
        f.rows = size(1, 12);
        f.weight_cols = size(1, 4);
        f.weight_bits = static_cast<int>(range(2, 8));
        f.protected_bits = static_cast<int>(range(1, f.weight_bits));
        f.pes_per_batch = size(1, 6);
        return f;
    }
    imcguard::Batch batch(const imcguard::FabricConfig &f) {
        std::vector<imcguard::BinaryMatrix> grids;
        for (std::size_t n = 0; n < f.pes_per_batch; ++n)
            grids.push_back(cells(f.rows, f.physical_cols()));
        return imcguard::build_batch(grids, f);
    }

    std::mt19937_64 &engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

/// out[m] = sum_k in[k] * w[k][m], straight loops.
inline std::vector<acc_t> naive_mvm(const std::vector<acc_t> &in, const imcguard::Matrix<std::int32_t> &w) {
    std::vector<acc_t> out(w.cols, 0);
    for (std::size_t k = 0; k < w.rows; ++k)
        for (std::size_t m = 0; m < w.cols; ++m)
            out[m] += in[k] * w(k, m);
    return out;
}

/// Column b of a cell grid against the input.
inline acc_t naive_column(const imcguard::BinaryMatrix &cells, std::size_t b, const std::vector<acc_t> &in) {
    acc_t s = 0;
    for (std::size_t k = 0; k < cells.rows; ++k)
        s += cells(k, b) ? in[k] : 0;
    return s;
}

/// Two PEs of 2x2 cells, one-bit weights, both columns protected.
inline imcguard::FabricConfig tiny_fabric() {
    imcguard::FabricConfig f;
    f.rows = 2;
    f.weight_cols = 2;
    f.weight_bits = 1;
    f.protected_bits = 1;
    f.pes_per_batch = 2;
    return f;
}

inline imcguard::Batch tiny_batch() {
    imcguard::BinaryMatrix pe1(2, 2, std::vector<std::uint8_t>{1, 0, 1, 1});
    imcguard::BinaryMatrix pe2(2, 2, std::vector<std::uint8_t>{0, 1, 1, 0});
    return imcguard::build_batch({pe1, pe2}, tiny_fabric());
}

inline imcguard::IntVector tiny_input() { return imcguard::IntVector({2, 3}, 8); }

} // namespace testing
