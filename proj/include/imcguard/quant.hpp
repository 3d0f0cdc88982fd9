#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "imcguard/error.hpp"

namespace imcguard {

/// Accumulator type for every MAC result in the simulator. Column outputs,
/// checksum outputs and digital partial sums are all held at 64 bits; the
/// hard contract is "at least 32-bit signed".
using acc_t = std::int64_t;

/// Dense row-major matrix.
template <typename T> struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<T> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != r * c)
            throw DimensionError("matrix data size does not match rows*cols");
    }

    T &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const noexcept { return rows == 0 || cols == 0; }
    bool operator==(const Matrix &) const = default;
};

using BinaryMatrix = Matrix<std::uint8_t>;

/// Signed integer range of a two's-complement word of `bits` bits.
constexpr acc_t signed_min(int bits) { return -(acc_t{1} << (bits - 1)); }
constexpr acc_t signed_max(int bits) { return (acc_t{1} << (bits - 1)) - 1; }

/// K x M matrix of B-bit signed weights.
struct QuantizedMatrix {
    Matrix<std::int32_t> values;
    int bits = 4;
    double scale = 1.0; // dequantization factor, metadata only

    QuantizedMatrix() = default;
    QuantizedMatrix(Matrix<std::int32_t> v, int b, double s = 1.0);

    std::size_t rows() const noexcept { return values.rows; }
    std::size_t cols() const noexcept { return values.cols; }
    bool operator==(const QuantizedMatrix &) const = default;
};

/// Two's-complement bit slices of a QuantizedMatrix, MSB plane first.
/// plane_weights = [-2^(B-1), 2^(B-2), ..., 2, 1].
struct BitPlanes {
    std::vector<BinaryMatrix> planes;
    std::vector<std::int32_t> plane_weights;
};

/// Signed integer vector. For activations `bits` is the activation width;
/// accumulator outputs use `accumulator_bits`.
struct IntVector {
    static constexpr int accumulator_bits = 64;

    std::vector<acc_t> values;
    int bits = accumulator_bits;

    IntVector() = default;
    IntVector(std::vector<acc_t> v, int b = accumulator_bits);

    std::size_t size() const noexcept { return values.size(); }
    acc_t operator[](std::size_t i) const { return values[i]; }
    bool operator==(const IntVector &) const = default;
};

std::vector<std::int32_t> plane_weights_for(int bits);

/// Symmetric per-tensor quantization with round-half-away-from-zero.
/// scale = max|x| / (2^(bits-1) - 1), or 1 when the input is all zero.
QuantizedMatrix quantize(const Matrix<double> &real, int bits);

BitPlanes bit_slice(const QuantizedMatrix &w);

/// Inverse of bit_slice: sum_j plane_weights[j] * planes[j].
Matrix<std::int32_t> combine_planes(const BitPlanes &planes);

/// out[m] = sum_k input[k] * w[k][m]
IntVector golden_mvm(const IntVector &input, const QuantizedMatrix &w);

/// Same product against one binary plane.
IntVector plane_mvm(const IntVector &input, const BinaryMatrix &plane);

/// out[m] = sum_j plane_weights[j] * plane_outputs[j][m]
IntVector recombine(std::span<const IntVector> plane_outputs,
                    std::span<const std::int32_t> plane_weights);

} // namespace imcguard
