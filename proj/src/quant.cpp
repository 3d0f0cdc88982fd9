#include "imcguard/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace imcguard {

QuantizedMatrix::QuantizedMatrix(Matrix<std::int32_t> v, int b, double s)
    : values(std::move(v)), bits(b), scale(s) {
    if (bits < 1 || bits > 31)
        throw ConfigError("weight bit-width must be in [1, 31], got " + std::to_string(bits));
    if (values.empty())
        throw DimensionError("quantized matrix must have at least one row and one column");
    const acc_t lo = signed_min(bits), hi = signed_max(bits);
    for (auto x : values.data)
        if (x < lo || x > hi)
            throw ConfigError("weight " + std::to_string(x) + " outside " + std::to_string(bits) +
                              "-bit signed range");
}

IntVector::IntVector(std::vector<acc_t> v, int b) : values(std::move(v)), bits(b) {
    if (bits < 1 || bits > accumulator_bits)
        throw ConfigError("vector bit-width must be in [1, 64]");
    if (bits < accumulator_bits) {
        const acc_t lo = signed_min(bits), hi = signed_max(bits);
        for (auto x : values)
            if (x < lo || x > hi)
                throw ConfigError("value " + std::to_string(x) + " outside " +
                                  std::to_string(bits) + "-bit signed range");
    }
}

std::vector<std::int32_t> plane_weights_for(int bits) {
    std::vector<std::int32_t> w(static_cast<std::size_t>(bits));
    for (int j = 0; j < bits; ++j)
        w[static_cast<std::size_t>(j)] = std::int32_t{1} << (bits - 1 - j);
    w[0] = -w[0];
    return w;
}

QuantizedMatrix quantize(const Matrix<double> &real, int bits) {
    if (real.empty())
        throw DimensionError("cannot quantize an empty matrix");
    if (bits < 2 || bits > 8)
        throw ConfigError("quantization bit-width must be in [2, 8], got " + std::to_string(bits));

    double max_abs = 0.0;
    for (double x : real.data)
        max_abs = std::max(max_abs, std::abs(x));

    const auto qmax = static_cast<double>(signed_max(bits));
    const auto qmin = static_cast<double>(signed_min(bits));
    const double scale = max_abs == 0.0 ? 1.0 : max_abs / qmax;

    Matrix<std::int32_t> q(real.rows, real.cols);
    for (std::size_t i = 0; i < real.data.size(); ++i) {
        // std::round is half-away-from-zero
        double v = std::round(real.data[i] / scale);
        q.data[i] = static_cast<std::int32_t>(std::clamp(v, qmin, qmax));
    }
    return {std::move(q), bits, scale};
}

BitPlanes bit_slice(const QuantizedMatrix &w) {
    const int B = w.bits;
    BitPlanes out;
    out.plane_weights = plane_weights_for(B);
    out.planes.assign(static_cast<std::size_t>(B), BinaryMatrix(w.rows(), w.cols()));
    const std::uint32_t mask = (B == 32) ? ~0u : ((1u << B) - 1u);
    for (std::size_t i = 0; i < w.values.data.size(); ++i) {
        auto pattern = static_cast<std::uint32_t>(w.values.data[i]) & mask;
        for (int j = 0; j < B; ++j)
            out.planes[static_cast<std::size_t>(j)].data[i] =
                static_cast<std::uint8_t>((pattern >> (B - 1 - j)) & 1u);
    }
    return out;
}

Matrix<std::int32_t> combine_planes(const BitPlanes &bp) {
    if (bp.planes.empty() || bp.planes.size() != bp.plane_weights.size())
        throw DimensionError("plane count does not match plane weight count");
    const auto &first = bp.planes.front();
    Matrix<std::int32_t> out(first.rows, first.cols, 0);
    for (std::size_t j = 0; j < bp.planes.size(); ++j) {
        const auto &p = bp.planes[j];
        if (p.rows != first.rows || p.cols != first.cols)
            throw DimensionError("bit planes differ in shape");
        for (std::size_t i = 0; i < p.data.size(); ++i)
            out.data[i] += bp.plane_weights[j] * p.data[i];
    }
    return out;
}

namespace {

template <typename T> IntVector mvm(const IntVector &input, const Matrix<T> &w) {
    if (input.size() != w.rows)
        throw DimensionError("input length " + std::to_string(input.size()) +
                             " does not match matrix rows " + std::to_string(w.rows));
    std::vector<acc_t> out(w.cols, 0);
    for (std::size_t k = 0; k < w.rows; ++k) {
        const acc_t x = input.values[k];
        if (x == 0)
            continue;
        const T *row = w.data.data() + k * w.cols;
        for (std::size_t m = 0; m < w.cols; ++m)
            out[m] += x * static_cast<acc_t>(row[m]);
    }
    return IntVector(std::move(out));
}

} // namespace

IntVector golden_mvm(const IntVector &input, const QuantizedMatrix &w) { return mvm(input, w.values); }

IntVector plane_mvm(const IntVector &input, const BinaryMatrix &plane) { return mvm(input, plane); }

IntVector recombine(std::span<const IntVector> plane_outputs,
                    std::span<const std::int32_t> plane_weights) {
    if (plane_outputs.size() != plane_weights.size())
        throw DimensionError("plane output count does not match plane weight count");
    if (plane_outputs.empty())
        return {};
    const std::size_t len = plane_outputs.front().size();
    std::vector<acc_t> out(len, 0);
    for (std::size_t j = 0; j < plane_outputs.size(); ++j) {
        if (plane_outputs[j].size() != len)
            throw DimensionError("plane outputs differ in length");
        for (std::size_t m = 0; m < len; ++m)
            out[m] += static_cast<acc_t>(plane_weights[j]) * plane_outputs[j].values[m];
    }
    return IntVector(std::move(out));
}

} // namespace imcguard
