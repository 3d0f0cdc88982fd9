#include <doctest.h>

#include "imcguard/quant.hpp"
#include "support.hpp"

using namespace imcguard;
using testing::Gen;

namespace {

Matrix<double> real(std::size_t r, std::size_t c, std::vector<double> v) { return Matrix<double>(r, c, std::move(v)); }

QuantizedMatrix qm(std::size_t r, std::size_t c, std::vector<std::int32_t> v, int bits) {
    return QuantizedMatrix(Matrix<std::int32_t>(r, c, std::move(v)), bits);
}

} // namespace

TEST_SUITE("quantize") {
    TEST_CASE("all-zero input keeps scale 1") {
        const auto q = quantize(real(1, 1, {0.0}), 4);
        CHECK(q.values.data == std::vector<std::int32_t>{0});
        CHECK(q.scale == 1.0);
    }

    TEST_CASE("max-abs scaling rounds half away from zero") {
        // scale = 8/7: 7 -> 6.125 -> 6, -8 -> -7.
        const auto q = quantize(real(1, 2, {7.0, -8.0}), 4);
        CHECK(q.scale == doctest::Approx(8.0 / 7.0));
        CHECK(q.values.data == std::vector<std::int32_t>{6, -7});

        const auto ties = quantize(real(1, 4, {7.0, 2.5, -2.5, 0.5}), 4);
        CHECK(ties.scale == 1.0);
        CHECK(ties.values.data == std::vector<std::int32_t>{7, 3, -3, 1});
    }

    TEST_CASE("eight-bit example") {
        const auto q = quantize(real(1, 3, {1.0, 2.0, 4.0}), 8);
        CHECK(q.scale == doctest::Approx(4.0 / 127.0));
        CHECK(q.values.data == std::vector<std::int32_t>{32, 64, 127});
    }

    TEST_CASE("matches per-element brute force") {
        Gen g(11);
        for (int t = 0; t < 200; ++t) {
            const int bits = static_cast<int>(g.range(2, 8));
            const std::size_t r = g.size(1, 5), c = g.size(1, 5);
            std::vector<double> v(r * c);
            for (auto &x : v)
                x = std::uniform_real_distribution<double>(-3, 3)(g.engine());
            const auto q = quantize(real(r, c, v), bits);
            double mx = 0;
            for (double x : v)
                mx = std::max(mx, std::abs(x));
            const double qmax = static_cast<double>(signed_max(bits));
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double y = v[i] * qmax / mx;
                const double expect = std::clamp(std::round(y), -qmax - 1, qmax);
                CHECK(q.values.data[i] == static_cast<std::int32_t>(expect));
            }
        }
    }

    TEST_CASE("rejects bad widths and empty input") {
        CHECK_THROWS_AS(quantize(real(1, 1, {1.0}), 1), ConfigError);
        CHECK_THROWS_AS(quantize(real(1, 1, {1.0}), 9), ConfigError);
        CHECK_THROWS_AS(quantize(Matrix<double>(), 4), DimensionError);
    }

    TEST_CASE("quantized matrix enforces the signed range") {
        CHECK_THROWS_AS(qm(1, 1, {8}, 4), ConfigError);
        CHECK_THROWS_AS(qm(1, 1, {-9}, 4), ConfigError);
        CHECK_NOTHROW(qm(1, 2, {7, -8}, 4));
    }
}

TEST_SUITE("bit slicing") {
    TEST_CASE("plane weights are two's complement, MSB first") {
        CHECK(plane_weights_for(4) == std::vector<std::int32_t>{-8, 4, 2, 1});
        CHECK(plane_weights_for(1) == std::vector<std::int32_t>{-1});
    }

    TEST_CASE("hand examples") {
        const auto zero = bit_slice(qm(1, 1, {0}, 4));
        REQUIRE(zero.planes.size() == 4);
        for (const auto &p : zero.planes)
            CHECK(p.data == std::vector<std::uint8_t>{0});

        const auto neg = bit_slice(qm(1, 1, {-8}, 4));
        CHECK(neg.planes[0].data == std::vector<std::uint8_t>{1});
        for (int j = 1; j < 4; ++j)
            CHECK(neg.planes[j].data == std::vector<std::uint8_t>{0});

        const auto five = bit_slice(qm(1, 1, {5}, 4));
        std::vector<std::uint8_t> bits;
        for (const auto &p : five.planes)
            bits.push_back(p.data[0]);
        CHECK(bits == std::vector<std::uint8_t>{0, 1, 0, 1});
    }

    TEST_CASE("slicing then combining is the identity (property)") {
        Gen g(12);
        for (int t = 0; t < 1000; ++t) {
            const int bits = static_cast<int>(g.range(1, 8));
            const auto w = g.weights(g.size(1, 6), g.size(1, 6), bits);
            const auto planes = bit_slice(w);
            for (const auto &p : planes.planes)
                for (auto c : p.data)
                    REQUIRE(c <= 1);
            REQUIRE(combine_planes(planes) == w.values);
        }
    }
}

TEST_SUITE("golden mvm") {
    TEST_CASE("hand examples") {
        CHECK(golden_mvm(IntVector({2, 3}, 8), qm(2, 2, {1, 0, 1, 1}, 4)).values == std::vector<acc_t>{5, 3});
        CHECK(golden_mvm(IntVector({0, 0}, 8), qm(2, 2, {1, -3, 7, 1}, 4)).values == std::vector<acc_t>{0, 0});
        CHECK(golden_mvm(IntVector({1, 1}, 8), qm(2, 2, {-8, 7, -8, 7}, 4)).values == std::vector<acc_t>{-16, 14});
    }

    TEST_CASE("dimension mismatch throws") {
        CHECK_THROWS_AS(golden_mvm(IntVector({1, 2, 3}, 8), qm(2, 1, {1, 1}, 4)), DimensionError);
    }

    TEST_CASE("agrees with naive loops and is linear (property)") {
        Gen g(13);
        for (int t = 0; t < 1000; ++t) {
            const int bits = static_cast<int>(g.range(2, 8));
            const std::size_t k = g.size(1, 16), m = g.size(1, 8);
            const auto w = g.weights(k, m, bits);
            const auto a = g.input(k, 8), b = g.input(k, 8);
            const auto ya = golden_mvm(a, w);
            REQUIRE(ya.values == testing::naive_mvm(a.values, w.values));
            std::vector<acc_t> sum(k);
            for (std::size_t i = 0; i < k; ++i)
                sum[i] = a[i] + b[i];
            const auto ysum = golden_mvm(IntVector(sum), w);
            const auto yb = golden_mvm(b, w);
            for (std::size_t i = 0; i < m; ++i)
                REQUIRE(ysum[i] == ya[i] + yb[i]);
        }
    }
}

TEST_SUITE("recombine") {
    TEST_CASE("hand examples") {
        const BinaryMatrix ident(1, 1, std::vector<std::uint8_t>{1});
        const IntVector x({9}, 8);
        const IntVector single[] = {plane_mvm(x, ident)};
        const std::int32_t one[] = {1};
        CHECK(recombine(single, one).values == std::vector<acc_t>{9});

        const auto five = bit_slice(qm(1, 1, {5}, 4));
        std::vector<IntVector> outs;
        for (const auto &p : five.planes)
            outs.push_back(plane_mvm(IntVector({3}, 8), p));
        CHECK(recombine(outs, five.plane_weights).values == std::vector<acc_t>{15});

        const auto w = qm(2, 2, {-8, 7, -8, 7}, 4);
        const auto sl = bit_slice(w);
        outs.clear();
        for (const auto &p : sl.planes)
            outs.push_back(plane_mvm(IntVector({1, 1}, 8), p));
        CHECK(recombine(outs, sl.plane_weights).values == std::vector<acc_t>{-16, 14});
    }

    TEST_CASE("per-plane products recombine to golden (property)") {
        Gen g(14);
        for (int t = 0; t < 1000; ++t) {
            const int bits = static_cast<int>(g.range(1, 8));
            const std::size_t k = g.size(1, 12), m = g.size(1, 6);
            const auto w = g.weights(k, m, bits);
            const auto x = g.input(k, 8);
            const auto sl = bit_slice(w);
            std::vector<IntVector> outs;
            for (const auto &p : sl.planes)
                outs.push_back(plane_mvm(x, p));
            REQUIRE(recombine(outs, sl.plane_weights) == golden_mvm(x, w));
        }
    }

    TEST_CASE("mismatched plane counts throw") {
        const std::vector<IntVector> outs = {IntVector({1}), IntVector({2})};
        const std::int32_t pw[] = {1};
        CHECK_THROWS_AS(recombine(outs, pw), DimensionError);
    }
}
