#include <doctest.h>

#include "imcguard/checksum.hpp"
#include "imcguard/fabric.hpp"
#include "support.hpp"

using namespace imcguard;
using testing::Gen;

TEST_SUITE("fabric config") {
    TEST_CASE("weight-major physical layout") {
        FabricConfig f;
        f.weight_cols = 3;
        f.weight_bits = 4;
        f.protected_bits = 2;
        CHECK(f.physical_cols() == 12);
        CHECK(f.plane_of(5) == 1);
        CHECK(f.weight_col_of(5) == 1);
        CHECK(f.protected_columns() == std::vector<std::size_t>{0, 1, 4, 5, 8, 9});
        f.protected_bits = 0;
        CHECK(f.protected_columns().empty());
    }

    TEST_CASE("validation") {
        FabricConfig f;
        f.rows = 0;
        CHECK_THROWS_AS(f.validate(), ConfigError);
        f.rows = 2;
        f.protected_bits = 5;
        CHECK_THROWS_AS(f.validate(), ConfigError);
        f.protected_bits = 4;
        CHECK_NOTHROW(f.validate());
    }
}

TEST_SUITE("batch build") {
    TEST_CASE("tiny fabric checksum weights") {
        const Batch b = testing::tiny_batch();
        CHECK(b.pes[0].crossbar_checksum_weights == std::vector<std::int32_t>{1, 2});
        CHECK(b.pes[1].crossbar_checksum_weights == std::vector<std::int32_t>{1, 1});
        CHECK(b.pe_checksum_weights.data == std::vector<std::int32_t>{1, 1, 2, 1});
        CHECK(b.parity_weights == std::vector<std::int32_t>{2, 3});
    }

    TEST_CASE("all-zero cells give zero checksums") {
        FabricConfig f = testing::tiny_fabric();
        const Batch b = build_batch({BinaryMatrix(2, 2), BinaryMatrix(2, 2)}, f);
        for (const auto &pe : b.pes)
            CHECK(pe.crossbar_checksum_weights == std::vector<std::int32_t>{0, 0});
        CHECK(b.pe_checksum_weights.data == std::vector<std::int32_t>{0, 0, 0, 0});
        CHECK(b.parity_weights == std::vector<std::int32_t>{0, 0});
    }

    TEST_CASE("rejects bad grids") {
        FabricConfig f = testing::tiny_fabric();
        CHECK_THROWS_AS(build_batch({BinaryMatrix(2, 2)}, f), ConfigError);
        CHECK_THROWS_AS(build_batch({BinaryMatrix(2, 3), BinaryMatrix(2, 2)}, f), ConfigError);
        CHECK_THROWS_AS(build_batch({BinaryMatrix(2, 2, std::uint8_t{2}), BinaryMatrix(2, 2)}, f), ConfigError);
    }

    TEST_CASE("no checksum structures without protected bits") {
        FabricConfig f = testing::tiny_fabric();
        f.protected_bits = 0;
        const Batch b = build_batch({BinaryMatrix(2, 2), BinaryMatrix(2, 2)}, f);
        CHECK_FALSE(b.has_checksums());
        const RawOutputs raw = batch_forward(b, testing::tiny_input(), {});
        CHECK(raw.crossch_out.empty());
        CHECK(raw.pech_out.empty());
    }

    TEST_CASE("checksum weights match their definitions (property)") {
        Gen g(21);
        for (int t = 0; t < 1000; ++t) {
            const FabricConfig f = g.fabric();
            const Batch b = g.batch(f);
            const auto prot = f.protected_columns();
            for (std::size_t k = 0; k < f.rows; ++k) {
                std::int32_t par = 0;
                for (std::size_t p = 0; p < prot.size(); ++p) {
                    std::int32_t s = 0;
                    for (const auto &pe : b.pes)
                        s += pe.cells(k, prot[p]);
                    REQUIRE(b.pe_checksum_weights(k, p) == s);
                    par += s;
                }
                REQUIRE(b.parity_weights[k] == par);
                for (const auto &pe : b.pes) {
                    std::int32_t s = 0;
                    for (auto c : prot)
                        s += pe.cells(k, c);
                    REQUIRE(pe.crossbar_checksum_weights[k] == s);
                }
            }
        }
    }
}

TEST_SUITE("evaluation") {
    TEST_CASE("tiny fabric column outputs") {
        const Batch b = testing::tiny_batch();
        const IntVector x = testing::tiny_input();
        CHECK(evaluate_column(b.pes[0], 0, x) == 5);
        CHECK(evaluate_column(b.pes[1], 1, x) == 2);
        CHECK(evaluate_column(b.pes[0], 1, IntVector({0, 0}, 8)) == 0);

        const RawOutputs raw = batch_forward(b, x, {});
        CHECK(raw.col_out == std::vector<acc_t>{5, 3, 3, 2});
        CHECK(raw.crossch_out == std::vector<acc_t>{8, 5});
        CHECK(raw.pech_out == std::vector<acc_t>{8, 5});
        CHECK(raw.parity_out == 13);
    }

    TEST_CASE("tiny fabric with one fault") {
        const Batch b = testing::tiny_batch();
        const RawOutputs raw = batch_forward(b, testing::tiny_input(), FaultSet{{FaultTarget::device(0, 0), 4}});
        CHECK(raw.col(0, 0) == 9);
        CHECK(raw.acc_by_col[0] == 12);
        CHECK(raw.acc_by_pe[0] == 12);
    }

    TEST_CASE("zero input exposes the fault magnitudes") {
        const Batch b = testing::tiny_batch();
        const FaultSet fs{{FaultTarget::device(1, 0), -6}, {FaultTarget::crossch(0), 2}, {FaultTarget::parity_column(), 9}};
        const RawOutputs raw = batch_forward(b, IntVector({0, 0}, 8), fs);
        CHECK(raw.col_out == std::vector<acc_t>{0, -6, 0, 0});
        CHECK(raw.crossch_out == std::vector<acc_t>{2, 0});
        CHECK(raw.pech_out == std::vector<acc_t>{0, 0});
        CHECK(raw.parity_out == 9);
    }

    TEST_CASE("faults on missing sites throw") {
        const Batch b = testing::tiny_batch();
        CHECK_THROWS_AS(batch_forward(b, testing::tiny_input(), FaultSet{{FaultTarget::device(2, 0), 1}}),
                        DimensionError);
        CHECK_THROWS_AS(batch_forward(b, testing::tiny_input(), FaultSet{{FaultTarget::pech(5), 1}}),
                        DimensionError);
        CHECK_THROWS_AS(batch_forward(b, IntVector({1, 2, 3}, 8), {}), DimensionError);
    }

    TEST_CASE("fault-free outputs equal the naive oracle and satisfy both checksum identities (property)") {
        Gen g(22);
        for (int t = 0; t < 1000; ++t) {
            const FabricConfig f = g.fabric();
            const Batch b = g.batch(f);
            const IntVector x = g.input(f.rows, 8, g.coin());
            const RawOutputs raw = batch_forward(b, x, {});
            const auto prot = f.protected_columns();
            for (std::size_t n = 0; n < f.pes_per_batch; ++n)
                for (std::size_t c = 0; c < f.physical_cols(); ++c)
                    REQUIRE(raw.col(c, n) == testing::naive_column(b.pes[n].cells, c, x.values));
            acc_t pech_total = 0;
            for (std::size_t p = 0; p < prot.size(); ++p) {
                REQUIRE(raw.pech_out[p] == raw.acc_by_col[p]);
                pech_total += raw.pech_out[p];
            }
            for (std::size_t n = 0; n < f.pes_per_batch; ++n)
                REQUIRE(raw.crossch_out[n] == raw.acc_by_pe[n]);
            REQUIRE(raw.parity_out == pech_total);
        }
    }

    TEST_CASE("recombined column outputs reproduce golden mvm of the summed PEs (property)") {
        // Column-split mapping: PE n holds weight columns of its own; here
        // every PE holds a random weight matrix and the oracle is per-PE.
        Gen g(23);
        for (int t = 0; t < 300; ++t) {
            FabricConfig f = g.fabric();
            std::vector<QuantizedMatrix> ws;
            std::vector<BinaryMatrix> grids;
            for (std::size_t n = 0; n < f.pes_per_batch; ++n) {
                ws.push_back(g.weights(f.rows, f.weight_cols, f.weight_bits));
                const BitPlanes sl = bit_slice(ws.back());
                BinaryMatrix grid(f.rows, f.physical_cols());
                for (std::size_t k = 0; k < f.rows; ++k)
                    for (std::size_t w = 0; w < f.weight_cols; ++w)
                        for (int j = 0; j < f.weight_bits; ++j)
                            grid(k, w * f.weight_bits + j) = sl.planes[j](k, w);
                grids.push_back(grid);
            }
            const Batch b = build_batch(grids, f);
            const IntVector x = g.input(f.rows, 8);
            const RawOutputs raw = batch_forward(b, x, {});
            const auto pw = plane_weights_for(f.weight_bits);
            for (std::size_t n = 0; n < f.pes_per_batch; ++n) {
                const auto expect = testing::naive_mvm(x.values, ws[n].values);
                for (std::size_t w = 0; w < f.weight_cols; ++w) {
                    acc_t got = 0;
                    for (int j = 0; j < f.weight_bits; ++j)
                        got += pw[j] * raw.col(w * f.weight_bits + j, n);
                    REQUIRE(got == expect[w]);
                }
            }
        }
    }

    TEST_CASE("unprotected columns stay out of the adder trees") {
        FabricConfig f;
        f.rows = 3;
        f.weight_cols = 1;
        f.weight_bits = 4;
        f.protected_bits = 1;
        f.pes_per_batch = 2;
        Gen g(24);
        const Batch b = g.batch(f);
        const IntVector x = g.input(3, 8);
        const RawOutputs clean = batch_forward(b, x, {});
        const RawOutputs hit = batch_forward(b, x, FaultSet{{FaultTarget::device(0, 3), 50}});
        CHECK(hit.acc_by_pe == clean.acc_by_pe);
        CHECK(hit.acc_by_col == clean.acc_by_col);
        CHECK(hit.col(3, 0) == clean.col(3, 0) + 50);
    }
}
