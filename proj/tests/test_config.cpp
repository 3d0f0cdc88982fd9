#include <doctest.h>

#include <string>

#include "imcguard/config.hpp"
#include "support.hpp"

using namespace imcguard;
using testing::Gen;

namespace {

std::string error_of(const std::string &text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError &e) {
        return e.what();
    }
    return {};
}

CampaignConfig random_config(Gen &g) {
    CampaignConfig c;
    c.fabric = g.fabric();
    c.fabric.num_batches = g.size(1, 4);
    c.fabric.partition = g.coin() ? PartitionScheme::column_split : PartitionScheme::row_split;
    switch (g.range(0, 2)) {
    case 0: {
        const acc_t lo = g.range(1, 100);
        c.fault.magnitude = UniformMagnitude{lo, lo + g.range(0, 1000)};
        break;
    }
    case 1: {
        DiscreteMagnitude d;
        const std::size_t k = g.size(1, 4);
        for (std::size_t i = 0; i < k; ++i) {
            d.values.push_back(g.nonzero(5000));
            d.probabilities.push_back(static_cast<double>(g.range(1, 1000)) / 997.0);
        }
        c.fault.magnitude = d;
        break;
    }
    default:
        c.fault.magnitude = GaussianMagnitude{0.5 + static_cast<double>(g.range(0, 10000)) / 7.0};
    }
    c.fault.p_column = static_cast<double>(g.range(0, 1000000)) / 1000000.0 / 3.0;
    c.fault.include_checksum_columns = g.coin();
    if (g.coin())
        c.fault.preset_name = g.coin() ? "fefet" : "custom_label";
    c.policy.max_recompute_cycles = static_cast<std::uint32_t>(g.range(1, 20));
    c.policy.max_consecutive_checksum_stalls = static_cast<std::uint32_t>(g.range(1, 20));
    c.tmr.scope = g.coin() ? TmrScope::all_columns : TmrScope::protected_only;
    const Mode all[] = {Mode::unprotected, Mode::checksum, Mode::tmr};
    for (Mode m : all)
        if (g.coin())
            c.modes.push_back(m);
    if (c.modes.empty())
        c.modes.push_back(Mode::checksum);
    for (std::size_t i = 0, k = g.size(1, 4); i < k; ++i)
        c.sweep_pes.push_back(g.size(1, 32));
    for (std::size_t i = 0, k = g.size(1, 3); i < k; ++i)
        c.sweep_bits.push_back(static_cast<int>(g.range(1, c.fabric.weight_bits)));
    c.samples = g.size(0, 5000);
    c.trials = g.size(1, 100000);
    c.seed = static_cast<std::uint64_t>(g.engine()());
    if (g.coin()) {
        c.model_path = "models/net.imcg";
        c.dataset_path = "data/test.imcg";
    }
    if (g.coin())
        c.output_dir = "out/run_" + std::to_string(g.range(0, 99));
    return c;
}

} // namespace

TEST_CASE("minimal config takes defaults") {
    const CampaignConfig c = parse_config("[campaign]\nmodes = checksum\n");
    CHECK(c.modes == std::vector<Mode>{Mode::checksum});
    CHECK(c.sweep_pes == std::vector<std::size_t>{c.fabric.pes_per_batch});
    CHECK(c.sweep_bits == std::vector<int>{c.fabric.protected_bits});
    CHECK(c.fabric.partition == PartitionScheme::column_split);
    CHECK_FALSE(c.has_model());
}

TEST_CASE("comments, whitespace and lists") {
    const CampaignConfig c = parse_config("# header\n"
                                          "[fabric]\n"
                                          "  rows = 16   # trailing\n"
                                          "weight_bits=4\n"
                                          "protected_bits = 2\n"
                                          "[campaign]\n"
                                          "modes = unprotected, checksum ,tmr\n"
                                          "sweep_pes_per_batch = 2,4, 8\n"
                                          "sweep_protected_bits = 1, 4\n");
    CHECK(c.fabric.rows == 16);
    CHECK(c.modes.size() == 3);
    CHECK(c.sweep_pes == std::vector<std::size_t>{2, 4, 8});
    CHECK(c.sweep_bits == std::vector<int>{1, 4});
}

TEST_CASE("diagnostics name the line and key") {
    const std::string bad_p = error_of("[campaign]\nmodes = checksum\n[fault]\np_column = 1.5\n");
    CHECK(bad_p.find("line 4") != std::string::npos);
    CHECK(bad_p.find("fault.p_column") != std::string::npos);
    CHECK(bad_p.find("out of range") != std::string::npos);

    const std::string unknown = error_of("[fabric]\nrowz = 3\n");
    CHECK(unknown.find("line 2") != std::string::npos);
    CHECK(unknown.find("fabric.rowz") != std::string::npos);
    CHECK(unknown.find("unknown key") != std::string::npos);

    CHECK(error_of("[fabrik]\n").find("unknown section") != std::string::npos);
    CHECK(error_of("[fabric]\nrows = 2\nrows = 3\n").find("duplicate key") != std::string::npos);
    CHECK(error_of("[fabric]\nrows =\n").find("missing value") != std::string::npos);
    CHECK(error_of("[fabric]\nrows = two\n").find("expected an integer") != std::string::npos);
    CHECK(error_of("[fabric]\nrows = 2\n").find("campaign.modes") != std::string::npos);
    CHECK(error_of("[campaign]\nmodes = checksum, checksum\n").find("duplicate mode") != std::string::npos);
    CHECK(error_of("[campaign]\nmodes = fast\n").find("unknown mode") != std::string::npos);
    CHECK(error_of("[fault]\nsigma = 3\n[campaign]\nmodes = tmr\n").find("gaussian") != std::string::npos);
    CHECK(error_of("[fault]\npreset = sram\n[campaign]\nmodes = tmr\n").find("unknown preset") != std::string::npos);

    const std::string sweep = error_of("[fabric]\nweight_bits = 4\n[campaign]\nmodes = checksum\nsweep_protected_bits = 5\n");
    CHECK(sweep.find("line 5") != std::string::npos);

    const std::string pair = error_of("[campaign]\nmodes = checksum\nmodel = m.imcg\n");
    CHECK(pair.find("campaign.model") != std::string::npos);
}

TEST_CASE("explicit fault keys override the preset regardless of order") {
    const CampaignConfig a = parse_config("[fault]\np_column = 0.25\npreset = fefet\n[campaign]\nmodes = checksum\n");
    FaultModelConfig expect = fefet_preset();
    expect.p_column = 0.25;
    CHECK(a.fault == expect);

    const CampaignConfig b = parse_config("[fault]\nmagnitude_hi = 5000\npreset = fefet\n[campaign]\nmodes = checksum\n");
    const auto &u = std::get<UniformMagnitude>(b.fault.magnitude);
    CHECK(u.lo == std::get<UniformMagnitude>(fefet_preset().magnitude).lo);
    CHECK(u.hi == 5000);

    const CampaignConfig c = parse_config("[fault]\npreset = rram\ndistribution = discrete\nvalues = 3, -3\n"
                                          "probabilities = 0.5, 0.5\n[campaign]\nmodes = tmr\n");
    CHECK(std::holds_alternative<DiscreteMagnitude>(c.fault.magnitude));
    CHECK(c.fault.p_column == rram_preset().p_column);
}

TEST_CASE("serialize then parse is the identity (property)") {
    Gen g(81);
    for (int t = 0; t < 1000; ++t) {
        const CampaignConfig c = random_config(g);
        REQUIRE_NOTHROW(c.validate());
        const std::string text = serialize_config(c);
        const CampaignConfig back = parse_config(text);
        REQUIRE(back == c);
        REQUIRE(serialize_config(back) == text);
    }
}

TEST_CASE("helpers") {
    CHECK(describe(UniformMagnitude{192, 320}) == "uniform:192:320");
    CHECK(describe(GaussianMagnitude{96}) == "gaussian:96");
    CHECK(describe(DiscreteMagnitude{{5, -5}, {0.5, 0.5}}) == "discrete:5@0.5;-5@0.5");
    CHECK(to_string(PartitionScheme::row_split) == "row_split");
    CHECK(to_string(TmrScope::protected_only) == "protected_only");
}
