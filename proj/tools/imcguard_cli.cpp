// Command-line front end: simulate, verify, inspect.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "imcguard/campaign.hpp"
#include "imcguard/checksum.hpp"
#include "imcguard/error.hpp"
#include "imcguard/format.hpp"
#include "imcguard/model_io.hpp"
#include "imcguard/overhead.hpp"
#include "imcguard/trials.hpp"
#include "imcguard/verify.hpp"

namespace fs = std::filesystem;
using namespace imcguard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitProperty = 2;
constexpr int kExitIo = 3;

CampaignConfig load_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path, "cannot open config");
    std::ostringstream text;
    text << in.rdbuf();
    CampaignConfig cfg;
    try {
        cfg = parse_config(text.str());
    } catch (const ConfigError &e) {
        throw ConfigError(path + ": " + e.what());
    }
    // Model and dataset paths are relative to the config file.
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string &p) {
        if (!p.empty() && fs::path(p).is_relative())
            p = (base / p).lexically_normal().string();
    };
    resolve(cfg.model_path);
    resolve(cfg.dataset_path);
    return cfg;
}

struct SimulateArgs {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::vector<std::string> modes;
    bool quiet = false;
};

int simulate(const SimulateArgs &a) {
    CampaignConfig cfg = load_config(a.config);
    if (a.seed)
        cfg.seed = *a.seed;
    if (!a.modes.empty()) {
        std::vector<Mode> keep;
        for (const auto &name : a.modes) {
            auto m = mode_from_string(name);
            if (!m)
                throw ConfigError("--mode: unknown mode '" + name + "'");
            if (std::find(cfg.modes.begin(), cfg.modes.end(), *m) == cfg.modes.end())
                throw ConfigError("--mode: '" + name + "' is not among the configured modes");
            if (std::find(keep.begin(), keep.end(), *m) == keep.end())
                keep.push_back(*m);
        }
        // Keep the configured order.
        std::vector<Mode> ordered;
        for (Mode m : cfg.modes)
            if (std::find(keep.begin(), keep.end(), m) != keep.end())
                ordered.push_back(m);
        cfg.modes = ordered;
    }
    cfg.validate();

    RunOptions opts;
    opts.workers = a.workers;
    opts.output_dir = !a.output.empty() ? a.output : !cfg.output_dir.empty() ? cfg.output_dir : "results";
    if (!a.quiet)
        opts.on_row = [](const CampaignResultRow &r) {
            std::cerr << to_string(r.mode) << " n=" << r.pes_per_batch << " P=" << r.protected_bits;
            if (r.accuracy)
                std::cerr << " normalized_accuracy=" << format_double(r.accuracy->normalized_accuracy);
            else if (r.correction_rate)
                std::cerr << " correction_rate=" << format_double(*r.correction_rate);
            std::cerr << " area=" << format_double(r.overhead.area_overhead_pct)
                      << "% latency=" << format_double(r.overhead.latency_overhead_pct) << "%\n";
        };
    const auto rows = run_campaign(cfg, opts);
    if (!a.quiet)
        std::cerr << rows.size() << " rows written to " << opts.output_dir << "\n";
    return kExitOk;
}

int verify(const std::vector<std::string> &names) {
    for (const auto &n : names)
        if (std::find(verify_scenarios().begin(), verify_scenarios().end(), n) == verify_scenarios().end())
            throw ConfigError("unknown scenario '" + n + "'");
    bool ok = true;
    for (const auto &n : names) {
        const VerifyReport r = run_verify(n);
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.scenario << ": " << r.cases - r.failures << "/" << r.cases
                  << " cases\n";
        for (const auto &note : r.failure_notes)
            std::cout << "  " << note << "\n";
        ok = ok && r.passed();
    }
    return ok ? kExitOk : kExitProperty;
}

void print_vector(std::ostream &os, const std::vector<std::int32_t> &v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? " " : "") << v[i];
}

int inspect(const std::string &config, bool show_weights) {
    const CampaignConfig cfg = load_config(config);
    std::ostream &os = std::cout;
    os << serialize_config(cfg) << "\n";
    os << "# area overhead (checksum), per sweep point\n";
    os << "pes_per_batch,protected_bits,original_cells,crossbar_checksum_cells,pe_checksum_cells,parity_cells,"
          "area_overhead_pct\n";
    for (std::size_t n : cfg.sweep_pes)
        for (int p : cfg.sweep_bits) {
            if (p == 0)
                continue;
            FabricConfig f = cfg.fabric;
            f.pes_per_batch = n;
            f.protected_bits = p;
            const OverheadReport o = area_overhead(f);
            os << n << ',' << p << ',' << o.original_cells << ',' << o.crossbar_checksum_cells << ','
               << o.pe_checksum_cells << ',' << o.parity_cells << ',' << format_double(o.area_overhead_pct) << "\n";
        }

    if (cfg.has_model()) {
        const ModelSpec model = load_model(cfg.model_path);
        const CompiledModel cm = compile_model(model, cfg.fabric);
        os << "\n# mapping on the base fabric\n";
        for (const auto &ml : cm.layers) {
            const auto &l = model.layers[ml.layer_index];
            os << "layer " << ml.layer_index << ": " << (l.kind == LayerKind::conv ? "conv" : "dense") << " "
               << l.mvm_rows() << "x" << l.mvm_cols() << " -> " << ml.tiles.size() << " tiles\n";
        }
    }

    if (show_weights && cfg.fabric.protected_bits > 0) {
        // A random programming of the base batch, seeded by the campaign seed.
        const Batch b = random_batch(cfg.fabric, cfg.seed);
        os << "\n# derived checksum weights for a random batch (seed " << cfg.seed << ")\n";
        for (std::size_t n = 0; n < b.num_pes(); ++n) {
            os << "crossbar checksum PE " << n << ": ";
            print_vector(os, b.pes[n].crossbar_checksum_weights);
            os << "\n";
        }
        for (std::size_t k = 0; k < b.rows(); ++k) {
            os << "PE checksum row " << k << ": ";
            std::vector<std::int32_t> row(b.pe_checksum_weights.row(k).begin(), b.pe_checksum_weights.row(k).end());
            print_vector(os, row);
            os << "\n";
        }
        os << "parity: ";
        print_vector(os, b.parity_weights);
        os << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Checksum-protected in-memory-computing fabric simulator"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *simulate_cmd = app.add_subcommand("simulate", "Run a campaign sweep and write result files");
    simulate_cmd->add_option("config", sim.config, "Campaign config file")->required();
    simulate_cmd->add_option("-o,--output", sim.output, "Output directory (overrides the config)");
    simulate_cmd->add_option("-s,--seed", sim.seed, "Master seed override");
    simulate_cmd->add_option("-j,--workers", sim.workers, "Worker threads")->check(CLI::Range(1, 1024));
    simulate_cmd->add_option("-m,--mode", sim.modes, "Run only these configured modes");
    simulate_cmd->add_flag("-q,--quiet", sim.quiet, "No progress output");

    std::vector<std::string> scenarios;
    auto *verify_cmd = app.add_subcommand("verify", "Run property scenarios with a fixed seed");
    std::string names;
    for (auto s : verify_scenarios())
        names += (names.empty() ? "" : ", ") + std::string(s);
    verify_cmd->add_option("scenario", scenarios, "One or more of: " + names)->required();

    std::string inspect_config;
    bool show_weights = false;
    auto *inspect_cmd = app.add_subcommand("inspect", "Print derived checksums and overhead without faults");
    inspect_cmd->add_option("config", inspect_config, "Campaign config file")->required();
    inspect_cmd->add_flag("-w,--weights", show_weights, "Also print checksum weights of a random batch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate_cmd)
            return simulate(sim);
        if (*verify_cmd)
            return verify(scenarios);
        return inspect(inspect_config, show_weights);
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
