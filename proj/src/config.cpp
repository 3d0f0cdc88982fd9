#include "imcguard/config.hpp"
#include "imcguard/format.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace imcguard {

std::string_view to_string(PartitionScheme p) {
    return p == PartitionScheme::column_split ? "column_split" : "row_split";
}

std::string_view to_string(TmrScope s) { return s == TmrScope::all_columns ? "all_columns" : "protected_only"; }

namespace {

template <typename T> std::string join(const std::vector<T> &xs, std::string_view sep = ", ") {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            os << sep;
        if constexpr (std::is_floating_point_v<T>)
            os << format_double(xs[i]);
        else
            os << xs[i];
    }
    return os.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;

    std::string name() const { return section + "." + key; }
};

[[noreturn]] void fail(const Entry &e, const std::string &msg) {
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + e.name() + "': " + msg);
}

const std::map<std::string, std::set<std::string>> &schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"fabric", {"rows", "weight_cols", "weight_bits", "pes_per_batch", "num_batches", "protected_bits", "partition"}},
        {"fault",
         {"preset", "label", "p_column", "distribution", "magnitude_lo", "magnitude_hi", "values", "probabilities",
          "sigma", "include_checksum_columns"}},
        {"policy", {"max_recompute_cycles", "max_consecutive_checksum_stalls"}},
        {"tmr", {"scope"}},
        {"campaign",
         {"modes", "sweep_pes_per_batch", "sweep_protected_bits", "samples", "trials", "seed", "model", "dataset",
          "output"}},
    };
    return s;
}

std::vector<Entry> tokenize(std::string_view text) {
    std::vector<Entry> out;
    std::set<std::string> seen;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().contains(section))
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        Entry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + e.key + "' outside any section");
        if (!schema().at(section).contains(e.key))
            fail(e, "unknown key");
        if (!seen.insert(e.name()).second)
            fail(e, "duplicate key");
        if (e.value.empty())
            fail(e, "missing value");
        out.push_back(std::move(e));
    }
    return out;
}

template <typename T> T parse_int(const Entry &e, std::string_view s, T lo, T hi) {
    s = trim(s);
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(e, "expected an integer, got '" + std::string(s) + "'");
    if (v < lo || v > hi)
        fail(e, "value " + std::string(s) + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

double parse_double(const Entry &e, std::string_view s) {
    s = trim(s);
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(e, "expected a number, got '" + std::string(s) + "'");
    return v;
}

bool parse_bool(const Entry &e) {
    if (e.value == "true" || e.value == "yes" || e.value == "1")
        return true;
    if (e.value == "false" || e.value == "no" || e.value == "0")
        return false;
    fail(e, "expected true or false");
}

std::vector<std::string_view> split_list(const Entry &e) {
    std::vector<std::string_view> out;
    std::string_view s = e.value;
    for (;;) {
        const auto comma = s.find(',');
        auto item = trim(s.substr(0, comma));
        if (item.empty())
            fail(e, "empty list element");
        out.push_back(item);
        if (comma == std::string_view::npos)
            break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

constexpr std::size_t kMaxDim = std::size_t{1} << 20;

} // namespace

std::string describe(const MagnitudeDist &d) {
    return std::visit(
        [](const auto &m) -> std::string {
            using D = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<D, UniformMagnitude>) {
                return "uniform:" + std::to_string(m.lo) + ":" + std::to_string(m.hi);
            } else if constexpr (std::is_same_v<D, GaussianMagnitude>) {
                return "gaussian:" + format_double(m.sigma);
            } else {
                std::string s = "discrete:";
                for (std::size_t i = 0; i < m.values.size(); ++i) {
                    if (i)
                        s += ';';
                    s += std::to_string(m.values[i]) + "@" + format_double(m.probabilities[i]);
                }
                return s;
            }
        },
        d);
}

void CampaignConfig::validate() const {
    fabric.validate();
    fault.validate();
    policy.validate();
    if (modes.empty())
        throw ConfigError("campaign.modes must list at least one mode");
    if (std::set<Mode>(modes.begin(), modes.end()).size() != modes.size())
        throw ConfigError("campaign.modes has duplicates");
    if (sweep_pes.empty() || sweep_bits.empty())
        throw ConfigError("campaign sweep axes must be non-empty");
    for (auto n : sweep_pes)
        if (n < 1)
            throw ConfigError("campaign.sweep_pes_per_batch entries must be >= 1");
    const bool checksum = std::find(modes.begin(), modes.end(), Mode::checksum) != modes.end();
    for (int p : sweep_bits) {
        if (p < 0 || p > fabric.weight_bits)
            throw ConfigError("campaign.sweep_protected_bits entries must be in [0, fabric.weight_bits]");
        if (checksum && p == 0)
            throw ConfigError("campaign.sweep_protected_bits must be >= 1 when checksum mode is swept");
    }
    if (model_path.empty() != dataset_path.empty())
        throw ConfigError("campaign.model and campaign.dataset must be given together");
    if (!has_model() && trials == 0)
        throw ConfigError("campaign.trials must be >= 1 without a model");
}

CampaignConfig parse_config(std::string_view text) {
    const std::vector<Entry> entries = tokenize(text);
    CampaignConfig cfg;
    bool have_pes_sweep = false, have_bits_sweep = false, have_modes = false;

    auto find = [&](const std::string &section, const std::string &key) -> const Entry * {
        for (const auto &e : entries)
            if (e.section == section && e.key == key)
                return &e;
        return nullptr;
    };

    // The preset goes first so that explicit keys override it regardless of order.
    if (const Entry *e = find("fault", "preset")) {
        if (e->value != "none") {
            auto p = preset_by_name(e->value);
            if (!p)
                fail(*e, "unknown preset '" + e->value + "' (expected none, fefet or rram)");
            cfg.fault = *p;
        }
    }
    if (const Entry *e = find("fault", "distribution")) {
        if (e->value == "uniform")
            cfg.fault.magnitude = UniformMagnitude{};
        else if (e->value == "discrete")
            cfg.fault.magnitude = DiscreteMagnitude{};
        else if (e->value == "gaussian")
            cfg.fault.magnitude = GaussianMagnitude{};
        else
            fail(*e, "expected uniform, discrete or gaussian");
    }

    for (const auto &e : entries) {
        const std::string &s = e.section, &k = e.key;
        if (s == "fabric") {
            auto &f = cfg.fabric;
            if (k == "rows")
                f.rows = parse_int<std::size_t>(e, e.value, 1, kMaxDim);
            else if (k == "weight_cols")
                f.weight_cols = parse_int<std::size_t>(e, e.value, 1, kMaxDim);
            else if (k == "weight_bits")
                f.weight_bits = parse_int<int>(e, e.value, 1, 16);
            else if (k == "pes_per_batch")
                f.pes_per_batch = parse_int<std::size_t>(e, e.value, 1, kMaxDim);
            else if (k == "num_batches")
                f.num_batches = parse_int<std::size_t>(e, e.value, 1, kMaxDim);
            else if (k == "protected_bits")
                f.protected_bits = parse_int<int>(e, e.value, 0, 16);
            else if (k == "partition") {
                if (e.value == "column_split")
                    f.partition = PartitionScheme::column_split;
                else if (e.value == "row_split")
                    f.partition = PartitionScheme::row_split;
                else
                    fail(e, "expected column_split or row_split");
            }
        } else if (s == "fault") {
            auto &f = cfg.fault;
            if (k == "label")
                f.preset_name = e.value;
            else if (k == "p_column") {
                f.p_column = parse_double(e, e.value);
                if (!(f.p_column >= 0.0 && f.p_column <= 1.0))
                    fail(e, "probability " + e.value + " out of range [0, 1]");
            } else if (k == "include_checksum_columns")
                f.include_checksum_columns = parse_bool(e);
            else if (k == "magnitude_lo" || k == "magnitude_hi") {
                auto *u = std::get_if<UniformMagnitude>(&f.magnitude);
                if (!u)
                    fail(e, "only valid with distribution = uniform");
                const auto v = parse_int<acc_t>(e, e.value, 1, acc_t{1} << 40);
                (k == "magnitude_lo" ? u->lo : u->hi) = v;
            } else if (k == "sigma") {
                auto *g = std::get_if<GaussianMagnitude>(&f.magnitude);
                if (!g)
                    fail(e, "only valid with distribution = gaussian");
                g->sigma = parse_double(e, e.value);
                if (!(g->sigma >= 0.5))
                    fail(e, "sigma must be >= 0.5");
            } else if (k == "values" || k == "probabilities") {
                auto *d = std::get_if<DiscreteMagnitude>(&f.magnitude);
                if (!d)
                    fail(e, "only valid with distribution = discrete");
                if (k == "values") {
                    d->values.clear();
                    for (auto item : split_list(e)) {
                        const auto v = parse_int<acc_t>(e, item, -(acc_t{1} << 40), acc_t{1} << 40);
                        if (v == 0)
                            fail(e, "magnitudes must be nonzero");
                        d->values.push_back(v);
                    }
                } else {
                    d->probabilities.clear();
                    for (auto item : split_list(e)) {
                        const double p = parse_double(e, item);
                        if (!(p >= 0.0))
                            fail(e, "probabilities must be >= 0");
                        d->probabilities.push_back(p);
                    }
                }
            }
        } else if (s == "policy") {
            if (k == "max_recompute_cycles")
                cfg.policy.max_recompute_cycles = parse_int<std::uint32_t>(e, e.value, 1, 1u << 20);
            else
                cfg.policy.max_consecutive_checksum_stalls = parse_int<std::uint32_t>(e, e.value, 1, 1u << 20);
        } else if (s == "tmr") {
            if (e.value == "all_columns")
                cfg.tmr.scope = TmrScope::all_columns;
            else if (e.value == "protected_only")
                cfg.tmr.scope = TmrScope::protected_only;
            else
                fail(e, "expected all_columns or protected_only");
        } else if (s == "campaign") {
            if (k == "modes") {
                have_modes = true;
                for (auto item : split_list(e)) {
                    auto m = mode_from_string(item);
                    if (!m)
                        fail(e, "unknown mode '" + std::string(item) + "'");
                    if (std::find(cfg.modes.begin(), cfg.modes.end(), *m) != cfg.modes.end())
                        fail(e, "duplicate mode '" + std::string(item) + "'");
                    cfg.modes.push_back(*m);
                }
            } else if (k == "sweep_pes_per_batch") {
                have_pes_sweep = true;
                for (auto item : split_list(e))
                    cfg.sweep_pes.push_back(parse_int<std::size_t>(e, item, 1, kMaxDim));
            } else if (k == "sweep_protected_bits") {
                have_bits_sweep = true;
                for (auto item : split_list(e))
                    cfg.sweep_bits.push_back(parse_int<int>(e, item, 0, 16));
            } else if (k == "samples")
                cfg.samples = parse_int<std::size_t>(e, e.value, 0, std::size_t{1} << 40);
            else if (k == "trials")
                cfg.trials = parse_int<std::size_t>(e, e.value, 0, std::size_t{1} << 40);
            else if (k == "seed")
                cfg.seed = parse_int<std::uint64_t>(e, e.value, 0, ~std::uint64_t{0});
            else if (k == "model")
                cfg.model_path = e.value;
            else if (k == "dataset")
                cfg.dataset_path = e.value;
            else if (k == "output")
                cfg.output_dir = e.value;
        }
    }

    if (!find("fabric", "protected_bits"))
        cfg.fabric.protected_bits = cfg.fabric.weight_bits;
    if (!have_modes)
        throw ConfigError("key 'campaign.modes' is required");
    if (!have_pes_sweep)
        cfg.sweep_pes = {cfg.fabric.pes_per_batch};
    if (!have_bits_sweep)
        cfg.sweep_bits = {cfg.fabric.protected_bits};

    try {
        cfg.validate();
    } catch (const ConfigError &err) {
        // Attach the line of the key the message names, when there is one.
        const std::string msg = err.what();
        const Entry *named = nullptr;
        std::size_t at = std::string::npos;
        for (const auto &e : entries) {
            const auto pos = msg.find(e.name());
            if (pos < at) {
                at = pos;
                named = &e;
            }
        }
        if (named)
            throw ConfigError("line " + std::to_string(named->line) + ": " + msg);
        throw;
    }
    return cfg;
}

std::string serialize_config(const CampaignConfig &cfg) {
    std::ostringstream os;
    const auto &f = cfg.fabric;
    os << "[fabric]\n"
       << "rows = " << f.rows << "\n"
       << "weight_cols = " << f.weight_cols << "\n"
       << "weight_bits = " << f.weight_bits << "\n"
       << "pes_per_batch = " << f.pes_per_batch << "\n"
       << "num_batches = " << f.num_batches << "\n"
       << "protected_bits = " << f.protected_bits << "\n"
       << "partition = " << to_string(f.partition) << "\n\n";

    const auto &flt = cfg.fault;
    os << "[fault]\n";
    if (!flt.preset_name.empty())
        os << "label = " << flt.preset_name << "\n";
    os << "p_column = " << format_double(flt.p_column) << "\n";
    std::visit(
        [&](const auto &m) {
            using D = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<D, UniformMagnitude>) {
                os << "distribution = uniform\nmagnitude_lo = " << m.lo << "\nmagnitude_hi = " << m.hi << "\n";
            } else if constexpr (std::is_same_v<D, GaussianMagnitude>) {
                os << "distribution = gaussian\nsigma = " << format_double(m.sigma) << "\n";
            } else {
                os << "distribution = discrete\nvalues = " << join(m.values)
                   << "\nprobabilities = " << join(m.probabilities) << "\n";
            }
        },
        flt.magnitude);
    os << "include_checksum_columns = " << (flt.include_checksum_columns ? "true" : "false") << "\n\n";

    os << "[policy]\n"
       << "max_recompute_cycles = " << cfg.policy.max_recompute_cycles << "\n"
       << "max_consecutive_checksum_stalls = " << cfg.policy.max_consecutive_checksum_stalls << "\n\n";
    os << "[tmr]\nscope = " << to_string(cfg.tmr.scope) << "\n\n";

    std::vector<std::string> modes;
    for (auto m : cfg.modes)
        modes.emplace_back(to_string(m));
    os << "[campaign]\n"
       << "modes = " << join(modes) << "\n"
       << "sweep_pes_per_batch = " << join(cfg.sweep_pes) << "\n"
       << "sweep_protected_bits = " << join(cfg.sweep_bits) << "\n"
       << "samples = " << cfg.samples << "\n"
       << "trials = " << cfg.trials << "\n"
       << "seed = " << cfg.seed << "\n";
    if (!cfg.model_path.empty())
        os << "model = " << cfg.model_path << "\n";
    if (!cfg.dataset_path.empty())
        os << "dataset = " << cfg.dataset_path << "\n";
    if (!cfg.output_dir.empty())
        os << "output = " << cfg.output_dir << "\n";
    return os.str();
}

} // namespace imcguard
