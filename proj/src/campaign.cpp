#include "imcguard/campaign.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imcguard/error.hpp"
#include "imcguard/format.hpp"
#include "imcguard/model_io.hpp"
#include "imcguard/trials.hpp"

namespace imcguard {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Attached {
    ModelSpec model;
    Dataset data;
};

void require_file(const std::string &path, std::string_view key) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw ConfigError("key 'campaign." + std::string(key) + "': file not found: " + path);
}

std::unique_ptr<Attached> load_attached(const CampaignConfig &cfg) {
    if (!cfg.has_model())
        return nullptr;
    require_file(cfg.model_path, "model");
    require_file(cfg.dataset_path, "dataset");
    auto a = std::make_unique<Attached>();
    a->model = load_model(cfg.model_path);
    a->data = load_dataset(cfg.dataset_path);
    if (a->data.feature_len != a->model.layers.front().input_len())
        throw ConfigError("dataset feature length " + std::to_string(a->data.feature_len) +
                          " does not match the model input length " +
                          std::to_string(a->model.layers.front().input_len()));
    return a;
}

std::optional<double> rate(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

CampaignResultRow run_point_with(const CampaignConfig &point, int workers, const Attached *attached) {
    point.validate();
    if (point.modes.size() != 1 || point.sweep_pes.size() != 1 || point.sweep_bits.size() != 1)
        throw ConfigError("a sweep point needs exactly one mode, batch size and protected-bit count");

    CampaignResultRow row;
    row.point = point;
    row.mode = point.modes.front();
    row.pes_per_batch = point.fabric.pes_per_batch;
    row.protected_bits = point.fabric.protected_bits;
    const SeededRng rng(point.seed);

    if (attached) {
        const CompiledModel cm = compile_model(attached->model, point.fabric);
        InferOptions opts;
        opts.max_samples = point.samples;
        opts.workers = workers;
        AccuracyReport rep = infer(cm, attached->data, row.mode, point.fault, point.policy, point.tmr, rng, opts);
        row.trials = rep.samples;
        row.exact_outputs = rep.samples_exact;
        row.stats = rep.stats;
        if (row.stats.runs > 0) {
            const std::uint64_t extra = row.mode == Mode::tmr ? 2 * row.stats.runs
                                        : row.mode == Mode::checksum ? row.stats.extra_cycles()
                                                                     : 0;
            row.mean_extra_cycles = static_cast<double>(extra) / static_cast<double>(row.stats.runs);
        }
        row.accuracy = std::move(rep);
    } else {
        TrialConfig tc;
        tc.fabric = point.fabric;
        tc.fault = point.fault;
        tc.policy = point.policy;
        tc.tmr = point.tmr;
        tc.mode = row.mode;
        tc.trials = point.trials;
        tc.seed = point.seed;
        const TrialSummary s = run_batch_trials(tc, workers);
        row.trials = s.trials;
        row.exact_outputs = s.exact_outputs;
        row.stats = s.stats;
        row.mean_extra_cycles = s.mean_extra_cycles;
        row.stderr_extra_cycles = s.stderr_extra_cycles;
    }
    row.detection_rate = rate(row.stats.detected, row.stats.fault_events);
    row.correction_rate = rate(row.stats.recovered, row.stats.fault_events);
    row.overhead = overhead_for(point.fabric, row.stats, row.mode, point.tmr.scope);
    return row;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string opt(const std::optional<double> &v) { return v ? format_double(*v) : std::string(); }

ordered_json jopt(const std::optional<double> &v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json stats_json(const CycleStats &s) {
    return ordered_json{{"runs", s.runs},
                        {"evaluations", s.evaluations},
                        {"checksum_evaluations", s.checksum_evaluations},
                        {"checksum_stalls", s.checksum_stalls},
                        {"recompute_stalls", s.recompute_stalls},
                        {"forced_checksum_stalls", s.forced_checksum_stalls},
                        {"faulty_runs", s.faulty_runs},
                        {"fault_events", s.fault_events},
                        {"detected", s.detected},
                        {"false_alarms", s.false_alarms},
                        {"recovered", s.recovered},
                        {"corrections", s.corrections},
                        {"exact_corrections", s.exact_corrections},
                        {"miscorrections", s.miscorrections},
                        {"uncorrected", s.uncorrected},
                        {"silent_errors", s.silent_errors},
                        {"tmr_votes", s.tmr_votes},
                        {"tmr_disagreements", s.tmr_disagreements}};
}

class OutputFile {
  public:
    OutputFile(const fs::path &path) : path_(path.string()), os_(path, std::ios::binary | std::ios::trunc) {
        if (!os_)
            throw IoError(path_, "cannot open for writing");
    }
    void write(const std::string &line) {
        os_ << line << '\n';
        os_.flush();
        if (!os_)
            throw IoError(path_, "write failed");
    }

  private:
    std::string path_;
    std::ofstream os_;
};

} // namespace

CampaignConfig point_config(const CampaignConfig &cfg, Mode mode, std::size_t pes_per_batch, int protected_bits) {
    CampaignConfig p = cfg;
    p.fabric.pes_per_batch = pes_per_batch;
    p.fabric.protected_bits = protected_bits;
    p.modes = {mode};
    p.sweep_pes = {pes_per_batch};
    p.sweep_bits = {protected_bits};
    p.output_dir.clear();
    return p;
}

CampaignResultRow run_point(const CampaignConfig &point, int workers) {
    const auto attached = load_attached(point);
    return run_point_with(point, workers, attached.get());
}

std::string csv_header() {
    return "mode,pes_per_batch,protected_bits,rows,weight_cols,weight_bits,num_batches,partition,"
           "fault_preset,p_column,magnitude,include_checksum_columns,max_recompute_cycles,"
           "max_consecutive_checksum_stalls,tmr_scope,seed,trials_requested,samples_requested,model,dataset,"
           "trials,exact_outputs,samples,correct,clean_correct,accuracy,clean_accuracy,normalized_accuracy,"
           "detection_rate,correction_rate,area_overhead_pct,original_cells,checksum_cells,"
           "crossbar_checksum_cells,pe_checksum_cells,parity_cells,latency_overhead_pct,baseline_cycles,"
           "extra_cycles,mean_extra_cycles,stderr_extra_cycles,runs,evaluations,checksum_evaluations,"
           "checksum_stalls,recompute_stalls,forced_checksum_stalls,faulty_runs,fault_events,detected,"
           "false_alarms,recovered,corrections,exact_corrections,miscorrections,uncorrected,silent_errors,"
           "tmr_votes,tmr_disagreements";
}

std::string to_csv(const CampaignResultRow &r) {
    const CampaignConfig &p = r.point;
    const auto &f = p.fabric;
    std::ostringstream os;
    os << to_string(r.mode) << ',' << r.pes_per_batch << ',' << r.protected_bits << ',' << f.rows << ','
       << f.weight_cols << ',' << f.weight_bits << ',' << f.num_batches << ',' << to_string(f.partition) << ','
       << csv_field(p.fault.preset_name) << ',' << format_double(p.fault.p_column) << ','
       << csv_field(describe(p.fault.magnitude)) << ',' << (p.fault.include_checksum_columns ? "true" : "false")
       << ',' << p.policy.max_recompute_cycles << ',' << p.policy.max_consecutive_checksum_stalls << ','
       << to_string(p.tmr.scope) << ',' << p.seed << ',' << p.trials << ',' << p.samples << ','
       << csv_field(p.model_path) << ',' << csv_field(p.dataset_path) << ',';
    os << r.trials << ',' << r.exact_outputs << ',';
    if (r.accuracy) {
        const auto &a = *r.accuracy;
        os << a.samples << ',' << a.correct << ',' << a.clean_correct << ',' << format_double(a.accuracy) << ','
           << format_double(a.clean_accuracy) << ',' << format_double(a.normalized_accuracy) << ',';
    } else {
        os << ",,,,,,";
    }
    const auto &o = r.overhead;
    os << opt(r.detection_rate) << ',' << opt(r.correction_rate) << ',' << format_double(o.area_overhead_pct) << ','
       << o.original_cells << ',' << o.checksum_cells << ',' << o.crossbar_checksum_cells << ','
       << o.pe_checksum_cells << ',' << o.parity_cells << ',' << format_double(o.latency_overhead_pct) << ','
       << o.baseline_cycles << ',' << o.extra_cycles << ',' << format_double(r.mean_extra_cycles) << ','
       << opt(r.stderr_extra_cycles);
    const ordered_json stats = stats_json(r.stats);
    for (const auto &value : stats)
        os << ',' << value.get<std::uint64_t>();
    return os.str();
}

std::string to_jsonl(const CampaignResultRow &r) {
    ordered_json j;
    j["schema"] = kResultsSchema;
    j["mode"] = to_string(r.mode);
    j["pes_per_batch"] = r.pes_per_batch;
    j["protected_bits"] = r.protected_bits;
    j["seed"] = r.point.seed;
    j["config"] = serialize_config(r.point);
    j["trials"] = r.trials;
    j["exact_outputs"] = r.exact_outputs;
    if (r.accuracy) {
        const auto &a = *r.accuracy;
        ordered_json layers = ordered_json::array();
        for (const auto &s : a.per_layer)
            layers.push_back(stats_json(s));
        j["accuracy"] = {{"samples", a.samples},
                         {"correct", a.correct},
                         {"clean_correct", a.clean_correct},
                         {"samples_exact", a.samples_exact},
                         {"accuracy", a.accuracy},
                         {"clean_accuracy", a.clean_accuracy},
                         {"normalized_accuracy", a.normalized_accuracy},
                         {"per_layer", layers}};
    } else {
        j["accuracy"] = nullptr;
    }
    j["detection_rate"] = jopt(r.detection_rate);
    j["correction_rate"] = jopt(r.correction_rate);
    const auto &o = r.overhead;
    j["overhead"] = {{"original_cells", o.original_cells},
                     {"crossbar_checksum_cells", o.crossbar_checksum_cells},
                     {"pe_checksum_cells", o.pe_checksum_cells},
                     {"parity_cells", o.parity_cells},
                     {"checksum_cells", o.checksum_cells},
                     {"area_overhead_pct", o.area_overhead_pct},
                     {"baseline_cycles", o.baseline_cycles},
                     {"extra_cycles", o.extra_cycles},
                     {"latency_overhead_pct", o.latency_overhead_pct}};
    j["mean_extra_cycles"] = r.mean_extra_cycles;
    j["stderr_extra_cycles"] = jopt(r.stderr_extra_cycles);
    j["stats"] = stats_json(r.stats);
    return j.dump();
}

CampaignResultRow replay_jsonl(std::string_view line, int workers) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("malformed results record: ") + e.what());
    }
    if (!j.contains("schema") || j["schema"] != kResultsSchema || !j.contains("config") || !j["config"].is_string())
        throw ConfigError("results record lacks schema tag " + std::string(kResultsSchema) + " or config");
    return run_point(parse_config(j["config"].get<std::string>()), workers);
}

std::vector<CampaignResultRow> run_campaign(const CampaignConfig &cfg, const RunOptions &opts) {
    cfg.validate();
    const auto attached = load_attached(cfg);

    std::unique_ptr<OutputFile> csv, jsonl;
    fs::path dir;
    if (!opts.output_dir.empty()) {
        dir = opts.output_dir;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw IoError(dir.string(), "cannot create directory: " + ec.message());
        csv = std::make_unique<OutputFile>(dir / "results.csv");
        jsonl = std::make_unique<OutputFile>(dir / "results.jsonl");
        csv->write(csv_header());
    }

    std::vector<CampaignResultRow> rows;
    for (std::size_t n : cfg.sweep_pes)
        for (int p : cfg.sweep_bits)
            for (Mode m : cfg.modes) {
                rows.push_back(run_point_with(point_config(cfg, m, n, p), opts.workers, attached.get()));
                if (csv) {
                    csv->write(to_csv(rows.back()));
                    jsonl->write(to_jsonl(rows.back()));
                }
                if (opts.on_row)
                    opts.on_row(rows.back());
            }

    if (!dir.empty()) {
        OutputFile area(dir / "plot_area_vs_batch.csv");
        area.write("mode,protected_bits,pes_per_batch,area_overhead_pct");
        OutputFile lat(dir / "plot_latency_vs_batch.csv");
        lat.write("mode,protected_bits,pes_per_batch,latency_overhead_pct,mean_extra_cycles,stderr_extra_cycles");
        OutputFile acc(dir / "plot_accuracy_vs_bits.csv");
        acc.write("mode,pes_per_batch,protected_bits,normalized_accuracy,correction_rate");
        for (const auto &r : rows) {
            const std::string mode(to_string(r.mode));
            const std::string nb = std::to_string(r.pes_per_batch), pb = std::to_string(r.protected_bits);
            if (r.mode != Mode::unprotected)
                area.write(mode + ',' + pb + ',' + nb + ',' + format_double(r.overhead.area_overhead_pct));
            lat.write(mode + ',' + pb + ',' + nb + ',' + format_double(r.overhead.latency_overhead_pct) + ',' +
                      format_double(r.mean_extra_cycles) + ',' + opt(r.stderr_extra_cycles));
            acc.write(mode + ',' + nb + ',' + pb + ',' +
                      (r.accuracy ? format_double(r.accuracy->normalized_accuracy) : std::string()) + ',' +
                      opt(r.correction_rate));
        }
    }
    return rows;
}

} // namespace imcguard
