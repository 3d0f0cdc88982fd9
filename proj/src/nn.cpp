#include "imcguard/nn.hpp"

#include <algorithm>
#include <string>

#include "imcguard/parallel.hpp"

namespace imcguard {

void LayerSpec::validate() const {
    if (kind == LayerKind::dense) {
        if (in_features < 1 || out_features < 1)
            throw DimensionError("dense layer needs in_features, out_features >= 1");
    } else {
        if (kernel < 1 || in_depth < 1 || out_depth < 1)
            throw DimensionError("conv layer needs kernel, in_depth, out_depth >= 1");
        if (kernel > in_h || kernel > in_w)
            throw DimensionError("conv kernel larger than the input feature map");
    }
    if (weights.rows() != mvm_rows() || weights.cols() != mvm_cols())
        throw DimensionError("layer weights are " + std::to_string(weights.rows()) + "x" +
                             std::to_string(weights.cols()) + ", descriptor expects " +
                             std::to_string(mvm_rows()) + "x" + std::to_string(mvm_cols()));
    if (shift < 0 || shift > 62)
        throw ConfigError("layer shift must be in [0, 62]");
}

void ModelSpec::validate() const {
    if (layers.empty())
        throw ConfigError("model has no layers");
    if (activation_bits < 2 || activation_bits > 16)
        throw ConfigError("activation_bits must be in [2, 16]");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate();
        if (i + 1 < layers.size() && layers[i].output_len() != layers[i + 1].input_len())
            throw DimensionError("layer " + std::to_string(i) + " produces " +
                                 std::to_string(layers[i].output_len()) + " values, layer " +
                                 std::to_string(i + 1) + " expects " + std::to_string(layers[i + 1].input_len()));
    }
}

namespace {

void check_feature_map(const LayerSpec &conv, const IntVector &fmap) {
    if (conv.kind != LayerKind::conv)
        throw DimensionError("expected a conv layer");
    conv.validate();
    if (fmap.size() != conv.input_len())
        throw DimensionError("feature map has " + std::to_string(fmap.size()) + " values, conv expects " +
                             std::to_string(conv.input_len()));
}

IntVector extract_patch(const LayerSpec &conv, const IntVector &fmap, std::size_t x, std::size_t y) {
    const std::size_t s = conv.kernel, D = conv.in_depth, W = conv.in_w;
    std::vector<acc_t> patch(s * s * D);
    for (std::size_t l = 0; l < s; ++l)
        for (std::size_t j = 0; j < s; ++j)
            for (std::size_t h = 0; h < D; ++h)
                patch[(l * s + j) * D + h] = fmap.values[((x + l) * W + (y + j)) * D + h];
    return IntVector(std::move(patch), fmap.bits);
}

} // namespace

LoweredConv lower_conv_to_mvm(const LayerSpec &conv, const IntVector &feature_map) {
    check_feature_map(conv, feature_map);
    LoweredConv out;
    out.matrix = conv.weights;
    out.out_h = conv.out_h();
    out.out_w = conv.out_w();
    out.patches.reserve(out.out_h * out.out_w);
    for (std::size_t x = 0; x < out.out_h; ++x)
        for (std::size_t y = 0; y < out.out_w; ++y)
            out.patches.push_back(extract_patch(conv, feature_map, x, y));
    return out;
}

acc_t requantize(acc_t acc, int shift, bool relu, int bits) {
    acc_t v = (relu && acc < 0) ? 0 : acc;
    if (shift > 0)
        v = (v + (acc_t{1} << (shift - 1))) >> shift; // arithmetic shift: floor(v / 2^s + 1/2)
    return std::clamp(v, signed_min(bits), signed_max(bits));
}

IntVector golden_layer(const LayerSpec &layer, const IntVector &input) {
    if (layer.kind == LayerKind::dense)
        return golden_mvm(input, layer.weights);
    check_feature_map(layer, input);
    const std::size_t oh = layer.out_h(), ow = layer.out_w(), Z = layer.out_depth;
    std::vector<acc_t> out(oh * ow * Z);
    for (std::size_t x = 0; x < oh; ++x)
        for (std::size_t y = 0; y < ow; ++y) {
            const IntVector o = golden_mvm(extract_patch(layer, input, x, y), layer.weights);
            for (std::size_t z = 0; z < Z; ++z)
                out[(x * ow + y) * Z + z] = o.values[z];
        }
    return IntVector(std::move(out));
}

IntVector activate(const LayerSpec &layer, const IntVector &acc, int activation_bits) {
    std::vector<acc_t> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        out[i] = requantize(acc.values[i], layer.shift, layer.relu, activation_bits);
    return IntVector(std::move(out), activation_bits);
}

IntVector golden_forward(const ModelSpec &model, const IntVector &input) {
    IntVector a = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        IntVector acc = golden_layer(model.layers[i], a);
        if (i + 1 == model.layers.size())
            return acc;
        a = activate(model.layers[i], acc, model.activation_bits);
    }
    return a;
}

std::size_t argmax(const IntVector &logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits.values[i] > logits.values[best])
            best = i;
    return best;
}

CompiledModel compile_model(const ModelSpec &model, const FabricConfig &cfg) {
    model.validate();
    cfg.validate();
    CompiledModel cm{model, cfg, {}};

    const std::size_t R = cfg.rows, Cw = cfg.weight_cols, N = cfg.pes_per_batch;
    const auto B = static_cast<std::size_t>(cfg.weight_bits);
    std::size_t tile_counter = 0;

    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec &layer = model.layers[li];
        if (layer.weights.bits != cfg.weight_bits)
            throw ConfigError("layer " + std::to_string(li) + " has " + std::to_string(layer.weights.bits) +
                              "-bit weights, fabric maps " + std::to_string(cfg.weight_bits) + "-bit weights");
        const std::size_t K = layer.mvm_rows(), M = layer.mvm_cols();
        const BitPlanes planes = bit_slice(layer.weights);
        const bool col_split = cfg.partition == PartitionScheme::column_split;
        const std::size_t group_width = col_split ? N * Cw : Cw;
        const std::size_t row_tiles = (K + R - 1) / R;
        const std::size_t groups = (M + group_width - 1) / group_width;
        const std::size_t rows_per_pe = (R + N - 1) / N;

        MappedLayer ml;
        ml.layer_index = li;
        for (std::size_t rt = 0; rt < row_tiles; ++rt) {
            for (std::size_t g = 0; g < groups; ++g) {
                Tile tile;
                tile.batch_slot = tile_counter++ % cfg.num_batches;
                tile.row0 = rt * R;
                tile.neuron_of.assign(N * Cw, -1);
                std::vector<BinaryMatrix> grids(N, BinaryMatrix(R, Cw * B));
                for (std::size_t n = 0; n < N; ++n) {
                    const std::size_t k_lo = col_split ? 0 : std::min(R, n * rows_per_pe);
                    const std::size_t k_hi = col_split ? R : std::min(R, (n + 1) * rows_per_pe);
                    for (std::size_t w = 0; w < Cw; ++w) {
                        const std::size_t m = col_split ? g * group_width + n * Cw + w : g * group_width + w;
                        if (m >= M)
                            continue;
                        tile.neuron_of[n * Cw + w] = static_cast<std::int64_t>(m);
                        for (std::size_t k = k_lo; k < k_hi; ++k) {
                            const std::size_t row = tile.row0 + k;
                            if (row >= K)
                                break;
                            for (std::size_t j = 0; j < B; ++j)
                                grids[n](k, w * B + j) = planes.planes[j](row, m);
                        }
                    }
                }
                tile.batch = build_batch(grids, cfg);
                ml.tiles.push_back(std::move(tile));
            }
        }
        cm.layers.push_back(std::move(ml));
    }
    return cm;
}

namespace {

std::uint64_t tile_stream_id(std::size_t layer, std::uint64_t position, std::size_t tile) {
    return (static_cast<std::uint64_t>(layer + 1) << 48) ^ (position << 20) ^ static_cast<std::uint64_t>(tile);
}

RawOutputs run_unprotected(const Batch &batch, const IntVector &input, const FaultModelConfig &fault,
                           const SeededRng &rng, std::uint64_t trial, std::uint64_t batch_id, CycleStats &st) {
    SampledFaults src(fault, BatchShape::of(batch), rng, trial, batch_id);
    const FaultSet fs = src.draw(0, EvalScope::device_only);
    RawOutputs raw;
    evaluate_device_columns(batch, input, fs, raw);
    ++st.runs;
    ++st.evaluations;
    if (!fs.empty()) {
        ++st.faulty_runs;
        bool touched = false;
        for (const auto &f : fs.sites())
            touched = touched || batch.cfg.is_protected(f.target.column);
        if (touched) {
            ++st.fault_events;
            ++st.silent_errors;
        }
    }
    return raw;
}

} // namespace

IntVector run_mapped_mvm(const CompiledModel &cm, const MappedLayer &ml, const IntVector &input,
                         std::uint64_t position, ExecContext &ctx) {
    const LayerSpec &layer = cm.model.layers[ml.layer_index];
    if (input.size() != layer.mvm_rows())
        throw DimensionError("mapped MVM input length does not match layer rows");
    const FabricConfig &cfg = cm.fabric;
    const std::size_t R = cfg.rows, Cw = cfg.weight_cols, C = cfg.physical_cols();
    const std::vector<std::int32_t> pw = plane_weights_for(cfg.weight_bits);

    std::vector<acc_t> out(layer.mvm_cols(), 0);
    std::vector<acc_t> slice(R);
    for (std::size_t t = 0; t < ml.tiles.size(); ++t) {
        const Tile &tile = ml.tiles[t];
        for (std::size_t k = 0; k < R; ++k) {
            const std::size_t row = tile.row0 + k;
            slice[k] = row < input.size() ? input.values[row] : 0;
        }
        const IntVector x(slice, input.bits);
        const std::uint64_t id = tile_stream_id(ml.layer_index, position, t);

        RawOutputs raw;
        switch (ctx.mode) {
        case Mode::unprotected:
            raw = run_unprotected(tile.batch, x, *ctx.fault, ctx.rng, ctx.trial, id, ctx.stats);
            break;
        case Mode::checksum: {
            ProtectedResult r = run_with_protection(tile.batch, x, *ctx.fault, *ctx.policy, ctx.rng, ctx.trial, id);
            ctx.stats += r.stats;
            raw = std::move(r.outputs);
            break;
        }
        case Mode::tmr: {
            TmrResult r = tmr_forward(tile.batch, x, *ctx.fault, ctx.rng, ctx.trial, id, ctx.tmr);
            ctx.stats += r.stats;
            raw = std::move(r.outputs);
            break;
        }
        }

        for (std::size_t n = 0; n < raw.num_pes; ++n)
            for (std::size_t b = 0; b < C; ++b) {
                const std::int64_t m = tile.neuron_of[n * Cw + cfg.weight_col_of(b)];
                if (m >= 0)
                    out[static_cast<std::size_t>(m)] += pw[static_cast<std::size_t>(cfg.plane_of(b))] * raw.col(b, n);
            }
    }
    return IntVector(std::move(out));
}

IntVector run_mapped_layer(const CompiledModel &cm, const MappedLayer &ml, const IntVector &input,
                           ExecContext &ctx) {
    const LayerSpec &layer = cm.model.layers[ml.layer_index];
    if (layer.kind == LayerKind::dense)
        return run_mapped_mvm(cm, ml, input, 0, ctx);

    check_feature_map(layer, input);
    const std::size_t oh = layer.out_h(), ow = layer.out_w(), Z = layer.out_depth;
    std::vector<acc_t> out(oh * ow * Z);
    for (std::size_t x = 0; x < oh; ++x)
        for (std::size_t y = 0; y < ow; ++y) {
            const std::uint64_t pos = x * ow + y;
            const IntVector o = run_mapped_mvm(cm, ml, extract_patch(layer, input, x, y), pos, ctx);
            for (std::size_t z = 0; z < Z; ++z)
                out[pos * Z + z] = o.values[z];
        }
    return IntVector(std::move(out));
}

SampleResult infer_sample(const CompiledModel &cm, const IntVector &input, Mode mode,
                          const FaultModelConfig &fault, const StallPolicy &policy, const TmrConfig &tmr,
                          const SeededRng &rng, std::uint64_t trial) {
    const ModelSpec &model = cm.model;
    SampleResult res;
    res.per_layer.resize(model.layers.size());

    IntVector golden = input, actual = input;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec &layer = model.layers[li];
        const IntVector g = golden_layer(layer, golden);

        ExecContext ctx;
        ctx.mode = mode;
        ctx.fault = &fault;
        ctx.policy = &policy;
        ctx.tmr = tmr;
        ctx.rng = rng;
        ctx.trial = trial;
        const IntVector a = run_mapped_layer(cm, cm.layers[li], actual, ctx);
        res.per_layer[li] = ctx.stats;
        res.stats += ctx.stats;
        res.layers_exact = res.layers_exact && a == g;

        if (li + 1 == model.layers.size()) {
            res.predicted = argmax(a);
            res.clean_predicted = argmax(g);
        } else {
            golden = activate(layer, g, model.activation_bits);
            actual = activate(layer, a, model.activation_bits);
        }
    }
    return res;
}

AccuracyReport infer(const CompiledModel &cm, const Dataset &data, Mode mode, const FaultModelConfig &fault,
                     const StallPolicy &policy, const TmrConfig &tmr, const SeededRng &rng,
                     const InferOptions &opts) {
    if (data.feature_len != cm.model.input_len())
        throw DimensionError("dataset feature length does not match model input");
    fault.validate();
    policy.validate();
    const std::size_t count =
        opts.max_samples == 0 ? data.size() : std::min(opts.max_samples, data.size());

    std::vector<SampleResult> results(count);
    for_each_index(count, opts.workers, [&](std::size_t i) {
        results[i] = infer_sample(cm, data.samples[i], mode, fault, policy, tmr, rng, i);
    });

    AccuracyReport rep;
    rep.mode = mode;
    rep.samples = count;
    rep.per_layer.resize(cm.model.layers.size());
    for (std::size_t i = 0; i < count; ++i) {
        const SampleResult &r = results[i];
        rep.correct += r.predicted == data.labels[i];
        rep.clean_correct += r.clean_predicted == data.labels[i];
        rep.samples_exact += r.layers_exact;
        rep.stats += r.stats;
        for (std::size_t l = 0; l < r.per_layer.size(); ++l)
            rep.per_layer[l] += r.per_layer[l];
    }
    if (count > 0) {
        rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(count);
        rep.clean_accuracy = static_cast<double>(rep.clean_correct) / static_cast<double>(count);
    }
    rep.normalized_accuracy = rep.clean_correct == 0 ? 0.0
                                                     : static_cast<double>(rep.correct) /
                                                           static_cast<double>(rep.clean_correct);
    if (rep.stats.fault_events > 0) {
        rep.detection_rate = static_cast<double>(rep.stats.detected) / static_cast<double>(rep.stats.fault_events);
        rep.correction_rate =
            static_cast<double>(rep.stats.recovered) / static_cast<double>(rep.stats.fault_events);
    }
    return rep;
}

} // namespace imcguard
