#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "imcguard/checksum.hpp"
#include "imcguard/fabric.hpp"
#include "imcguard/fault.hpp"
#include "imcguard/mode.hpp"
#include "imcguard/quant.hpp"
#include "imcguard/stats.hpp"
#include "imcguard/tmr.hpp"

namespace imcguard {

enum class LayerKind : std::uint8_t { dense = 0, conv = 1 };

/// One network layer as an integer matrix-vector product.
///
/// Dense layers multiply a K-vector by a K x M matrix. Conv layers are
/// valid (no padding), stride 1, over an HWC feature map; their weight matrix
/// is stored lowered, row index (l * kernel + j) * in_depth + h, column = output
/// channel. Every layer but the last applies ReLU (when `relu` is set), then
/// requantizes with round-half-up right shift and clamps to activation range.
/// The last layer's raw accumulators are the logits.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t in_features = 0;  // dense K
    std::size_t out_features = 0; // dense M
    std::size_t kernel = 0;       // conv s
    std::size_t in_depth = 0;
    std::size_t out_depth = 0;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    QuantizedMatrix weights;
    int shift = 0;
    bool relu = true;

    std::size_t out_h() const noexcept { return kind == LayerKind::conv ? in_h - kernel + 1 : 1; }
    std::size_t out_w() const noexcept { return kind == LayerKind::conv ? in_w - kernel + 1 : 1; }
    std::size_t input_len() const noexcept { return kind == LayerKind::conv ? in_h * in_w * in_depth : in_features; }
    std::size_t output_len() const noexcept {
        return kind == LayerKind::conv ? out_h() * out_w() * out_depth : out_features;
    }
    std::size_t mvm_rows() const noexcept { return kind == LayerKind::conv ? kernel * kernel * in_depth : in_features; }
    std::size_t mvm_cols() const noexcept { return kind == LayerKind::conv ? out_depth : out_features; }

    /// Throws DimensionError / ConfigError on an inconsistent descriptor.
    void validate() const;
    bool operator==(const LayerSpec &) const = default;
};

struct ModelSpec {
    std::vector<LayerSpec> layers;
    int activation_bits = 8;

    void validate() const;
    std::size_t input_len() const { return layers.front().input_len(); }
    std::size_t output_len() const { return layers.back().output_len(); }
    bool operator==(const ModelSpec &) const = default;
};

struct Dataset {
    std::size_t feature_len = 0;
    std::size_t num_classes = 0;
    int activation_bits = 8;
    std::vector<IntVector> samples;
    std::vector<std::uint32_t> labels;

    std::size_t size() const noexcept { return samples.size(); }
    bool operator==(const Dataset &) const = default;
};

struct LoweredConv {
    QuantizedMatrix matrix;          // K = s*s*in_depth by M = out_depth
    std::vector<IntVector> patches;  // one per output position, row-major (x, y)
    std::size_t out_h = 0;
    std::size_t out_w = 0;
};

/// im2col: patch[(l*s + j)*D + h] = In(x + l, y + j, h).
LoweredConv lower_conv_to_mvm(const LayerSpec &conv, const IntVector &feature_map);

/// ReLU (optional), round-half-up right shift, clamp to `bits`.
acc_t requantize(acc_t acc, int shift, bool relu, int bits);

/// Fault-free integer reference for one layer: accumulator outputs (HWC for conv).
IntVector golden_layer(const LayerSpec &layer, const IntVector &input);
/// Activation handed to the next layer.
IntVector activate(const LayerSpec &layer, const IntVector &acc, int activation_bits);
/// Logits of the pure-integer reference network.
IntVector golden_forward(const ModelSpec &model, const IntVector &input);
/// Index of the largest logit, lowest index on ties.
std::size_t argmax(const IntVector &logits);

/// One batch-sized piece of a layer's weight matrix.
struct Tile {
    std::size_t batch_slot = 0; // physical batch it runs on
    std::size_t row0 = 0;       // first matrix row fed to the crossbar rows
    /// neuron_of[n * weight_cols + w] = output column for weight column w of PE n, or -1.
    std::vector<std::int64_t> neuron_of;
    Batch batch;
};

struct MappedLayer {
    std::size_t layer_index = 0;
    std::vector<Tile> tiles; // accumulation order
};

struct CompiledModel {
    ModelSpec model;
    FabricConfig fabric;
    std::vector<MappedLayer> layers;
};

/// Row-major greedy tiling: row tiles of R rows outer, column groups inner,
/// tile i on batch slot i % num_batches (slots are time-multiplexed).
CompiledModel compile_model(const ModelSpec &model, const FabricConfig &cfg);

/// Everything one mapped evaluation needs besides its input.
struct ExecContext {
    Mode mode = Mode::unprotected;
    const FaultModelConfig *fault = nullptr;
    const StallPolicy *policy = nullptr;
    TmrConfig tmr;
    SeededRng rng;
    std::uint64_t trial = 0;
    CycleStats stats;
};

/// Run one MVM through a mapped layer's tiles in `ctx.mode`; returns the M accumulators.
IntVector run_mapped_mvm(const CompiledModel &cm, const MappedLayer &ml, const IntVector &input,
                         std::uint64_t position, ExecContext &ctx);

/// Accumulator output of one layer on the fabric (HWC for conv).
IntVector run_mapped_layer(const CompiledModel &cm, const MappedLayer &ml, const IntVector &input,
                           ExecContext &ctx);

struct SampleResult {
    std::size_t predicted = 0;
    std::size_t clean_predicted = 0;
    bool layers_exact = true; // every layer output matched the golden network
    CycleStats stats;
    std::vector<CycleStats> per_layer;
};

SampleResult infer_sample(const CompiledModel &cm, const IntVector &input, Mode mode,
                          const FaultModelConfig &fault, const StallPolicy &policy, const TmrConfig &tmr,
                          const SeededRng &rng, std::uint64_t trial);

struct AccuracyReport {
    Mode mode = Mode::unprotected;
    std::size_t samples = 0;
    std::size_t correct = 0;
    std::size_t clean_correct = 0;
    std::size_t samples_exact = 0;
    double accuracy = 0.0;
    double clean_accuracy = 0.0;
    double normalized_accuracy = 0.0;
    double detection_rate = 0.0;  // detected / fault_events
    double correction_rate = 0.0; // recovered / fault_events
    CycleStats stats;
    std::vector<CycleStats> per_layer;

    bool operator==(const AccuracyReport &) const = default;
};

struct InferOptions {
    std::size_t max_samples = 0; // 0 = whole dataset
    int workers = 1;
};

/// Per-sample inference (sample index = trial id), parallel over samples.
/// Results do not depend on the worker count.
AccuracyReport infer(const CompiledModel &cm, const Dataset &data, Mode mode, const FaultModelConfig &fault,
                     const StallPolicy &policy, const TmrConfig &tmr, const SeededRng &rng,
                     const InferOptions &opts = {});

} // namespace imcguard
