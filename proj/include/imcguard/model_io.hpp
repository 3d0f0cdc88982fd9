#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "imcguard/nn.hpp"

namespace imcguard {

/// Little-endian binary containers.
///
/// Model:   "IMCGMODL" u32 version u32 activation_bits u32 layer_count, then per
///          layer u8 kind, u8 relu, u16 reserved, u32 weight_bits, i32 shift,
///          f64 scale, u32 rows, u32 cols, u32 kernel, u32 in_depth, u32 in_h,
///          u32 in_w, followed by rows*cols int8 weights (row-major).
/// Dataset: "IMCGDATA" u32 version u32 activation_bits u32 count
///          u32 feature_len u32 num_classes, then per sample u32 label and
///          feature_len int8 features.
inline constexpr std::string_view kModelMagic = "IMCGMODL";
inline constexpr std::string_view kDatasetMagic = "IMCGDATA";
inline constexpr std::uint32_t kContainerVersion = 1;
/// Results schema tag written into every JSON-lines record.
inline constexpr std::string_view kResultsSchema = "IMCG-results/1";

void write_model(std::ostream &os, const ModelSpec &model);
ModelSpec read_model(std::istream &is);
void save_model(const std::string &path, const ModelSpec &model);
ModelSpec load_model(const std::string &path);

void write_dataset(std::ostream &os, const Dataset &data);
Dataset read_dataset(std::istream &is);
void save_dataset(const std::string &path, const Dataset &data);
Dataset load_dataset(const std::string &path);

} // namespace imcguard
