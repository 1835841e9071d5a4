// Versioned binary model envelope shared by the neural detector and the
// benchmark classifiers.
//
// Layout (little-endian):
//   "SPDM" u32 version=1 u32 type-tag
//   DNNC (tag 1): u32 M, u32 layer-count+1, u32 sizes..., f64 negative slope,
//                 per layer: row-major f64 weights then f64 biases,
//                 f64 mean[M], f64 std[M]
//   DBC  (tag 2): u32 norm order, f64 threshold
//   KMC  (tag 3): u32 kappa, u32 M, f64 centroids (kappa x M, row-major), f64 threshold
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>

#include "spoofdet/benchmarks.hpp"
#include "spoofdet/detector.hpp"

namespace spoofdet {

inline constexpr std::uint32_t kModelFormatVersion = 1;

using AnyModel = std::variant<DetectorModel, DbcModel, KmcModel>;

void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

/// Dispatches to decide / decide_dbc / decide_kmc.
Decision decide_any(const AnyModel& model, std::span<const double> first,
                    std::span<const double> second);

/// Expected feature vector length, or 0 when the model accepts any length (DBC).
std::size_t model_feature_count(const AnyModel& model);

}  // namespace spoofdet
