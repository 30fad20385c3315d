#pragma once

#include <optional>

#include "aiq/search.hpp"

namespace aiq {

struct ProfileConfig {
    uint32_t subset_size = 1000;
    uint64_t seed = 17;
    int ai_batch = 1;
    int eval_batch = 64;
    int threads = 1;
};

// One layer quantized in isolation: scheme e_i(b) = FP32 everywhere except
// bits b at layer i.
struct LayerProbe {
    std::string layer_id;
    float ai = 0.0f;            // global AI of e_i(b)
    float delta_acc_pp = 0.0f;  // acc_fp32 - acc_quantized (positive = loss)
};

// L accuracy evaluations plus one baseline evaluation, deterministic.
std::vector<LayerProbe> layerwise_profile(const ModelGraph& graph, const Dataset& data, BitWidth bits,
                                          const ProfileConfig& config);

// Sensitivity sign convention: delta = acc_fp32 - acc_quantized, so a
// positive value means quantizing that layer LOST accuracy.
struct SensitivityRow {
    std::string layer_id;
    float delta_acc_int8 = 0.0f;
    float delta_acc_int4 = 0.0f;
    float ai_int8 = 0.0f;
    float ai_int4 = 0.0f;
    std::optional<BitWidth> final_bits;  // from a completed search, when given
};

std::vector<SensitivityRow> sensitivity_table(const ModelGraph& graph, const Dataset& data,
                                              const ProfileConfig& config,
                                              const QuantScheme* final_scheme = nullptr);

struct SchemeStats {
    struct Row {
        std::string layer_id;
        int64_t channels = 0;       // conv out_channels / linear out_features
        uint64_t weight_bytes = 0;  // fp32 storage size
        int depth_index = 0;
        int bits = 32;
    };
    std::vector<Row> rows;
    // Spearman rank correlations; empty when one side is constant.
    std::optional<double> size_bits_correlation;
    std::optional<double> depth_bits_correlation;
};

SchemeStats scheme_statistics(const ModelGraph& graph, const QuantScheme& scheme);

}  // namespace aiq
