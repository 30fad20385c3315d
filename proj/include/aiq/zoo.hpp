#pragma once

#include <array>

#include "aiq/dataset.hpp"
#include "aiq/model.hpp"

namespace aiq {

// Stem + 3 stages x 3 blocks x 2 convs + GAP + linear head: 20 quantizable
// layers. Stages 2 and 3 downsample in their first block; a block carries
// a residual Add only when its input and output shapes match, so there are
// no projection shortcuts.
struct ResnetConfig {
    std::array<int, 4> widths = {16, 16, 32, 64};  // stem, stage1..3
    int64_t hw = 16;
    int classes = 10;
    uint64_t seed = 1;
    std::string name = "resnet20";
};

ModelGraph build_resnet20(const ResnetConfig& config = {});

inline ModelGraph build_heavy_early_resnet20(uint64_t seed = 1) {
    ResnetConfig cfg;
    cfg.widths = {64, 32, 16, 16};  // channel progression reversed
    cfg.seed = seed;
    cfg.name = "heavy-early-resnet20";
    return build_resnet20(cfg);
}

inline ModelGraph build_mini_resnet(uint64_t seed = 1) {
    ResnetConfig cfg;
    cfg.widths = {8, 8, 16, 32};
    cfg.seed = seed;
    cfg.name = "mini-resnet";
    return build_resnet20(cfg);
}

// 20 uniform-width convs plus a classifier head (the only model in the
// family with 21 quantizable layers). AvgPool after convs 7 and 14 keeps
// the forward pass desk-scale.
ModelGraph build_plainconv20(int width = 64, int64_t hw = 16, int classes = 10, uint64_t seed = 1);

// Small mixed conv/linear net with exactly 4 quantizable layers, randomized
// widths per seed. Used with exhaustive search as a testing oracle.
ModelGraph build_toy_model(uint64_t seed);

// Matching synthetic dataset for a toy model (8x8 RGB, 4 classes).
Dataset toy_dataset(uint64_t seed, int64_t n = 96);

// Memory-bound throughput fixture: a stack of wide Linear layers sized so
// the FP32 weights reach target_weight_bytes, with narrow bottleneck
// layers in between. The narrow "trap" layers carry planted outlier
// weights in a row whose downstream column is zeroed: the FP32 function
// ignores that row, but per-tensor quantization of the layer inflates the
// scale and wrecks it. AI-aware search therefore skips exactly those
// layers while any byte-oblivious baseline may quantize them.
struct BenchMlpConfig {
    uint64_t target_weight_bytes = 256ull << 20;
    int wide = 4096;
    int narrow = 256;
    int classes = 10;
    uint64_t seed = 3;
    std::string name = "bench-mlp";
};

ModelGraph build_bench_mlp(const BenchMlpConfig& config = {});

// Self-labeled dataset for a bench model: random inputs labeled by the
// FP32 model itself, keeping only samples whose top-1 margin is comfortably
// wide. FP32 accuracy is 1.0 by construction and small weight perturbations
// flip nothing.
Dataset self_labeled_dataset(const ModelGraph& graph, int64_t n, uint64_t seed,
                             double margin_quantile = 0.35);

}  // namespace aiq
