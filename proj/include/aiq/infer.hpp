#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aiq/dataset.hpp"
#include "aiq/quant.hpp"

namespace aiq {

// Weight bytes streamed from memory, per graph layer, counted once per
// forward batch. Only quantizable layers are counted, matching the cost
// model's weight-traffic convention.
struct TrafficCounter {
    std::vector<uint64_t> weight_bytes;
    uint64_t total() const {
        uint64_t t = 0;
        for (uint64_t b : weight_bytes) t += b;
        return t;
    }
};

struct ForwardOptions {
    bool packed = false;   // stream packed codes instead of dequantized f32
    int threads = 1;       // parallelism over output tiles
    TrafficCounter* counter = nullptr;
};

// Forward-pass engine with reusable per-layer activation workspaces.
// Logits are bit-identical across thread counts and across the packed and
// fake-quant weight paths: every output element is produced by one fixed
// sequential accumulation, and both paths feed the same kernels with the
// same f32 values (code * scale).
class Engine {
public:
    Engine(const QuantizedModel& model, int max_batch);

    // batch: [n, C, H, W] row-major, n <= max_batch. Returns [n, classes].
    const float* forward(const float* batch, int n, const ForwardOptions& opts = {});

    int64_t logit_dim() const { return logit_dim_; }

private:
    const QuantizedModel* model_;
    int max_batch_;
    int64_t logit_dim_;
    std::vector<std::vector<float>> acts_;  // per-layer outputs
};

struct AccuracyResult {
    int64_t correct = 0;
    int64_t total = 0;
    double accuracy = 0;
};

// Percentage points lost versus a baseline accuracy on the same subset
// (negative when quantization helps).
inline float acc_loss_pp(double baseline_accuracy, double accuracy) {
    return static_cast<float>(100.0 * (baseline_accuracy - accuracy));
}

struct EvalOptions {
    int batch = 64;
    int threads = 1;
    bool packed = false;
};

// Top-1 accuracy over the subset (full set when std::nullopt). Argmax ties
// resolve to the lowest class index.
AccuracyResult evaluate(const QuantizedModel& model, const Dataset& data,
                        const std::optional<std::vector<uint32_t>>& subset,
                        const EvalOptions& opts = {});

}  // namespace aiq
