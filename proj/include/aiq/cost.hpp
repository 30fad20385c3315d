#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aiq/model.hpp"
#include "aiq/scheme.hpp"

namespace aiq {

// FLOPs and memory traffic of one layer. Convention: a MAC is 2 FLOPs;
// every layer reads its full input activations and writes its full output
// activations at 4 bytes/element (weight-only quantization); weights are
// read exactly once per batch, biases always at 4 bytes/element; INT4
// storage rounds up to whole bytes at the tensor level.
struct LayerCost {
    std::string layer_id;
    std::string kind;
    uint64_t flops = 0;             // independent of bit-width
    uint64_t weight_elems = 0;      // 0 for non-quantizable layers
    uint64_t bias_bytes = 0;
    uint64_t act_in_bytes = 0;
    uint64_t act_out_bytes = 0;

    uint64_t weight_bytes(BitWidth b) const {
        return (weight_elems * static_cast<uint64_t>(bit_count(b)) + 7) / 8 + bias_bytes;
    }
    uint64_t total_bytes(BitWidth b) const { return weight_bytes(b) + act_in_bytes + act_out_bytes; }
    double ai(BitWidth b) const { return static_cast<double>(flops) / static_cast<double>(total_bytes(b)); }
};

// Roofline parameters of the target machine.
struct MachineModel {
    double peak_flops = 0;           // FLOP/s
    double mem_bandwidth = 0;        // bytes/s

    double ridge_point() const { return peak_flops / mem_bandwidth; }
};

MachineModel load_machine_model(const std::string& path);
void save_machine_model(const MachineModel& machine, const std::string& path,
                        const std::string& extra_json = "");

enum class Boundedness : uint8_t { MemoryBound, ComputeBound };

struct CostReport {
    std::vector<LayerCost> layers;
    QuantScheme scheme;                   // bits per quantizable layer
    std::vector<BitWidth> layer_bits;     // bits per *graph* layer (FP32 for non-quantizable)
    int batch = 1;
    uint64_t global_flops = 0;
    uint64_t global_bytes = 0;
    double ai = 0;                        // global_flops / global_bytes

    // Populated by roofline_classify.
    std::vector<Boundedness> bound;
    std::vector<double> layer_attainable_flops;
    double model_attainable_flops = 0;
    double attainable_images_per_s = 0;
};

// Cost of a single layer; shapes must be inferred and batch >= 1.
LayerCost layer_cost(const Layer& layer, int batch);

// Global arithmetic intensity of (graph, scheme) at the given batch size.
// Non-quantizable layers contribute activation traffic at fixed FP32 cost.
CostReport global_ai(const ModelGraph& graph, const QuantScheme& scheme, int batch = 1);

// Per-layer boundedness against the machine roofline (layers exactly at
// the ridge point count as compute-bound) plus attainable throughput.
void roofline_classify(CostReport& report, const MachineModel& machine);

}  // namespace aiq
