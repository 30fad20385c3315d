#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aiq/tensor.hpp"

namespace aiq {

// Layer parameter blocks. Conv2d and Linear are the only quantizable kinds.
struct Conv2d {
    int kernel_h = 3, kernel_w = 3;
    int stride = 1, padding = 0;
    int in_channels = 0, out_channels = 0;
    int groups = 1;  // 1 or in_channels (depthwise)
};
struct Linear {
    int in_features = 0, out_features = 0;
};
struct BatchNorm2d {
    int channels = 0;  // weight tensor layout: [4, C] rows gamma, beta, mean, var
};
struct ReLU {};
struct AvgPool2d {
    int kernel = 2, stride = 2;
};
struct GlobalAvgPool {};
struct Add {
    int source = -1;  // index of an earlier layer whose output is the second operand
};
struct Flatten {};

using LayerKind = std::variant<Conv2d, Linear, BatchNorm2d, ReLU, AvgPool2d, GlobalAvgPool, Add, Flatten>;

const char* kind_name(const LayerKind& kind);
bool is_quantizable(const LayerKind& kind);

struct Layer {
    std::string id;
    LayerKind kind;
    std::optional<Tensor> weight;
    std::optional<Tensor> bias;
    Shape input_shape;   // per-sample, N excluded
    Shape output_shape;  // derived from input_shape and kind

    bool quantizable() const { return is_quantizable(kind); }
};

// Per-channel input normalization, applied by dataset loaders that ingest
// raw integer pixels (IDX). Native aiqd datasets are stored normalized.
struct Normalization {
    std::vector<float> mean;
    std::vector<float> std;
};

// Ordered layer list; edges are implicit sequential plus explicit Add
// sources. Immutable after load.
struct ModelGraph {
    std::string name;
    Shape input_shape;
    std::vector<Layer> layers;
    std::optional<Normalization> normalization;

    size_t num_quantizable() const;
    const Layer& layer(size_t i) const { return layers.at(i); }
};

// Expected weight shape for a quantizable/parameterized kind; empty when
// the kind carries no weight tensor.
Shape expected_weight_shape(const LayerKind& kind);
Shape expected_bias_shape(const LayerKind& kind);

// Derives the output shape of `kind` applied to `input`. Throws
// ShapeMismatch when the input is incompatible.
Shape derive_output_shape(const LayerKind& kind, const Shape& input, const std::string& id);

// Populates every layer's input/output shape from `input_shape`,
// validating stored shapes and Add source compatibility. Idempotent.
void infer_shapes(ModelGraph& graph, const Shape& input_shape);
inline void infer_shapes(ModelGraph& graph) { infer_shapes(graph, graph.input_shape); }

// Checks weight/bias presence, shapes and finiteness for every layer.
void validate_model(const ModelGraph& graph);

// Conv2d and Linear layer ids in topological order; index i is the
// coordinate i of every QuantScheme for this graph.
std::vector<std::string> quantizable_layers(const ModelGraph& graph);
std::vector<size_t> quantizable_layer_indices(const ModelGraph& graph);

}  // namespace aiq
