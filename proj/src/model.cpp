#include "aiq/model.hpp"

#include <algorithm>

namespace aiq {

const char* kind_name(const LayerKind& kind) {
    struct Visitor {
        const char* operator()(const Conv2d&) const { return "conv2d"; }
        const char* operator()(const Linear&) const { return "linear"; }
        const char* operator()(const BatchNorm2d&) const { return "batchnorm2d"; }
        const char* operator()(const ReLU&) const { return "relu"; }
        const char* operator()(const AvgPool2d&) const { return "avgpool2d"; }
        const char* operator()(const GlobalAvgPool&) const { return "globalavgpool"; }
        const char* operator()(const Add&) const { return "add"; }
        const char* operator()(const Flatten&) const { return "flatten"; }
    };
    return std::visit(Visitor{}, kind);
}

bool is_quantizable(const LayerKind& kind) {
    return std::holds_alternative<Conv2d>(kind) || std::holds_alternative<Linear>(kind);
}

size_t ModelGraph::num_quantizable() const {
    return static_cast<size_t>(
        std::count_if(layers.begin(), layers.end(), [](const Layer& l) { return l.quantizable(); }));
}

Shape expected_weight_shape(const LayerKind& kind) {
    if (const auto* c = std::get_if<Conv2d>(&kind))
        return {c->out_channels, c->in_channels / c->groups, c->kernel_h, c->kernel_w};
    if (const auto* l = std::get_if<Linear>(&kind)) return {l->out_features, l->in_features};
    if (const auto* b = std::get_if<BatchNorm2d>(&kind)) return {4, b->channels};
    return {};
}

Shape expected_bias_shape(const LayerKind& kind) {
    if (const auto* c = std::get_if<Conv2d>(&kind)) return {c->out_channels};
    if (const auto* l = std::get_if<Linear>(&kind)) return {l->out_features};
    return {};
}

namespace {

int64_t conv_out_dim(int64_t in, int k, int pad, int stride) {
    return (in + 2 * pad - k) / stride + 1;
}

[[noreturn]] void shape_error(const std::string& id, const std::string& detail) {
    throw Error(ErrorCode::ShapeMismatch, "layer '" + id + "': " + detail);
}

}  // namespace

Shape derive_output_shape(const LayerKind& kind, const Shape& input, const std::string& id) {
    if (const auto* c = std::get_if<Conv2d>(&kind)) {
        if (input.size() != 3) shape_error(id, "conv2d expects CHW input, got " + shape_str(input));
        if (input[0] != c->in_channels)
            shape_error(id, "conv2d expects " + std::to_string(c->in_channels) + " channels, got " +
                                std::to_string(input[0]));
        if (c->groups != 1 && c->groups != c->in_channels)
            shape_error(id, "groups must be 1 or in_channels");
        int64_t oh = conv_out_dim(input[1], c->kernel_h, c->padding, c->stride);
        int64_t ow = conv_out_dim(input[2], c->kernel_w, c->padding, c->stride);
        if (oh < 1 || ow < 1) shape_error(id, "conv2d output collapses to zero");
        return {c->out_channels, oh, ow};
    }
    if (const auto* l = std::get_if<Linear>(&kind)) {
        if (input.size() != 1 || input[0] != l->in_features)
            shape_error(id, "linear expects [" + std::to_string(l->in_features) + "], got " + shape_str(input));
        return {l->out_features};
    }
    if (const auto* b = std::get_if<BatchNorm2d>(&kind)) {
        if (input.size() != 3 || input[0] != b->channels)
            shape_error(id, "batchnorm2d expects " + std::to_string(b->channels) + " channels");
        return input;
    }
    if (std::holds_alternative<ReLU>(kind)) return input;
    if (const auto* p = std::get_if<AvgPool2d>(&kind)) {
        if (input.size() != 3) shape_error(id, "avgpool2d expects CHW input");
        int64_t oh = conv_out_dim(input[1], p->kernel, 0, p->stride);
        int64_t ow = conv_out_dim(input[2], p->kernel, 0, p->stride);
        if (oh < 1 || ow < 1) shape_error(id, "pool output collapses to zero");
        return {input[0], oh, ow};
    }
    if (std::holds_alternative<GlobalAvgPool>(kind)) {
        if (input.size() != 3) shape_error(id, "globalavgpool expects CHW input");
        return {input[0], 1, 1};
    }
    if (std::holds_alternative<Add>(kind)) return input;  // source checked in infer_shapes
    if (std::holds_alternative<Flatten>(kind)) return {shape_elems(input)};
    shape_error(id, "unknown kind");
}

void infer_shapes(ModelGraph& graph, const Shape& input_shape) {
    if (input_shape.empty()) throw Error(ErrorCode::ShapeMismatch, "empty model input shape");
    Shape cur = input_shape;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        Layer& layer = graph.layers[i];
        if (!layer.input_shape.empty() && layer.input_shape != cur)
            shape_error(layer.id, "stored input shape " + shape_str(layer.input_shape) +
                                      " != derived " + shape_str(cur));
        Shape out = derive_output_shape(layer.kind, cur, layer.id);
        if (const auto* add = std::get_if<Add>(&layer.kind)) {
            if (add->source < 0 || static_cast<size_t>(add->source) >= i)
                shape_error(layer.id, "add source must reference an earlier layer");
            const Shape& src = graph.layers[static_cast<size_t>(add->source)].output_shape;
            if (src != cur)
                shape_error(layer.id, "add source shape " + shape_str(src) + " != input " + shape_str(cur));
        }
        if (!layer.output_shape.empty() && layer.output_shape != out)
            shape_error(layer.id, "stored output shape " + shape_str(layer.output_shape) +
                                      " != derived " + shape_str(out));
        layer.input_shape = cur;
        layer.output_shape = out;
        cur = out;
    }
}

void validate_model(const ModelGraph& graph) {
    for (const Layer& layer : graph.layers) {
        Shape want_w = expected_weight_shape(layer.kind);
        if (want_w.empty()) {
            if (layer.weight)
                shape_error(layer.id, "kind carries no weight tensor");
        } else {
            if (!layer.weight) throw Error(ErrorCode::MissingTensor, "weight of layer '" + layer.id + "'");
            if (layer.weight->shape != want_w)
                shape_error(layer.id, "weight shape " + shape_str(layer.weight->shape) + " != expected " +
                                          shape_str(want_w));
            if (!layer.weight->all_finite())
                throw Error(ErrorCode::NonFiniteWeight, "weight of layer '" + layer.id + "'");
        }
        if (layer.bias) {
            Shape want_b = expected_bias_shape(layer.kind);
            if (want_b.empty()) shape_error(layer.id, "kind carries no bias tensor");
            if (layer.bias->shape != want_b)
                shape_error(layer.id, "bias shape " + shape_str(layer.bias->shape) + " != expected " +
                                          shape_str(want_b));
            if (!layer.bias->all_finite())
                throw Error(ErrorCode::NonFiniteWeight, "bias of layer '" + layer.id + "'");
        }
    }
}

std::vector<std::string> quantizable_layers(const ModelGraph& graph) {
    std::vector<std::string> ids;
    for (const Layer& layer : graph.layers)
        if (layer.quantizable()) ids.push_back(layer.id);
    return ids;
}

std::vector<size_t> quantizable_layer_indices(const ModelGraph& graph) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < graph.layers.size(); ++i)
        if (graph.layers[i].quantizable()) idx.push_back(i);
    return idx;
}

}  // namespace aiq
