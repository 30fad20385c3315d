#include "aiq/quant.hpp"

#include <cmath>

namespace aiq {

std::vector<uint8_t> pack_int4(const std::vector<int8_t>& codes) {
    std::vector<uint8_t> bytes((codes.size() + 1) / 2, 0);
    for (size_t i = 0; i < codes.size(); ++i) {
        uint8_t nib = static_cast<uint8_t>(codes[i]) & 0xF;
        bytes[i >> 1] |= static_cast<uint8_t>(nib << ((i & 1) * 4));
    }
    return bytes;
}

std::vector<int8_t> unpack_int4_all(const std::vector<uint8_t>& bytes, size_t count) {
    std::vector<int8_t> codes(count);
    for (size_t i = 0; i < count; ++i) codes[i] = unpack_int4(bytes.data(), i);
    return codes;
}

std::pair<PackedTensor, QuantParams> quantize(const Tensor& weight, BitWidth bits) {
    if (bits == BitWidth::FP32)
        throw Error(ErrorCode::ConfigInvalid, "quantize called with FP32 (identity)");

    QuantParams params;
    params.bits = bits;
    float max_abs = 0.0f;
    for (float v : weight.data) max_abs = std::max(max_abs, std::fabs(v));
    params.scale = max_abs > 0.0f ? max_abs / static_cast<float>(params.qmax()) : 1.0f;

    const int qmax = params.qmax();
    std::vector<int8_t> codes(weight.data.size());
    for (size_t i = 0; i < weight.data.size(); ++i) {
        long c = std::lroundf(weight.data[i] / params.scale);  // half away from zero
        if (c > qmax) c = qmax;
        if (c < -qmax) c = -qmax;
        codes[i] = static_cast<int8_t>(c);
    }

    PackedTensor packed;
    packed.bits = bits;
    packed.params = params;
    packed.shape = weight.shape;
    if (bits == BitWidth::INT8) {
        packed.codes.resize(codes.size());
        for (size_t i = 0; i < codes.size(); ++i) packed.codes[i] = static_cast<uint8_t>(codes[i]);
    } else {
        packed.codes = pack_int4(codes);
    }
    return {std::move(packed), params};
}

Tensor dequantize(const PackedTensor& packed) {
    Tensor out;
    out.shape = packed.shape;
    size_t n = static_cast<size_t>(packed.elems());
    out.data.resize(n);
    for (size_t i = 0; i < n; ++i)
        out.data[i] = static_cast<float>(packed_code(packed, i)) * packed.params.scale;
    return out;
}

const float* QuantizedModel::effective_weights(size_t layer_index) const {
    const QuantizedLayer& ql = layers[layer_index];
    if (ql.bits != BitWidth::FP32) return ql.dequant.data();
    return graph->layers[layer_index].weight->data.data();
}

QuantizedModel apply_scheme(const ModelGraph& graph, const QuantScheme& scheme, Materialize mat) {
    check_scheme_length(scheme, graph.num_quantizable());

    QuantizedModel model;
    model.graph = &graph;
    model.scheme = scheme;
    model.materialized = mat;
    model.layers.resize(graph.layers.size());

    size_t qi = 0;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const Layer& layer = graph.layers[i];
        if (!layer.quantizable()) continue;
        BitWidth bits = scheme[qi++];
        if (bits == BitWidth::FP32) continue;

        auto [packed, params] = quantize(*layer.weight, bits);
        QuantizedLayer& ql = model.layers[i];
        ql.bits = bits;
        if (static_cast<uint8_t>(mat) & static_cast<uint8_t>(Materialize::FakeQuant))
            ql.dequant = dequantize(packed).data;
        if (static_cast<uint8_t>(mat) & static_cast<uint8_t>(Materialize::Packed))
            ql.packed = std::move(packed);
    }
    return model;
}

}  // namespace aiq
