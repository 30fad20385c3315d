#pragma once

#include <cstdint>
#include <vector>

#include "aiq/model.hpp"
#include "aiq/scheme.hpp"

namespace aiq {

// Symmetric per-tensor parameters: zero_point is always 0 and the code
// range is restricted to +-qmax so negation mirrors exactly.
struct QuantParams {
    float scale = 1.0f;
    BitWidth bits = BitWidth::INT8;

    int qmax() const { return bits == BitWidth::INT8 ? 127 : 7; }
    int qmin() const { return -qmax(); }
};

// Two's-complement codes; INT4 stores two codes per byte, low nibble =
// even index.
struct PackedTensor {
    BitWidth bits = BitWidth::INT8;
    QuantParams params;
    Shape shape;
    std::vector<uint8_t> codes;

    int64_t elems() const { return shape_elems(shape); }
    uint64_t byte_size() const { return codes.size(); }
};

inline int8_t unpack_int4(const uint8_t* bytes, size_t index) {
    uint8_t nib = (bytes[index >> 1] >> ((index & 1) * 4)) & 0xF;
    return static_cast<int8_t>((nib ^ 8) - 8);  // sign-extend 4 -> 8 bits
}

inline int8_t packed_code(const PackedTensor& t, size_t index) {
    if (t.bits == BitWidth::INT8) return static_cast<int8_t>(t.codes[index]);
    return unpack_int4(t.codes.data(), index);
}

std::vector<uint8_t> pack_int4(const std::vector<int8_t>& codes);
std::vector<int8_t> unpack_int4_all(const std::vector<uint8_t>& bytes, size_t count);

// code_i = clamp(round-half-away-from-zero(w_i / scale), qmin, qmax) with
// scale = max|w| / qmax (scale = 1 for an all-zero tensor).
std::pair<PackedTensor, QuantParams> quantize(const Tensor& weight, BitWidth bits);

// w^_i = code_i * scale.
Tensor dequantize(const PackedTensor& packed);

// A scheme applied to a graph. The base graph stays untouched; quantized
// layers get packed codes and/or their dequantized f32 view depending on
// which execution paths are needed.
enum class Materialize : uint8_t {
    FakeQuant = 1,   // dequantized f32 tensors (accuracy path)
    Packed = 2,      // packed codes only (throughput path)
    Both = 3,
};

struct QuantizedLayer {
    BitWidth bits = BitWidth::FP32;
    PackedTensor packed;          // valid when bits < 32 and Packed requested
    std::vector<float> dequant;   // valid when bits < 32 and FakeQuant requested
};

struct QuantizedModel {
    const ModelGraph* graph = nullptr;
    QuantScheme scheme;
    Materialize materialized = Materialize::FakeQuant;
    // Indexed by graph layer index; empty entries for non-quantizable or
    // FP32-scheme layers.
    std::vector<QuantizedLayer> layers;

    // Effective f32 weights of layer i (fake-quant path).
    const float* effective_weights(size_t layer_index) const;
};

QuantizedModel apply_scheme(const ModelGraph& graph, const QuantScheme& scheme,
                            Materialize mat = Materialize::FakeQuant);

}  // namespace aiq
