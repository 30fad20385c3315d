#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "aiq/model.hpp"

namespace aiq {

// One entry of an AIQW weights container. dtype is "f32", "i8" or "i4p"
// (int4, two codes per byte, low nibble = even index). Packed dtypes carry
// a per-tensor scale.
struct StoredTensor {
    std::string dtype = "f32";
    Shape shape;
    float scale = 1.0f;
    std::vector<uint8_t> bytes;

    int64_t elems() const { return shape_elems(shape); }
};

using TensorMap = std::map<std::string, StoredTensor>;

// AIQW container: magic "AIQW", u32 LE header length, UTF-8 JSON header
// mapping tensor-id -> {offset, shape, dtype[, scale]}, then raw
// little-endian blobs, each 64-byte aligned. Offsets are absolute.
void write_aiqw(const std::string& path, const TensorMap& tensors);
TensorMap read_aiqw(const std::string& path);

// Manifest JSON + weights container -> validated ModelGraph with shapes
// inferred. Packed tensors are materialized to f32 by dequantization.
ModelGraph load_model(const std::string& manifest_path, const std::string& weights_path);

// Inverse of load_model. Weight round-trips are byte-identical for f32
// containers; the manifest round-trips semantically.
void save_model(const ModelGraph& graph, const std::string& manifest_path, const std::string& weights_path);

// Manifest-only halves, used by tools that stage weights separately.
ModelGraph manifest_from_json_text(const std::string& text);
std::string manifest_to_json_text(const ModelGraph& graph);

}  // namespace aiq
