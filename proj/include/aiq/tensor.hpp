#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aiq/error.hpp"

namespace aiq {

using Shape = std::vector<int64_t>;

inline int64_t shape_elems(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return s.empty() ? 0 : n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major f32 tensor. All weights and activations are f32 at rest;
// packed low-precision storage lives in PackedTensor.
struct Tensor {
    Shape shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(static_cast<size_t>(shape_elems(shape)), 0.0f) {}
    Tensor(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != shape_elems(shape))
            throw Error(ErrorCode::ShapeMismatch,
                        "tensor data size " + std::to_string(data.size()) + " vs shape " + shape_str(shape));
    }

    int64_t elems() const { return static_cast<int64_t>(data.size()); }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

}  // namespace aiq
