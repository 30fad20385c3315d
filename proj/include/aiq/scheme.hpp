#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aiq/error.hpp"

namespace aiq {

// Allowed per-layer bit-widths. INT4 weights pack two per byte.
enum class BitWidth : uint8_t { FP32 = 32, INT8 = 8, INT4 = 4 };

inline int bit_count(BitWidth b) { return static_cast<int>(b); }

inline BitWidth bitwidth_from_int(int bits) {
    switch (bits) {
        case 32: return BitWidth::FP32;
        case 8: return BitWidth::INT8;
        case 4: return BitWidth::INT4;
        default: throw Error(ErrorCode::ConfigInvalid, "unsupported bit-width " + std::to_string(bits));
    }
}

// Per-layer bit-width vector, indexed by quantizable-layer order.
struct QuantScheme {
    std::vector<BitWidth> bits;

    QuantScheme() = default;
    explicit QuantScheme(std::vector<BitWidth> b) : bits(std::move(b)) {}

    static QuantScheme uniform(size_t n, BitWidth b) { return QuantScheme(std::vector<BitWidth>(n, b)); }
    static QuantScheme all_fp32(size_t n) { return uniform(n, BitWidth::FP32); }

    size_t size() const { return bits.size(); }
    BitWidth operator[](size_t i) const { return bits[i]; }
    BitWidth& operator[](size_t i) { return bits[i]; }
    bool operator==(const QuantScheme& other) const { return bits == other.bits; }

    size_t quantized_count() const {
        size_t k = 0;
        for (BitWidth b : bits)
            if (b != BitWidth::FP32) ++k;
        return k;
    }

    std::string str() const {
        std::string out;
        for (size_t i = 0; i < bits.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(bit_count(bits[i]));
        }
        return out;
    }

    static QuantScheme parse(const std::string& text) {
        QuantScheme q;
        size_t pos = 0;
        while (pos < text.size()) {
            size_t comma = text.find(',', pos);
            if (comma == std::string::npos) comma = text.size();
            q.bits.push_back(bitwidth_from_int(std::stoi(text.substr(pos, comma - pos))));
            pos = comma + 1;
        }
        return q;
    }
};

inline void check_scheme_length(const QuantScheme& scheme, size_t num_quantizable) {
    if (scheme.size() != num_quantizable)
        throw Error(ErrorCode::LengthMismatch, "scheme length " + std::to_string(scheme.size()) +
                                                   " != quantizable layer count " +
                                                   std::to_string(num_quantizable));
}

}  // namespace aiq
