#pragma once

#include <cstdint>
#include <vector>

namespace aiq {

// PCG32: fixed generator so random streams do not depend on the C++
// standard library vendor.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t stream = 0x14057b7ef767814full) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next();
        state_ += seed;
        next();
    }

    uint32_t next() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // uniform in [0, 1)
    float next_float() { return static_cast<float>(next() >> 8) * 0x1.0p-24f; }

    // uniform integer in [0, bound) without modulo bias
    uint32_t next_below(uint32_t bound) {
        uint32_t threshold = (0u - bound) % bound;
        for (;;) {
            uint32_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // N(0,1) via the sum of 12 uniforms; avoids libm so the stream is
    // identical on every platform. Tails truncate at +-6 sigma, which is
    // fine for synthetic data.
    float next_gaussian() {
        float s = 0.0f;
        for (int i = 0; i < 12; ++i) s += next_float();
        return s - 6.0f;
    }

private:
    uint64_t state_;
    uint64_t inc_;
};

template <typename T>
void shuffle(std::vector<T>& v, Pcg32& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.next_below(static_cast<uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

// First k entries of a seeded permutation of [0, n).
std::vector<uint32_t> sample_indices(uint32_t n, uint32_t k, uint64_t seed);

inline std::vector<uint32_t> sample_indices(uint32_t n, uint32_t k, uint64_t seed) {
    std::vector<uint32_t> idx(n);
    for (uint32_t i = 0; i < n; ++i) idx[i] = i;
    Pcg32 rng(seed);
    shuffle(idx, rng);
    if (k < n) idx.resize(k);
    return idx;
}

}  // namespace aiq
