#include <doctest.h>

#include <cmath>

#include "aiq/quant.hpp"
#include "aiq/rng.hpp"
#include "aiq/zoo.hpp"
#include "test_support.hpp"

using namespace aiq;

TEST_CASE("quantize: frozen examples") {
    // scale = max|w| / 127; -63.5 rounds away from zero
    auto [p8, q8] = quantize(Tensor({3}, {1.0f, -0.5f, 0.25f}), BitWidth::INT8);
    CHECK(q8.scale == 1.0f / 127.0f);
    CHECK(packed_code(p8, 0) == 127);
    CHECK(packed_code(p8, 1) == -64);
    CHECK(packed_code(p8, 2) == 32);

    // all-zero tensor: scale convention 1, codes 0
    auto [pz, qz] = quantize(Tensor({4}, {0, 0, 0, 0}), BitWidth::INT4);
    CHECK(qz.scale == 1.0f);
    for (int i = 0; i < 4; ++i) CHECK(packed_code(pz, static_cast<size_t>(i)) == 0);

    // single extreme maps to qmin
    auto [pm, qm] = quantize(Tensor({1}, {-2.0f}), BitWidth::INT4);
    CHECK(qm.scale == 2.0f / 7.0f);
    CHECK(packed_code(pm, 0) == -7);

    // codes [127] with scale 1/127 dequantize to exactly 1.0
    Tensor back = dequantize(p8);
    CHECK(back.data[0] == 1.0f);
}

TEST_CASE("quantize symmetry: negated weights give negated codes") {
    for (uint64_t seed = 1; seed <= 8; ++seed) {
        Tensor w = test::random_tensor({64}, seed, 0.7f);
        Tensor neg = w;
        for (float& v : neg.data) v = -v;
        for (BitWidth bits : {BitWidth::INT8, BitWidth::INT4}) {
            auto [pw, qw] = quantize(w, bits);
            auto [pn, qn] = quantize(neg, bits);
            CHECK(qw.scale == qn.scale);
            for (size_t i = 0; i < w.data.size(); ++i)
                CHECK(packed_code(pw, i) == -packed_code(pn, i));
        }
    }
}

TEST_CASE("round-trip error bound: |w - dequant(quant(w))| <= scale/2 + ulp") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Tensor w = test::random_tensor({257}, seed * 31, 2.5f);  // odd length
        for (BitWidth bits : {BitWidth::INT8, BitWidth::INT4}) {
            auto [packed, params] = quantize(w, bits);
            Tensor back = dequantize(packed);
            const float bound = params.scale * 0.5f * (1.0f + 1e-5f) + 1e-7f;
            for (size_t i = 0; i < w.data.size(); ++i)
                CHECK(std::fabs(w.data[i] - back.data[i]) <= bound);
        }
    }
}

TEST_CASE("int4 max error on random tensors stays under max|w|/14 plus slack") {
    for (uint64_t seed = 40; seed < 46; ++seed) {
        Tensor w = test::random_tensor({128}, seed, 1.3f);
        float max_abs = 0;
        for (float v : w.data) max_abs = std::max(max_abs, std::fabs(v));
        auto [packed, params] = quantize(w, BitWidth::INT4);
        Tensor back = dequantize(packed);
        float max_err = 0;  // brute-force scan
        for (size_t i = 0; i < w.data.size(); ++i)
            max_err = std::max(max_err, std::fabs(w.data[i] - back.data[i]));
        CHECK(max_err <= max_abs / 14.0f * (1.0f + 1e-5f) + 1e-6f);
    }
}

TEST_CASE("int4 pack/unpack is a bijection over all byte values") {
    // every byte decodes to two codes that re-encode to the same byte
    for (int byte = 0; byte < 256; ++byte) {
        uint8_t b = static_cast<uint8_t>(byte);
        int8_t lo = unpack_int4(&b, 0);
        int8_t hi = unpack_int4(&b, 1);
        CHECK(lo >= -8);
        CHECK(lo <= 7);
        std::vector<uint8_t> repacked = pack_int4({lo, hi});
        CHECK(repacked.size() == 1);
        CHECK(repacked[0] == b);
    }
    // and code vectors round-trip through packing, odd lengths included
    for (uint64_t seed = 1; seed <= 4; ++seed) {
        Pcg32 rng(seed);
        std::vector<int8_t> codes(101);
        for (int8_t& c : codes) c = static_cast<int8_t>(static_cast<int>(rng.next_below(15)) - 7);
        CHECK(unpack_int4_all(pack_int4(codes), codes.size()) == codes);
    }
}

TEST_CASE("quantize determinism") {
    Tensor w = test::random_tensor({333}, 777, 0.4f);
    auto [p1, q1] = quantize(w, BitWidth::INT8);
    auto [p2, q2] = quantize(w, BitWidth::INT8);
    CHECK(p1.codes == p2.codes);
    CHECK(q1.scale == q2.scale);
}

TEST_CASE("apply_scheme") {
    ModelGraph graph = build_toy_model(21);
    const size_t L = graph.num_quantizable();

    SUBCASE("all-FP32 leaves weights bit-identical") {
        QuantizedModel model = apply_scheme(graph, QuantScheme::all_fp32(L));
        auto idx = quantizable_layer_indices(graph);
        for (size_t i : idx) {
            const float* eff = model.effective_weights(i);
            CHECK(eff == graph.layers[i].weight->data.data());
        }
    }

    SUBCASE("wrong length raises LengthMismatch") {
        try {
            apply_scheme(graph, QuantScheme::all_fp32(L + 1));
            FAIL("expected LengthMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::LengthMismatch);
        }
    }

    SUBCASE("quantized layers expose dequantized weights") {
        QuantScheme q = QuantScheme::uniform(L, BitWidth::INT8);
        QuantizedModel model = apply_scheme(graph, q, Materialize::Both);
        auto idx = quantizable_layer_indices(graph);
        for (size_t i : idx) {
            const Tensor& w = *graph.layers[i].weight;
            const float* eff = model.effective_weights(i);
            auto [packed, params] = quantize(w, BitWidth::INT8);
            for (int64_t j = 0; j < w.elems(); ++j) {
                float expected = static_cast<float>(packed_code(packed, static_cast<size_t>(j))) *
                                 params.scale;
                CHECK(eff[j] == expected);
            }
            // packed codes agree with a fresh quantization
            CHECK(model.layers[i].packed.codes == packed.codes);
        }
    }
}
