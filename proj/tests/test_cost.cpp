#include <doctest.h>

#include "aiq/cost.hpp"
#include "aiq/rng.hpp"
#include "aiq/zoo.hpp"
#include "test_support.hpp"

using namespace aiq;

// Expected values below were computed by tests/oracle/cost_oracle.py, an
// independent hand-written application of the counting rules.

TEST_CASE("single-layer costs match the hand oracle") {
    ModelGraph tiny = test::tiny_linear_model();
    LayerCost lin = layer_cost(tiny.layers[0], 1);
    CHECK(lin.flops == 16);
    CHECK(lin.weight_bytes(BitWidth::FP32) == 40);  // 32 weight + 8 bias
    CHECK(lin.weight_bytes(BitWidth::INT4) == 12);  // 4 packed + 8 bias
    CHECK(lin.act_in_bytes + lin.act_out_bytes == 24);
    CHECK(lin.flops == layer_cost(tiny.layers[0], 1).flops);  // bit-width independent

    Layer conv;
    conv.id = "c";
    conv.kind = Conv2d{3, 3, 1, 1, 3, 8, 1};
    conv.weight = test::random_tensor({8, 3, 3, 3}, 9);
    conv.input_shape = {3, 16, 16};
    conv.output_shape = {8, 16, 16};
    LayerCost cc = layer_cost(conv, 1);
    CHECK(cc.flops == 110592);
    CHECK(cc.act_in_bytes + cc.act_out_bytes == 11264);
    CHECK(cc.weight_bytes(BitWidth::FP32) == 864);
    CHECK(cc.weight_bytes(BitWidth::INT8) == 216);
    CHECK(cc.weight_bytes(BitWidth::INT4) == 108);

    // odd element count rounds INT4 up to whole bytes
    Layer odd;
    odd.id = "odd";
    odd.kind = Conv2d{3, 3, 1, 1, 3, 1, 1};
    odd.weight = test::random_tensor({1, 3, 3, 3}, 10);
    odd.input_shape = {3, 1, 1};
    odd.output_shape = {1, 1, 1};
    CHECK(layer_cost(odd, 1).weight_bytes(BitWidth::INT4) == 14);

    // relu: 1 flop/elem, no weights
    Layer relu;
    relu.id = "r";
    relu.kind = ReLU{};
    relu.input_shape = {10};
    relu.output_shape = {10};
    LayerCost rc = layer_cost(relu, 1);
    CHECK(rc.flops == 10);
    CHECK(rc.weight_bytes(BitWidth::FP32) == 0);

    CHECK_THROWS_AS(layer_cost(Layer{"x", ReLU{}, {}, {}, {}, {}}, 1), Error);  // shapes missing
}

TEST_CASE("resnet20 fixture global AI matches the oracle") {
    ModelGraph graph = build_resnet20({.seed = 1});
    const size_t L = graph.num_quantizable();
    REQUIRE(L == 20);

    CostReport fp32 = global_ai(graph, QuantScheme::all_fp32(L), 1);
    CostReport int8 = global_ai(graph, QuantScheme::uniform(L, BitWidth::INT8), 1);
    CostReport int4 = global_ai(graph, QuantScheme::uniform(L, BitWidth::INT4), 1);

    CHECK(fp32.global_flops == 20437248);
    CHECK(fp32.global_bytes == 2429200);
    CHECK(int8.global_bytes == 1624192);
    CHECK(int4.global_bytes == 1490024);
    CHECK(fp32.ai == doctest::Approx(8.41315988802898).epsilon(1e-12));
    CHECK(int8.ai == doctest::Approx(12.5830246670344).epsilon(1e-12));
    CHECK(int4.ai == doctest::Approx(13.7160528957923).epsilon(1e-12));
    CHECK(int8.ai / fp32.ai == doctest::Approx(1.49563598392308).epsilon(1e-12));
    CHECK(int4.ai / fp32.ai == doctest::Approx(1.63030931045406).epsilon(1e-12));

    // batch grows the AI toward the activation-dominated asymptote
    CostReport fp32_b4 = global_ai(graph, QuantScheme::all_fp32(L), 4);
    CHECK(fp32_b4.ai == doctest::Approx(12.5832570888865).epsilon(1e-12));
}

TEST_CASE("mini-resnet global AI matches the oracle") {
    ModelGraph graph = build_mini_resnet(1);
    const size_t L = graph.num_quantizable();
    REQUIRE(L == 20);
    CostReport fp32 = global_ai(graph, QuantScheme::all_fp32(L), 1);
    CHECK(fp32.global_flops == 5205120);
    CHECK(fp32.global_bytes == 948912);
    CHECK(fp32.ai == doctest::Approx(5.48535586018514).epsilon(1e-12));
}

TEST_CASE("global_ai validates scheme length and empty models") {
    ModelGraph graph = test::tiny_linear_model();
    CHECK_THROWS_AS(global_ai(graph, QuantScheme::all_fp32(3), 1), Error);

    ModelGraph none;
    none.input_shape = {4};
    Layer relu;
    relu.id = "r";
    relu.kind = ReLU{};
    none.layers.push_back(std::move(relu));
    infer_shapes(none);
    try {
        global_ai(none, QuantScheme{}, 1);
        FAIL("expected EmptyModel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyModel);
    }
}

TEST_CASE("AI monotonicity under coordinate-wise bit reduction") {
    // randomized property: q' <= q coordinate-wise implies AI(q') >= AI(q)
    Pcg32 rng(99);
    const BitWidth widths[3] = {BitWidth::FP32, BitWidth::INT8, BitWidth::INT4};
    ModelGraph graph = build_toy_model(11);
    const size_t L = graph.num_quantizable();
    for (int trial = 0; trial < 300; ++trial) {
        QuantScheme q{std::vector<BitWidth>(L)};
        QuantScheme lower{std::vector<BitWidth>(L)};
        for (size_t i = 0; i < L; ++i) {
            int a = static_cast<int>(rng.next_below(3));
            int b = a + static_cast<int>(rng.next_below(static_cast<uint32_t>(3 - a)));
            q[i] = widths[a];
            lower[i] = widths[b];  // same or fewer bits
        }
        double ai_q = global_ai(graph, q, 1).ai;
        double ai_lower = global_ai(graph, lower, 1).ai;
        CHECK(ai_lower >= ai_q);
    }
}

TEST_CASE("additivity: global bytes equal brute-force per-layer sums") {
    Pcg32 rng(123);
    const BitWidth widths[3] = {BitWidth::FP32, BitWidth::INT8, BitWidth::INT4};
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        ModelGraph graph = build_toy_model(seed);
        const size_t L = graph.num_quantizable();
        QuantScheme q{std::vector<BitWidth>(L)};
        for (size_t i = 0; i < L; ++i) q[i] = widths[rng.next_below(3)];
        CostReport report = global_ai(graph, q, 2);

        uint64_t flops = 0, bytes = 0;
        for (size_t i = 0; i < report.layers.size(); ++i) {
            flops += report.layers[i].flops;
            bytes += report.layers[i].total_bytes(report.layer_bits[i]);
        }
        CHECK(flops == report.global_flops);
        CHECK(bytes == report.global_bytes);
    }
}

TEST_CASE("batch doubling never lowers AI") {
    ModelGraph graph = build_mini_resnet(2);
    const size_t L = graph.num_quantizable();
    for (BitWidth b : {BitWidth::FP32, BitWidth::INT8, BitWidth::INT4}) {
        QuantScheme q = QuantScheme::uniform(L, b);
        for (int batch : {1, 2, 4, 8})
            CHECK(global_ai(graph, q, 2 * batch).ai >= global_ai(graph, q, batch).ai);
    }
}

TEST_CASE("roofline classification") {
    MachineModel machine{10e9, 10e9};  // ridge at 1 FLOP/byte
    CHECK(machine.ridge_point() == doctest::Approx(1.0));

    ModelGraph graph = test::tiny_linear_model();
    CostReport report = global_ai(graph, QuantScheme::all_fp32(1), 1);
    roofline_classify(report, machine);
    // tiny linear: AI = 16 / 64 = 0.25 -> memory-bound, attainable = ai * bw
    CHECK(report.bound[0] == Boundedness::MemoryBound);
    CHECK(report.layer_attainable_flops[0] == doctest::Approx(0.25 * 10e9));
    CHECK(report.model_attainable_flops == doctest::Approx(report.ai * 10e9));
    CHECK(report.attainable_images_per_s ==
          doctest::Approx(report.model_attainable_flops / static_cast<double>(report.global_flops)));

    // attainable never exceeds the compute roof
    MachineModel slow_mem{10e9, 1e6};
    CostReport r2 = global_ai(graph, QuantScheme::all_fp32(1), 1);
    roofline_classify(r2, slow_mem);
    CHECK(r2.model_attainable_flops <= slow_mem.peak_flops);
    CHECK(r2.model_attainable_flops <= r2.ai * slow_mem.mem_bandwidth);

    // a layer exactly at the ridge point counts as compute-bound
    MachineModel at_ridge{1.0, 4.0};  // ridge 0.25 == tiny AI
    CostReport r3 = global_ai(graph, QuantScheme::all_fp32(1), 1);
    roofline_classify(r3, at_ridge);
    CHECK(r3.bound[0] == Boundedness::ComputeBound);

    CHECK_THROWS_AS(roofline_classify(report, MachineModel{0, 1}), Error);
}
