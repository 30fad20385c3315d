#include <doctest.h>

#include <fstream>

#include "aiq/model_io.hpp"
#include "aiq/zoo.hpp"
#include "test_support.hpp"

using namespace aiq;

TEST_CASE("shape inference: conv, pool, flatten") {
    // same-pad stride 1 keeps the spatial size
    CHECK(derive_output_shape(Conv2d{3, 3, 1, 1, 16, 16, 1}, {16, 32, 32}, "c") == Shape{16, 32, 32});
    // floor((H + 2p - k) / s) + 1
    CHECK(derive_output_shape(Conv2d{3, 3, 2, 1, 16, 32, 1}, {16, 32, 32}, "c") == Shape{32, 16, 16});
    CHECK(derive_output_shape(GlobalAvgPool{}, {64, 8, 8}, "g") == Shape{64, 1, 1});
    CHECK(derive_output_shape(AvgPool2d{2, 2}, {8, 16, 16}, "p") == Shape{8, 8, 8});
    CHECK(derive_output_shape(Flatten{}, {64, 1, 1}, "f") == Shape{64});
    CHECK(derive_output_shape(Linear{64, 10}, {64}, "l") == Shape{10});
    CHECK_THROWS_AS(derive_output_shape(Linear{32, 10}, {64}, "l"), Error);
}

TEST_CASE("shape inference is idempotent") {
    ModelGraph graph = build_mini_resnet(3);
    ModelGraph copy = graph;
    infer_shapes(copy);
    infer_shapes(copy);
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        CHECK(copy.layers[i].input_shape == graph.layers[i].input_shape);
        CHECK(copy.layers[i].output_shape == graph.layers[i].output_shape);
    }
}

TEST_CASE("quantizable layer ordering") {
    ModelGraph tiny = test::tiny_linear_model();
    CHECK(quantizable_layers(tiny) == std::vector<std::string>{"fc"});
    CHECK(tiny.num_quantizable() == 1);

    ModelGraph r20 = build_resnet20({.seed = 2});
    auto ids = quantizable_layers(r20);
    CHECK(ids.size() == 20);  // 19 convs + linear head
    CHECK(ids.front() == "c1");
    CHECK(ids.back() == "lin");

    // degenerate: no quantizable layers
    ModelGraph none;
    none.name = "pool-only";
    none.input_shape = {4, 4, 4};
    Layer pool;
    pool.id = "p";
    pool.kind = AvgPool2d{2, 2};
    none.layers.push_back(std::move(pool));
    infer_shapes(none);
    CHECK(quantizable_layers(none).empty());
}

TEST_CASE("model family layer counts") {
    CHECK(build_heavy_early_resnet20(1).num_quantizable() == 20);
    CHECK(build_plainconv20().num_quantizable() == 21);  // 20 convs + classifier
    CHECK(build_toy_model(5).num_quantizable() == 4);
}

TEST_CASE("manifest and weights round trip") {
    auto dir = test::temp_dir("model-io");
    ModelGraph graph = build_mini_resnet(4);
    save_model(graph, (dir / "m.json").string(), (dir / "m.aiqw").string());
    ModelGraph loaded = load_model((dir / "m.json").string(), (dir / "m.aiqw").string());

    CHECK(loaded.name == graph.name);
    CHECK(loaded.layers.size() == graph.layers.size());
    CHECK(quantizable_layers(loaded) == quantizable_layers(graph));
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        CHECK(loaded.layers[i].id == graph.layers[i].id);
        CHECK(loaded.layers[i].output_shape == graph.layers[i].output_shape);
        if (graph.layers[i].weight) {
            REQUIRE(loaded.layers[i].weight);
            CHECK(loaded.layers[i].weight->data == graph.layers[i].weight->data);  // byte-identical
        }
    }

    // a second save produces byte-identical weights
    save_model(loaded, (dir / "m2.json").string(), (dir / "m2.aiqw").string());
    std::ifstream a((dir / "m.aiqw").string(), std::ios::binary);
    std::ifstream b((dir / "m2.aiqw").string(), std::ios::binary);
    std::string abytes((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string bbytes((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(abytes == bbytes);
}

TEST_CASE("load_model error paths") {
    auto dir = test::temp_dir("model-err");
    ModelGraph graph = test::tiny_linear_model();
    save_model(graph, (dir / "ok.json").string(), (dir / "ok.aiqw").string());

    SUBCASE("missing tensor") {
        // manifest references a tensor that the container does not hold
        ModelGraph other = graph;
        other.layers[0].id = "renamed";
        save_model(other, (dir / "renamed.json").string(), (dir / "renamed.aiqw").string());
        try {
            load_model((dir / "ok.json").string(), (dir / "renamed.aiqw").string());
            FAIL("expected MissingTensor");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingTensor);
        }
    }

    SUBCASE("malformed manifest") {
        std::ofstream bad((dir / "bad.json").string());
        bad << "{ not json";
        bad.close();
        try {
            load_model((dir / "bad.json").string(), (dir / "ok.aiqw").string());
            FAIL("expected MalformedManifest");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedManifest);
        }
    }

    SUBCASE("non-finite weight") {
        ModelGraph nan_graph = test::tiny_linear_model();
        nan_graph.layers[0].weight->data[1] = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_AS(validate_model(nan_graph), Error);
    }

    SUBCASE("add with mismatched source shape") {
        ModelGraph g2;
        g2.name = "bad-add2";
        g2.input_shape = {4, 8, 8};
        Layer relu;
        relu.id = "r";
        relu.kind = ReLU{};
        g2.layers.push_back(std::move(relu));
        Layer pool2;
        pool2.id = "pool";
        pool2.kind = AvgPool2d{2, 2};
        g2.layers.push_back(std::move(pool2));
        Layer add2;
        add2.id = "add";
        add2.kind = Add{0};  // source shape (4,8,8) != pooled (4,4,4)
        g2.layers.push_back(std::move(add2));
        try {
            infer_shapes(g2);
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
}

TEST_CASE("aiqw container rejects truncation") {
    auto dir = test::temp_dir("aiqw-trunc");
    ModelGraph graph = test::tiny_linear_model();
    save_model(graph, (dir / "m.json").string(), (dir / "m.aiqw").string());
    // truncate the payload
    std::ifstream in((dir / "m.aiqw").string(), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out((dir / "cut.aiqw").string(), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    out.close();
    try {
        read_aiqw((dir / "cut.aiqw").string());
        FAIL("expected MalformedFile");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedFile);
    }
}
