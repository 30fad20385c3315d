#include "aiq/zoo.hpp"

#include <algorithm>
#include <cmath>

#include "aiq/infer.hpp"
#include "aiq/rng.hpp"

namespace aiq {

namespace {

Tensor gaussian_tensor(Shape shape, float sigma, Pcg32& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = sigma * rng.next_gaussian();
    return t;
}

// Kaiming-style fan-in scaling keeps activations O(1) through deep stacks.
float he_sigma(int64_t fan_in) { return std::sqrt(2.0f / static_cast<float>(fan_in)); }

Layer conv_layer(const std::string& id, int in_c, int out_c, int k, int stride, int pad, Pcg32& rng) {
    Layer layer;
    layer.id = id;
    layer.kind = Conv2d{k, k, stride, pad, in_c, out_c, 1};
    layer.weight = gaussian_tensor({out_c, in_c, k, k}, he_sigma(static_cast<int64_t>(in_c) * k * k), rng);
    return layer;
}

Layer bn_layer(const std::string& id, int channels) {
    Layer layer;
    layer.id = id;
    layer.kind = BatchNorm2d{channels};
    Tensor params({4, channels});
    for (int c = 0; c < channels; ++c) {
        params.data[static_cast<size_t>(c)] = 1.0f;              // gamma
        params.data[static_cast<size_t>(channels + c)] = 0.0f;   // beta
        params.data[static_cast<size_t>(2 * channels + c)] = 0.0f;  // running mean
        params.data[static_cast<size_t>(3 * channels + c)] = 1.0f;  // running var
    }
    layer.weight = std::move(params);
    return layer;
}

Layer relu_layer(const std::string& id) { return Layer{id, ReLU{}, {}, {}, {}, {}}; }

Layer linear_layer(const std::string& id, int in_f, int out_f, Pcg32& rng) {
    Layer layer;
    layer.id = id;
    layer.kind = Linear{in_f, out_f};
    layer.weight = gaussian_tensor({out_f, in_f}, he_sigma(in_f), rng);
    layer.bias = Tensor({out_f});
    return layer;
}

}  // namespace

ModelGraph build_resnet20(const ResnetConfig& config) {
    Pcg32 rng(config.seed, 0x853c49e6748fea9bull);
    ModelGraph graph;
    graph.name = config.name;
    graph.input_shape = {3, config.hw, config.hw};

    const int stem = config.widths[0];
    graph.layers.push_back(conv_layer("c1", 3, stem, 3, 1, 1, rng));
    graph.layers.push_back(bn_layer("c1.bn", stem));
    graph.layers.push_back(relu_layer("c1.relu"));

    int in_c = stem;
    for (int stage = 1; stage <= 3; ++stage) {
        const int width = config.widths[static_cast<size_t>(stage)];
        for (int block = 0; block < 3; ++block) {
            const std::string prefix = std::to_string(stage) + "." + std::to_string(block);
            const int stride = (stage > 1 && block == 0) ? 2 : 1;
            const bool skip = (in_c == width && stride == 1);
            const int block_input = static_cast<int>(graph.layers.size()) - 1;

            graph.layers.push_back(conv_layer(prefix + "c1", in_c, width, 3, stride, 1, rng));
            graph.layers.push_back(bn_layer(prefix + "c1.bn", width));
            graph.layers.push_back(relu_layer(prefix + "c1.relu"));
            graph.layers.push_back(conv_layer(prefix + "c2", width, width, 3, 1, 1, rng));
            graph.layers.push_back(bn_layer(prefix + "c2.bn", width));
            if (skip) {
                Layer add;
                add.id = prefix + ".add";
                add.kind = Add{block_input};
                graph.layers.push_back(std::move(add));
            }
            graph.layers.push_back(relu_layer(prefix + ".relu"));
            in_c = width;
        }
    }

    Layer gap;
    gap.id = "gap";
    gap.kind = GlobalAvgPool{};
    graph.layers.push_back(std::move(gap));
    Layer flat;
    flat.id = "flat";
    flat.kind = Flatten{};
    graph.layers.push_back(std::move(flat));
    graph.layers.push_back(linear_layer("lin", in_c, config.classes, rng));

    infer_shapes(graph);
    validate_model(graph);
    return graph;
}

ModelGraph build_plainconv20(int width, int64_t hw, int classes, uint64_t seed) {
    Pcg32 rng(seed, 0xc0ffee1234567891ull);
    ModelGraph graph;
    graph.name = "plainconv20";
    graph.input_shape = {3, hw, hw};

    int in_c = 3;
    for (int i = 0; i < 20; ++i) {
        const std::string id = "f" + std::to_string(3 * i);
        graph.layers.push_back(conv_layer(id, in_c, width, 3, 1, 1, rng));
        graph.layers.push_back(bn_layer(id + ".bn", width));
        graph.layers.push_back(relu_layer(id + ".relu"));
        in_c = width;
        if (i == 6 || i == 13) {
            Layer pool;
            pool.id = "pool" + std::to_string(i);
            pool.kind = AvgPool2d{2, 2};
            graph.layers.push_back(std::move(pool));
        }
    }

    Layer gap;
    gap.id = "gap";
    gap.kind = GlobalAvgPool{};
    graph.layers.push_back(std::move(gap));
    Layer flat;
    flat.id = "flat";
    flat.kind = Flatten{};
    graph.layers.push_back(std::move(flat));
    graph.layers.push_back(linear_layer("cls", width, classes, rng));

    infer_shapes(graph);
    validate_model(graph);
    return graph;
}

ModelGraph build_toy_model(uint64_t seed) {
    Pcg32 rng(seed, 0xabcdef0123456789ull);
    ModelGraph graph;
    graph.name = "toy-" + std::to_string(seed);
    graph.input_shape = {3, 8, 8};

    const int c1 = 4 + static_cast<int>(rng.next_below(4));   // 4..7
    const int c2 = 4 + static_cast<int>(rng.next_below(5));   // 4..8
    const int f1 = 8 + static_cast<int>(rng.next_below(9));   // 8..16

    graph.layers.push_back(conv_layer("conv1", 3, c1, 3, 1, 1, rng));
    graph.layers.push_back(relu_layer("conv1.relu"));
    graph.layers.push_back(conv_layer("conv2", c1, c2, 3, 2, 1, rng));
    graph.layers.push_back(relu_layer("conv2.relu"));
    Layer gap;
    gap.id = "gap";
    gap.kind = GlobalAvgPool{};
    graph.layers.push_back(std::move(gap));
    Layer flat;
    flat.id = "flat";
    flat.kind = Flatten{};
    graph.layers.push_back(std::move(flat));
    graph.layers.push_back(linear_layer("fc1", c2, f1, rng));
    graph.layers.push_back(relu_layer("fc1.relu"));
    graph.layers.push_back(linear_layer("fc2", f1, 4, rng));

    infer_shapes(graph);
    validate_model(graph);
    return graph;
}

Dataset toy_dataset(uint64_t seed, int64_t n) {
    SyntheticConfig cfg;
    cfg.seed = seed ^ 0x5eedull;
    cfg.n = n;
    cfg.classes = 4;
    cfg.c = 3;
    cfg.h = 8;
    cfg.w = 8;
    cfg.noise = 0.8f;
    cfg.grid = 3;
    return synthetic_dataset(cfg);
}

ModelGraph build_bench_mlp(const BenchMlpConfig& config) {
    Pcg32 rng(config.seed, 0xbe9c4412ull);
    ModelGraph graph;
    graph.name = config.name;
    graph.input_shape = {3, 16, 16};
    const int in_f = 3 * 16 * 16;
    const int D = config.wide;
    const int d = config.narrow;

    // Layer plan: entry -> giants with a narrow trap trio after every
    // second giant -> head. Giant count is chosen to reach the byte target.
    const uint64_t giant_bytes = static_cast<uint64_t>(D) * D * 4;
    uint64_t fixed_bytes = static_cast<uint64_t>(in_f) * D * 4 + static_cast<uint64_t>(D) * config.classes * 4;
    int giants = static_cast<int>((config.target_weight_bytes > fixed_bytes
                                       ? (config.target_weight_bytes - fixed_bytes + giant_bytes - 1) /
                                             giant_bytes
                                       : 1));
    giants = std::max(giants, 2);
    const int traps = std::max(1, (giants - 1) / 2);

    Layer flat;
    flat.id = "flat";
    flat.kind = Flatten{};
    graph.layers.push_back(std::move(flat));
    graph.layers.push_back(linear_layer("entry", in_f, D, rng));
    graph.layers.push_back(relu_layer("entry.relu"));

    int placed_traps = 0;
    std::vector<size_t> trap_layer_indices;
    std::vector<size_t> trap_exit_indices;
    for (int g = 0; g < giants; ++g) {
        const std::string id = "g" + std::to_string(g);
        graph.layers.push_back(linear_layer(id, D, D, rng));
        graph.layers.push_back(relu_layer(id + ".relu"));
        const bool want_trap = (g % 2 == 1) && placed_traps < traps;
        if (want_trap) {
            const std::string t = "t" + std::to_string(placed_traps);
            graph.layers.push_back(linear_layer(t + ".in", D, d, rng));
            graph.layers.push_back(relu_layer(t + ".in.relu"));
            graph.layers.push_back(linear_layer(t, d, d, rng));
            trap_layer_indices.push_back(graph.layers.size() - 1);
            graph.layers.push_back(relu_layer(t + ".relu"));
            graph.layers.push_back(linear_layer(t + ".out", d, D, rng));
            trap_exit_indices.push_back(graph.layers.size() - 1);
            graph.layers.push_back(relu_layer(t + ".out.relu"));
            ++placed_traps;
        }
    }
    graph.layers.push_back(linear_layer("head", D, config.classes, rng));

    // Plant the quantization traps: outliers in row 0 of each trap layer,
    // with the consuming column zeroed downstream so the FP32 function is
    // unaffected.
    for (size_t t = 0; t < trap_layer_indices.size(); ++t) {
        Tensor& w = *graph.layers[trap_layer_indices[t]].weight;
        float max_abs = 0.0f;
        for (float v : w.data) max_abs = std::max(max_abs, std::fabs(v));
        w.data[0] = 200.0f * max_abs;
        w.data[1] = -200.0f * max_abs;
        Tensor& exit = *graph.layers[trap_exit_indices[t]].weight;
        // exit is [D, d] row-major; zero column 0
        for (int r = 0; r < D; ++r) exit.data[static_cast<size_t>(r) * d] = 0.0f;
    }

    infer_shapes(graph);
    validate_model(graph);
    return graph;
}

Dataset self_labeled_dataset(const ModelGraph& graph, int64_t n, uint64_t seed, double margin_quantile) {
    const int64_t candidates = n * 3;
    const int64_t chw = shape_elems(graph.input_shape);

    Dataset pool;
    pool.n = candidates;
    pool.c = graph.input_shape.size() == 3 ? graph.input_shape[0] : 1;
    pool.h = graph.input_shape.size() == 3 ? graph.input_shape[1] : 1;
    pool.w = graph.input_shape.size() == 3 ? graph.input_shape[2] : chw;
    Pcg32 rng(seed, 0x7ab3d2f1ull);
    pool.images.resize(static_cast<size_t>(candidates) * chw);
    for (float& v : pool.images) v = rng.next_gaussian();
    pool.labels.assign(static_cast<size_t>(candidates), 0);

    QuantizedModel fp32 = apply_scheme(graph, QuantScheme::all_fp32(graph.num_quantizable()));
    const int batch = static_cast<int>(std::min<int64_t>(16, candidates));
    Engine engine(fp32, batch);
    const int64_t classes = engine.logit_dim();

    std::vector<float> margins(static_cast<size_t>(candidates));
    for (int64_t begin = 0; begin < candidates; begin += batch) {
        const int cur = static_cast<int>(std::min<int64_t>(batch, candidates - begin));
        const float* logits = engine.forward(pool.images.data() + begin * chw, cur);
        for (int s = 0; s < cur; ++s) {
            const float* row = logits + s * classes;
            int64_t best = 0;
            for (int64_t k = 1; k < classes; ++k)
                if (row[k] > row[best]) best = k;
            float second = -1e30f;
            for (int64_t k = 0; k < classes; ++k)
                if (k != best) second = std::max(second, row[k]);
            pool.labels[static_cast<size_t>(begin + s)] = static_cast<uint16_t>(best);
            margins[static_cast<size_t>(begin + s)] = row[best] - second;
        }
    }

    // Keep the widest-margin candidates.
    std::vector<float> sorted = margins;
    std::sort(sorted.begin(), sorted.end());
    const float cutoff = sorted[static_cast<size_t>(margin_quantile * static_cast<double>(candidates))];

    Dataset data;
    data.c = pool.c;
    data.h = pool.h;
    data.w = pool.w;
    data.num_classes = static_cast<int>(classes);
    for (int64_t i = 0; i < candidates && data.n < n; ++i) {
        if (margins[static_cast<size_t>(i)] < cutoff) continue;
        data.images.insert(data.images.end(), pool.images.begin() + i * chw,
                           pool.images.begin() + (i + 1) * chw);
        data.labels.push_back(pool.labels[static_cast<size_t>(i)]);
        ++data.n;
    }
    return data;
}

}  // namespace aiq
