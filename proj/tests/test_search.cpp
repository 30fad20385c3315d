#include <doctest.h>

#include <cmath>

#include "aiq/search.hpp"
#include "aiq/zoo.hpp"
#include "test_support.hpp"

using namespace aiq;

namespace {

SearchConfig toy_config(float lambda = 0.9f) {
    SearchConfig cfg;
    cfg.lambda = lambda;
    cfg.subset_size = 0;  // exact evaluation on the full toy set
    cfg.seed = 5;
    cfg.eval_batch = 32;
    return cfg;
}

bool relative_close(float value, float reference, double tol) {
    return std::fabs(static_cast<double>(value) - reference) <=
           tol * std::max(1e-12, std::fabs(static_cast<double>(reference)));
}

}  // namespace

TEST_CASE("loss formula endpoints and frozen value") {
    Objective obj;
    obj.lambda = 1.0f;
    obj.baseline_ai = 5.0f;
    CHECK(obj.loss(10.0f, 50.0f) == doctest::Approx(-10.0f));  // pure AI maximization

    obj.lambda = 0.0f;
    CHECK(obj.loss(10.0f, 2.5f) == doctest::Approx(2.5f));  // pure accuracy

    obj.lambda = 0.9f;
    obj.normalization = AiNormalization::None;
    CHECK(obj.loss(10.0f, 2.0f) == doctest::Approx(-8.8f));  // -0.9*10 + 0.1*2

    obj.normalization = AiNormalization::BaselineRelative;
    CHECK(obj.loss(10.0f, 2.0f) == doctest::Approx(-0.9f * 2.0f + 0.1f * 2.0f));

    Objective bad;
    bad.lambda = 1.5f;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("greedy accepts the forced single move on an L=1 model") {
    ModelGraph graph = test::tiny_linear_model();
    Dataset data;
    data.n = 8;
    data.c = 4;
    data.h = 1;
    data.w = 1;
    data.images.assign(32, 0.25f);
    data.labels = {0, 0, 0, 0, 0, 0, 0, 0};
    data.num_classes = 2;

    SearchConfig cfg = toy_config(1.0f);  // pure AI: INT4 strictly improves
    SearchTrace trace = greedy_search(graph, data, cfg);
    REQUIRE(!trace.steps.empty());
    CHECK(trace.steps[0].accepted);
    CHECK(trace.final_record.scheme == QuantScheme::uniform(1, BitWidth::INT4));
}

TEST_CASE("lambda=1 endpoint: both algorithms reach all-INT4") {
    ModelGraph graph = build_toy_model(7);
    Dataset data = toy_dataset(7);
    SearchConfig cfg = toy_config(1.0f);

    SearchTrace g = greedy_search(graph, data, cfg);
    SearchTrace c = coordinate_descent(graph, data, cfg);
    QuantScheme all4 = QuantScheme::uniform(graph.num_quantizable(), BitWidth::INT4);
    CHECK(g.final_record.scheme == all4);
    CHECK(c.final_record.scheme == all4);
}

TEST_CASE("lambda=0 never ends with positive accuracy loss") {
    for (uint64_t seed : {3ull, 9ull}) {
        ModelGraph graph = build_toy_model(seed);
        Dataset data = toy_dataset(seed);
        SearchConfig cfg = toy_config(0.0f);
        for (auto* search : {&greedy_search, &coordinate_descent}) {
            SearchTrace trace = (*search)(graph, data, cfg);
            CHECK(trace.final_record.acc_loss_pp <= 0.0f);
        }
    }
}

TEST_CASE("accepted-move losses strictly decrease along the trace") {
    ModelGraph graph = build_toy_model(13);
    Dataset data = toy_dataset(13);
    SearchConfig cfg = toy_config(0.9f);
    for (auto* search : {&greedy_search, &coordinate_descent}) {
        SearchTrace trace = (*search)(graph, data, cfg);
        float last = trace.baseline.loss;
        for (const TraceStep& step : trace.steps) {
            if (!step.accepted) continue;
            CHECK(step.delta_loss < 0.0f);
            CHECK(step.record.loss < last);
            last = step.record.loss;
        }
        // search never ends worse than q^FP
        REQUIRE(!trace.steps.empty());
        float best = trace.baseline.loss;
        for (const TraceStep& step : trace.steps)
            if (step.accepted) best = std::min(best, step.record.loss);
        CHECK(best <= trace.baseline.loss);
    }
}

TEST_CASE("exhaustive search: enumeration count, ties, cap") {
    ModelGraph graph;
    graph.name = "two-linear";
    graph.input_shape = {4};
    Layer a;
    a.id = "a";
    a.kind = Linear{4, 4};
    a.weight = test::random_tensor({4, 4}, 1);
    graph.layers.push_back(std::move(a));
    Layer b;
    b.id = "b";
    b.kind = Linear{4, 2};
    b.weight = test::random_tensor({2, 4}, 2);
    graph.layers.push_back(std::move(b));
    infer_shapes(graph);

    Dataset data;
    data.n = 4;
    data.c = 4;
    data.h = 1;
    data.w = 1;
    data.images.assign(16, 0.5f);
    data.labels = {0, 1, 0, 1};
    data.num_classes = 2;

    SearchConfig cfg = toy_config(1.0f);
    cfg.cache = false;
    EvalRecord best = exhaustive_search(graph, data, cfg);
    CHECK(best.evals_used == 9);  // 3^2 enumerations
    CHECK(best.scheme == QuantScheme::uniform(2, BitWidth::INT4));  // AI monotonicity at lambda=1

    cfg.exhaustive_cap = 8;
    try {
        exhaustive_search(graph, data, cfg);
        FAIL("expected SpaceTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpaceTooLarge);
    }

    // 20 layers always exceed the default cap
    ModelGraph r20 = build_resnet20({.seed = 4});
    SyntheticConfig dc;
    dc.n = 8;
    Dataset d20 = synthetic_dataset(dc);
    SearchConfig cfg20 = toy_config(0.9f);
    try {
        exhaustive_search(r20, d20, cfg20);
        FAIL("expected SpaceTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpaceTooLarge);
    }
}

TEST_CASE("greedy and coordinate descent track the exhaustive optimum on toys") {
    int checked = 0;
    for (uint64_t seed = 1; seed <= 6; ++seed) {
        ModelGraph graph = build_toy_model(seed);
        REQUIRE(graph.num_quantizable() == 4);
        Dataset data = toy_dataset(seed);
        SearchConfig cfg = toy_config(0.9f);

        EvalRecord opt = exhaustive_search(graph, data, cfg);
        SearchConfig cfg_local = cfg;
        cfg_local.final_full_eval = true;
        SearchTrace g = greedy_search(graph, data, cfg_local);
        SearchTrace c = coordinate_descent(graph, data, cfg_local);

        CHECK(relative_close(g.final_record.loss, opt.loss, 0.05));
        CHECK(relative_close(c.final_record.loss, opt.loss, 0.05));
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("coordinate descent ends at a single-coordinate local minimum") {
    ModelGraph graph = build_toy_model(17);
    Dataset data = toy_dataset(17);
    SearchConfig cfg = toy_config(0.9f);
    SearchTrace trace = coordinate_descent(graph, data, cfg);

    SchemeEvaluator ev(graph, data, cfg);
    const QuantScheme& q = trace.final_record.scheme;
    float incumbent = ev.record(q, ev.measure(q), ev.baseline().accuracy).loss;
    for (size_t i = 0; i < q.size(); ++i) {
        for (BitWidth b : cfg.bit_set) {
            if (b == q[i]) continue;
            QuantScheme probe = q;
            probe[i] = b;
            float loss = ev.record(probe, ev.measure(probe), ev.baseline().accuracy).loss;
            CHECK(loss >= incumbent);
        }
    }
}

TEST_CASE("ties keep the current bit-width in coordinate descent") {
    // lambda=0 and a dataset every scheme classifies identically: all moves
    // are loss-neutral, so CD must terminate after one pass with q^FP.
    ModelGraph graph = test::tiny_linear_model();
    Dataset data;
    data.n = 4;
    data.c = 4;
    data.h = 1;
    data.w = 1;
    data.images.assign(16, 10.0f);  // wide margins: quantization flips nothing
    data.labels = {0, 0, 0, 0};
    data.num_classes = 2;

    SearchConfig cfg = toy_config(0.0f);
    SearchTrace trace = coordinate_descent(graph, data, cfg);
    CHECK(trace.steps.empty());
    CHECK(trace.final_record.scheme == QuantScheme::all_fp32(1));
}

TEST_CASE("evaluation-count bounds") {
    ModelGraph graph = build_toy_model(23);
    Dataset data = toy_dataset(23);
    const size_t L = graph.num_quantizable();
    const size_t q_moves = 2;  // |Q| - 1

    SearchConfig cfg = toy_config(0.9f);
    cfg.cache = false;  // count raw evaluations
    SearchTrace g = greedy_search(graph, data, cfg);
    CHECK(g.evals_used <= L * L * q_moves);

    SearchTrace c = coordinate_descent(graph, data, cfg);
    // passes = passes that changed something plus the final no-change pass
    size_t passes = 1;
    if (!c.steps.empty()) passes = static_cast<size_t>(c.steps.back().iteration) / L + 2;
    CHECK(c.evals_used <= passes * L * q_moves);
}

TEST_CASE("cache on/off produces bit-identical results") {
    ModelGraph graph = build_toy_model(29);
    Dataset data = toy_dataset(29);
    SearchConfig with_cache = toy_config(0.9f);
    with_cache.cache = true;
    SearchConfig no_cache = toy_config(0.9f);
    no_cache.cache = false;

    for (auto* search : {&greedy_search, &coordinate_descent}) {
        SearchTrace a = (*search)(graph, data, with_cache);
        SearchTrace b = (*search)(graph, data, no_cache);
        CHECK(a.final_record.scheme == b.final_record.scheme);
        CHECK(a.final_record.loss == b.final_record.loss);
        CHECK(a.final_record.ai == b.final_record.ai);
        CHECK(a.final_record.accuracy == b.final_record.accuracy);
        REQUIRE(a.steps.size() == b.steps.size());
        for (size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].move == b.steps[i].move);
            CHECK(a.steps[i].record.loss == b.steps[i].record.loss);
        }
    }
}

TEST_CASE("loss recomputable bit-exactly from stored record fields") {
    ModelGraph graph = build_toy_model(37);
    Dataset data = toy_dataset(37);
    SearchConfig cfg = toy_config(0.9f);
    SearchTrace trace = greedy_search(graph, data, cfg);
    SchemeEvaluator ev(graph, data, cfg);
    Objective obj = ev.objective();
    for (const TraceStep& step : trace.steps)
        CHECK(step.record.loss == obj.loss(step.record.ai, step.record.acc_loss_pp));
}

TEST_CASE("pareto sweep") {
    ModelGraph graph = build_toy_model(41);
    Dataset data = toy_dataset(41);
    SearchConfig cfg = toy_config(0.9f);

    SUBCASE("endpoints") {
        auto entries = pareto_sweep(graph, data, {0.0f, 1.0f}, Algorithm::Greedy, cfg);
        REQUIRE(entries.size() == 2);
        CHECK(entries[0].record.acc_loss_pp <= 0.0f);  // max-accuracy end
        CHECK(entries[1].record.scheme ==
              QuantScheme::uniform(graph.num_quantizable(), BitWidth::INT4));
    }

    SUBCASE("frontier is monotone") {
        auto entries =
            pareto_sweep(graph, data, {0.0f, 0.25f, 0.5f, 0.75f, 0.9f, 1.0f}, Algorithm::Greedy, cfg);
        std::vector<const SweepEntry*> frontier;
        for (const auto& e : entries)
            if (!e.dominated) frontier.push_back(&e);
        std::sort(frontier.begin(), frontier.end(),
                  [](const SweepEntry* a, const SweepEntry* b) { return a->record.ai < b->record.ai; });
        for (size_t i = 1; i < frontier.size(); ++i) {
            CHECK(frontier[i]->record.ai >= frontier[i - 1]->record.ai);
            CHECK(frontier[i]->record.accuracy <= frontier[i - 1]->record.accuracy);
        }
    }

    SUBCASE("duplicate lambdas give identical schemes") {
        auto entries = pareto_sweep(graph, data, {0.9f, 0.9f}, Algorithm::CoordinateDescent, cfg);
        REQUIRE(entries.size() == 2);
        CHECK(entries[0].record.scheme == entries[1].record.scheme);
        CHECK(entries[0].record.loss == entries[1].record.loss);
    }

    SUBCASE("out-of-range lambda rejected") {
        CHECK_THROWS_AS(pareto_sweep(graph, data, {1.5f}, Algorithm::Greedy, cfg), Error);
    }
}

TEST_CASE("combined score") {
    EvalRecord rec;
    rec.ai = 10.0f;
    rec.accuracy = 0.9;
    CHECK(combined_score(rec) == doctest::Approx(900.0f));
    rec.accuracy = 0.0;
    CHECK(combined_score(rec) == 0.0f);
}

TEST_CASE("greedy fp32-only move set stays legal") {
    ModelGraph graph = build_toy_model(47);
    Dataset data = toy_dataset(47);
    SearchConfig cfg = toy_config(1.0f);
    cfg.greedy_moves = GreedyMoves::Fp32Only;
    SearchTrace trace = greedy_search(graph, data, cfg);
    // every accepted move starts from 32 bits
    for (const TraceStep& step : trace.steps)
        if (step.accepted) CHECK(step.move.find(" 32->") != std::string::npos);
}
