#include "aiq/search.hpp"

#include <algorithm>

namespace aiq {

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Greedy: return "greedy";
        case Algorithm::CoordinateDescent: return "coord";
        case Algorithm::Exhaustive: return "exhaustive";
    }
    return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "greedy") return Algorithm::Greedy;
    if (name == "coord" || name == "coordinate-descent") return Algorithm::CoordinateDescent;
    if (name == "exhaustive") return Algorithm::Exhaustive;
    throw Error(ErrorCode::ConfigInvalid, "unknown algorithm '" + name + "'");
}

namespace {

std::string scheme_key(const QuantScheme& scheme) {
    std::string key(scheme.size(), '\0');
    for (size_t i = 0; i < scheme.size(); ++i) key[i] = static_cast<char>(bit_count(scheme[i]));
    return key;
}

std::string move_str(const std::string& layer_id, BitWidth from, BitWidth to) {
    return layer_id + " " + std::to_string(bit_count(from)) + "->" + std::to_string(bit_count(to));
}

}  // namespace

SchemeEvaluator::SchemeEvaluator(const ModelGraph& graph, const Dataset& data, const SearchConfig& config)
    : graph_(&graph), data_(&data), config_(config) {
    if (!(config.lambda >= 0.0f && config.lambda <= 1.0f))
        throw Error(ErrorCode::ConfigInvalid, "lambda must be in [0, 1]");
    if (config.bit_set.empty() || config.bit_set.front() != BitWidth::FP32)
        throw Error(ErrorCode::ConfigInvalid, "bit set must start at FP32 (descending order)");
    for (size_t i = 1; i < config.bit_set.size(); ++i)
        if (bit_count(config.bit_set[i]) >= bit_count(config.bit_set[i - 1]))
            throw Error(ErrorCode::ConfigInvalid, "bit set must be strictly descending");

    subset_ = eval_subset(data, config.subset_size, config.seed);
    const size_t L = graph.num_quantizable();
    baseline_ = measure_uncached(QuantScheme::all_fp32(L), false);
    baseline_full_ = config.final_full_eval ? measure_uncached(QuantScheme::all_fp32(L), true) : baseline_;
    evals_used_ = 0;  // baseline evaluations are not charged to the search
}

SchemeEvaluator::Raw SchemeEvaluator::measure_uncached(const QuantScheme& scheme, bool full) {
    Raw raw;
    raw.ai = static_cast<float>(global_ai(*graph_, scheme, config_.ai_batch).ai);
    Materialize mat = config_.packed_eval ? Materialize::Packed : Materialize::FakeQuant;
    QuantizedModel model = apply_scheme(*graph_, scheme, mat);
    EvalOptions opts;
    opts.batch = config_.eval_batch;
    opts.threads = config_.threads;
    opts.packed = config_.packed_eval;
    std::optional<std::vector<uint32_t>> subset;
    if (!full) subset = subset_;
    raw.accuracy = evaluate(model, *data_, subset, opts).accuracy;
    return raw;
}

SchemeEvaluator::Raw SchemeEvaluator::measure(const QuantScheme& scheme) {
    check_scheme_length(scheme, graph_->num_quantizable());
    if (config_.cache) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(scheme_key(scheme));
        if (it != cache_.end()) return it->second;
    }
    Raw raw = measure_uncached(scheme, false);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++evals_used_;
        if (config_.cache) cache_.emplace(scheme_key(scheme), raw);
    }
    return raw;
}

SchemeEvaluator::Raw SchemeEvaluator::measure_full(const QuantScheme& scheme) {
    return measure_uncached(scheme, true);
}

Objective SchemeEvaluator::objective() const {
    Objective obj;
    obj.lambda = config_.lambda;
    obj.normalization = config_.normalization;
    obj.baseline_ai = baseline_.ai;
    obj.baseline_accuracy = baseline_.accuracy;
    obj.validate();
    return obj;
}

EvalRecord SchemeEvaluator::record(const QuantScheme& scheme, const Raw& raw,
                                   double baseline_accuracy) const {
    Objective obj;
    obj.lambda = config_.lambda;
    obj.normalization = config_.normalization;
    obj.baseline_ai = baseline_.ai;
    obj.baseline_accuracy = baseline_accuracy;

    EvalRecord rec;
    rec.scheme = scheme;
    rec.ai = raw.ai;
    rec.accuracy = raw.accuracy;
    rec.acc_loss_pp = acc_loss_pp(baseline_accuracy, raw.accuracy);
    rec.loss = obj.loss(rec.ai, rec.acc_loss_pp);
    rec.evals_used = evals_used_;
    rec.seed = config_.seed;
    return rec;
}

namespace {

// Final bookkeeping shared by both local searches: re-evaluate the winning
// scheme on the full eval set and stamp the totals.
void finish_trace(SearchTrace& trace, SchemeEvaluator& ev, const QuantScheme& final_scheme) {
    const SearchConfig& cfg = ev.config();
    if (cfg.final_full_eval) {
        SchemeEvaluator::Raw raw = ev.measure_full(final_scheme);
        trace.final_record = ev.record(final_scheme, raw, ev.baseline_full().accuracy);
    } else {
        trace.final_record = ev.record(final_scheme, ev.measure(final_scheme), ev.baseline().accuracy);
    }
    trace.evals_used = ev.evals_used();
    trace.final_record.evals_used = ev.evals_used();
}

}  // namespace

SearchTrace greedy_search(const ModelGraph& graph, const Dataset& data, const SearchConfig& config) {
    SchemeEvaluator ev(graph, data, config);
    const std::vector<std::string> ids = quantizable_layers(graph);
    const size_t L = ids.size();
    if (L == 0) throw Error(ErrorCode::EmptyModel, "model has no quantizable layers");

    SearchTrace trace;
    trace.algorithm = Algorithm::Greedy;
    trace.lambda = config.lambda;

    QuantScheme q = QuantScheme::all_fp32(L);
    EvalRecord incumbent = ev.record(q, ev.baseline(), ev.baseline().accuracy);
    trace.baseline = incumbent;

    for (size_t iter = 0; iter < L; ++iter) {
        bool have_best = false;
        float best_delta = 0.0f;
        size_t best_layer = 0;
        BitWidth best_bits = BitWidth::FP32;
        EvalRecord best_record;

        for (size_t i = 0; i < L; ++i) {
            if (config.greedy_moves == GreedyMoves::Fp32Only && q[i] != BitWidth::FP32) continue;
            for (BitWidth b : config.bit_set) {
                if (bit_count(b) >= bit_count(q[i])) continue;
                QuantScheme cand = q;
                cand[i] = b;
                EvalRecord rec = ev.record(cand, ev.measure(cand), ev.baseline().accuracy);
                float delta = rec.loss - incumbent.loss;
                if (!have_best || delta < best_delta) {
                    have_best = true;
                    best_delta = delta;
                    best_layer = i;
                    best_bits = b;
                    best_record = rec;
                }
            }
        }
        if (!have_best) break;  // no legal moves left

        TraceStep step;
        step.iteration = static_cast<int>(iter);
        step.move = move_str(ids[best_layer], q[best_layer], best_bits);
        step.delta_loss = best_delta;
        step.accepted = best_delta < 0.0f;
        step.record = best_record;
        trace.steps.push_back(step);

        if (!step.accepted) break;  // no improving move; stop early
        q[best_layer] = best_bits;
        incumbent = best_record;
    }

    finish_trace(trace, ev, q);
    return trace;
}

SearchTrace coordinate_descent(const ModelGraph& graph, const Dataset& data, const SearchConfig& config) {
    SchemeEvaluator ev(graph, data, config);
    const std::vector<std::string> ids = quantizable_layers(graph);
    const size_t L = ids.size();
    if (L == 0) throw Error(ErrorCode::EmptyModel, "model has no quantizable layers");

    SearchTrace trace;
    trace.algorithm = Algorithm::CoordinateDescent;
    trace.lambda = config.lambda;

    QuantScheme q = QuantScheme::all_fp32(L);
    EvalRecord incumbent = ev.record(q, ev.baseline(), ev.baseline().accuracy);
    trace.baseline = incumbent;

    int iteration = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < L; ++i) {
            BitWidth best_bits = q[i];
            EvalRecord best_record = incumbent;
            // Strict '<' keeps the current bit-width on ties; descending
            // candidate order prefers higher bits among equal alternatives.
            for (BitWidth b : config.bit_set) {
                if (b == q[i]) continue;
                QuantScheme cand = q;
                cand[i] = b;
                EvalRecord rec = ev.record(cand, ev.measure(cand), ev.baseline().accuracy);
                if (rec.loss < best_record.loss) {
                    best_bits = b;
                    best_record = rec;
                }
            }
            if (best_bits != q[i]) {
                TraceStep step;
                step.iteration = iteration;
                step.move = move_str(ids[i], q[i], best_bits);
                step.delta_loss = best_record.loss - incumbent.loss;
                step.accepted = true;
                step.record = best_record;
                trace.steps.push_back(step);
                q[i] = best_bits;
                incumbent = best_record;
                changed = true;
            }
            ++iteration;
        }
    }

    finish_trace(trace, ev, q);
    return trace;
}

EvalRecord exhaustive_search(const ModelGraph& graph, const Dataset& data, const SearchConfig& config) {
    SchemeEvaluator ev(graph, data, config);
    const size_t L = graph.num_quantizable();
    if (L == 0) throw Error(ErrorCode::EmptyModel, "model has no quantizable layers");

    uint64_t count = 1;
    for (size_t i = 0; i < L; ++i) {
        count *= config.bit_set.size();
        if (count > config.exhaustive_cap)
            throw Error(ErrorCode::SpaceTooLarge,
                        "scheme space exceeds cap " + std::to_string(config.exhaustive_cap));
    }

    // Odometer over bit-set positions, coordinate L-1 fastest; positions
    // start at FP32 (index 0), so enumeration is lexicographic with higher
    // bit-widths first and strict '<' implements the tie-break.
    std::vector<size_t> pos(L, 0);
    QuantScheme q = QuantScheme::all_fp32(L);
    bool have_best = false;
    EvalRecord best;
    for (uint64_t step = 0; step < count; ++step) {
        for (size_t i = 0; i < L; ++i) q[i] = config.bit_set[pos[i]];
        EvalRecord rec = ev.record(q, ev.measure(q), ev.baseline().accuracy);
        if (!have_best || rec.loss < best.loss) {
            have_best = true;
            best = rec;
        }
        for (size_t i = L; i-- > 0;) {
            if (++pos[i] < config.bit_set.size()) break;
            pos[i] = 0;
        }
    }
    best.evals_used = ev.evals_used();
    return best;
}

SearchTrace run_search(Algorithm algorithm, const ModelGraph& graph, const Dataset& data,
                       const SearchConfig& config) {
    switch (algorithm) {
        case Algorithm::Greedy: return greedy_search(graph, data, config);
        case Algorithm::CoordinateDescent: return coordinate_descent(graph, data, config);
        case Algorithm::Exhaustive: {
            SearchTrace trace;
            trace.algorithm = Algorithm::Exhaustive;
            trace.lambda = config.lambda;
            EvalRecord best = exhaustive_search(graph, data, config);
            SearchConfig cfg = config;
            SchemeEvaluator ev(graph, data, cfg);
            trace.baseline = ev.record(QuantScheme::all_fp32(graph.num_quantizable()), ev.baseline(),
                                       ev.baseline().accuracy);
            if (config.final_full_eval)
                trace.final_record = ev.record(best.scheme, ev.measure_full(best.scheme),
                                               ev.baseline_full().accuracy);
            else
                trace.final_record = best;
            trace.evals_used = best.evals_used;
            trace.final_record.evals_used = best.evals_used;
            return trace;
        }
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown algorithm");
}

void mark_dominated(std::vector<SweepEntry>& entries) {
    for (SweepEntry& e : entries) e.dominated = false;
    for (size_t i = 0; i < entries.size(); ++i) {
        for (size_t j = 0; j < entries.size(); ++j) {
            if (i == j) continue;
            const EvalRecord& a = entries[i].record;
            const EvalRecord& b = entries[j].record;
            bool geq = b.ai >= a.ai && b.accuracy >= a.accuracy;
            bool strict = b.ai > a.ai || b.accuracy > a.accuracy;
            if (geq && strict) {
                entries[i].dominated = true;
                break;
            }
        }
    }
}

std::vector<SweepEntry> pareto_sweep(const ModelGraph& graph, const Dataset& data,
                                     const std::vector<float>& lambdas, Algorithm algorithm,
                                     const SearchConfig& config) {
    std::vector<SweepEntry> entries;
    for (float lambda : lambdas) {
        if (!(lambda >= 0.0f && lambda <= 1.0f))
            throw Error(ErrorCode::ConfigInvalid, "lambda must be in [0, 1]");
        SearchConfig cfg = config;
        cfg.lambda = lambda;
        SearchTrace trace = run_search(algorithm, graph, data, cfg);
        SweepEntry entry;
        entry.label = "lambda=" + std::to_string(lambda);
        entry.lambda = lambda;
        entry.algorithm = algorithm;
        entry.record = trace.final_record;
        entries.push_back(std::move(entry));
    }
    mark_dominated(entries);
    return entries;
}

}  // namespace aiq
