#pragma once

#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "aiq/cost.hpp"
#include "aiq/dataset.hpp"
#include "aiq/infer.hpp"

namespace aiq {

enum class Algorithm : uint8_t { Greedy, CoordinateDescent, Exhaustive };
enum class AiNormalization : uint8_t { None, BaselineRelative };
enum class GreedyMoves : uint8_t { AnyLower, Fp32Only };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// loss(q) = -lambda * AI_term(q) + (1 - lambda) * AccLoss_pp(q), lower is
// better. AI_term is raw AI or AI/baseline_ai under baseline_relative
// normalization.
struct Objective {
    float lambda = 0.9f;
    AiNormalization normalization = AiNormalization::None;
    float baseline_ai = 1.0f;        // AI(q^FP)
    double baseline_accuracy = 0.0;  // accuracy of q^FP on the same subset

    float ai_term(float ai) const {
        return normalization == AiNormalization::BaselineRelative ? ai / baseline_ai : ai;
    }
    float loss(float ai, float acc_loss) const { return -lambda * ai_term(ai) + (1.0f - lambda) * acc_loss; }
    void validate() const {
        if (!(lambda >= 0.0f && lambda <= 1.0f))
            throw Error(ErrorCode::ConfigInvalid, "lambda must be in [0, 1]");
        if (!(baseline_ai > 0.0f)) throw Error(ErrorCode::ConfigInvalid, "baseline AI must be positive");
    }
};

struct EvalRecord {
    QuantScheme scheme;
    float ai = 0.0f;
    double accuracy = 0.0;
    float acc_loss_pp = 0.0f;
    float loss = 0.0f;
    uint64_t evals_used = 0;  // candidate accuracy evaluations consumed so far
    uint64_t seed = 0;
};

// Combined performance score: AI times accuracy in percent.
inline float combined_score(const EvalRecord& record) {
    return record.ai * static_cast<float>(record.accuracy * 100.0);
}

struct TraceStep {
    int iteration = 0;
    std::string move;   // e.g. "1.0c1 32->4"
    float delta_loss = 0.0f;
    bool accepted = false;
    EvalRecord record;
};

struct SearchTrace {
    Algorithm algorithm = Algorithm::Greedy;
    float lambda = 0.9f;
    EvalRecord baseline;      // q^FP on the search subset
    std::vector<TraceStep> steps;
    EvalRecord final_record;  // winning scheme, re-evaluated on the full eval set
    uint64_t evals_used = 0;
};

struct SearchConfig {
    float lambda = 0.9f;
    AiNormalization normalization = AiNormalization::None;
    std::vector<BitWidth> bit_set = {BitWidth::FP32, BitWidth::INT8, BitWidth::INT4};  // descending
    GreedyMoves greedy_moves = GreedyMoves::AnyLower;
    uint32_t subset_size = 1000;  // search-time evaluation subset (0 = full set)
    uint64_t seed = 17;
    int ai_batch = 1;     // batch size for the analytic AI term
    int eval_batch = 64;  // forward batch during accuracy evaluation
    int threads = 1;
    bool cache = true;    // scheme -> evaluation cache
    bool packed_eval = false;  // evaluate on the packed path (identical numerics)
    bool final_full_eval = true;
    uint64_t exhaustive_cap = 10000;
};

// Evaluates schemes to (analytic AI, measured subset accuracy) with an
// optional thread-safe cache. AI comes from the cost model; accuracy from
// the inference engine on the fixed-seed subset.
class SchemeEvaluator {
public:
    SchemeEvaluator(const ModelGraph& graph, const Dataset& data, const SearchConfig& config);

    struct Raw {
        float ai = 0.0f;
        double accuracy = 0.0;
    };

    Raw measure(const QuantScheme& scheme);       // subset accuracy, cached
    Raw measure_full(const QuantScheme& scheme);  // full-set accuracy, uncached

    const Raw& baseline() const { return baseline_; }
    const Raw& baseline_full() const { return baseline_full_; }
    uint64_t evals_used() const { return evals_used_; }
    const SearchConfig& config() const { return config_; }

    // Objective anchored at q^FP on the search subset.
    Objective objective() const;

    EvalRecord record(const QuantScheme& scheme, const Raw& raw, double baseline_accuracy) const;

private:
    const ModelGraph* graph_;
    const Dataset* data_;
    SearchConfig config_;
    std::vector<uint32_t> subset_;
    Raw baseline_;
    Raw baseline_full_;
    uint64_t evals_used_ = 0;
    std::unordered_map<std::string, Raw> cache_;
    std::mutex mutex_;

    Raw measure_uncached(const QuantScheme& scheme, bool full);
};

// Greedy: start from q^FP, take the best improving single-layer reduction
// per iteration, stop after L iterations or when no move improves.
SearchTrace greedy_search(const ModelGraph& graph, const Dataset& data, const SearchConfig& config);

// Coordinate descent: sweep layers in topological order, re-picking each
// layer's bit-width with the others held fixed; repeat passes until a full
// pass changes nothing. Ties keep the current bit-width.
SearchTrace coordinate_descent(const ModelGraph& graph, const Dataset& data, const SearchConfig& config);

// Full enumeration (testing oracle); |Q|^L capped by config.exhaustive_cap.
// Ties prefer lexicographically higher bit-widths.
EvalRecord exhaustive_search(const ModelGraph& graph, const Dataset& data, const SearchConfig& config);

SearchTrace run_search(Algorithm algorithm, const ModelGraph& graph, const Dataset& data,
                       const SearchConfig& config);

struct SweepEntry {
    std::string label;  // "lambda=0.9" or "uniform-int8"
    float lambda = 0.0f;
    Algorithm algorithm = Algorithm::Greedy;
    EvalRecord record;
    bool baseline_row = false;
    bool dominated = false;
};

// dominated iff another entry has >= AI and >= accuracy with one strict.
void mark_dominated(std::vector<SweepEntry>& entries);

// One search per lambda; entries annotated with dominance flags.
std::vector<SweepEntry> pareto_sweep(const ModelGraph& graph, const Dataset& data,
                                     const std::vector<float>& lambdas, Algorithm algorithm,
                                     const SearchConfig& config);

}  // namespace aiq
