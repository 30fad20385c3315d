#pragma once

#include <string>
#include <vector>

#include "aiq/cost.hpp"
#include "aiq/profile.hpp"
#include "aiq/search.hpp"

namespace aiq {

// Fixed "%.9g" float formatting: locale-independent, round-trips f32, and
// keeps rerun outputs byte-identical.
std::string fmt_float(double v);

// scheme JSON: {"model": ..., "layer_ids": [...], "bits": [32, 8, ...]}
void save_scheme(const QuantScheme& scheme, const ModelGraph& graph, const std::string& path);
QuantScheme load_scheme(const std::string& path);

// EvalRecord CSV: scheme,ai,accuracy,acc_loss_pp,loss,evals_used,lambda,algorithm,seed
struct RecordRow {
    EvalRecord record;
    float lambda = 0.0f;
    std::string algorithm;
    std::string label;
    bool dominated = false;
};
void write_records_csv(const std::vector<RecordRow>& rows, const std::string& path, bool with_pareto);

// CostReport CSV: layer_id,kind,flops,weight_bytes,act_bytes,ai,bound
void write_cost_csv(const CostReport& report, const std::string& path);

// Sensitivity CSV: layer,delta_8b,delta_4b,final_bits
void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, const std::string& path);

// Profile CSV for one bit-width: layer,ai,delta_acc_pp
void write_profile_csv(const std::vector<LayerProbe>& probes, const std::string& path);

// Search trace as JSON lines, one move per line.
void write_trace_jsonl(const SearchTrace& trace, const std::string& path);

// Dual-axis layer profile: AI line on the left axis, accuracy delta dots
// on the right axis.
void write_profile_svg(const std::vector<LayerProbe>& probes, const std::string& title,
                       const std::string& path);

// Accuracy-vs-AI scatter with the non-dominated frontier joined.
void write_pareto_svg(const std::vector<SweepEntry>& entries, const std::string& path);

}  // namespace aiq
