#include "aiq/profile.hpp"

#include <algorithm>
#include <cmath>

namespace aiq {

namespace {

SearchConfig to_search_config(const ProfileConfig& config) {
    SearchConfig cfg;
    cfg.subset_size = config.subset_size;
    cfg.seed = config.seed;
    cfg.ai_batch = config.ai_batch;
    cfg.eval_batch = config.eval_batch;
    cfg.threads = config.threads;
    cfg.final_full_eval = false;
    return cfg;
}

}  // namespace

std::vector<LayerProbe> layerwise_profile(const ModelGraph& graph, const Dataset& data, BitWidth bits,
                                          const ProfileConfig& config) {
    SchemeEvaluator ev(graph, data, to_search_config(config));
    const std::vector<std::string> ids = quantizable_layers(graph);
    const size_t L = ids.size();

    std::vector<LayerProbe> probes;
    probes.reserve(L);
    for (size_t i = 0; i < L; ++i) {
        QuantScheme scheme = QuantScheme::all_fp32(L);
        scheme[i] = bits;
        SchemeEvaluator::Raw raw =
            bits == BitWidth::FP32 ? ev.baseline() : ev.measure(scheme);
        LayerProbe probe;
        probe.layer_id = ids[i];
        probe.ai = raw.ai;
        probe.delta_acc_pp = acc_loss_pp(ev.baseline().accuracy, raw.accuracy);
        probes.push_back(std::move(probe));
    }
    return probes;
}

std::vector<SensitivityRow> sensitivity_table(const ModelGraph& graph, const Dataset& data,
                                              const ProfileConfig& config, const QuantScheme* final_scheme) {
    std::vector<LayerProbe> p8 = layerwise_profile(graph, data, BitWidth::INT8, config);
    std::vector<LayerProbe> p4 = layerwise_profile(graph, data, BitWidth::INT4, config);
    if (final_scheme) check_scheme_length(*final_scheme, graph.num_quantizable());

    std::vector<SensitivityRow> rows;
    rows.reserve(p8.size());
    for (size_t i = 0; i < p8.size(); ++i) {
        SensitivityRow row;
        row.layer_id = p8[i].layer_id;
        row.delta_acc_int8 = p8[i].delta_acc_pp;
        row.delta_acc_int4 = p4[i].delta_acc_pp;
        row.ai_int8 = p8[i].ai;
        row.ai_int4 = p4[i].ai;
        if (final_scheme) row.final_bits = (*final_scheme)[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// Average ranks with ties.
std::vector<double> ranks_of(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2) return std::nullopt;
    bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) return std::nullopt;

    std::vector<double> rx = ranks_of(x), ry = ranks_of(y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0 || dy == 0) return std::nullopt;
    return num / std::sqrt(dx * dy);
}

}  // namespace

SchemeStats scheme_statistics(const ModelGraph& graph, const QuantScheme& scheme) {
    check_scheme_length(scheme, graph.num_quantizable());

    SchemeStats stats;
    size_t qi = 0;
    for (const Layer& layer : graph.layers) {
        if (!layer.quantizable()) continue;
        SchemeStats::Row row;
        row.layer_id = layer.id;
        if (const auto* c = std::get_if<Conv2d>(&layer.kind)) row.channels = c->out_channels;
        if (const auto* l = std::get_if<Linear>(&layer.kind)) row.channels = l->out_features;
        row.weight_bytes = static_cast<uint64_t>(layer.weight->elems()) * 4;
        row.depth_index = static_cast<int>(qi);
        row.bits = bit_count(scheme[qi]);
        stats.rows.push_back(std::move(row));
        ++qi;
    }

    std::vector<double> size, depth, bits;
    for (const auto& row : stats.rows) {
        size.push_back(static_cast<double>(row.weight_bytes));
        depth.push_back(static_cast<double>(row.depth_index));
        bits.push_back(static_cast<double>(row.bits));
    }
    stats.size_bits_correlation = spearman(size, bits);
    stats.depth_bits_correlation = spearman(depth, bits);
    return stats;
}

}  // namespace aiq
