#include "aiq/cost.hpp"

#include <fstream>

#include <json.hpp>

namespace aiq {

using nlohmann::json;

LayerCost layer_cost(const Layer& layer, int batch) {
    if (layer.input_shape.empty() || layer.output_shape.empty())
        throw Error(ErrorCode::ShapeMissing, "layer '" + layer.id + "' has no inferred shapes");
    if (batch < 1) throw Error(ErrorCode::ConfigInvalid, "batch must be >= 1");

    const uint64_t b = static_cast<uint64_t>(batch);
    const uint64_t in_elems = static_cast<uint64_t>(shape_elems(layer.input_shape));
    const uint64_t out_elems = static_cast<uint64_t>(shape_elems(layer.output_shape));

    LayerCost cost;
    cost.layer_id = layer.id;
    cost.kind = kind_name(layer.kind);
    cost.act_in_bytes = in_elems * 4 * b;
    cost.act_out_bytes = out_elems * 4 * b;
    if (layer.weight && layer.quantizable())
        cost.weight_elems = static_cast<uint64_t>(layer.weight->elems());
    if (layer.bias) cost.bias_bytes = static_cast<uint64_t>(layer.bias->elems()) * 4;

    if (const auto* c = std::get_if<Conv2d>(&layer.kind)) {
        uint64_t oh = static_cast<uint64_t>(layer.output_shape[1]);
        uint64_t ow = static_cast<uint64_t>(layer.output_shape[2]);
        uint64_t macs_per_out = static_cast<uint64_t>(c->kernel_h) * c->kernel_w *
                                (static_cast<uint64_t>(c->in_channels) / c->groups);
        cost.flops = 2 * macs_per_out * static_cast<uint64_t>(c->out_channels) * oh * ow * b;
    } else if (const auto* l = std::get_if<Linear>(&layer.kind)) {
        cost.flops = 2 * static_cast<uint64_t>(l->in_features) * l->out_features * b;
    } else if (std::holds_alternative<BatchNorm2d>(layer.kind)) {
        cost.flops = 2 * out_elems * b;
    } else if (std::holds_alternative<ReLU>(layer.kind) || std::holds_alternative<Add>(layer.kind)) {
        cost.flops = out_elems * b;
    } else if (const auto* p = std::get_if<AvgPool2d>(&layer.kind)) {
        cost.flops = out_elems * static_cast<uint64_t>(p->kernel) * p->kernel * b;
    } else if (std::holds_alternative<GlobalAvgPool>(layer.kind)) {
        cost.flops = static_cast<uint64_t>(layer.input_shape[0]) * layer.input_shape[1] *
                     layer.input_shape[2] * b;
    } else {  // flatten
        cost.flops = 0;
    }

    // Add reads two equally sized inputs.
    if (std::holds_alternative<Add>(layer.kind)) cost.act_in_bytes *= 2;
    // BatchNorm parameters stay f32 and are not counted as weight traffic.
    if (std::holds_alternative<BatchNorm2d>(layer.kind)) cost.weight_elems = 0;
    return cost;
}

CostReport global_ai(const ModelGraph& graph, const QuantScheme& scheme, int batch) {
    if (graph.num_quantizable() == 0)
        throw Error(ErrorCode::EmptyModel, "model has no quantizable layers");
    check_scheme_length(scheme, graph.num_quantizable());

    CostReport report;
    report.scheme = scheme;
    report.batch = batch;
    report.layers.reserve(graph.layers.size());
    report.layer_bits.reserve(graph.layers.size());

    size_t qi = 0;
    for (const Layer& layer : graph.layers) {
        BitWidth bits = layer.quantizable() ? scheme[qi++] : BitWidth::FP32;
        LayerCost cost = layer_cost(layer, batch);
        report.global_flops += cost.flops;
        report.global_bytes += cost.total_bytes(bits);
        report.layers.push_back(std::move(cost));
        report.layer_bits.push_back(bits);
    }
    report.ai = static_cast<double>(report.global_flops) / static_cast<double>(report.global_bytes);
    return report;
}

void roofline_classify(CostReport& report, const MachineModel& machine) {
    if (machine.peak_flops <= 0 || machine.mem_bandwidth <= 0)
        throw Error(ErrorCode::ConfigInvalid, "machine model fields must be positive");

    const double ridge = machine.ridge_point();
    report.bound.clear();
    report.layer_attainable_flops.clear();
    for (size_t i = 0; i < report.layers.size(); ++i) {
        double ai = report.layers[i].ai(report.layer_bits[i]);
        report.bound.push_back(ai < ridge ? Boundedness::MemoryBound : Boundedness::ComputeBound);
        report.layer_attainable_flops.push_back(std::min(machine.peak_flops, ai * machine.mem_bandwidth));
    }
    report.model_attainable_flops = std::min(machine.peak_flops, report.ai * machine.mem_bandwidth);
    double flops_per_image = static_cast<double>(report.global_flops) / report.batch;
    report.attainable_images_per_s = report.model_attainable_flops / flops_per_image;
}

MachineModel load_machine_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, std::string("bad machine model: ") + e.what());
    }
    MachineModel m;
    m.peak_flops = doc.at("peak_flops").get<double>();
    m.mem_bandwidth = doc.at("mem_bandwidth_bytes_per_s").get<double>();
    if (m.peak_flops <= 0 || m.mem_bandwidth <= 0)
        throw Error(ErrorCode::MalformedFile, "machine model fields must be positive");
    return m;
}

void save_machine_model(const MachineModel& machine, const std::string& path, const std::string& extra_json) {
    json doc;
    doc["peak_flops"] = machine.peak_flops;
    doc["mem_bandwidth_bytes_per_s"] = machine.mem_bandwidth;
    if (!extra_json.empty()) doc["info"] = json::parse(extra_json);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
}

}  // namespace aiq
