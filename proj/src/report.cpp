#include "aiq/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace aiq {

using nlohmann::json;

std::string fmt_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void save_scheme(const QuantScheme& scheme, const ModelGraph& graph, const std::string& path) {
    check_scheme_length(scheme, graph.num_quantizable());
    json doc;
    doc["model"] = graph.name;
    doc["layer_ids"] = quantizable_layers(graph);
    std::vector<int> bits;
    for (BitWidth b : scheme.bits) bits.push_back(bit_count(b));
    doc["bits"] = bits;
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

QuantScheme load_scheme(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, std::string("bad scheme file: ") + e.what());
    }
    QuantScheme scheme;
    for (int b : doc.at("bits").get<std::vector<int>>()) scheme.bits.push_back(bitwidth_from_int(b));
    return scheme;
}

void write_records_csv(const std::vector<RecordRow>& rows, const std::string& path, bool with_pareto) {
    auto out = open_out(path);
    out << "scheme,ai,accuracy,acc_loss_pp,loss,evals_used,lambda,algorithm,seed";
    if (with_pareto) out << ",label,dominated";
    out << "\n";
    for (const RecordRow& row : rows) {
        const EvalRecord& r = row.record;
        out << "\"" << r.scheme.str() << "\"," << fmt_float(r.ai) << "," << fmt_float(r.accuracy) << ","
            << fmt_float(r.acc_loss_pp) << "," << fmt_float(r.loss) << "," << r.evals_used << ","
            << fmt_float(row.lambda) << "," << row.algorithm << "," << r.seed;
        if (with_pareto) out << "," << row.label << "," << (row.dominated ? 1 : 0);
        out << "\n";
    }
}

void write_cost_csv(const CostReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "layer_id,kind,flops,weight_bytes,act_bytes,ai,bound\n";
    for (size_t i = 0; i < report.layers.size(); ++i) {
        const LayerCost& c = report.layers[i];
        BitWidth bits = report.layer_bits[i];
        std::string bound = "n/a";
        if (i < report.bound.size())
            bound = report.bound[i] == Boundedness::MemoryBound ? "memory" : "compute";
        out << c.layer_id << "," << c.kind << "," << c.flops << "," << c.weight_bytes(bits) << ","
            << c.act_in_bytes + c.act_out_bytes << "," << fmt_float(c.ai(bits)) << "," << bound << "\n";
    }
    out << "total,,," << report.global_flops << ",," << fmt_float(report.ai) << ",\n";
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "layer,delta_8b,delta_4b,final_bits\n";
    for (const SensitivityRow& row : rows) {
        out << row.layer_id << "," << fmt_float(row.delta_acc_int8) << "," << fmt_float(row.delta_acc_int4)
            << ",";
        if (row.final_bits) out << bit_count(*row.final_bits);
        out << "\n";
    }
}

void write_profile_csv(const std::vector<LayerProbe>& probes, const std::string& path) {
    auto out = open_out(path);
    out << "layer,ai,delta_acc_pp\n";
    for (const LayerProbe& p : probes)
        out << p.layer_id << "," << fmt_float(p.ai) << "," << fmt_float(p.delta_acc_pp) << "\n";
}

namespace {

json record_json(const EvalRecord& r) {
    json j;
    j["scheme"] = r.scheme.str();
    j["ai"] = r.ai;
    j["accuracy"] = r.accuracy;
    j["acc_loss_pp"] = r.acc_loss_pp;
    j["loss"] = r.loss;
    j["evals_used"] = r.evals_used;
    j["seed"] = r.seed;
    return j;
}

}  // namespace

void write_trace_jsonl(const SearchTrace& trace, const std::string& path) {
    auto out = open_out(path);
    {
        json j;
        j["event"] = "baseline";
        j["algorithm"] = algorithm_name(trace.algorithm);
        j["lambda"] = trace.lambda;
        j["record"] = record_json(trace.baseline);
        out << j.dump() << "\n";
    }
    for (const TraceStep& step : trace.steps) {
        json j;
        j["event"] = "move";
        j["iteration"] = step.iteration;
        j["move"] = step.move;
        j["delta_loss"] = step.delta_loss;
        j["accepted"] = step.accepted;
        j["record"] = record_json(step.record);
        out << j.dump() << "\n";
    }
    {
        json j;
        j["event"] = "final";
        j["evals_used"] = trace.evals_used;
        j["record"] = record_json(trace.final_record);
        out << j.dump() << "\n";
    }
}

namespace {

struct Axis {
    double lo = 0, hi = 1;
    double px0 = 0, px1 = 1;
    double at(double v) const {
        double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return px0 + t * (px1 - px0);
    }
};

void expand(double& lo, double& hi) {
    if (lo == hi) {
        lo -= 1;
        hi += 1;
    }
    double pad = (hi - lo) * 0.08;
    lo -= pad;
    hi += pad;
}

std::string svg_text(double x, double y, const std::string& s, const char* anchor = "middle",
                     const char* fill = "#333") {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%.1f' font-size='11' font-family='sans-serif' text-anchor='%s' "
                  "fill='%s'>%s</text>\n",
                  x, y, anchor, fill, s.c_str());
    return buf;
}

}  // namespace

void write_profile_svg(const std::vector<LayerProbe>& probes, const std::string& title,
                       const std::string& path) {
    const double W = 900, H = 460, ml = 70, mr = 70, mt = 40, mb = 70;
    double ai_lo = 1e300, ai_hi = -1e300, d_lo = 1e300, d_hi = -1e300;
    for (const LayerProbe& p : probes) {
        ai_lo = std::min(ai_lo, static_cast<double>(p.ai));
        ai_hi = std::max(ai_hi, static_cast<double>(p.ai));
        d_lo = std::min(d_lo, static_cast<double>(p.delta_acc_pp));
        d_hi = std::max(d_hi, static_cast<double>(p.delta_acc_pp));
    }
    if (probes.empty()) ai_lo = d_lo = 0, ai_hi = d_hi = 1;
    expand(ai_lo, ai_hi);
    expand(d_lo, d_hi);
    Axis x{-0.5, static_cast<double>(probes.size()) - 0.5, ml, W - mr};
    Axis yl{ai_lo, ai_hi, H - mb, mt};
    Axis yr{d_lo, d_hi, H - mb, mt};

    auto out = open_out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << svg_text(W / 2, 20, title);
    char buf[512];
    std::snprintf(buf, sizeof(buf), "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#333'/>\n",
                  ml, H - mb, W - mr, H - mb);
    out << buf;
    std::snprintf(buf, sizeof(buf), "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#2a7'/>\n",
                  ml, mt, ml, H - mb);
    out << buf;
    std::snprintf(buf, sizeof(buf), "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#c33'/>\n",
                  W - mr, mt, W - mr, H - mb);
    out << buf;
    out << svg_text(ml, mt - 8, "AI (FLOPs/byte)", "middle", "#2a7");
    out << svg_text(W - mr, mt - 8, "acc delta (pp)", "middle", "#c33");
    out << svg_text(ml - 6, H - mb + 4, fmt_float(ai_lo), "end", "#2a7");
    out << svg_text(ml - 6, mt + 4, fmt_float(ai_hi), "end", "#2a7");
    out << svg_text(W - mr + 6, H - mb + 4, fmt_float(d_lo), "start", "#c33");
    out << svg_text(W - mr + 6, mt + 4, fmt_float(d_hi), "start", "#c33");

    // AI series: polyline + circles
    std::string pts;
    for (size_t i = 0; i < probes.size(); ++i)
        pts += fmt_float(x.at(static_cast<double>(i))) + "," + fmt_float(yl.at(probes[i].ai)) + " ";
    out << "<polyline points='" << pts << "' fill='none' stroke='#2a7' stroke-width='1.5' class='series-ai'/>\n";
    for (size_t i = 0; i < probes.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "<circle cx='%.1f' cy='%.1f' r='3' fill='#2a7' class='series-ai'/>\n",
                      x.at(static_cast<double>(i)), yl.at(probes[i].ai));
        out << buf;
    }
    // delta series: squares on the right axis
    for (size_t i = 0; i < probes.size(); ++i) {
        std::snprintf(buf, sizeof(buf),
                      "<rect x='%.1f' y='%.1f' width='6' height='6' fill='#c33' class='series-delta'/>\n",
                      x.at(static_cast<double>(i)) - 3, yr.at(probes[i].delta_acc_pp) - 3);
        out << buf;
    }
    // layer labels, slanted
    for (size_t i = 0; i < probes.size(); ++i) {
        std::snprintf(buf, sizeof(buf),
                      "<text x='%.1f' y='%.1f' font-size='9' font-family='sans-serif' text-anchor='end' "
                      "transform='rotate(-45 %.1f %.1f)' fill='#333'>%s</text>\n",
                      x.at(static_cast<double>(i)), H - mb + 14, x.at(static_cast<double>(i)),
                      H - mb + 14, probes[i].layer_id.c_str());
        out << buf;
    }
    out << "</svg>\n";
}

void write_pareto_svg(const std::vector<SweepEntry>& entries, const std::string& path) {
    const double W = 640, H = 480, ml = 70, mr = 30, mt = 40, mb = 60;
    double ai_lo = 1e300, ai_hi = -1e300, a_lo = 1e300, a_hi = -1e300;
    for (const SweepEntry& e : entries) {
        ai_lo = std::min(ai_lo, static_cast<double>(e.record.ai));
        ai_hi = std::max(ai_hi, static_cast<double>(e.record.ai));
        a_lo = std::min(a_lo, e.record.accuracy * 100.0);
        a_hi = std::max(a_hi, e.record.accuracy * 100.0);
    }
    if (entries.empty()) ai_lo = a_lo = 0, ai_hi = a_hi = 1;
    expand(ai_lo, ai_hi);
    expand(a_lo, a_hi);
    Axis x{ai_lo, ai_hi, ml, W - mr};
    Axis y{a_lo, a_hi, H - mb, mt};

    auto out = open_out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << svg_text(W / 2, 20, "accuracy vs arithmetic intensity");
    char buf[512];
    std::snprintf(buf, sizeof(buf), "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#333'/>\n",
                  ml, H - mb, W - mr, H - mb);
    out << buf;
    std::snprintf(buf, sizeof(buf), "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#333'/>\n",
                  ml, mt, ml, H - mb);
    out << buf;
    out << svg_text(W / 2, H - 16, "AI (FLOPs/byte)");
    out << svg_text(16, H / 2, "acc %", "middle");
    out << svg_text(ml, H - mb + 14, fmt_float(ai_lo), "middle");
    out << svg_text(W - mr, H - mb + 14, fmt_float(ai_hi), "middle");
    out << svg_text(ml - 6, H - mb + 4, fmt_float(a_lo), "end");
    out << svg_text(ml - 6, mt + 4, fmt_float(a_hi), "end");

    // frontier polyline through non-dominated points, sorted by AI
    std::vector<const SweepEntry*> frontier;
    for (const SweepEntry& e : entries)
        if (!e.dominated) frontier.push_back(&e);
    std::sort(frontier.begin(), frontier.end(),
              [](const SweepEntry* a, const SweepEntry* b) { return a->record.ai < b->record.ai; });
    std::string pts;
    for (const SweepEntry* e : frontier)
        pts += fmt_float(x.at(e->record.ai)) + "," + fmt_float(y.at(e->record.accuracy * 100.0)) + " ";
    out << "<polyline points='" << pts << "' fill='none' stroke='#999' stroke-dasharray='4 3' class='frontier'/>\n";

    for (const SweepEntry& e : entries) {
        const char* color = e.baseline_row ? "#36c" : "#2a7";
        double px = x.at(e.record.ai), py = y.at(e.record.accuracy * 100.0);
        if (e.baseline_row) {
            std::snprintf(buf, sizeof(buf),
                          "<rect x='%.1f' y='%.1f' width='8' height='8' fill='%s' class='point'/>\n",
                          px - 4, py - 4, color);
        } else {
            std::snprintf(buf, sizeof(buf), "<circle cx='%.1f' cy='%.1f' r='4' fill='%s' class='point'/>\n",
                          px, py, color);
        }
        out << buf;
        if (!e.dominated) {
            std::snprintf(buf, sizeof(buf),
                          "<circle cx='%.1f' cy='%.1f' r='7' fill='none' stroke='#555' class='nondominated'/>\n",
                          px, py);
            out << buf;
        }
        out << svg_text(px + 9, py - 6, e.label, "start");
    }
    out << "</svg>\n";
}

}  // namespace aiq
