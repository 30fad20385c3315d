#include "aiq/model_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "aiq/quant.hpp"

namespace aiq {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'I', 'Q', 'W'};
constexpr uint64_t kAlign = 64;

uint64_t dtype_bytes(const std::string& dtype, int64_t elems) {
    if (dtype == "f32") return static_cast<uint64_t>(elems) * 4;
    if (dtype == "i8") return static_cast<uint64_t>(elems);
    if (dtype == "i4p") return static_cast<uint64_t>((elems + 1) / 2);
    throw Error(ErrorCode::MalformedFile, "unknown dtype '" + dtype + "'");
}

void put_u32(std::string& out, uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

}  // namespace

void write_aiqw(const std::string& path, const TensorMap& tensors) {
    for (const auto& [id, t] : tensors) {
        uint64_t want = dtype_bytes(t.dtype, t.elems());
        if (t.bytes.size() != want)
            throw Error(ErrorCode::ShapeMismatch, "tensor '" + id + "' payload " +
                                                      std::to_string(t.bytes.size()) + " bytes, expected " +
                                                      std::to_string(want));
    }

    // Offsets are absolute, so the header length feeds back into the header
    // text; iterate the layout to a fixed point (growth is monotone).
    auto layout = [&](uint64_t base) {
        json header = json::object();
        uint64_t pos = base;
        for (const auto& [id, t] : tensors) {
            pos = (pos + kAlign - 1) / kAlign * kAlign;
            json entry;
            entry["offset"] = pos;
            entry["shape"] = t.shape;
            entry["dtype"] = t.dtype;
            if (t.dtype != "f32") entry["scale"] = t.scale;
            header[id] = entry;
            pos += dtype_bytes(t.dtype, t.elems());
        }
        return header;
    };
    uint64_t base = 8;
    json header;
    for (int iter = 0; iter < 64; ++iter) {
        header = layout(base);
        uint64_t next = 8 + header.dump().size();
        if (next == base) break;
        base = next;
        if (iter == 63) throw Error(ErrorCode::IoError, "AIQW header layout did not converge");
    }

    std::string head = header.dump();
    std::string blob;
    blob.reserve(head.size() + 64);
    blob.append(kMagic, 4);
    put_u32(blob, static_cast<uint32_t>(head.size()));
    blob += head;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    uint64_t pos = blob.size();
    for (const auto& [id, t] : tensors) {
        uint64_t aligned = (pos + kAlign - 1) / kAlign * kAlign;
        std::string pad(static_cast<size_t>(aligned - pos), '\0');
        out.write(pad.data(), static_cast<std::streamsize>(pad.size()));
        out.write(reinterpret_cast<const char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
        pos = aligned + t.bytes.size();
    }
    if (!out) throw Error(ErrorCode::IoError, "short write to '" + path + "'");
}

TensorMap read_aiqw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    char magic[4];
    uint32_t header_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&header_len), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(ErrorCode::MalformedFile, "'" + path + "' is not an AIQW container");
    std::string head(header_len, '\0');
    in.read(head.data(), header_len);
    if (!in) throw Error(ErrorCode::MalformedFile, "truncated AIQW header in '" + path + "'");

    json header;
    try {
        header = json::parse(head);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, std::string("bad AIQW header: ") + e.what());
    }

    TensorMap tensors;
    for (auto it = header.begin(); it != header.end(); ++it) {
        const json& entry = it.value();
        StoredTensor t;
        t.dtype = entry.at("dtype").get<std::string>();
        t.shape = entry.at("shape").get<Shape>();
        if (entry.contains("scale")) t.scale = entry.at("scale").get<float>();
        uint64_t offset = entry.at("offset").get<uint64_t>();
        uint64_t len = dtype_bytes(t.dtype, t.elems());
        t.bytes.resize(static_cast<size_t>(len));
        in.seekg(static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(t.bytes.data()), static_cast<std::streamsize>(len));
        if (!in) throw Error(ErrorCode::MalformedFile, "truncated payload for tensor '" + it.key() + "'");
        tensors.emplace(it.key(), std::move(t));
    }
    return tensors;
}

namespace {

LayerKind kind_from_json(const std::string& kind, const json& params, const std::string& id) {
    auto geti = [&](const char* key) {
        if (!params.contains(key))
            throw Error(ErrorCode::MalformedManifest, "layer '" + id + "' missing param '" + key + "'");
        return params.at(key).get<int>();
    };
    if (kind == "conv2d") {
        Conv2d c;
        c.kernel_h = geti("kernel_h");
        c.kernel_w = geti("kernel_w");
        c.stride = geti("stride");
        c.padding = geti("padding");
        c.in_channels = geti("in_channels");
        c.out_channels = geti("out_channels");
        c.groups = params.contains("groups") ? params.at("groups").get<int>() : 1;
        if (c.groups != 1 && c.groups != c.in_channels)
            throw Error(ErrorCode::MalformedManifest, "layer '" + id + "': groups must be 1 or in_channels");
        return c;
    }
    if (kind == "linear") return Linear{geti("in_features"), geti("out_features")};
    if (kind == "batchnorm2d") return BatchNorm2d{geti("channels")};
    if (kind == "relu") return ReLU{};
    if (kind == "avgpool2d") return AvgPool2d{geti("kernel"), geti("stride")};
    if (kind == "globalavgpool") return GlobalAvgPool{};
    if (kind == "add") return Add{};  // source resolved from residual_from
    if (kind == "flatten") return Flatten{};
    throw Error(ErrorCode::MalformedManifest, "layer '" + id + "' has unknown kind '" + kind + "'");
}

json kind_to_json(const LayerKind& kind) {
    json p = json::object();
    if (const auto* c = std::get_if<Conv2d>(&kind)) {
        p["kernel_h"] = c->kernel_h;
        p["kernel_w"] = c->kernel_w;
        p["stride"] = c->stride;
        p["padding"] = c->padding;
        p["in_channels"] = c->in_channels;
        p["out_channels"] = c->out_channels;
        p["groups"] = c->groups;
    } else if (const auto* l = std::get_if<Linear>(&kind)) {
        p["in_features"] = l->in_features;
        p["out_features"] = l->out_features;
    } else if (const auto* b = std::get_if<BatchNorm2d>(&kind)) {
        p["channels"] = b->channels;
    } else if (const auto* a = std::get_if<AvgPool2d>(&kind)) {
        p["kernel"] = a->kernel;
        p["stride"] = a->stride;
    }
    return p;
}

struct ManifestExtra {
    std::map<std::string, std::string> weight_ids;  // layer id -> tensor id
    std::map<std::string, std::string> bias_ids;
};

ModelGraph parse_manifest(const std::string& text, ManifestExtra* extra) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedManifest, e.what());
    }
    ModelGraph graph;
    try {
        graph.name = doc.at("name").get<std::string>();
        graph.input_shape = doc.at("input_shape").get<Shape>();
        if (doc.contains("normalization") && !doc.at("normalization").is_null()) {
            Normalization norm;
            norm.mean = doc.at("normalization").at("mean").get<std::vector<float>>();
            norm.std = doc.at("normalization").at("std").get<std::vector<float>>();
            graph.normalization = std::move(norm);
        }
        std::map<std::string, int> index_of;
        for (const json& jl : doc.at("layers")) {
            Layer layer;
            layer.id = jl.at("id").get<std::string>();
            if (index_of.count(layer.id))
                throw Error(ErrorCode::MalformedManifest, "duplicate layer id '" + layer.id + "'");
            std::string kind = jl.at("kind").get<std::string>();
            layer.kind = kind_from_json(kind, jl.contains("params") ? jl.at("params") : json::object(), layer.id);
            if (auto* add = std::get_if<Add>(&layer.kind)) {
                if (!jl.contains("residual_from") || jl.at("residual_from").is_null())
                    throw Error(ErrorCode::MalformedManifest, "add layer '" + layer.id + "' needs residual_from");
                std::string src = jl.at("residual_from").get<std::string>();
                auto it = index_of.find(src);
                if (it == index_of.end())
                    throw Error(ErrorCode::MalformedManifest,
                                "add layer '" + layer.id + "' references unknown layer '" + src + "'");
                add->source = it->second;
            }
            if (extra) {
                if (jl.contains("weight") && !jl.at("weight").is_null())
                    extra->weight_ids[layer.id] = jl.at("weight").get<std::string>();
                if (jl.contains("bias") && !jl.at("bias").is_null())
                    extra->bias_ids[layer.id] = jl.at("bias").get<std::string>();
            }
            index_of[layer.id] = static_cast<int>(graph.layers.size());
            graph.layers.push_back(std::move(layer));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedManifest, e.what());
    }
    return graph;
}

Tensor tensor_from_stored(const StoredTensor& t, const std::string& id) {
    Tensor out;
    out.shape = t.shape;
    size_t n = static_cast<size_t>(t.elems());
    out.data.resize(n);
    if (t.dtype == "f32") {
        std::memcpy(out.data.data(), t.bytes.data(), n * 4);
    } else if (t.dtype == "i8") {
        for (size_t i = 0; i < n; ++i)
            out.data[i] = static_cast<float>(static_cast<int8_t>(t.bytes[i])) * t.scale;
    } else if (t.dtype == "i4p") {
        for (size_t i = 0; i < n; ++i)
            out.data[i] = static_cast<float>(unpack_int4(t.bytes.data(), i)) * t.scale;
    } else {
        throw Error(ErrorCode::MalformedFile, "tensor '" + id + "': unknown dtype");
    }
    return out;
}

}  // namespace

ModelGraph manifest_from_json_text(const std::string& text) { return parse_manifest(text, nullptr); }

std::string manifest_to_json_text(const ModelGraph& graph) {
    json doc;
    doc["name"] = graph.name;
    doc["input_shape"] = graph.input_shape;
    if (graph.normalization) {
        doc["normalization"] = {{"mean", graph.normalization->mean}, {"std", graph.normalization->std}};
    }
    json layers = json::array();
    for (const Layer& layer : graph.layers) {
        json jl;
        jl["id"] = layer.id;
        jl["kind"] = kind_name(layer.kind);
        jl["params"] = kind_to_json(layer.kind);
        jl["weight"] = layer.weight ? json(layer.id + ".w") : json(nullptr);
        jl["bias"] = layer.bias ? json(layer.id + ".b") : json(nullptr);
        if (const auto* add = std::get_if<Add>(&layer.kind))
            jl["residual_from"] = graph.layers.at(static_cast<size_t>(add->source)).id;
        else
            jl["residual_from"] = nullptr;
        layers.push_back(std::move(jl));
    }
    doc["layers"] = std::move(layers);
    return doc.dump(2) + "\n";
}

ModelGraph load_model(const std::string& manifest_path, const std::string& weights_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + manifest_path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    ManifestExtra extra;
    ModelGraph graph = parse_manifest(text, &extra);
    TensorMap tensors = read_aiqw(weights_path);

    for (Layer& layer : graph.layers) {
        auto wit = extra.weight_ids.find(layer.id);
        if (wit != extra.weight_ids.end()) {
            auto t = tensors.find(wit->second);
            if (t == tensors.end()) throw Error(ErrorCode::MissingTensor, "'" + wit->second + "'");
            layer.weight = tensor_from_stored(t->second, wit->second);
        }
        auto bit = extra.bias_ids.find(layer.id);
        if (bit != extra.bias_ids.end()) {
            auto t = tensors.find(bit->second);
            if (t == tensors.end()) throw Error(ErrorCode::MissingTensor, "'" + bit->second + "'");
            layer.bias = tensor_from_stored(t->second, bit->second);
        }
    }

    validate_model(graph);
    infer_shapes(graph);
    return graph;
}

void save_model(const ModelGraph& graph, const std::string& manifest_path, const std::string& weights_path) {
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + manifest_path + "' for writing");
    out << manifest_to_json_text(graph);
    if (!out) throw Error(ErrorCode::IoError, "short write to '" + manifest_path + "'");

    TensorMap tensors;
    for (const Layer& layer : graph.layers) {
        auto store = [&](const Tensor& t, const std::string& tid) {
            StoredTensor s;
            s.dtype = "f32";
            s.shape = t.shape;
            s.bytes.resize(t.data.size() * 4);
            std::memcpy(s.bytes.data(), t.data.data(), s.bytes.size());
            tensors.emplace(tid, std::move(s));
        };
        if (layer.weight) store(*layer.weight, layer.id + ".w");
        if (layer.bias) store(*layer.bias, layer.id + ".b");
    }
    write_aiqw(weights_path, tensors);
}

}  // namespace aiq
