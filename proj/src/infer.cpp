#include "aiq/infer.hpp"

#include <cmath>
#include <cstring>

#include "aiq/threading.hpp"

namespace aiq {

namespace {

// Weight access for one layer: either a direct f32 pointer or packed codes
// decoded tile-by-tile. Decoding computes float(code) * scale, the exact
// expression used to build the fake-quant tensors, so both paths see
// identical f32 values.
struct WeightStream {
    enum class Enc : uint8_t { F32, I8, I4 } enc = Enc::F32;
    const float* f32 = nullptr;
    const uint8_t* codes = nullptr;
    float scale = 1.0f;
    uint64_t stream_bytes = 0;

    const float* tile(int64_t begin, int64_t len, float* buf) const {
        switch (enc) {
            case Enc::F32:
                return f32 + begin;
            case Enc::I8:
                for (int64_t j = 0; j < len; ++j)
                    buf[j] = static_cast<float>(static_cast<int8_t>(codes[begin + j])) * scale;
                return buf;
            case Enc::I4:
                for (int64_t j = 0; j < len; ++j)
                    buf[j] = static_cast<float>(unpack_int4(codes, static_cast<size_t>(begin + j))) * scale;
                return buf;
        }
        return buf;
    }
};

WeightStream weight_stream(const QuantizedModel& model, size_t layer_index, bool packed) {
    const Layer& layer = model.graph->layers[layer_index];
    const QuantizedLayer& ql = model.layers[layer_index];
    WeightStream ws;
    const uint64_t elems = static_cast<uint64_t>(layer.weight->elems());
    if (ql.bits == BitWidth::FP32) {
        ws.enc = WeightStream::Enc::F32;
        ws.f32 = layer.weight->data.data();
        ws.stream_bytes = elems * 4;
    } else if (packed) {
        ws.enc = ql.bits == BitWidth::INT8 ? WeightStream::Enc::I8 : WeightStream::Enc::I4;
        ws.codes = ql.packed.codes.data();
        ws.scale = ql.packed.params.scale;
        ws.stream_bytes = ql.packed.byte_size();
    } else {
        ws.enc = WeightStream::Enc::F32;
        ws.f32 = ql.dequant.data();
        // The fake-quant path physically reads f32, but it models the
        // packed layout; traffic accounting always reports storage bytes.
        ws.stream_bytes = (elems * static_cast<uint64_t>(bit_count(ql.bits)) + 7) / 8;
    }
    return ws;
}

// Fixed-order dot product: 16 independent lanes plus a sequential tail,
// reduced in a fixed order. Deterministic and auto-vectorizable.
float dot_fixed(const float* a, const float* b, int64_t n) {
    float acc[16] = {};
    int64_t j = 0;
    for (; j + 16 <= n; j += 16)
        for (int k = 0; k < 16; ++k) acc[k] += a[j + k] * b[j + k];
    float tail = 0.0f;
    for (; j < n; ++j) tail += a[j] * b[j];
    float s = 0.0f;
    for (int k = 0; k < 16; ++k) s += acc[k];
    return s + tail;
}

void linear_forward(const Linear& lin, const WeightStream& ws, const float* bias, const float* in,
                    float* out, int n, int threads) {
    const int64_t in_f = lin.in_features;
    const int64_t out_f = lin.out_features;
    parallel_for(0, out_f, threads, [&](int64_t lo, int64_t hi) {
        std::vector<float> buf(ws.enc == WeightStream::Enc::F32 ? 0 : static_cast<size_t>(in_f));
        for (int64_t r = lo; r < hi; ++r) {
            const float* w = ws.tile(r * in_f, in_f, buf.data());
            for (int64_t s = 0; s < n; ++s) {
                float acc = dot_fixed(w, in + s * in_f, in_f);
                out[s * out_f + r] = bias ? acc + bias[r] : acc;
            }
        }
    });
}

void conv2d_forward(const Conv2d& cv, const WeightStream& ws, const float* bias, const float* in,
                    float* out, int n, const Shape& in_shape, const Shape& out_shape, int threads) {
    const int64_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
    const int64_t K = out_shape[0], OH = out_shape[1], OW = out_shape[2];
    const int64_t cpg_in = C / cv.groups;        // input channels per group
    const int64_t cpg_out = K / cv.groups;       // filters per group
    const int64_t row_len = cpg_in * cv.kernel_h * cv.kernel_w;

    parallel_for(0, K, threads, [&](int64_t lo, int64_t hi) {
        std::vector<float> buf(ws.enc == WeightStream::Enc::F32 ? 0 : static_cast<size_t>(row_len));
        for (int64_t k = lo; k < hi; ++k) {
            const float* w = ws.tile(k * row_len, row_len, buf.data());
            const int64_t group = k / cpg_out;
            const float b = bias ? bias[k] : 0.0f;
            for (int64_t s = 0; s < n; ++s) {
                const float* img = in + s * C * H * W;
                float* dst = out + ((s * K + k) * OH) * OW;
                for (int64_t oy = 0; oy < OH; ++oy) {
                    float* orow = dst + oy * OW;
                    for (int64_t ox = 0; ox < OW; ++ox) orow[ox] = b;
                    for (int64_t c = 0; c < cpg_in; ++c) {
                        const float* chan = img + (group * cpg_in + c) * H * W;
                        const float* wch = w + c * cv.kernel_h * cv.kernel_w;
                        for (int dy = 0; dy < cv.kernel_h; ++dy) {
                            int64_t iy = oy * cv.stride + dy - cv.padding;
                            if (iy < 0 || iy >= H) continue;
                            const float* irow = chan + iy * W;
                            const float* wrow = wch + static_cast<int64_t>(dy) * cv.kernel_w;
                            for (int dx = 0; dx < cv.kernel_w; ++dx) {
                                const float wv = wrow[dx];
                                const int64_t off = dx - cv.padding;
                                // valid ox range for this (dy, dx)
                                int64_t ox_lo = 0, ox_hi = OW;
                                if (cv.stride == 1) {
                                    ox_lo = std::max<int64_t>(0, -off);
                                    ox_hi = std::min<int64_t>(OW, W - off);
                                    const float* ir = irow + off;
                                    for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                                        orow[ox] += wv * ir[ox];
                                } else {
                                    for (int64_t ox = 0; ox < OW; ++ox) {
                                        int64_t ix = ox * cv.stride + off;
                                        if (ix < 0 || ix >= W) continue;
                                        orow[ox] += wv * irow[ix];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

void batchnorm_forward(const BatchNorm2d& bn, const Tensor& params, const float* in, float* out, int n,
                       const Shape& shape, int threads) {
    const int64_t C = shape[0], HW = shape[1] * shape[2];
    const float* gamma = params.data.data();
    const float* beta = gamma + bn.channels;
    const float* mean = beta + bn.channels;
    const float* var = mean + bn.channels;
    std::vector<float> a(static_cast<size_t>(C)), b(static_cast<size_t>(C));
    for (int64_t c = 0; c < C; ++c) {
        a[c] = gamma[c] / std::sqrt(var[c] + 1e-5f);
        b[c] = beta[c] - mean[c] * a[c];
    }
    parallel_for(0, static_cast<int64_t>(n) * C, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t sc = lo; sc < hi; ++sc) {
            const int64_t c = sc % C;
            const float* src = in + sc * HW;
            float* dst = out + sc * HW;
            const float ac = a[c], bc = b[c];
            for (int64_t i = 0; i < HW; ++i) dst[i] = src[i] * ac + bc;
        }
    });
}

void avgpool_forward(const AvgPool2d& p, const float* in, float* out, int n, const Shape& in_shape,
                     const Shape& out_shape) {
    const int64_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
    const int64_t OH = out_shape[1], OW = out_shape[2];
    const float inv = 1.0f / static_cast<float>(p.kernel * p.kernel);
    for (int64_t sc = 0; sc < static_cast<int64_t>(n) * C; ++sc) {
        const float* chan = in + sc * H * W;
        float* dst = out + sc * OH * OW;
        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                float acc = 0.0f;
                for (int dy = 0; dy < p.kernel; ++dy)
                    for (int dx = 0; dx < p.kernel; ++dx)
                        acc += chan[(oy * p.stride + dy) * W + (ox * p.stride + dx)];
                dst[oy * OW + ox] = acc * inv;
            }
    }
}

}  // namespace

Engine::Engine(const QuantizedModel& model, int max_batch) : model_(&model), max_batch_(max_batch) {
    const ModelGraph& graph = *model.graph;
    acts_.resize(graph.layers.size());
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const Layer& layer = graph.layers[i];
        if (layer.output_shape.empty())
            throw Error(ErrorCode::ShapeMissing, "layer '" + layer.id + "' has no inferred shapes");
        acts_[i].resize(static_cast<size_t>(shape_elems(layer.output_shape)) * max_batch);
    }
    logit_dim_ = graph.layers.empty() ? 0 : shape_elems(graph.layers.back().output_shape);
}

const float* Engine::forward(const float* batch, int n, const ForwardOptions& opts) {
    if (n < 1 || n > max_batch_)
        throw Error(ErrorCode::ConfigInvalid, "batch size " + std::to_string(n) + " outside [1, " +
                                                  std::to_string(max_batch_) + "]");
    const ModelGraph& graph = *model_->graph;
    if (opts.counter && opts.counter->weight_bytes.size() != graph.layers.size())
        opts.counter->weight_bytes.assign(graph.layers.size(), 0);

    const float* cur = batch;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const Layer& layer = graph.layers[i];
        float* out = acts_[i].data();
        const int64_t in_elems = shape_elems(layer.input_shape);
        const int64_t out_elems = shape_elems(layer.output_shape);

        if (const auto* cv = std::get_if<Conv2d>(&layer.kind)) {
            WeightStream ws = weight_stream(*model_, i, opts.packed);
            if (opts.counter) {
                uint64_t bias_bytes = layer.bias ? static_cast<uint64_t>(layer.bias->elems()) * 4 : 0;
                opts.counter->weight_bytes[i] += ws.stream_bytes + bias_bytes;
            }
            conv2d_forward(*cv, ws, layer.bias ? layer.bias->data.data() : nullptr, cur, out, n,
                           layer.input_shape, layer.output_shape, opts.threads);
        } else if (const auto* lin = std::get_if<Linear>(&layer.kind)) {
            WeightStream ws = weight_stream(*model_, i, opts.packed);
            if (opts.counter) {
                uint64_t bias_bytes = layer.bias ? static_cast<uint64_t>(layer.bias->elems()) * 4 : 0;
                opts.counter->weight_bytes[i] += ws.stream_bytes + bias_bytes;
            }
            linear_forward(*lin, ws, layer.bias ? layer.bias->data.data() : nullptr, cur, out, n,
                           opts.threads);
        } else if (const auto* bn = std::get_if<BatchNorm2d>(&layer.kind)) {
            batchnorm_forward(*bn, *layer.weight, cur, out, n, layer.input_shape, opts.threads);
        } else if (std::holds_alternative<ReLU>(layer.kind)) {
            const int64_t total = static_cast<int64_t>(n) * out_elems;
            for (int64_t j = 0; j < total; ++j) out[j] = cur[j] > 0.0f ? cur[j] : 0.0f;
        } else if (const auto* p = std::get_if<AvgPool2d>(&layer.kind)) {
            avgpool_forward(*p, cur, out, n, layer.input_shape, layer.output_shape);
        } else if (std::holds_alternative<GlobalAvgPool>(layer.kind)) {
            const int64_t C = layer.input_shape[0];
            const int64_t HW = layer.input_shape[1] * layer.input_shape[2];
            const float inv = 1.0f / static_cast<float>(HW);
            for (int64_t sc = 0; sc < static_cast<int64_t>(n) * C; ++sc) {
                const float* chan = cur + sc * HW;
                float acc = 0.0f;
                for (int64_t j = 0; j < HW; ++j) acc += chan[j];
                out[sc] = acc * inv;
            }
        } else if (const auto* add = std::get_if<Add>(&layer.kind)) {
            const float* src = acts_[static_cast<size_t>(add->source)].data();
            const int64_t total = static_cast<int64_t>(n) * out_elems;
            for (int64_t j = 0; j < total; ++j) out[j] = cur[j] + src[j];
        } else {  // flatten
            std::memcpy(out, cur, static_cast<size_t>(n) * in_elems * 4);
        }
        cur = out;
    }
    return cur;
}

AccuracyResult evaluate(const QuantizedModel& model, const Dataset& data,
                        const std::optional<std::vector<uint32_t>>& subset, const EvalOptions& opts) {
    std::vector<uint32_t> all;
    const std::vector<uint32_t>* idx = nullptr;
    if (subset) {
        idx = &*subset;
        if (idx->empty()) throw Error(ErrorCode::EmptySubset, "evaluation subset is empty");
    } else {
        all.resize(static_cast<size_t>(data.n));
        for (uint32_t i = 0; i < data.n; ++i) all[i] = i;
        idx = &all;
    }
    for (uint32_t i : *idx)
        if (i >= data.n) throw Error(ErrorCode::ConfigInvalid, "subset index out of range");

    const Shape& in_shape = model.graph->input_shape;
    if (shape_elems(in_shape) != data.image_elems())
        throw Error(ErrorCode::ShapeMismatch, "dataset image shape does not match model input " +
                                                  shape_str(in_shape));

    const int workers = std::max(1, opts.threads);
    int batch = std::max(1, opts.batch);
    // every worker should see at least one chunk
    const int64_t total = static_cast<int64_t>(idx->size());
    batch = static_cast<int>(std::max<int64_t>(
        1, std::min<int64_t>(batch, (total + workers - 1) / workers)));
    const int64_t chunks = (total + batch - 1) / batch;
    std::vector<int64_t> correct_per_chunk(static_cast<size_t>(chunks), 0);

    parallel_for(0, chunks, workers, [&](int64_t lo, int64_t hi) {
        Engine engine(model, batch);
        std::vector<float> input(static_cast<size_t>(batch) * data.image_elems());
        ForwardOptions fwd;
        fwd.packed = opts.packed;
        for (int64_t ci = lo; ci < hi; ++ci) {
            const int64_t begin = ci * batch;
            const int n = static_cast<int>(std::min<int64_t>(batch, total - begin));
            for (int s = 0; s < n; ++s)
                std::memcpy(input.data() + static_cast<int64_t>(s) * data.image_elems(),
                            data.image((*idx)[static_cast<size_t>(begin + s)]),
                            static_cast<size_t>(data.image_elems()) * 4);
            const float* logits = engine.forward(input.data(), n, fwd);
            const int64_t classes = engine.logit_dim();
            int64_t correct = 0;
            for (int s = 0; s < n; ++s) {
                const float* row = logits + s * classes;
                int64_t best = 0;
                for (int64_t k = 1; k < classes; ++k)
                    if (row[k] > row[best]) best = k;  // ties keep the lowest index
                if (best == data.labels[(*idx)[static_cast<size_t>(begin + s)]]) ++correct;
            }
            correct_per_chunk[static_cast<size_t>(ci)] = correct;
        }
    });

    AccuracyResult result;
    result.total = total;
    for (int64_t c : correct_per_chunk) result.correct += c;
    result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

}  // namespace aiq
