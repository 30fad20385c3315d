#include "aiq/dataset.hpp"

#include <cstring>
#include <fstream>

#include "aiq/rng.hpp"

namespace aiq {

namespace {

// Bilinear upsample of a g x g grid to h x w, pure arithmetic.
void upsample_bilinear(const std::vector<float>& grid, int g, int64_t h, int64_t w, float* out) {
    for (int64_t y = 0; y < h; ++y) {
        float fy = (static_cast<float>(y) + 0.5f) * static_cast<float>(g) / static_cast<float>(h) - 0.5f;
        int y0 = static_cast<int>(fy >= 0 ? fy : -1);
        float ty = fy - static_cast<float>(y0);
        int y0c = std::max(0, std::min(g - 1, y0));
        int y1c = std::max(0, std::min(g - 1, y0 + 1));
        for (int64_t x = 0; x < w; ++x) {
            float fx = (static_cast<float>(x) + 0.5f) * static_cast<float>(g) / static_cast<float>(w) - 0.5f;
            int x0 = static_cast<int>(fx >= 0 ? fx : -1);
            float tx = fx - static_cast<float>(x0);
            int x0c = std::max(0, std::min(g - 1, x0));
            int x1c = std::max(0, std::min(g - 1, x0 + 1));
            float v00 = grid[static_cast<size_t>(y0c) * g + x0c];
            float v01 = grid[static_cast<size_t>(y0c) * g + x1c];
            float v10 = grid[static_cast<size_t>(y1c) * g + x0c];
            float v11 = grid[static_cast<size_t>(y1c) * g + x1c];
            float top = v00 + (v01 - v00) * tx;
            float bot = v10 + (v11 - v10) * tx;
            out[y * w + x] = top + (bot - top) * ty;
        }
    }
}

}  // namespace

Dataset synthetic_dataset(const SyntheticConfig& config) {
    if (config.n <= 0 || config.classes <= 0)
        throw Error(ErrorCode::ConfigInvalid, "synthetic dataset needs n > 0 and classes > 0");

    Dataset data;
    data.n = config.n;
    data.c = config.c;
    data.h = config.h;
    data.w = config.w;
    data.num_classes = config.classes;

    const int64_t chw = data.image_elems();
    const int64_t hw = config.h * config.w;

    // Class templates from a dedicated stream so changing n never changes
    // the class geometry; a train/eval pair shares template_seed while
    // drawing disjoint noise.
    const uint64_t tseed = config.template_seed ? config.template_seed : config.seed;
    Pcg32 template_rng(tseed, 0x9e3779b97f4a7c15ull);
    std::vector<float> templates(static_cast<size_t>(config.classes) * chw);
    std::vector<float> grid(static_cast<size_t>(config.grid) * config.grid);
    for (int cls = 0; cls < config.classes; ++cls) {
        for (int64_t ch = 0; ch < config.c; ++ch) {
            for (float& v : grid) v = template_rng.next_gaussian();
            upsample_bilinear(grid, config.grid, config.h, config.w,
                              templates.data() + cls * chw + ch * hw);
        }
    }

    Pcg32 noise_rng(config.seed, 0xda3e39cb94b95bdbull);
    data.images.resize(static_cast<size_t>(config.n) * chw);
    data.labels.resize(static_cast<size_t>(config.n));
    for (int64_t i = 0; i < config.n; ++i) {
        int cls = static_cast<int>(i % config.classes);
        data.labels[static_cast<size_t>(i)] = static_cast<uint16_t>(cls);
        const float* t = templates.data() + cls * chw;
        float* img = data.images.data() + i * chw;
        for (int64_t j = 0; j < chw; ++j) img[j] = t[j] + config.noise * noise_rng.next_gaussian();
    }
    return data;
}

void save_aiqd(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out.write("AIQD", 4);
    uint32_t dims[4] = {static_cast<uint32_t>(data.n), static_cast<uint32_t>(data.c),
                        static_cast<uint32_t>(data.h), static_cast<uint32_t>(data.w)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(data.images.data()),
              static_cast<std::streamsize>(data.images.size() * 4));
    out.write(reinterpret_cast<const char*>(data.labels.data()),
              static_cast<std::streamsize>(data.labels.size() * 2));
    if (!out) throw Error(ErrorCode::IoError, "short write to '" + path + "'");
}

Dataset load_aiqd(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    char magic[4];
    uint32_t dims[4];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || std::memcmp(magic, "AIQD", 4) != 0)
        throw Error(ErrorCode::MalformedFile, "'" + path + "' is not an AIQD dataset");

    Dataset data;
    data.n = dims[0];
    data.c = dims[1];
    data.h = dims[2];
    data.w = dims[3];
    data.images.resize(static_cast<size_t>(data.n) * data.image_elems());
    data.labels.resize(static_cast<size_t>(data.n));
    in.read(reinterpret_cast<char*>(data.images.data()),
            static_cast<std::streamsize>(data.images.size() * 4));
    in.read(reinterpret_cast<char*>(data.labels.data()),
            static_cast<std::streamsize>(data.labels.size() * 2));
    if (!in) throw Error(ErrorCode::MalformedFile, "truncated AIQD payload in '" + path + "'");
    for (float v : data.images)
        if (!std::isfinite(v)) throw Error(ErrorCode::MalformedFile, "non-finite pixel in '" + path + "'");
    int max_label = -1;
    for (uint16_t l : data.labels) max_label = std::max(max_label, static_cast<int>(l));
    data.num_classes = max_label + 1;
    return data;
}

namespace {

uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error(ErrorCode::MalformedFile, "truncated IDX header in '" + path + "'");
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 const std::vector<float>& mean, const std::vector<float>& std_dev) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error(ErrorCode::IoError, "cannot open '" + images_path + "'");
    if (read_be_u32(img, images_path) != 0x00000803u)
        throw Error(ErrorCode::MalformedFile, "'" + images_path + "' has wrong IDX image magic");
    uint32_t n = read_be_u32(img, images_path);
    uint32_t h = read_be_u32(img, images_path);
    uint32_t w = read_be_u32(img, images_path);

    Dataset data;
    data.n = n;
    data.c = 1;
    data.h = h;
    data.w = w;
    std::vector<uint8_t> raw(static_cast<size_t>(n) * h * w);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!img) throw Error(ErrorCode::MalformedFile, "truncated IDX image payload in '" + images_path + "'");

    float m = mean.empty() ? 0.5f : mean[0];
    float s = std_dev.empty() ? 0.5f : std_dev[0];
    data.images.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i)
        data.images[i] = (static_cast<float>(raw[i]) / 255.0f - m) / s;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error(ErrorCode::IoError, "cannot open '" + labels_path + "'");
    if (read_be_u32(lab, labels_path) != 0x00000801u)
        throw Error(ErrorCode::MalformedFile, "'" + labels_path + "' has wrong IDX label magic");
    uint32_t ln = read_be_u32(lab, labels_path);
    if (ln != n)
        throw Error(ErrorCode::MalformedFile, "IDX label count " + std::to_string(ln) +
                                                  " != image count " + std::to_string(n));
    std::vector<uint8_t> lraw(ln);
    lab.read(reinterpret_cast<char*>(lraw.data()), static_cast<std::streamsize>(lraw.size()));
    if (!lab) throw Error(ErrorCode::MalformedFile, "truncated IDX labels in '" + labels_path + "'");
    data.labels.assign(lraw.begin(), lraw.end());

    int max_label = -1;
    for (uint16_t l : data.labels) max_label = std::max(max_label, static_cast<int>(l));
    data.num_classes = max_label + 1;
    if (data.num_classes > 256) throw Error(ErrorCode::LabelOutOfRange, "IDX labels exceed 255");
    return data;
}

std::vector<uint32_t> eval_subset(const Dataset& data, uint32_t size, uint64_t seed) {
    uint32_t n = static_cast<uint32_t>(data.n);
    if (size == 0 || size >= n) {
        std::vector<uint32_t> all(n);
        for (uint32_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    return sample_indices(n, size, seed);
}

}  // namespace aiq
