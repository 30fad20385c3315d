#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aiq/model.hpp"

namespace aiq {

// Normalized f32 images plus class labels. Images are stored NCHW
// row-major; the subset machinery picks deterministic eval subsets.
struct Dataset {
    int64_t n = 0, c = 0, h = 0, w = 0;
    std::vector<float> images;
    std::vector<uint16_t> labels;
    int num_classes = 0;

    int64_t image_elems() const { return c * h * w; }
    const float* image(int64_t i) const { return images.data() + i * image_elems(); }
};

// Deterministic synthetic classification set: per-class low-resolution
// Gaussian templates, bilinearly upsampled, plus per-pixel noise. Labels
// cycle round-robin so classes stay balanced. Identical bytes for
// identical configs.
struct SyntheticConfig {
    uint64_t seed = 7;           // sampling stream (per-image noise)
    uint64_t template_seed = 0;  // class geometry; 0 = same as seed
    int64_t n = 512;
    int classes = 10;
    int64_t c = 3, h = 16, w = 16;
    float noise = 0.55f;  // per-pixel noise sigma; template amplitude is 1
    int grid = 4;         // template resolution before upsampling
};

Dataset synthetic_dataset(const SyntheticConfig& config);

// Native container: magic "AIQD", u32 LE N,C,H,W, f32 image payload, u16
// labels.
void save_aiqd(const Dataset& data, const std::string& path);
Dataset load_aiqd(const std::string& path);

// IDX (MNIST-style) pair: big-endian dims, image magic 0x00000803, label
// magic 0x00000801. Pixels are normalized as (x/255 - mean) / std per
// channel; defaults mean 0.5, std 0.5.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 const std::vector<float>& mean = {}, const std::vector<float>& std = {});

enum class DatasetFormat { Aiqd, Idx };

// Fixed-seed eval subset: the first `size` entries of a seeded permutation
// of [0, n). size = 0 or >= n means the full set in natural order.
std::vector<uint32_t> eval_subset(const Dataset& data, uint32_t size, uint64_t seed);

}  // namespace aiq
