// Writes the fixture models and synthetic datasets used by the test suite
// and the training script: resnet20-shape variants, the mini-resnet
// architecture (untrained), and train/eval datasets.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "aiq/model_io.hpp"
#include "aiq/zoo.hpp"

using namespace aiq;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"generate aiq fixture models and datasets"};
    std::string out_dir = "fixtures";
    uint64_t seed = 1;
    int64_t train_n = 8192, eval_n = 2048;
    float noise = 5.0f;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "weight init seed");
    app.add_option("--train-n", train_n, "training set size");
    app.add_option("--eval-n", eval_n, "eval set size");
    app.add_option("--noise", noise, "synthetic dataset noise sigma");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        auto emit = [&](const ModelGraph& graph, const std::string& stem) {
            save_model(graph, out_dir + "/" + stem + ".json", out_dir + "/" + stem + ".aiqw");
            std::cout << stem << ": " << graph.num_quantizable() << " quantizable layers\n";
        };
        emit(build_resnet20({.seed = seed}), "resnet20");
        emit(build_heavy_early_resnet20(seed), "heavy_early_resnet20");
        emit(build_plainconv20(64, 16, 10, seed), "plainconv20");
        emit(build_mini_resnet(seed), "mini_resnet_untrained");

        SyntheticConfig train_cfg;
        train_cfg.seed = 7;
        train_cfg.template_seed = 7;
        train_cfg.n = train_n;
        train_cfg.noise = noise;
        save_aiqd(synthetic_dataset(train_cfg), out_dir + "/train.aiqd");
        SyntheticConfig eval_cfg;
        eval_cfg.seed = 1007;  // same classes, disjoint noise stream
        eval_cfg.template_seed = 7;
        eval_cfg.n = eval_n;
        eval_cfg.noise = noise;
        save_aiqd(synthetic_dataset(eval_cfg), out_dir + "/eval.aiqd");
        std::cout << "datasets: train n=" << train_n << ", eval n=" << eval_n << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
