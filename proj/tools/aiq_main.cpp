// aiq: arithmetic-intensity-aware mixed-precision quantization toolkit.
//
// Subcommands: search, profile, sweep, bench, cost, calibrate, quantize.
// Exit codes: 0 ok, 2 usage/config error, 3 data/model error, 4 internal.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aiq/bench.hpp"
#include "aiq/model_io.hpp"
#include "aiq/profile.hpp"
#include "aiq/report.hpp"
#include "aiq/search.hpp"
#include "aiq/zoo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aiq;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigInvalid:
        case ErrorCode::SpaceTooLarge:
        case ErrorCode::KTooLarge:
            return 2;
        case ErrorCode::IoError:
        case ErrorCode::MalformedManifest:
        case ErrorCode::MalformedFile:
        case ErrorCode::MissingTensor:
        case ErrorCode::ShapeMismatch:
        case ErrorCode::ShapeMissing:
        case ErrorCode::NonFiniteWeight:
        case ErrorCode::LabelOutOfRange:
        case ErrorCode::LengthMismatch:
        case ErrorCode::EmptyModel:
        case ErrorCode::EmptySubset:
            return 3;
    }
    return 4;
}

struct CommonOpts {
    std::string model_path, weights_path;
    std::string data_path, labels_path;
    std::string data_format = "aiqd";
    std::string out_dir = "aiq-out";
    float lambda = 0.9f;
    std::string bits = "32,8,4";
    std::string algo = "greedy";
    std::string ai_norm = "none";
    std::string greedy_moves = "any-lower";
    uint64_t seed = 17;
    uint32_t subset_size = 1000;
    int batch = 1;
    int eval_batch = 64;
    int threads = 1;
    bool no_cache = false;
};

void add_model_opts(CLI::App* cmd, CommonOpts& o, bool require_data) {
    cmd->add_option("--model", o.model_path, "model manifest JSON")->required();
    cmd->add_option("--weights", o.weights_path, "AIQW weights container")->required();
    auto* data = cmd->add_option("--data", o.data_path, "dataset file (aiqd or IDX images)");
    if (require_data) data->required();
    cmd->add_option("--labels", o.labels_path, "IDX labels file (idx format only)");
    cmd->add_option("--data-format", o.data_format, "aiqd|idx")->check(CLI::IsMember({"aiqd", "idx"}));
}

void add_search_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--lambda", o.lambda, "AI/accuracy trade-off in [0,1]")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--bits", o.bits, "allowed bit-widths, descending (default 32,8,4)");
    cmd->add_option("--ai-norm", o.ai_norm, "AI term normalization")
        ->check(CLI::IsMember({"none", "baseline"}));
    cmd->add_option("--greedy-moves", o.greedy_moves, "greedy move set")
        ->check(CLI::IsMember({"any-lower", "fp32-only"}));
    cmd->add_option("--seed", o.seed, "subset / RNG seed");
    cmd->add_option("--subset-size", o.subset_size, "search-time eval subset size (0 = full)");
    cmd->add_option("--eval-batch", o.eval_batch, "forward batch during evaluation");
    cmd->add_flag("--no-cache", o.no_cache, "disable the scheme evaluation cache");
}

std::vector<BitWidth> parse_bitset(const std::string& text) {
    QuantScheme q = QuantScheme::parse(text);
    return q.bits;
}

Dataset load_data(const CommonOpts& o, const ModelGraph* graph) {
    if (o.data_format == "idx") {
        if (o.labels_path.empty())
            throw Error(ErrorCode::ConfigInvalid, "idx format needs --labels");
        std::vector<float> mean, stddev;
        if (graph && graph->normalization) {
            mean = graph->normalization->mean;
            stddev = graph->normalization->std;
        }
        return load_idx(o.data_path, o.labels_path, mean, stddev);
    }
    return load_aiqd(o.data_path);
}

SearchConfig to_search_config(const CommonOpts& o) {
    SearchConfig cfg;
    cfg.lambda = o.lambda;
    cfg.normalization =
        o.ai_norm == "baseline" ? AiNormalization::BaselineRelative : AiNormalization::None;
    cfg.bit_set = parse_bitset(o.bits);
    cfg.greedy_moves = o.greedy_moves == "fp32-only" ? GreedyMoves::Fp32Only : GreedyMoves::AnyLower;
    cfg.subset_size = o.subset_size;
    cfg.seed = o.seed;
    cfg.ai_batch = o.batch;
    cfg.eval_batch = o.eval_batch;
    cfg.threads = o.threads;
    cfg.cache = !o.no_cache;
    return cfg;
}

json common_json(const CommonOpts& o, const std::string& command) {
    json j;
    j["command"] = command;
    j["model"] = o.model_path;
    j["weights"] = o.weights_path;
    j["data"] = o.data_path;
    j["data_format"] = o.data_format;
    j["lambda"] = o.lambda;
    j["bits"] = o.bits;
    j["algorithm"] = o.algo;
    j["ai_normalization"] = o.ai_norm;
    j["greedy_moves"] = o.greedy_moves;
    j["seed"] = o.seed;
    j["subset_size"] = o.subset_size;
    j["batch"] = o.batch;
    j["eval_batch"] = o.eval_batch;
    j["threads"] = o.threads;
    j["cache"] = !o.no_cache;
    j["out_dir"] = o.out_dir;
    return j;
}

void write_config(const json& j, const std::string& out_dir) {
    std::ofstream out(out_dir + "/config.json", std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write config to '" + out_dir + "'");
    out << j.dump(2) << "\n";
}

QuantScheme scheme_from_arg(const std::string& arg, size_t L) {
    if (arg == "fp32" || arg == "uniform:fp32") return QuantScheme::all_fp32(L);
    if (arg == "uniform:int8") return QuantScheme::uniform(L, BitWidth::INT8);
    if (arg == "uniform:int4") return QuantScheme::uniform(L, BitWidth::INT4);
    QuantScheme q = load_scheme(arg);
    check_scheme_length(q, L);
    return q;
}

json throughput_json(const ThroughputResult& r) {
    json j;
    j["scheme"] = r.scheme.str();
    j["images_per_s"] = r.images_per_s;
    j["runs"] = r.runs;
    j["warmup"] = r.warmup;
    j["images_per_run"] = r.images_per_run;
    j["run_seconds"] = r.run_seconds;
    j["accuracy"] = r.accuracy;
    j["weight_bytes_per_batch"] = r.weight_bytes_per_batch;
    j["machine_fingerprint"] = r.machine_fingerprint;
    return j;
}

int cmd_search(const CommonOpts& o) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    Dataset data = load_data(o, &graph);
    fs::create_directories(o.out_dir);
    write_config(common_json(o, "search"), o.out_dir);

    SearchConfig cfg = to_search_config(o);
    Algorithm algo = algorithm_from_name(o.algo);
    SearchTrace trace = run_search(algo, graph, data, cfg);

    save_scheme(trace.final_record.scheme, graph, o.out_dir + "/scheme.json");
    write_trace_jsonl(trace, o.out_dir + "/trace.jsonl");
    std::vector<RecordRow> rows;
    rows.push_back({trace.baseline, cfg.lambda, o.algo, "baseline-fp32", false});
    rows.push_back({trace.final_record, cfg.lambda, o.algo, "final", false});
    write_records_csv(rows, o.out_dir + "/records.csv", false);

    std::cout << "final scheme: " << trace.final_record.scheme.str() << "\n"
              << "AI " << fmt_float(trace.final_record.ai) << " (fp32 "
              << fmt_float(trace.baseline.ai) << "), accuracy "
              << fmt_float(trace.final_record.accuracy) << ", acc_loss_pp "
              << fmt_float(trace.final_record.acc_loss_pp) << ", loss "
              << fmt_float(trace.final_record.loss) << ", evals " << trace.evals_used << "\n";
    return 0;
}

int cmd_profile(const CommonOpts& o, int profile_bits, const std::string& scheme_arg) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    Dataset data = load_data(o, &graph);
    fs::create_directories(o.out_dir);
    json cfg_json = common_json(o, "profile");
    cfg_json["profile_bits"] = profile_bits;
    cfg_json["scheme"] = scheme_arg;
    write_config(cfg_json, o.out_dir);

    ProfileConfig cfg;
    cfg.subset_size = o.subset_size;
    cfg.seed = o.seed;
    cfg.ai_batch = o.batch;
    cfg.eval_batch = o.eval_batch;
    cfg.threads = o.threads;

    BitWidth bits = bitwidth_from_int(profile_bits);
    std::vector<LayerProbe> probes = layerwise_profile(graph, data, bits, cfg);
    write_profile_csv(probes, o.out_dir + "/profile.csv");
    write_profile_svg(probes, graph.name + " single-layer profile @int" + std::to_string(profile_bits),
                      o.out_dir + "/profile.svg");

    std::optional<QuantScheme> final_scheme;
    if (!scheme_arg.empty()) final_scheme = scheme_from_arg(scheme_arg, graph.num_quantizable());
    std::vector<SensitivityRow> rows =
        sensitivity_table(graph, data, cfg, final_scheme ? &*final_scheme : nullptr);
    write_sensitivity_csv(rows, o.out_dir + "/sensitivity.csv");

    std::cout << "profiled " << probes.size() << " layers -> " << o.out_dir << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& lambdas_arg) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    Dataset data = load_data(o, &graph);
    fs::create_directories(o.out_dir);
    json cfg_json = common_json(o, "sweep");
    cfg_json["lambdas"] = lambdas_arg;
    write_config(cfg_json, o.out_dir);

    std::vector<float> lambdas;
    {
        size_t pos = 0;
        while (pos < lambdas_arg.size()) {
            size_t comma = lambdas_arg.find(',', pos);
            if (comma == std::string::npos) comma = lambdas_arg.size();
            lambdas.push_back(std::stof(lambdas_arg.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    if (lambdas.empty()) throw Error(ErrorCode::ConfigInvalid, "--lambdas is empty");

    SearchConfig cfg = to_search_config(o);
    Algorithm algo = algorithm_from_name(o.algo);
    std::vector<SweepEntry> entries = pareto_sweep(graph, data, lambdas, algo, cfg);

    // Uniform reference rows, evaluated on the full set like sweep finals.
    SchemeEvaluator ev(graph, data, cfg);
    const size_t L = graph.num_quantizable();
    auto add_uniform = [&](BitWidth b, const std::string& label) {
        QuantScheme q = QuantScheme::uniform(L, b);
        SweepEntry e;
        e.label = label;
        e.lambda = cfg.lambda;
        e.algorithm = algo;
        e.record = ev.record(q, ev.measure_full(q), ev.baseline_full().accuracy);
        e.baseline_row = true;
        entries.push_back(std::move(e));
    };
    add_uniform(BitWidth::FP32, "uniform-fp32");
    add_uniform(BitWidth::INT8, "uniform-int8");
    add_uniform(BitWidth::INT4, "uniform-int4");
    mark_dominated(entries);

    std::vector<RecordRow> rows;
    for (const SweepEntry& e : entries)
        rows.push_back({e.record, e.lambda, algorithm_name(e.algorithm), e.label, e.dominated});
    write_records_csv(rows, o.out_dir + "/sweep.csv", true);
    write_pareto_svg(entries, o.out_dir + "/sweep.svg");

    std::cout << "swept " << lambdas.size() << " lambda values -> " << o.out_dir << "\n";
    return 0;
}

int cmd_bench(const CommonOpts& o, const std::string& scheme_arg, int runs, int warmup,
              const std::string& compare_random) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    Dataset data = load_data(o, &graph);
    fs::create_directories(o.out_dir);
    json cfg_json = common_json(o, "bench");
    cfg_json["scheme"] = scheme_arg;
    cfg_json["runs"] = runs;
    cfg_json["warmup"] = warmup;
    cfg_json["compare_random"] = compare_random;
    write_config(cfg_json, o.out_dir);

    BenchConfig cfg;
    cfg.batch = o.batch;
    cfg.runs = runs;
    cfg.warmup = warmup;
    cfg.threads = o.threads;

    QuantScheme scheme = scheme_from_arg(scheme_arg, graph.num_quantizable());
    json result;
    if (compare_random.empty()) {
        ThroughputResult r = measure_throughput(graph, scheme, data, cfg);
        result = throughput_json(r);
        std::cout << "images/s: " << r.images_per_s << " (accuracy " << r.accuracy << ")\n";
    } else {
        PairedThroughput paired =
            compare_random_baseline(graph, data, scheme, BitWidth::INT8, std::stoull(compare_random), cfg);
        result["aiq"] = throughput_json(paired.aiq);
        result["random"] = throughput_json(paired.random);
        result["k"] = paired.k;
        result["trials"] = paired.trials;
        result["aiq_wins"] = paired.aiq_wins;
        std::cout << "aiq " << paired.aiq.images_per_s << " img/s vs random "
                  << paired.random.images_per_s << " img/s, wins " << paired.aiq_wins << "/"
                  << paired.trials << "\n";
    }
    std::ofstream out(o.out_dir + "/bench.json", std::ios::trunc);
    out << result.dump(2) << "\n";
    return 0;
}

int cmd_cost(const CommonOpts& o, const std::string& scheme_arg, const std::string& machine_path) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    fs::create_directories(o.out_dir);
    json cfg_json = common_json(o, "cost");
    cfg_json["scheme"] = scheme_arg;
    cfg_json["machine"] = machine_path;
    write_config(cfg_json, o.out_dir);

    QuantScheme scheme = scheme_from_arg(scheme_arg, graph.num_quantizable());
    CostReport report = global_ai(graph, scheme, o.batch);
    if (!machine_path.empty()) {
        MachineModel machine = load_machine_model(machine_path);
        roofline_classify(report, machine);
        std::cout << "attainable images/s: " << report.attainable_images_per_s << "\n";
    }
    write_cost_csv(report, o.out_dir + "/cost.csv");
    std::cout << "AI " << fmt_float(report.ai) << " (flops " << report.global_flops << ", bytes "
              << report.global_bytes << ")\n";
    return 0;
}

int cmd_calibrate(const CommonOpts& o, int runs, uint64_t bytes) {
    fs::create_directories(o.out_dir);
    CalibrationConfig cfg;
    cfg.runs = runs;
    cfg.threads = o.threads;
    cfg.bandwidth_bytes = bytes;
    CalibrationResult result = calibrate_machine(cfg);

    json info;
    info["fingerprint"] = result.fingerprint;
    info["threads"] = o.threads;
    info["peak_flops_1t"] = result.peak_flops_1t;
    info["bandwidth_1t"] = result.bandwidth_1t;
    info["bandwidth_mt"] = result.bandwidth_mt;
    info["buffer_bytes"] = result.buffer_bytes;
    save_machine_model(result.machine, o.out_dir + "/machine.json", info.dump());
    std::cout << "peak " << result.machine.peak_flops / 1e9 << " GFLOP/s, bandwidth "
              << result.machine.mem_bandwidth / 1e9 << " GB/s, ridge "
              << result.machine.ridge_point() << " FLOP/byte\n";
    return 0;
}

int cmd_quantize(const CommonOpts& o, const std::string& scheme_arg, const std::string& out_weights) {
    ModelGraph graph = load_model(o.model_path, o.weights_path);
    QuantScheme scheme = scheme_from_arg(scheme_arg, graph.num_quantizable());

    TensorMap tensors;
    size_t qi = 0;
    for (const Layer& layer : graph.layers) {
        BitWidth bits = layer.quantizable() ? scheme[qi++] : BitWidth::FP32;
        auto store_f32 = [&](const Tensor& t, const std::string& tid) {
            StoredTensor s;
            s.dtype = "f32";
            s.shape = t.shape;
            s.bytes.resize(t.data.size() * 4);
            std::memcpy(s.bytes.data(), t.data.data(), s.bytes.size());
            tensors.emplace(tid, std::move(s));
        };
        if (layer.weight) {
            if (bits == BitWidth::FP32) {
                store_f32(*layer.weight, layer.id + ".w");
            } else {
                auto [packed, params] = quantize(*layer.weight, bits);
                StoredTensor s;
                s.dtype = bits == BitWidth::INT8 ? "i8" : "i4p";
                s.shape = packed.shape;
                s.scale = params.scale;
                s.bytes = packed.codes;
                tensors.emplace(layer.id + ".w", std::move(s));
            }
        }
        if (layer.bias) store_f32(*layer.bias, layer.id + ".b");
    }
    write_aiqw(out_weights, tensors);
    std::cout << "packed weights -> " << out_weights << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arithmetic-intensity-aware quantization toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    if (const char* env = std::getenv("AIQ_THREADS")) o.threads = std::max(1, std::atoi(env));

    int profile_bits = 4;
    std::string scheme_arg = "fp32";
    std::string lambdas_arg = "0,0.25,0.5,0.75,0.9,1.0";
    std::string machine_path, compare_random, out_weights = "quantized.aiqw";
    int runs = 10, warmup = 2;
    uint64_t calib_bytes = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", o.out_dir, "output directory");
        cmd->add_option("--threads", o.threads, "worker threads (env AIQ_THREADS)");
        cmd->add_option("--batch", o.batch, "batch size (AI accounting / bench forward)");
    };

    CLI::App* search = app.add_subcommand("search", "search a mixed-precision scheme");
    add_model_opts(search, o, true);
    add_search_opts(search, o);
    search->add_option("--algo", o.algo, "greedy|coord|exhaustive")
        ->check(CLI::IsMember({"greedy", "coord", "exhaustive"}));
    add_common(search);

    CLI::App* profile = app.add_subcommand("profile", "single-layer sensitivity profile");
    add_model_opts(profile, o, true);
    add_search_opts(profile, o);
    profile->add_option("--profile-bits", profile_bits, "bit-width to profile (8 or 4)");
    profile->add_option("--scheme", scheme_arg, "final scheme file for the sensitivity table");
    add_common(profile);

    CLI::App* sweep = app.add_subcommand("sweep", "lambda sweep / Pareto frontier");
    add_model_opts(sweep, o, true);
    add_search_opts(sweep, o);
    sweep->add_option("--algo", o.algo, "greedy|coord|exhaustive")
        ->check(CLI::IsMember({"greedy", "coord", "exhaustive"}));
    sweep->add_option("--lambdas", lambdas_arg, "comma-separated lambda values");
    add_common(sweep);

    CLI::App* bench = app.add_subcommand("bench", "wall-clock throughput of a scheme");
    add_model_opts(bench, o, true);
    bench->add_option("--scheme", scheme_arg, "scheme file | uniform:int8 | uniform:int4 | fp32");
    bench->add_option("--runs", runs, "timed runs (>= 5)");
    bench->add_option("--warmup", warmup, "warmup runs");
    bench->add_option("--compare-random", compare_random, "seed: also time a matched random scheme");
    add_common(bench);

    CLI::App* cost = app.add_subcommand("cost", "analytic cost report for a scheme");
    add_model_opts(cost, o, false);
    cost->add_option("--scheme", scheme_arg, "scheme file | uniform:int8 | uniform:int4 | fp32");
    cost->add_option("--machine", machine_path, "machine model JSON for roofline classification");
    add_common(cost);

    CLI::App* calibrate = app.add_subcommand("calibrate", "measure peak FLOP/s and bandwidth");
    calibrate->add_option("--runs", runs, "repeats per kernel");
    calibrate->add_option("--bytes", calib_bytes, "copy buffer size (0 = 8x LLC)");
    add_common(calibrate);

    CLI::App* quant = app.add_subcommand("quantize", "write packed weights for a scheme");
    add_model_opts(quant, o, false);
    quant->add_option("--scheme", scheme_arg, "scheme file | uniform:int8 | uniform:int4 | fp32");
    quant->add_option("--out-weights", out_weights, "output AIQW path");
    add_common(quant);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (search->parsed()) return cmd_search(o);
        if (profile->parsed())
            return cmd_profile(o, profile_bits, scheme_arg == "fp32" ? "" : scheme_arg);
        if (sweep->parsed()) return cmd_sweep(o, lambdas_arg);
        if (bench->parsed()) return cmd_bench(o, scheme_arg, runs, warmup, compare_random);
        if (cost->parsed()) return cmd_cost(o, scheme_arg, machine_path);
        if (calibrate->parsed()) return cmd_calibrate(o, runs, calib_bytes);
        if (quant->parsed()) return cmd_quantize(o, scheme_arg, out_weights);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
