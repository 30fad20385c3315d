#include "aiq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <unistd.h>

#include "aiq/rng.hpp"
#include "aiq/threading.hpp"

namespace aiq {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

uint64_t llc_bytes() {
    // sysfs first: pick the largest reported cache.
    uint64_t best = 0;
    for (int idx = 0; idx < 8; ++idx) {
        std::string base = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(idx);
        std::ifstream size_file(base + "/size");
        if (!size_file) continue;
        uint64_t value = 0;
        char unit = 0;
        size_file >> value >> unit;
        if (unit == 'K') value <<= 10;
        if (unit == 'M') value <<= 20;
        best = std::max(best, value);
    }
    if (best > 0) return best;
#ifdef _SC_LEVEL3_CACHE_SIZE
    long l3 = sysconf(_SC_LEVEL3_CACHE_SIZE);
    if (l3 > 0) return static_cast<uint64_t>(l3);
    long l2 = sysconf(_SC_LEVEL2_CACHE_SIZE);
    if (l2 > 0) return static_cast<uint64_t>(l2);
#endif
    return 32ull << 20;
}

std::string machine_fingerprint(int threads) {
    std::string model = "unknown-cpu";
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            size_t colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(colon + 1);
                while (!model.empty() && model.front() == ' ') model.erase(model.begin());
            }
            break;
        }
    }
    return model + " | threads=" + std::to_string(threads) + " | llc=" + std::to_string(llc_bytes() >> 10) +
           "KiB";
}

ThroughputResult measure_throughput(const ModelGraph& graph, const QuantScheme& scheme,
                                    const Dataset& data, const BenchConfig& config) {
    if (config.runs < 5)
        throw Error(ErrorCode::ConfigInvalid, "runs must be >= 5, got " + std::to_string(config.runs));
    if (config.batch < 1 || config.warmup < 0 || config.threads < 1)
        throw Error(ErrorCode::ConfigInvalid, "invalid bench config");

    QuantizedModel model = apply_scheme(graph, scheme, Materialize::Packed);
    Engine engine(model, config.batch);
    const int64_t chw = data.image_elems();
    const int64_t n = data.n;

    ForwardOptions fwd;
    fwd.packed = true;
    fwd.threads = config.threads;

    auto one_pass = [&](TrafficCounter* counter) {
        ForwardOptions opts = fwd;
        opts.counter = counter;
        for (int64_t begin = 0; begin < n; begin += config.batch) {
            const int cur = static_cast<int>(std::min<int64_t>(config.batch, n - begin));
            engine.forward(data.images.data() + begin * chw, cur, opts);
            if (counter) break;  // traffic of a single batch is enough
        }
    };

    ThroughputResult result;
    result.scheme = scheme;
    result.runs = config.runs;
    result.warmup = config.warmup;
    result.images_per_run = static_cast<int>(n);
    result.machine_fingerprint = machine_fingerprint(config.threads);

    one_pass(&result.traffic);  // instrumented batch, not timed
    result.weight_bytes_per_batch = result.traffic.total();

    for (int i = 0; i < config.warmup; ++i) one_pass(nullptr);
    for (int i = 0; i < config.runs; ++i) {
        double t0 = now_seconds();
        one_pass(nullptr);
        result.run_seconds.push_back(now_seconds() - t0);
    }
    result.images_per_s = static_cast<double>(n) / median(result.run_seconds);

    EvalOptions eval_opts;
    eval_opts.packed = true;
    eval_opts.batch = config.batch;
    eval_opts.threads = config.threads;
    result.accuracy = evaluate(model, data, std::nullopt, eval_opts).accuracy;
    return result;
}

QuantScheme random_scheme(size_t num_layers, size_t k, BitWidth bits, uint64_t seed) {
    if (k > num_layers)
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds layer count " +
                                              std::to_string(num_layers));
    QuantScheme scheme = QuantScheme::all_fp32(num_layers);
    std::vector<uint32_t> picks = sample_indices(static_cast<uint32_t>(num_layers),
                                                 static_cast<uint32_t>(k), seed);
    for (uint32_t i : picks) scheme[i] = bits;
    return scheme;
}

PairedThroughput compare_random_baseline(const ModelGraph& graph, const Dataset& data,
                                         const QuantScheme& aiq_scheme, BitWidth bits, uint64_t seed,
                                         const BenchConfig& config) {
    if (config.runs < 5)
        throw Error(ErrorCode::ConfigInvalid, "runs must be >= 5, got " + std::to_string(config.runs));
    check_scheme_length(aiq_scheme, graph.num_quantizable());

    PairedThroughput paired;
    paired.k = aiq_scheme.quantized_count();
    paired.random_layers = random_scheme(aiq_scheme.size(), paired.k, bits, seed);
    paired.trials = config.runs;

    QuantizedModel aiq_model = apply_scheme(graph, aiq_scheme, Materialize::Packed);
    QuantizedModel rnd_model = apply_scheme(graph, paired.random_layers, Materialize::Packed);
    Engine aiq_engine(aiq_model, config.batch);
    Engine rnd_engine(rnd_model, config.batch);

    const int64_t chw = data.image_elems();
    const int64_t n = data.n;
    ForwardOptions fwd;
    fwd.packed = true;
    fwd.threads = config.threads;

    auto one_pass = [&](Engine& engine) {
        for (int64_t begin = 0; begin < n; begin += config.batch) {
            const int cur = static_cast<int>(std::min<int64_t>(config.batch, n - begin));
            engine.forward(data.images.data() + begin * chw, cur, fwd);
        }
    };

    for (int i = 0; i < config.warmup; ++i) {
        one_pass(aiq_engine);
        one_pass(rnd_engine);
    }

    std::vector<double> aiq_times, rnd_times;
    for (int trial = 0; trial < paired.trials; ++trial) {
        double t0 = now_seconds();
        one_pass(aiq_engine);
        double t1 = now_seconds();
        one_pass(rnd_engine);
        double t2 = now_seconds();
        aiq_times.push_back(t1 - t0);
        rnd_times.push_back(t2 - t1);
        if (t1 - t0 <= t2 - t1) ++paired.aiq_wins;
    }

    auto finish = [&](ThroughputResult& r, const QuantScheme& scheme, QuantizedModel& model,
                      std::vector<double> times) {
        r.scheme = scheme;
        r.runs = paired.trials;
        r.warmup = config.warmup;
        r.images_per_run = static_cast<int>(n);
        r.run_seconds = std::move(times);
        r.images_per_s = static_cast<double>(n) / median(r.run_seconds);
        r.machine_fingerprint = machine_fingerprint(config.threads);
        EvalOptions eval_opts;
        eval_opts.packed = true;
        eval_opts.batch = config.batch;
        eval_opts.threads = config.threads;
        r.accuracy = evaluate(model, data, std::nullopt, eval_opts).accuracy;
    };
    finish(paired.aiq, aiq_scheme, aiq_model, aiq_times);
    finish(paired.random, paired.random_layers, rnd_model, rnd_times);
    return paired;
}

namespace {

// Register-blocked multiply-add chains; 2 flops per lane per iteration.
double peak_flops_kernel(uint64_t flops_target) {
    constexpr int kLanes = 64;
    float acc[kLanes];
    for (int i = 0; i < kLanes; ++i) acc[i] = 1.0f + 1e-6f * static_cast<float>(i);
    const float m = 1.0000001f, c = 1e-9f;
    const uint64_t iters = flops_target / (2 * kLanes);

    double t0 = now_seconds();
    for (uint64_t it = 0; it < iters; ++it)
        for (int i = 0; i < kLanes; ++i) acc[i] = acc[i] * m + c;
    double dt = now_seconds() - t0;

    float sink = 0.0f;
    for (int i = 0; i < kLanes; ++i) sink += acc[i];
    volatile float keep = sink;
    (void)keep;
    return static_cast<double>(iters) * 2 * kLanes / dt;
}

}  // namespace

double measure_copy_bandwidth(uint64_t buffer_bytes, int reps, int threads) {
    std::vector<uint8_t> src(buffer_bytes, 1), dst(buffer_bytes, 0);
    // touch pages
    for (size_t i = 0; i < buffer_bytes; i += 4096) dst[i] = src[i];

    double best = 0;
    for (int r = 0; r < std::max(1, reps); ++r) {
        double t0 = now_seconds();
        parallel_for(0, static_cast<int64_t>(buffer_bytes), threads, [&](int64_t lo, int64_t hi) {
            std::memcpy(dst.data() + lo, src.data() + lo, static_cast<size_t>(hi - lo));
        });
        double dt = now_seconds() - t0;
        volatile uint8_t keep = dst[buffer_bytes / 2];
        (void)keep;
        best = std::max(best, 2.0 * static_cast<double>(buffer_bytes) / dt);  // read + write
    }
    return best;
}

CalibrationResult calibrate_machine(const CalibrationConfig& config) {
    if (config.threads < 1 || config.runs < 1)
        throw Error(ErrorCode::ConfigInvalid, "calibration needs threads >= 1 and runs >= 1");

    CalibrationResult result;
    result.fingerprint = machine_fingerprint(config.threads);

    // Copy buffer: 8x LLC for genuine DRAM streaming, capped so calibration
    // stays affordable on machines that report very large shared caches.
    uint64_t capped_llc = std::min<uint64_t>(llc_bytes(), 96ull << 20);
    result.buffer_bytes = config.bandwidth_bytes ? config.bandwidth_bytes : 8 * capped_llc;

    for (int r = 0; r < config.runs; ++r)
        result.peak_flops_1t = std::max(result.peak_flops_1t, peak_flops_kernel(config.flops_per_rep));

    double peak_mt = result.peak_flops_1t;
    if (config.threads > 1) {
        std::vector<double> per_thread(static_cast<size_t>(config.threads), 0.0);
        for (int r = 0; r < config.runs; ++r) {
            double t0 = now_seconds();
            parallel_for(0, config.threads, config.threads, [&](int64_t lo, int64_t hi) {
                for (int64_t t = lo; t < hi; ++t)
                    per_thread[static_cast<size_t>(t)] = peak_flops_kernel(config.flops_per_rep);
            });
            double dt = now_seconds() - t0;
            double total = static_cast<double>(config.flops_per_rep) * config.threads / dt;
            peak_mt = std::max(peak_mt, total);
        }
    }

    result.bandwidth_1t = measure_copy_bandwidth(result.buffer_bytes, config.runs, 1);
    result.bandwidth_mt = config.threads > 1
                              ? measure_copy_bandwidth(result.buffer_bytes, config.runs, config.threads)
                              : result.bandwidth_1t;

    result.machine.peak_flops = config.threads > 1 ? peak_mt : result.peak_flops_1t;
    result.machine.mem_bandwidth = result.bandwidth_mt;
    return result;
}

}  // namespace aiq
