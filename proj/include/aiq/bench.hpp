#pragma once

#include "aiq/cost.hpp"
#include "aiq/infer.hpp"

namespace aiq {

struct BenchConfig {
    int batch = 1;
    int runs = 10;    // timed passes over the dataset, must be >= 5
    int warmup = 2;   // untimed passes
    int threads = 1;  // fixed for the whole run, never auto-detected
};

struct ThroughputResult {
    QuantScheme scheme;
    double images_per_s = 0;  // total images / median run wall time
    int runs = 0;
    int warmup = 0;
    int images_per_run = 0;
    std::vector<double> run_seconds;
    double accuracy = 0;  // measured on the same packed path
    uint64_t weight_bytes_per_batch = 0;
    TrafficCounter traffic;  // per-layer weight bytes of one forward batch
    std::string machine_fingerprint;
};

// Times packed-path forward passes over the whole dataset. Weights at
// q_i < 32 are streamed as the bytes actually stored; no pre-dequantized
// full tensors exist in the timed region.
ThroughputResult measure_throughput(const ModelGraph& graph, const QuantScheme& scheme,
                                    const Dataset& data, const BenchConfig& config);

// k uniformly-random distinct layers at `bits`, seeded. KTooLarge if k > L.
QuantScheme random_scheme(size_t num_layers, size_t k, BitWidth bits, uint64_t seed);

struct PairedThroughput {
    ThroughputResult aiq;
    ThroughputResult random;
    QuantScheme random_layers;
    size_t k = 0;
    int trials = 0;
    int aiq_wins = 0;  // trials where AIQ images/s >= random images/s
};

// Measures the given AIQ scheme against a random scheme of equal
// quantized-layer count, with alternating paired timed runs.
PairedThroughput compare_random_baseline(const ModelGraph& graph, const Dataset& data,
                                         const QuantScheme& aiq_scheme, BitWidth bits, uint64_t seed,
                                         const BenchConfig& config);

struct CalibrationConfig {
    int runs = 3;                 // repeats per kernel, best kept
    int threads = 1;
    uint64_t bandwidth_bytes = 0;  // copy buffer size; 0 = sized from the LLC
    uint64_t flops_per_rep = 400'000'000;
};

struct CalibrationResult {
    MachineModel machine;          // threads as configured
    double peak_flops_1t = 0;
    double bandwidth_1t = 0;       // single-threaded streaming copy
    double bandwidth_mt = 0;       // with config.threads workers
    uint64_t buffer_bytes = 0;
    std::string fingerprint;
};

// peak_flops from a register-blocked multiply-add loop, mem_bandwidth from
// a large streaming copy (read + write counted).
CalibrationResult calibrate_machine(const CalibrationConfig& config);

// Raw streaming-copy bandwidth for an explicit buffer size (bytes/s).
double measure_copy_bandwidth(uint64_t buffer_bytes, int reps, int threads = 1);

// Last-level cache size: sysfs, then sysconf, then a 32 MiB fallback.
uint64_t llc_bytes();

// CPU model, thread count and cache size, for result provenance.
std::string machine_fingerprint(int threads);

}  // namespace aiq
