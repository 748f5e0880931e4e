#pragma once

#include "fpr/solvers.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpr {

struct ExperimentPlan {
    std::vector<std::string> images;
    std::vector<Algorithm> algorithms;  // empty = all four
    std::vector<double> rates;
    std::vector<double> snrs_db;        // empty = noiseless
    int repeats = 10;
    std::uint64_t seed = 0;
    std::string outdir = "fpr_out";
    int outer_iters = 0;    // 0 = per-algorithm default
    int inner_steps = -1;   // -1 = per-algorithm default
    double epsilon = 1e-3;
    double rho = 1.0;
    double learning_rate = -1.0;  // -1 = per-algorithm default
    std::vector<int> net_channels;  // empty = pick by image size
    std::string activation = "relu";
    int crop_h = 0, crop_w = 0;
    bool mnist_preprocess = false;
    bool flip_metrics = false;
    int trace_every = 0;
    int parallel = 1;
    bool save_recon = true;

    void validate() const;
};

/// `key = value` lines; '#' starts a comment. List values are comma
/// separated; rates/snr_db also accept start:step:stop ranges.
ExperimentPlan parse_plan(std::istream& is);
ExperimentPlan parse_plan_file(const std::string& path);

/// {25,15,10} for 28x28, {120,25,15,10} for 64x64, {128,64,64,32} for
/// 128x128; anything else must be configured explicitly.
std::vector<int> default_net_channels(int h, int w);

struct RunRecord {
    std::string image;
    Algorithm algorithm = Algorithm::admm;
    double rate = 0.0;
    std::optional<double> snr_db;
    int repeat = 0;
    std::uint64_t cell_seed = 0;
    bool ok = false;
    std::string error;
    double psnr_db = 0.0;
    double ssim_val = 0.0;
    double final_loss = 0.0;
    double magnitude_mse = 0.0;
    double elapsed_ms = 0.0;
    bool flipped = false;
};

struct AggregateRecord {
    std::string image;
    Algorithm algorithm = Algorithm::admm;
    double rate = 0.0;
    std::optional<double> snr_db;
    int n_ok = 0;
    double psnr_mean = 0.0, psnr_min = 0.0, psnr_max = 0.0;
    double ssim_mean = 0.0, ssim_min = 0.0, ssim_max = 0.0;
    double loss_mean = 0.0;
    double elapsed_ms_mean = 0.0;
    int best_repeat = -1;  // repeat index with the highest PSNR
};

struct RunReport {
    std::vector<RunRecord> runs;
    std::vector<AggregateRecord> aggregates;
};

/// Executes every (image x algorithm x rate x snr x repeat) cell with
/// per-cell derived seeds and writes runs.csv, aggregate.csv, curves.csv,
/// optional per-cell traces and best-run reconstructions under plan.outdir.
/// Failed cells are recorded and skipped, not fatal.
RunReport run_experiment(const ExperimentPlan& plan);

/// Injective over in-range (image, algorithm, rate, snr, repeat) indices.
std::uint64_t cell_seed(std::uint64_t base, int image_idx, int algo_idx, int rate_idx,
                        int snr_idx, int repeat);

void write_runs_csv(const RunReport& report, const std::string& path);
void write_aggregate_csv(const RunReport& report, const std::string& path);
void write_curves_csv(const RunReport& report, const std::string& path);

}  // namespace fpr
