#pragma once

#include "fpr/decoder.hpp"
#include "fpr/objective.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fpr {

enum class Algorithm { admm, net_adm, net_gd, net_pgd };

Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm a);

struct SolverConfig {
    Algorithm algorithm = Algorithm::net_adm;
    int outer_iters = 1000;
    int inner_steps = 5;            // Adam steps per outer iteration (0 disables the net)
    double learning_rate = 0.005;   // Adam rate for the decoder weights
    double outer_learning_rate = 0.5;  // gradient step size (net_pgd only)
    int lr_decay_period = 500;      // optimizer steps of the decayed rate; 0 disables
    double lr_decay_factor = 0.5;
    double rho = 1.0;
    double epsilon = 1e-3;          // objective smoothing; informational, lives in MeasurementSet
    std::uint64_t seed = 0;
    int trace_every = 0;            // record a trace row every N outer iterations; 0 disables

    static SolverConfig defaults_for(Algorithm a);
};

struct TraceRow {
    int iter = 0;
    double f_u = 0.0;                  // loss at the measurement-side iterate
    double f_utilde = 0.0;             // loss at the signal-side iterate
    double constraint_residual = 0.0;  // ||Px - u|| over all channels
    double fit_residual = 0.0;         // ||fit target - decoder output||
    double elapsed_ms = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    double init_imag_residue = 0.0;       // max |Im| dropped when forming the initial iterate
    double max_optimality_residual = 0.0; // max over iterations of ||crop(lambda + rho(Px - utilde))||
    double max_cross_path_diff = 0.0;     // max elementwise gap between the two u-update routes
};

enum class SolverStatus { ok, diverged };

struct SolverResult {
    SolverStatus status = SolverStatus::ok;
    std::string message;
    ImageStack reconstruction;   // image-domain estimate, inner dimensions
    SolverTrace trace;
    double final_loss = 0.0;           // smoothed loss of the padded reconstruction
    double final_magnitude_mse = 0.0;  // mean squared magnitude misfit of the reconstruction
    double elapsed_ms = 0.0;
};

/// Classic picture: x-update (crop), spectral u-update, dual ascent.
SolverResult admm_solve(const MeasurementSet& meas, const SolverConfig& cfg);

/// Same splitting with the signal iterate projected through the decoder.
/// With cfg.inner_steps == 0 the projection is skipped and the iterates
/// match admm_solve exactly.
SolverResult net_adm_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                           const SolverConfig& cfg);

/// Minimizes the measurement loss directly over the decoder weights.
SolverResult net_gd_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                          const SolverConfig& cfg);

/// Alternates a gradient step on the image with a decoder refit.
SolverResult net_pgd_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                           const SolverConfig& cfg);

/// Dispatch on cfg.algorithm; `dec` may be null for plain admm.
SolverResult solve(const MeasurementSet& meas, const DecoderConfig* dec, const SolverConfig& cfg);

void write_trace_csv(const SolverTrace& trace, const std::string& path);

}  // namespace fpr
