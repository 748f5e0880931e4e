#include "fpr/solvers.hpp"

#include "fpr/rng.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fpr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void validate_common(const SolverConfig& cfg) {
    if (cfg.outer_iters < 1) throw std::invalid_argument("solver: outer_iters must be >= 1");
    if (cfg.inner_steps < 0) throw std::invalid_argument("solver: inner_steps must be >= 0");
    if (cfg.rho <= 0.0) throw std::invalid_argument("solver: rho must be > 0");
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("solver: epsilon must be > 0");
    if (cfg.learning_rate < 0.0 || cfg.outer_learning_rate < 0.0)
        throw std::invalid_argument("solver: learning rates must be >= 0");
    if (cfg.lr_decay_period < 0) throw std::invalid_argument("solver: lr_decay_period must be >= 0");
    if (cfg.trace_every < 0) throw std::invalid_argument("solver: trace_every must be >= 0");
}

// signal iterate from its inner block plus the dual-scaled tail
RealGrid compose_tilde(const RealGrid& inner, const RealGrid& lam_over_rho, const PadSpec& spec) {
    RealGrid out = lam_over_rho;
    for (int r = 0; r < spec.inner_h; ++r)
        for (int c = 0; c < spec.inner_w; ++c) out.at(r, c) = inner.at(r, c);
    return out;
}

double step_decayed(double base, long idx0, long period, double factor) {
    if (period <= 0) return base;
    for (long i = 0; i < idx0 / period; ++i) base *= factor;
    return base;
}

void finish_metrics(SolverResult& res, const MeasurementSet& meas) {
    double loss = 0.0;
    ImageStack padded;
    for (int c = 0; c < meas.num_channels(); ++c) {
        padded.push_back(zero_pad(res.reconstruction[c], meas.spec));
        loss += smoothed_loss(padded.back(), meas, c);
    }
    res.final_loss = loss;
    res.final_magnitude_mse = magnitude_mse(padded, meas);
}

// Plain ADMM and Net-ADM share this loop; `net` null or inner_steps == 0
// turns the projection into a pass-through and the iterates coincide
// bit-for-bit with plain ADMM.
SolverResult admm_family(const MeasurementSet& meas, const SolverConfig& cfg, DecoderNet* net) {
    validate_common(cfg);
    const auto t0 = Clock::now();
    const PadSpec& spec = meas.spec;
    const int C = meas.num_channels();
    const double rho = cfg.rho;
    const double eps = meas.epsilon;
    const bool project = net != nullptr && cfg.inner_steps > 0;

    if (project) {
        if (net->config.output_h() != spec.inner_h || net->config.output_w() != spec.inner_w)
            throw std::invalid_argument("net_adm: decoder output dims != image dims");
        if (net->config.out_channels != C)
            throw std::invalid_argument("net_adm: decoder out_channels != channel count");
    }

    std::vector<RealGrid> bsm(C);  // sqrt(b^2 + eps), the target amplitudes
    for (int c = 0; c < C; ++c) {
        bsm[c] = RealGrid(spec.outer_h, spec.outer_w);
        for (std::size_t i = 0; i < bsm[c].values.size(); ++i) {
            const double b = meas.channels[c].values[i];
            bsm[c].values[i] = std::sqrt(b * b + eps);
        }
    }

    SolverResult res;
    std::vector<RealGrid> utilde(C), lambda(C), u(C);
    ImageStack x(C, RealGrid(spec.inner_h, spec.inner_w));
    for (int c = 0; c < C; ++c) {
        ComplexGrid bc(spec.outer_h, spec.outer_w);
        for (std::size_t i = 0; i < bc.values.size(); ++i) bc.values[i] = meas.channels[c].values[i];
        ComplexGrid binv = idft2(bc);
        res.trace.init_imag_residue = std::max(res.trace.init_imag_residue, max_abs_imag(binv));
        lambda[c] = RealGrid(spec.outer_h, spec.outer_w);
        // fill rule at k = 0: lambda is zero, so the tail is zeroed too
        utilde[c] = compose_tilde(crop(real_part(binv), spec), lambda[c], spec);
    }

    AdamState adam;
    if (project) {
        AdamConfig acfg;
        acfg.learning_rate = cfg.learning_rate;
        acfg.decay_period = cfg.lr_decay_period;
        acfg.decay_factor = cfg.lr_decay_factor;
        adam = AdamState::for_weights(net->weights, acfg);
    }

    ImageStack proj_out;
    for (int k = 0; k < cfg.outer_iters; ++k) {
        const bool traced =
            cfg.trace_every > 0 && (k % cfg.trace_every == 0 || k == cfg.outer_iters - 1);
        TraceRow row;
        row.iter = k;
        if (traced)
            for (int c = 0; c < C; ++c) row.f_utilde += smoothed_loss(utilde[c], meas, c);

        double opt_res_sq = 0.0;
        bool finite = true;
        for (int c = 0; c < C; ++c) {
            RealGrid lam_rho(spec.outer_h, spec.outer_w);
            for (std::size_t i = 0; i < lam_rho.values.size(); ++i)
                lam_rho.values[i] = lambda[c].values[i] / rho;

            for (int r = 0; r < spec.inner_h; ++r)
                for (int cc = 0; cc < spec.inner_w; ++cc)
                    x[c].at(r, cc) = utilde[c].at(r, cc) - lam_rho.at(r, cc);

            for (int r = 0; r < spec.inner_h; ++r)
                for (int cc = 0; cc < spec.inner_w; ++cc) {
                    const double d = lambda[c].at(r, cc) + rho * (x[c].at(r, cc) - utilde[c].at(r, cc));
                    opt_res_sq += d * d;
                }

            RealGrid v = zero_pad(x[c], spec);
            for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] += lam_rho.values[i];
            ComplexGrid spectrum = dft2(v);
            for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
                const double mag = std::sqrt(std::norm(spectrum.values[i]) + eps);
                spectrum.values[i] *= bsm[c].values[i] / mag;
            }
            u[c] = real_part(idft2(spectrum));
            if (!all_finite(u[c])) {
                finite = false;
                break;
            }
            if (traced) {
                // independent route: one explicit gradient-descent step
                const RealGrid alt = descent_step(utilde[c], meas, c);
                res.trace.max_cross_path_diff =
                    std::max(res.trace.max_cross_path_diff, max_abs_diff(alt, u[c]));
            }
        }
        if (!finite) {
            res.status = SolverStatus::diverged;
            res.message = "non-finite iterate at outer iteration " + std::to_string(k);
            break;
        }
        res.trace.max_optimality_residual =
            std::max(res.trace.max_optimality_residual, std::sqrt(opt_res_sq));

        if (traced) {
            double cons_sq = 0.0;
            for (int c = 0; c < C; ++c) {
                row.f_u += smoothed_loss(u[c], meas, c);
                const RealGrid px = zero_pad(x[c], spec);
                for (std::size_t i = 0; i < px.values.size(); ++i) {
                    const double d = px.values[i] - u[c].values[i];
                    cons_sq += d * d;
                }
            }
            row.constraint_residual = std::sqrt(cons_sq);
        }

        for (int c = 0; c < C; ++c) {
            const RealGrid px = zero_pad(x[c], spec);
            for (std::size_t i = 0; i < lambda[c].values.size(); ++i)
                lambda[c].values[i] += rho * (px.values[i] - u[c].values[i]);
        }

        ImageStack targets;
        targets.reserve(C);
        for (int c = 0; c < C; ++c) targets.push_back(crop(u[c], spec));

        double fit_res_sq = 0.0;
        const ImageStack* inner_new = &targets;
        if (project) {
            try {
                fit_to_target(*net, targets, cfg.inner_steps, adam);
            } catch (const std::runtime_error& e) {
                res.status = SolverStatus::diverged;
                res.message = std::string("projection diverged at outer iteration ") +
                              std::to_string(k) + ": " + e.what();
                break;
            }
            proj_out = decoder_forward(*net);
            for (int c = 0; c < C; ++c)
                for (std::size_t i = 0; i < targets[c].values.size(); ++i) {
                    const double d = targets[c].values[i] - proj_out[c].values[i];
                    fit_res_sq += d * d;
                }
            inner_new = &proj_out;
        }

        for (int c = 0; c < C; ++c) {
            RealGrid lam_rho(spec.outer_h, spec.outer_w);
            for (std::size_t i = 0; i < lam_rho.values.size(); ++i)
                lam_rho.values[i] = lambda[c].values[i] / rho;
            utilde[c] = compose_tilde((*inner_new)[c], lam_rho, spec);
        }

        if (traced) {
            row.fit_residual = std::sqrt(fit_res_sq);
            row.elapsed_ms = ms_since(t0);
            res.trace.rows.push_back(row);
        }
    }

    if (res.status == SolverStatus::diverged) {
        res.reconstruction.clear();
        for (int c = 0; c < C; ++c) res.reconstruction.push_back(crop(utilde[c], spec));
    } else if (project) {
        res.reconstruction = std::move(proj_out);
    } else {
        res.reconstruction.clear();
        for (int c = 0; c < C; ++c) res.reconstruction.push_back(crop(u[c], spec));
    }
    finish_metrics(res, meas);
    res.elapsed_ms = ms_since(t0);
    return res;
}

DecoderNet seeded_net(const DecoderConfig& dec, const SolverConfig& cfg) {
    DecoderConfig used = dec;
    used.seed = derive_seed(cfg.seed, 2);
    return init_decoder(used);
}

}  // namespace

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "admm") return Algorithm::admm;
    if (name == "net_adm") return Algorithm::net_adm;
    if (name == "net_gd") return Algorithm::net_gd;
    if (name == "net_pgd") return Algorithm::net_pgd;
    throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::admm: return "admm";
        case Algorithm::net_adm: return "net_adm";
        case Algorithm::net_gd: return "net_gd";
        case Algorithm::net_pgd: return "net_pgd";
    }
    throw std::logic_error("algorithm_name: bad enum");
}

SolverConfig SolverConfig::defaults_for(Algorithm a) {
    SolverConfig cfg;
    cfg.algorithm = a;
    switch (a) {
        case Algorithm::admm:
            cfg.outer_iters = 5000;
            cfg.inner_steps = 0;
            break;
        case Algorithm::net_adm:
            cfg.outer_iters = 1000;
            cfg.inner_steps = 5;
            cfg.learning_rate = 0.005;
            cfg.lr_decay_period = 500;
            break;
        case Algorithm::net_gd:
            cfg.outer_iters = 5000;
            cfg.inner_steps = 0;
            cfg.learning_rate = 0.005;
            cfg.lr_decay_period = 2500;
            break;
        case Algorithm::net_pgd:
            cfg.outer_iters = 1000;
            cfg.inner_steps = 5;
            cfg.learning_rate = 0.0005;
            cfg.outer_learning_rate = 0.5;
            cfg.lr_decay_period = 500;
            break;
    }
    return cfg;
}

SolverResult admm_solve(const MeasurementSet& meas, const SolverConfig& cfg) {
    if (cfg.algorithm != Algorithm::admm)
        throw std::invalid_argument("admm_solve: cfg.algorithm must be admm");
    return admm_family(meas, cfg, nullptr);
}

SolverResult net_adm_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                           const SolverConfig& cfg) {
    if (cfg.algorithm != Algorithm::net_adm)
        throw std::invalid_argument("net_adm_solve: cfg.algorithm must be net_adm");
    DecoderNet net = seeded_net(dec, cfg);
    return admm_family(meas, cfg, &net);
}

SolverResult net_gd_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                          const SolverConfig& cfg) {
    if (cfg.algorithm != Algorithm::net_gd)
        throw std::invalid_argument("net_gd_solve: cfg.algorithm must be net_gd");
    validate_common(cfg);
    const auto t0 = Clock::now();
    const PadSpec& spec = meas.spec;
    const int C = meas.num_channels();
    DecoderNet net = seeded_net(dec, cfg);
    if (net.config.output_h() != spec.inner_h || net.config.output_w() != spec.inner_w)
        throw std::invalid_argument("net_gd: decoder output dims != image dims");
    if (net.config.out_channels != C)
        throw std::invalid_argument("net_gd: decoder out_channels != channel count");

    AdamConfig acfg;
    acfg.learning_rate = cfg.learning_rate;
    acfg.decay_period = cfg.lr_decay_period;  // counted directly in optimizer steps
    acfg.decay_factor = cfg.lr_decay_factor;
    AdamState adam = AdamState::for_weights(net.weights, acfg);

    SolverResult res;
    for (int t = 0; t < cfg.outer_iters; ++t) {
        const bool traced =
            cfg.trace_every > 0 && (t % cfg.trace_every == 0 || t == cfg.outer_iters - 1);
        DecoderForward fwd = decoder_forward_cached(net);
        ImageStack out = fwd.output(net.config);

        RealGrid cot(C, spec.inner_size());
        double f_val = 0.0;
        bool finite = true;
        for (int c = 0; c < C; ++c) {
            RealGrid uc = zero_pad(out[c], spec);
            if (traced) f_val += smoothed_loss(uc, meas, c);
            RealGrid g = crop(smoothed_loss_grad(uc, meas, c), spec);
            if (!all_finite(g)) {
                finite = false;
                break;
            }
            std::copy(g.values.begin(), g.values.end(),
                      cot.values.begin() + static_cast<std::size_t>(c) * cot.width);
        }
        if (!finite || (traced && !std::isfinite(f_val))) {
            res.status = SolverStatus::diverged;
            res.message = "non-finite objective state at step " + std::to_string(t);
            break;
        }
        auto grads = decoder_backward(net, fwd, cot);
        adam_step(adam, net.weights, grads);

        if (traced) {
            TraceRow row;
            row.iter = t;
            row.f_u = f_val;
            row.f_utilde = f_val;
            row.elapsed_ms = ms_since(t0);
            res.trace.rows.push_back(row);
        }
    }
    res.reconstruction = decoder_forward(net);
    finish_metrics(res, meas);
    res.elapsed_ms = ms_since(t0);
    return res;
}

SolverResult net_pgd_solve(const MeasurementSet& meas, const DecoderConfig& dec,
                           const SolverConfig& cfg) {
    if (cfg.algorithm != Algorithm::net_pgd)
        throw std::invalid_argument("net_pgd_solve: cfg.algorithm must be net_pgd");
    validate_common(cfg);
    const auto t0 = Clock::now();
    const PadSpec& spec = meas.spec;
    const int C = meas.num_channels();
    DecoderNet net = seeded_net(dec, cfg);
    if (net.config.output_h() != spec.inner_h || net.config.output_w() != spec.inner_w)
        throw std::invalid_argument("net_pgd: decoder output dims != image dims");
    if (net.config.out_channels != C)
        throw std::invalid_argument("net_pgd: decoder out_channels != channel count");

    AdamConfig acfg;
    acfg.learning_rate = cfg.learning_rate;
    acfg.decay_period = cfg.lr_decay_period;
    acfg.decay_factor = cfg.lr_decay_factor;
    AdamState adam = AdamState::for_weights(net.weights, acfg);

    SolverResult res;
    ImageStack xs = decoder_forward(net);
    for (int k = 0; k < cfg.outer_iters; ++k) {
        const bool traced =
            cfg.trace_every > 0 && (k % cfg.trace_every == 0 || k == cfg.outer_iters - 1);
        TraceRow row;
        row.iter = k;

        const double alpha =
            step_decayed(cfg.outer_learning_rate, k, cfg.lr_decay_period, cfg.lr_decay_factor);
        ImageStack v;
        v.reserve(C);
        bool finite = true;
        for (int c = 0; c < C; ++c) {
            RealGrid uc = zero_pad(xs[c], spec);
            if (traced) row.f_utilde += smoothed_loss(uc, meas, c);
            RealGrid g = crop(smoothed_loss_grad(uc, meas, c), spec);
            RealGrid vc = xs[c];
            for (std::size_t i = 0; i < vc.values.size(); ++i) vc.values[i] -= alpha * g.values[i];
            if (!all_finite(vc)) {
                finite = false;
                break;
            }
            v.push_back(std::move(vc));
        }
        if (!finite) {
            res.status = SolverStatus::diverged;
            res.message = "non-finite gradient step at outer iteration " + std::to_string(k);
            break;
        }

        if (cfg.inner_steps > 0) {
            try {
                fit_to_target(net, v, cfg.inner_steps, adam);
            } catch (const std::runtime_error& e) {
                res.status = SolverStatus::diverged;
                res.message = std::string("projection diverged at outer iteration ") +
                              std::to_string(k) + ": " + e.what();
                break;
            }
            xs = decoder_forward(net);
            if (traced) {
                double s = 0.0;
                for (int c = 0; c < C; ++c)
                    for (std::size_t i = 0; i < v[c].values.size(); ++i) {
                        const double d = v[c].values[i] - xs[c].values[i];
                        s += d * d;
                    }
                row.fit_residual = std::sqrt(s);
            }
        } else {
            xs = std::move(v);
        }

        if (traced) {
            for (int c = 0; c < C; ++c) row.f_u += smoothed_loss(zero_pad(xs[c], spec), meas, c);
            row.elapsed_ms = ms_since(t0);
            res.trace.rows.push_back(row);
        }
    }
    res.reconstruction = std::move(xs);
    finish_metrics(res, meas);
    res.elapsed_ms = ms_since(t0);
    return res;
}

SolverResult solve(const MeasurementSet& meas, const DecoderConfig* dec, const SolverConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::admm: return admm_solve(meas, cfg);
        case Algorithm::net_adm:
            if (!dec) throw std::invalid_argument("solve: net_adm needs a decoder config");
            return net_adm_solve(meas, *dec, cfg);
        case Algorithm::net_gd:
            if (!dec) throw std::invalid_argument("solve: net_gd needs a decoder config");
            return net_gd_solve(meas, *dec, cfg);
        case Algorithm::net_pgd:
            if (!dec) throw std::invalid_argument("solve: net_pgd needs a decoder config");
            return net_pgd_solve(meas, *dec, cfg);
    }
    throw std::logic_error("solve: bad algorithm enum");
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "# fpr trace schema v1\n";
    os << "iter,f_u,f_utilde,constraint_residual,fit_residual,elapsed_ms\n";
    os.precision(17);
    for (const auto& r : trace.rows)
        os << r.iter << ',' << r.f_u << ',' << r.f_utilde << ',' << r.constraint_residual << ','
           << r.fit_residual << ',' << r.elapsed_ms << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace fpr
