#include "fpr/checks.hpp"
#include "fpr/experiment.hpp"
#include "fpr/image_io.hpp"
#include "fpr/measurement.hpp"
#include "fpr/metrics.hpp"
#include "fpr/rng.hpp"
#include "fpr/solvers.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

struct RecoverOpts {
    std::string image;
    std::string algo = "net_adm";
    double rate = 2.0;
    double snr = -1.0;  // negative = noiseless
    double epsilon = 1e-3;
    double rho = 1.0;
    int outer = 0;
    int inner = -1;
    double lr = -1.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string net;
    std::string activation = "relu";
    std::string crop;
    bool mnist = false;
    bool flip = false;
    int trace_every = 0;
    std::string trace_out;
    std::string save_weights_path;
};

int run_recover(const RecoverOpts& o) {
    int crop_h = 0, crop_w = 0;
    if (!o.crop.empty()) {
        const auto x = o.crop.find('x');
        if (x == std::string::npos) throw std::invalid_argument("--crop must look like 64x64");
        crop_h = std::stoi(o.crop.substr(0, x));
        crop_w = std::stoi(o.crop.substr(x + 1));
    }
    fpr::ImageStack truth = fpr::load_image(o.image, crop_h, crop_w, 0);
    if (o.mnist) {
        if (truth.size() != 1) throw std::invalid_argument("--mnist-preprocess needs grayscale");
        truth[0] = fpr::preprocess_mnist(truth[0]);
    }

    const fpr::Algorithm algo = fpr::algorithm_from_name(o.algo);
    fpr::SolverConfig cfg = fpr::SolverConfig::defaults_for(algo);
    cfg.rho = o.rho;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    if (o.outer > 0) cfg.outer_iters = o.outer;
    if (o.inner >= 0) cfg.inner_steps = o.inner;
    if (o.lr >= 0.0) cfg.learning_rate = o.lr;
    cfg.trace_every = o.trace_every;

    const std::optional<double> snr =
        o.snr >= 0.0 ? std::optional<double>(o.snr) : std::nullopt;
    const fpr::MeasurementSet meas =
        fpr::make_measurement(truth, o.rate, snr, o.epsilon, fpr::derive_seed(o.seed, 1));

    fpr::SolverResult res;
    if (algo == fpr::Algorithm::admm) {
        res = fpr::admm_solve(meas, cfg);
    } else {
        const auto channels = o.net.empty()
                                  ? fpr::default_net_channels(truth[0].height, truth[0].width)
                                  : parse_int_list(o.net);
        fpr::DecoderConfig dec = fpr::DecoderConfig::for_output(
            channels, truth[0].height, truth[0].width, static_cast<int>(truth.size()), 0);
        dec.activation = fpr::activation_from_name(o.activation);
        res = fpr::solve(meas, &dec, cfg);
    }

    double p, s;
    bool flipped = false;
    if (o.flip)
        fpr::scored_with_flip(res.reconstruction, truth, &p, &s, &flipped);
    else {
        p = fpr::psnr(res.reconstruction, truth);
        s = fpr::ssim(res.reconstruction, truth);
    }

    std::printf("algorithm:     %s\n", fpr::algorithm_name(algo).c_str());
    std::printf("grid:          %dx%d -> %dx%d (rate %.3f x %.3f)\n", meas.spec.inner_h,
                meas.spec.inner_w, meas.spec.outer_h, meas.spec.outer_w, meas.spec.rate_h(),
                meas.spec.rate_w());
    std::printf("status:        %s%s%s\n", res.status == fpr::SolverStatus::ok ? "ok" : "diverged",
                res.message.empty() ? "" : " - ", res.message.c_str());
    std::printf("psnr/ssim:     %s%s\n", fpr::format_psnr_ssim(p, s).c_str(),
                flipped ? " (flipped candidate)" : "");
    std::printf("final loss:    %.6g\n", res.final_loss);
    std::printf("magnitude mse: %.6g\n", res.final_magnitude_mse);
    std::printf("elapsed:       %.1f ms\n", res.elapsed_ms);

    if (!o.out.empty()) {
        fpr::ImageStack clamped = res.reconstruction;
        for (auto& ch : clamped)
            for (auto& v : ch.values) v = std::min(1.0, std::max(0.0, v));
        fpr::save_image(o.out, clamped);
        std::printf("reconstruction written to %s\n", o.out.c_str());
    }
    if (o.trace_every > 0) {
        const std::string path = o.trace_out.empty() ? "trace.csv" : o.trace_out;
        fpr::write_trace_csv(res.trace, path);
        std::printf("trace written to %s\n", path.c_str());
    }
    if (!o.save_weights_path.empty() && algo != fpr::Algorithm::admm)
        std::printf("note: --save-weights applies to decoder runs driven through the library\n");
    return res.status == fpr::SolverStatus::ok ? 0 : 1;
}

struct SweepOpts {
    std::string image;
    double rate = 2.0;
    double snr = -1.0;
    int outer = 0;
    std::uint64_t seed = 0;
    std::string outdir = "sweep_out";
    std::string activations;  // comma list; empty = all four
    std::string nets;         // semicolon-separated channel lists
    bool mnist = false;
};

int run_sweep(const SweepOpts& o) {
    fpr::ImageStack truth = fpr::load_image(o.image, 0, 0, 0);
    if (o.mnist) {
        if (truth.size() != 1) throw std::invalid_argument("--mnist-preprocess needs grayscale");
        truth[0] = fpr::preprocess_mnist(truth[0]);
    }
    const std::optional<double> snr =
        o.snr >= 0.0 ? std::optional<double>(o.snr) : std::nullopt;

    struct Variant {
        std::string label;
        std::vector<int> channels;
        std::string activation;
    };
    std::vector<Variant> variants;
    const auto base_channels = o.nets.empty()
                                   ? fpr::default_net_channels(truth[0].height, truth[0].width)
                                   : std::vector<int>{};
    if (!o.nets.empty()) {
        std::stringstream ss(o.nets);
        std::string list;
        while (std::getline(ss, list, ';'))
            variants.push_back({"net{" + list + "}", parse_int_list(list), "relu"});
    } else {
        std::vector<std::string> acts;
        if (o.activations.empty())
            acts = {"relu", "leaky_relu", "tanh", "sigmoid"};
        else {
            std::stringstream ss(o.activations);
            std::string a;
            while (std::getline(ss, a, ',')) acts.push_back(a);
        }
        for (const auto& a : acts) variants.push_back({"act=" + a, base_channels, a});
    }

    std::filesystem::create_directories(o.outdir);
    std::ofstream csv(std::filesystem::path(o.outdir) / "sweep.csv");
    csv << "# fpr sweep schema v1\nvariant,psnr_db,ssim,final_loss,elapsed_ms,status\n";
    csv.precision(17);

    int failures = 0;
    for (const auto& var : variants) {
        fpr::SolverConfig cfg = fpr::SolverConfig::defaults_for(fpr::Algorithm::net_adm);
        cfg.seed = o.seed;
        if (o.outer > 0) cfg.outer_iters = o.outer;
        try {
            const fpr::MeasurementSet meas = fpr::make_measurement(
                truth, o.rate, snr, cfg.epsilon, fpr::derive_seed(o.seed, 1));
            fpr::DecoderConfig dec = fpr::DecoderConfig::for_output(
                var.channels, truth[0].height, truth[0].width, static_cast<int>(truth.size()), 0);
            dec.activation = fpr::activation_from_name(var.activation);
            const fpr::SolverResult res = fpr::net_adm_solve(meas, dec, cfg);
            const double p = fpr::psnr(res.reconstruction, truth);
            const double s = fpr::ssim(res.reconstruction, truth);
            std::printf("%-24s psnr/ssim %s  loss %.4g  %.0f ms\n", var.label.c_str(),
                        fpr::format_psnr_ssim(p, s).c_str(), res.final_loss, res.elapsed_ms);
            csv << var.label << ',' << p << ',' << s << ',' << res.final_loss << ','
                << res.elapsed_ms << ','
                << (res.status == fpr::SolverStatus::ok ? "ok" : "diverged") << '\n';
            if (res.status != fpr::SolverStatus::ok) ++failures;
        } catch (const std::exception& e) {
            std::printf("%-24s failed: %s\n", var.label.c_str(), e.what());
            csv << var.label << ",,,,," << "failed\n";
            ++failures;
        }
    }
    std::printf("sweep results written to %s/sweep.csv\n", o.outdir.c_str());
    return failures == 0 ? 0 : 1;
}

int run_check(bool quick) {
    namespace fc = fpr::checks;
    fc::CheckReport report;
    if (quick) {
        report.results.push_back(fc::dft_oracle());
        report.results.push_back(fc::loss_oracle());
        report.results.push_back(fc::gradient_finite_difference(10));
        report.results.push_back(fc::decoder_finite_difference(20));
        report.results.push_back(fc::decoder_zero_weights());
        report.results.push_back(fc::adam_hand_case());
        report.results.push_back(fc::cross_path(20));
        report.results.push_back(fc::degenerate_identity(10));
        report.results.push_back(fc::ssim_constant_oracle());
    } else {
        report = fc::check_suite();
    }
    for (const auto& r : report.results)
        std::printf("[%s] %-28s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
    std::printf("%zu checks, %s\n", report.results.size(),
                report.all_pass() ? "all passed" : "FAILURES PRESENT");
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier phase retrieval with an untrained decoder prior"};
    app.require_subcommand(1);

    RecoverOpts ro;
    auto* rec = app.add_subcommand("recover", "Reconstruct a single image from magnitudes");
    rec->add_option("--image", ro.image, "input image (PGM/PPM/PNG)")->required();
    rec->add_option("--algo", ro.algo, "admm | net_adm | net_gd | net_pgd");
    rec->add_option("--rate", ro.rate, "oversampling rate r > 1");
    rec->add_option("--snr", ro.snr, "measurement SNR in dB (omit for noiseless)");
    rec->add_option("--epsilon", ro.epsilon, "loss smoothing epsilon");
    rec->add_option("--rho", ro.rho, "ADMM penalty rho");
    rec->add_option("--outer", ro.outer, "outer iterations (0 = algorithm default)");
    rec->add_option("--inner", ro.inner, "inner fit steps (-1 = algorithm default)");
    rec->add_option("--lr", ro.lr, "decoder learning rate (-1 = algorithm default)");
    rec->add_option("--seed", ro.seed, "base seed");
    rec->add_option("--out", ro.out, "output image path");
    rec->add_option("--net", ro.net, "decoder channels, e.g. 25,15,10");
    rec->add_option("--activation", ro.activation, "relu | leaky_relu | tanh | sigmoid");
    rec->add_option("--crop", ro.crop, "center-crop input, e.g. 64x64");
    rec->add_flag("--mnist-preprocess", ro.mnist, "set the two marker pixels before measuring");
    rec->add_flag("--flip", ro.flip, "score against the 180-degree twin too");
    rec->add_option("--trace-every", ro.trace_every, "record a trace row every N iterations");
    rec->add_option("--trace-out", ro.trace_out, "trace CSV path (with --trace-every)");

    std::string plan_path;
    auto* bench = app.add_subcommand("benchmark", "Run an experiment plan");
    bench->add_option("--plan", plan_path, "plan config file")->required();

    SweepOpts so;
    auto* sweep = app.add_subcommand("sweep", "Architecture / activation studies");
    sweep->add_option("--image", so.image, "input image")->required();
    sweep->add_option("--rate", so.rate, "oversampling rate");
    sweep->add_option("--snr", so.snr, "SNR in dB (omit for noiseless)");
    sweep->add_option("--outer", so.outer, "outer iterations (0 = default)");
    sweep->add_option("--seed", so.seed, "base seed");
    sweep->add_option("--outdir", so.outdir, "output directory");
    sweep->add_option("--activations", so.activations, "comma list of activations to try");
    sweep->add_option("--nets", so.nets, "semicolon-separated channel lists, e.g. 25,15,10;64,32,16");
    sweep->add_flag("--mnist-preprocess", so.mnist, "set the two marker pixels before measuring");

    bool quick = false;
    auto* check = app.add_subcommand("check", "Run the property/oracle suite");
    check->add_flag("--quick", quick, "reduced instance counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rec->parsed()) return run_recover(ro);
        if (bench->parsed()) {
            const fpr::ExperimentPlan plan = fpr::parse_plan_file(plan_path);
            const fpr::RunReport report = fpr::run_experiment(plan);
            int failed = 0;
            for (const auto& r : report.runs)
                if (!r.ok) ++failed;
            for (const auto& a : report.aggregates) {
                std::printf("%-14s %-8s r=%-5g", a.image.c_str(),
                            fpr::algorithm_name(a.algorithm).c_str(), a.rate);
                if (a.snr_db) std::printf(" snr=%-4g", *a.snr_db);
                std::printf(" n=%d  psnr/ssim %s  (best rep %d)\n", a.n_ok,
                            fpr::format_psnr_ssim(a.psnr_mean, a.ssim_mean).c_str(),
                            a.best_repeat);
            }
            std::printf("%zu runs (%d failed); outputs in %s\n", report.runs.size(), failed,
                        plan.outdir.c_str());
            return failed == 0 ? 0 : 1;
        }
        if (sweep->parsed()) return run_sweep(so);
        if (check->parsed()) return run_check(quick);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
