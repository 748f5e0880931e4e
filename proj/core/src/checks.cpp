#include "fpr/checks.hpp"

#include "fpr/adam.hpp"
#include "fpr/decoder.hpp"
#include "fpr/image_io.hpp"
#include "fpr/measurement.hpp"
#include "fpr/metrics.hpp"
#include "fpr/objective.hpp"
#include "fpr/rng.hpp"
#include "fpr/solvers.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fpr::checks {

namespace {

RealGrid random_grid(std::mt19937_64& rng, int h, int w, double lo, double hi) {
    RealGrid g(h, w);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : g.values) v = dist(rng);
    return g;
}

MeasurementSet random_instance(std::mt19937_64& rng, int n, double eps, bool noisy) {
    const double rates[] = {1.25, 1.5, 2.0};
    std::uniform_int_distribution<int> pick(0, 2);
    ImageStack img{random_grid(rng, n, n, 0.0, 1.0)};
    std::uniform_int_distribution<std::uint64_t> seeds;
    return make_measurement(img, rates[pick(rng)],
                            noisy ? std::optional<double>(20.0) : std::nullopt, eps, seeds(rng));
}

CheckResult fail(std::string name, std::string detail) {
    return {std::move(name), false, std::move(detail)};
}

CheckResult pass(std::string name, std::string detail = "") {
    return {std::move(name), true, std::move(detail)};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace

ComplexGrid dft2_reference(const ComplexGrid& in) {
    using std::numbers::pi;
    ComplexGrid out(in.height, in.width);
    for (int k = 0; k < in.height; ++k)
        for (int l = 0; l < in.width; ++l) {
            std::complex<double> acc = 0.0;
            for (int s = 0; s < in.height; ++s)
                for (int t = 0; t < in.width; ++t) {
                    const double phase = -2.0 * pi * (static_cast<double>(k) * s / in.height +
                                                      static_cast<double>(l) * t / in.width);
                    acc += in.at(s, t) * std::complex<double>(std::cos(phase), std::sin(phase));
                }
            out.at(k, l) = acc;
        }
    return out;
}

RealGrid synthetic_digit() {
    RealGrid g(28, 28);
    for (int c = 4; c <= 23; ++c)
        for (int r = 5; r <= 7; ++r) g.at(r, c) = 1.0 - 0.02 * std::abs(c - 14);
    for (int r = 8; r <= 25; ++r) {
        const double t = (r - 8) / 17.0;
        const int c = static_cast<int>(std::lround(21.0 - 10.0 * t));
        for (int dc = -1; dc <= 1; ++dc)
            if (c + dc >= 0 && c + dc < 28) g.at(r, c + dc) = 0.95 - 0.2 * t * std::abs(dc);
    }
    // one blur pass softens the stroke edges
    RealGrid out(28, 28);
    for (int r = 0; r < 28; ++r)
        for (int c = 0; c < 28; ++c) {
            double acc = 0.0;
            int cnt = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr >= 0 && rr < 28 && cc >= 0 && cc < 28) {
                        acc += g.at(rr, cc);
                        ++cnt;
                    }
                }
            out.at(r, c) = acc / cnt;
        }
    return preprocess_mnist(out);
}

ImageStack synthetic_rgb64() {
    using std::numbers::pi;
    ImageStack img(3, RealGrid(64, 64));
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            const double y = r / 63.0, x = c / 63.0;
            const double d = std::hypot(x - 0.35, y - 0.4);
            img[0].at(r, c) = 0.5 + 0.35 * std::sin(2.0 * pi * x) * std::cos(pi * y);
            img[1].at(r, c) = 0.25 + 0.6 * std::exp(-8.0 * d * d);
            img[2].at(r, c) = 0.15 + 0.7 * (0.5 * x + 0.5 * (1.0 - y));
        }
    for (auto& ch : img)
        for (auto& v : ch.values) v = std::min(0.95, std::max(0.05, v));
    return img;
}

CheckResult dft_oracle() {
    auto rng = make_rng(101);
    double worst = 0.0, worst_parseval = 0.0, worst_round = 0.0;
    const int sizes[][2] = {{1, 1}, {2, 3}, {4, 4}, {5, 3}, {8, 6}};
    for (auto [h, w] : sizes) {
        ComplexGrid in(h, w);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (auto& v : in.values) v = {dist(rng), dist(rng)};
        const ComplexGrid fast = dft2(in);
        const ComplexGrid ref = dft2_reference(in);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < in.size(); ++i) {
            num += std::norm(fast.values[i] - ref.values[i]);
            den += std::norm(ref.values[i]);
        }
        worst = std::max(worst, std::sqrt(num / den));

        const RealGrid u = random_grid(rng, h, w, -1.0, 1.0);
        const ComplexGrid fu = dft2(u);
        double fu2 = 0.0;
        for (const auto& v : fu.values) fu2 += std::norm(v);
        worst_parseval =
            std::max(worst_parseval, std::abs(fu2 / (static_cast<double>(h * w) * squared_norm(u)) - 1.0));

        const ComplexGrid round_trip = idft2(dft2(in));
        double rnum = 0.0;
        for (std::size_t i = 0; i < in.size(); ++i)
            rnum += std::norm(round_trip.values[i] - in.values[i]);
        worst_round = std::max(worst_round, std::sqrt(rnum / den));
    }
    const bool ok = worst <= 1e-12 && worst_parseval <= 1e-12 && worst_round <= 1e-12;
    std::string d = "max rel err vs direct sum " + fmt(worst) + ", parseval dev " +
                    fmt(worst_parseval) + ", roundtrip " + fmt(worst_round);
    return ok ? pass("dft_oracle", d) : fail("dft_oracle", d);
}

CheckResult loss_oracle() {
    auto rng = make_rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ImageStack img{random_grid(rng, 6, 5, 0.0, 1.0)};
        std::uniform_int_distribution<std::uint64_t> seeds;
        const bool noisy = trial % 2 == 1;
        const MeasurementSet meas = make_measurement(
            img, 1.4, noisy ? std::optional<double>(15.0) : std::nullopt, 1e-3, seeds(rng));
        const RealGrid u = random_grid(rng, meas.spec.outer_h, meas.spec.outer_w, -1.0, 1.0);

        ComplexGrid cu(u.height, u.width);
        for (std::size_t i = 0; i < u.size(); ++i) cu.values[i] = u.values[i];
        const ComplexGrid fu = dft2_reference(cu);
        double ref = 0.0;
        for (std::size_t i = 0; i < fu.size(); ++i) {
            const double b = meas.channels[0].values[i];
            const double d = std::sqrt(b * b + meas.epsilon) -
                             std::sqrt(std::norm(fu.values[i]) + meas.epsilon);
            ref += d * d;
        }
        ref /= 2.0 * static_cast<double>(meas.m());
        const double got = smoothed_loss(u, meas, 0);
        worst = std::max(worst, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
    }
    const std::string d = "max rel dev vs direct-sum loss " + fmt(worst);
    return worst <= 1e-12 ? pass("loss_oracle", d) : fail("loss_oracle", d);
}

CheckResult gradient_finite_difference(int instances, double tol) {
    auto rng = make_rng(303);
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const MeasurementSet meas = random_instance(rng, 8, 1e-3, i % 2 == 1);
        RealGrid u = random_grid(rng, meas.spec.outer_h, meas.spec.outer_w, -1.0, 1.0);
        const RealGrid g = smoothed_loss_grad(u, meas, 0);

        const double h = 1e-6;
        RealGrid fd(u.height, u.width);
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double saved = u.values[k];
            u.values[k] = saved + h;
            const double fp = smoothed_loss(u, meas, 0);
            u.values[k] = saved - h;
            const double fm = smoothed_loss(u, meas, 0);
            u.values[k] = saved;
            fd.values[k] = (fp - fm) / (2.0 * h);
        }
        double num = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double d = g.values[k] - fd.values[k];
            num += d * d;
        }
        worst = std::max(worst, std::sqrt(num / std::max(squared_norm(fd), 1e-300)));
    }
    const std::string d =
        "max rel l2 err over " + std::to_string(instances) + " instances: " + fmt(worst);
    return worst <= tol ? pass("gradient_finite_difference", d)
                        : fail("gradient_finite_difference", d);
}

CheckResult lipschitz_bound_check(int pairs_per_eps) {
    auto rng = make_rng(404);
    double worst_margin = 1e300;
    for (const double eps : {1e-3, 1e-1, 1.0}) {
        ImageStack img{random_grid(rng, 8, 8, 0.0, 1.0)};
        for (const bool noisy : {false, true}) {
            const MeasurementSet meas = make_measurement(
                img, 1.5, noisy ? std::optional<double>(20.0) : std::nullopt, eps, 99);
            const double L = lipschitz_bound(meas);
            if (L < 3.0) return fail("lipschitz_bound", "bound below its floor of 3: " + fmt(L));
            for (int p = 0; p < pairs_per_eps / 2; ++p) {
                const RealGrid u1 = random_grid(rng, meas.spec.outer_h, meas.spec.outer_w, -1.0, 1.0);
                RealGrid u2 = u1;
                std::uniform_real_distribution<double> logscale(-3.0, 0.0);
                const double scale = std::pow(10.0, logscale(rng));
                std::normal_distribution<double> gauss(0.0, scale);
                for (auto& v : u2.values) v += gauss(rng);
                const RealGrid g1 = smoothed_loss_grad(u1, meas, 0);
                const RealGrid g2 = smoothed_loss_grad(u2, meas, 0);
                double dn = 0.0, gn = 0.0;
                for (std::size_t k = 0; k < u1.size(); ++k) {
                    dn += (u2.values[k] - u1.values[k]) * (u2.values[k] - u1.values[k]);
                    gn += (g2.values[k] - g1.values[k]) * (g2.values[k] - g1.values[k]);
                }
                if (dn == 0.0) continue;
                const double ratio = std::sqrt(gn / dn);
                worst_margin = std::min(worst_margin, L - ratio);
                if (ratio > L * (1.0 + 1e-12))
                    return fail("lipschitz_bound", "ratio " + fmt(ratio) + " exceeds L " + fmt(L) +
                                                       " at eps " + fmt(eps));
            }
        }
    }
    return pass("lipschitz_bound", "min slack L - ratio: " + fmt(worst_margin));
}

CheckResult cross_path(int iters) {
    RealGrid base(16, 16);
    const RealGrid digit = synthetic_digit();
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) base.at(r, c) = digit.at(r + 6, c + 6);

    double worst = 0.0, worst_opt = 0.0;
    for (const bool noisy : {false, true}) {
        const MeasurementSet meas = make_measurement(
            ImageStack{base}, 1.5, noisy ? std::optional<double>(20.0) : std::nullopt, 1e-3, 7);
        SolverConfig cfg = SolverConfig::defaults_for(Algorithm::admm);
        cfg.outer_iters = iters;
        cfg.trace_every = 1;
        const SolverResult res = admm_solve(meas, cfg);
        if (res.status != SolverStatus::ok) return fail("cross_path", "admm diverged: " + res.message);
        worst = std::max(worst, res.trace.max_cross_path_diff);
        worst_opt = std::max(worst_opt, res.trace.max_optimality_residual);
    }
    const std::string d =
        "max |admm step - descent step| " + fmt(worst) + ", max optimality residual " + fmt(worst_opt);
    return (worst <= 1e-10 && worst_opt <= 1e-12) ? pass("cross_path", d) : fail("cross_path", d);
}

CheckResult theorem2_descent(int seeds, int outer_iters) {
    const RealGrid digit = synthetic_digit();
    double worst_gap = -1e300;
    long rows = 0;
    for (int s = 0; s < seeds; ++s) {
        const bool noisy = s >= (seeds * 2 + 2) / 3;  // last third of the seeds get noise
        const MeasurementSet meas =
            make_measurement(ImageStack{digit}, 1.5,
                             noisy ? std::optional<double>(20.0) : std::nullopt, 1e-3,
                             derive_seed(55, static_cast<std::uint64_t>(s)));
        SolverConfig cfg = SolverConfig::defaults_for(Algorithm::net_adm);
        cfg.outer_iters = outer_iters;
        cfg.trace_every = 1;
        cfg.seed = static_cast<std::uint64_t>(s);
        DecoderConfig dec = DecoderConfig::for_output({25, 15, 10}, 28, 28, 1, 0);
        const SolverResult res = net_adm_solve(meas, dec, cfg);
        if (res.status != SolverStatus::ok)
            return fail("theorem2_descent", "net_adm diverged: " + res.message);
        for (const auto& row : res.trace.rows) {
            worst_gap = std::max(worst_gap, row.f_u - row.f_utilde);
            ++rows;
        }
    }
    const std::string d = "max f(u_next) - f(utilde) over " + std::to_string(rows) +
                          " recorded iterations: " + fmt(worst_gap);
    return worst_gap <= 1e-12 ? pass("theorem2_descent", d) : fail("theorem2_descent", d);
}

CheckResult decoder_finite_difference(int coords, double tol) {
    auto rng = make_rng(606);
    DecoderConfig cfg = DecoderConfig::for_output({4, 3}, 8, 8, 1, 77);
    DecoderNet net = init_decoder(cfg);
    ImageStack target{random_grid(rng, 8, 8, 0.0, 1.0)};
    const auto grads = decoder_gradient(net, target);

    double worst = 0.0;
    const double h = 1e-5;
    std::uniform_int_distribution<std::size_t> pick_layer(0, net.weights.size() - 1);
    for (int i = 0; i < coords; ++i) {
        const std::size_t layer = pick_layer(rng);
        std::uniform_int_distribution<std::size_t> pick(0, net.weights[layer].values.size() - 1);
        const std::size_t k = pick(rng);
        const double saved = net.weights[layer].values[k];

        net.weights[layer].values[k] = saved + h;
        double fp = 0.0;
        decoder_gradient(net, target, &fp);
        net.weights[layer].values[k] = saved - h;
        double fm = 0.0;
        decoder_gradient(net, target, &fm);
        net.weights[layer].values[k] = saved;

        const double fd = (fp - fm) / (2.0 * h);
        const double an = grads[layer].values[k];
        worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
    }
    const std::string d = "max rel err over " + std::to_string(coords) + " coords: " + fmt(worst);
    return worst <= tol ? pass("decoder_finite_difference", d)
                        : fail("decoder_finite_difference", d);
}

CheckResult decoder_zero_weights() {
    DecoderConfig cfg = DecoderConfig::for_output({4, 3}, 8, 8, 1, 0);
    DecoderNet net = init_decoder(cfg);
    for (auto& w : net.weights)
        for (auto& v : w.values) v = 0.0;
    const ImageStack out = decoder_forward(net);
    for (const auto& ch : out)
        for (double v : ch.values)
            if (v != 0.5) return fail("decoder_zero_weights", "output " + fmt(v) + " != 0.5");
    return pass("decoder_zero_weights", "all outputs exactly 0.5");
}

CheckResult adam_hand_case() {
    for (const double g : {0.37, -2.1}) {
        std::vector<RealGrid> w{RealGrid(1, 1)};
        AdamConfig cfg;
        cfg.learning_rate = 0.005;
        AdamState st = AdamState::for_weights(w, cfg);
        std::vector<RealGrid> grad{RealGrid(1, 1)};
        grad[0].values[0] = g;
        adam_step(st, w, grad);
        // bias-corrected first step: -lr * g / (|g| + eps_adam)
        const double expected = -cfg.learning_rate * g / (std::abs(g) + cfg.eps);
        if (std::abs(w[0].values[0] - expected) > 1e-15)
            return fail("adam_hand_case", "first step " + fmt(w[0].values[0]) + " != " +
                                              fmt(expected));
        if (st.step != 1) return fail("adam_hand_case", "step counter not incremented");
    }
    // zero gradient leaves weights untouched
    std::vector<RealGrid> w{RealGrid(2, 2, 0.3)};
    AdamConfig cfg;
    AdamState st = AdamState::for_weights(w, cfg);
    std::vector<RealGrid> zero{RealGrid(2, 2)};
    adam_step(st, w, zero);
    for (double v : w[0].values)
        if (v != 0.3) return fail("adam_hand_case", "zero gradient moved weights");
    // decay: step 501 uses half the rate with period 500
    AdamConfig dc;
    dc.decay_period = 500;
    AdamState st2 = AdamState::for_weights(w, dc);
    if (st2.rate_for_step(500) != dc.learning_rate ||
        st2.rate_for_step(501) != 0.5 * dc.learning_rate)
        return fail("adam_hand_case", "decay schedule boundary wrong");
    return pass("adam_hand_case");
}

CheckResult degenerate_identity(int iters) {
    const RealGrid digit = synthetic_digit();
    const MeasurementSet meas = make_measurement(ImageStack{digit}, 1.5, std::nullopt, 1e-3, 3);

    SolverConfig ca = SolverConfig::defaults_for(Algorithm::admm);
    ca.outer_iters = iters;
    ca.trace_every = 1;
    SolverConfig cn = SolverConfig::defaults_for(Algorithm::net_adm);
    cn.outer_iters = iters;
    cn.inner_steps = 0;
    cn.trace_every = 1;

    const SolverResult ra = admm_solve(meas, ca);
    DecoderConfig dec = DecoderConfig::for_output({25, 15, 10}, 28, 28, 1, 0);
    const SolverResult rn = net_adm_solve(meas, dec, cn);

    if (stack_max_abs_diff(ra.reconstruction, rn.reconstruction) != 0.0)
        return fail("degenerate_identity", "reconstructions differ");
    if (ra.trace.rows.size() != rn.trace.rows.size())
        return fail("degenerate_identity", "trace lengths differ");
    for (std::size_t i = 0; i < ra.trace.rows.size(); ++i) {
        const auto& a = ra.trace.rows[i];
        const auto& b = rn.trace.rows[i];
        if (a.f_u != b.f_u || a.f_utilde != b.f_utilde ||
            a.constraint_residual != b.constraint_residual || a.fit_residual != b.fit_residual)
            return fail("degenerate_identity", "trace row " + std::to_string(i) + " differs");
    }
    return pass("degenerate_identity",
                std::to_string(iters) + " iterations bit-identical with projection disabled");
}

CheckResult snr_calibration(int draws, double tol_db) {
    const ImageStack rgb = synthetic_rgb64();
    const ImageStack gray{rgb[1]};
    const RealGrid clean = fourier_magnitude(gray[0], PadSpec::from_rate(64, 64, 2.0));
    double mean = 0.0;
    for (double v : clean.values) mean += v;
    mean /= static_cast<double>(clean.size());
    double var = 0.0;
    for (double v : clean.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(clean.size());

    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double requested = (i % 3 == 0) ? 20.0 : (i % 3 == 1 ? 40.0 : 70.0);
        const MeasurementSet meas =
            make_measurement(gray, 2.0, requested, 1e-3, derive_seed(88, i));
        double emean = 0.0;
        for (std::size_t k = 0; k < clean.size(); ++k)
            emean += meas.channels[0].values[k] - clean.values[k];
        emean /= static_cast<double>(clean.size());
        double evar = 0.0;
        for (std::size_t k = 0; k < clean.size(); ++k) {
            const double e = meas.channels[0].values[k] - clean.values[k] - emean;
            evar += e * e;
        }
        evar /= static_cast<double>(clean.size());
        const double achieved = 20.0 * std::log10(var / evar);
        worst = std::max(worst, std::abs(achieved - requested));
    }
    const std::string d = "max |achieved - requested| = " + fmt(worst) + " dB";
    return worst <= tol_db ? pass("snr_calibration", d) : fail("snr_calibration", d);
}

CheckResult ssim_constant_oracle() {
    ImageStack a{RealGrid(16, 16, 0.25)};
    ImageStack b{RealGrid(16, 16, 0.75)};  // 0.25 + 0.5, already inside [0,1]
    const double c1 = 0.01 * 0.01;
    const double expected = (2.0 * 0.25 * 0.75 + c1) / (0.25 * 0.25 + 0.75 * 0.75 + c1);
    const double got = ssim(a, b);
    if (std::abs(got - expected) > 1e-12)
        return fail("ssim_constant_oracle", "got " + fmt(got) + ", expected " + fmt(expected));
    if (std::abs(ssim(b, a) - got) > 1e-12)
        return fail("ssim_constant_oracle", "ssim not symmetric");
    if (ssim(a, a) != 1.0) return fail("ssim_constant_oracle", "self-ssim != 1");
    return pass("ssim_constant_oracle");
}

CheckResult fit_descent_stat(int trials) {
    auto rng = make_rng(909);
    int monotone = 0;
    for (int t = 0; t < trials; ++t) {
        std::uniform_int_distribution<std::uint64_t> seeds;
        DecoderConfig cfg = DecoderConfig::for_output({8, 6}, 8, 8, 1, seeds(rng));
        DecoderNet net = init_decoder(cfg);
        ImageStack target{random_grid(rng, 8, 8, 0.0, 1.0)};
        AdamConfig acfg;
        acfg.learning_rate = 0.005;
        AdamState adam = AdamState::for_weights(net.weights, acfg);
        const FitResult fit = fit_to_target(net, target, 5, adam);
        double final_loss = 0.0;
        decoder_gradient(net, target, &final_loss);
        bool strict = true;
        for (std::size_t i = 1; i < fit.losses.size(); ++i)
            strict = strict && fit.losses[i] < fit.losses[i - 1];
        strict = strict && final_loss < fit.losses.back();
        if (strict) ++monotone;
    }
    const std::string d = std::to_string(monotone) + "/" + std::to_string(trials) +
                          " trials strictly decreasing over 5 steps";
    return monotone * 100 >= trials * 95 ? pass("fit_descent_stat", d)
                                         : fail("fit_descent_stat", d);
}

CheckReport check_suite() {
    CheckReport report;
    report.results.push_back(dft_oracle());
    report.results.push_back(loss_oracle());
    report.results.push_back(gradient_finite_difference());
    report.results.push_back(lipschitz_bound_check());
    report.results.push_back(cross_path());
    report.results.push_back(theorem2_descent());
    report.results.push_back(decoder_finite_difference());
    report.results.push_back(decoder_zero_weights());
    report.results.push_back(adam_hand_case());
    report.results.push_back(degenerate_identity());
    report.results.push_back(snr_calibration());
    report.results.push_back(ssim_constant_oracle());
    report.results.push_back(fit_descent_stat());
    return report;
}

}  // namespace fpr::checks
