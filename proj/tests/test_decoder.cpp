#include "doctest.h"
#include "fpr/decoder.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace fpr;

TEST_CASE("for_output derives latent dims and validates divisibility") {
    const DecoderConfig cfg = DecoderConfig::for_output({25, 15, 10}, 28, 28, 1, 7);
    CHECK(cfg.depth() == 2);
    CHECK(cfg.latent_h == 7);
    CHECK(cfg.latent_w == 7);
    CHECK(cfg.output_h() == 28);
    const DecoderConfig big = DecoderConfig::for_output({120, 25, 15, 10}, 64, 64, 3, 7);
    CHECK(big.latent_h == 8);
    CHECK_THROWS_AS(DecoderConfig::for_output({8, 6, 4}, 28, 30, 1, 7), std::invalid_argument);
    CHECK_THROWS_AS(DecoderConfig::for_output({}, 8, 8, 1, 7), std::invalid_argument);
}

TEST_CASE("init is deterministic, latent in range, weights roughly scaled") {
    const DecoderConfig cfg = DecoderConfig::for_output({30, 20, 10}, 16, 16, 1, 99);
    const DecoderNet a = init_decoder(cfg);
    const DecoderNet b = init_decoder(cfg);
    CHECK(max_abs_diff(a.latent, b.latent) == 0.0);
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        CHECK(max_abs_diff(a.weights[i], b.weights[i]) == 0.0);

    DecoderConfig other = cfg;
    other.seed = 100;
    const DecoderNet c = init_decoder(other);
    CHECK(max_abs_diff(a.latent, c.latent) > 0.0);

    for (double v : a.latent.values) {
        CHECK(v >= 0.0);
        CHECK(v < 0.1);
    }
    // W_0 is 20 x 30: N(0, 2/30) entries
    double var = 0.0;
    for (double v : a.weights[0].values) var += v * v / double(a.weights[0].size());
    CHECK(var == doctest::Approx(2.0 / 30.0).epsilon(0.35));
}

TEST_CASE("zero weights produce the all-0.5 image") {
    const DecoderConfig cfg = DecoderConfig::for_output({6, 4}, 8, 8, 2, 1);
    DecoderNet net = init_decoder(cfg);
    for (auto& w : net.weights)
        for (double& v : w.values) v = 0.0;
    const ImageStack out = decoder_forward(net);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].height == 8);
    for (const auto& ch : out)
        for (double v : ch.values) CHECK(v == 0.5);
}

TEST_CASE("upsample2x matches hand-computed align-corners-false values") {
    // one channel, 2x2 plane [1 2; 3 4] stored as a row
    RealGrid plane(1, 4, {1.0, 2.0, 3.0, 4.0});
    const RealGrid up = upsample2x(plane, 2, 2);
    REQUIRE(up.width == 16);
    // src coordinate for dst j is (j + 0.5)/2 - 0.5, clamped: 0, 0.25, 0.75, 1
    const double want[16] = {1.0, 1.25, 1.75, 2.0,  1.5, 1.75, 2.25, 2.5,
                             2.5, 2.75, 3.25, 3.5,  3.0, 3.25, 3.75, 4.0};
    for (int i = 0; i < 16; ++i) CHECK(up.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("upsample2x_adjoint is the exact adjoint") {
    auto rng = make_rng(31);
    const RealGrid a = oracle::random_grid(3, 4 * 5, rng, -1, 1);   // 3 channels of 4x5
    const RealGrid b = oracle::random_grid(3, 8 * 10, rng, -1, 1);  // 3 channels of 8x10
    const RealGrid ua = upsample2x(a, 4, 5);
    const RealGrid atb = upsample2x_adjoint(b, 4, 5);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < ua.values.size(); ++i) lhs += ua.values[i] * b.values[i];
    for (std::size_t i = 0; i < a.values.size(); ++i) rhs += a.values[i] * atb.values[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("decoder gradient passes finite differences for every activation") {
    for (auto act : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                     Activation::sigmoid}) {
        DecoderConfig cfg = DecoderConfig::for_output({5, 4}, 8, 8, 2, 17);
        cfg.activation = act;
        DecoderNet net = init_decoder(cfg);
        auto rng = make_rng(32);
        const ImageStack target{oracle::random_grid(8, 8, rng), oracle::random_grid(8, 8, rng)};
        const std::vector<RealGrid> grads = decoder_gradient(net, target);
        std::uniform_int_distribution<int> pick_w(0, int(net.weights.size()) - 1);
        const double delta = 1e-6;
        for (int t = 0; t < 30; ++t) {
            const int wi = pick_w(rng);
            std::uniform_int_distribution<int> pick_i(0, int(net.weights[wi].size()) - 1);
            const int ii = pick_i(rng);
            auto loss_at = [&](double v) {
                DecoderNet probe = net;
                probe.weights[wi].values[ii] = v;
                const ImageStack out = decoder_forward(probe);
                double l = 0.0;
                for (std::size_t c = 0; c < out.size(); ++c)
                    for (std::size_t k = 0; k < out[c].values.size(); ++k) {
                        const double d = out[c].values[k] - target[c].values[k];
                        l += 0.5 * d * d;
                    }
                return l;
            };
            const double keep = net.weights[wi].values[ii];
            const double fd = (loss_at(keep + delta) - loss_at(keep - delta)) / (2.0 * delta);
            const double an = grads[wi].values[ii];
            CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("decoder_backward is linear in the cotangent") {
    DecoderConfig cfg = DecoderConfig::for_output({5, 3}, 8, 8, 1, 5);
    const DecoderNet net = init_decoder(cfg);
    const DecoderForward fwd = decoder_forward_cached(net);
    auto rng = make_rng(33);
    const RealGrid c1 = oracle::random_grid(fwd.out_mat.height, fwd.out_mat.width, rng, -1, 1);
    const RealGrid c2 = oracle::random_grid(fwd.out_mat.height, fwd.out_mat.width, rng, -1, 1);
    RealGrid mix(c1.height, c1.width);
    for (std::size_t i = 0; i < mix.values.size(); ++i)
        mix.values[i] = 0.3 * c1.values[i] - 1.7 * c2.values[i];
    const auto g1 = decoder_backward(net, fwd, c1);
    const auto g2 = decoder_backward(net, fwd, c2);
    const auto gm = decoder_backward(net, fwd, mix);
    for (std::size_t w = 0; w < g1.size(); ++w)
        for (std::size_t i = 0; i < g1[w].values.size(); ++i)
            CHECK(gm[w].values[i] ==
                  doctest::Approx(0.3 * g1[w].values[i] - 1.7 * g2[w].values[i]).epsilon(1e-10));
}

TEST_CASE("fit_to_target reduces the loss and records it per step") {
    DecoderConfig cfg = DecoderConfig::for_output({20, 12, 8}, 16, 16, 1, 3);
    DecoderNet net = init_decoder(cfg);
    auto rng = make_rng(34);
    ImageStack target{oracle::random_grid(16, 16, rng, 0.3, 0.7)};
    AdamState adam = AdamState::for_weights(net.weights, AdamConfig{});
    const FitResult fit = fit_to_target(net, target, 40, adam);
    REQUIRE(fit.losses.size() == 40);
    CHECK(fit.losses.back() < 0.5 * fit.losses.front());
    CHECK(adam.step == 40);
    // warm continuation keeps the counter going
    fit_to_target(net, target, 5, adam);
    CHECK(adam.step == 45);
}

TEST_CASE("adam matches a hand-stepped scalar case") {
    // single 1x1 weight, constant gradient 1: after one step w = -lr
    std::vector<RealGrid> w{RealGrid(1, 1, 0.0)};
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    AdamState st = AdamState::for_weights(w, cfg);
    std::vector<RealGrid> g{RealGrid(1, 1, 1.0)};
    adam_step(st, w, g);
    // mhat = 1, vhat = 1 -> step = lr * 1/(1 + 1e-8)
    CHECK(w[0].values[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    adam_step(st, w, g);
    const double m2 = (0.9 * 0.1 + 0.1 * 1.0) / (1 - 0.9 * 0.9);
    const double v2 = (0.999 * 0.001 + 0.001 * 1.0) / (1 - 0.999 * 0.999);
    CHECK(w[0].values[0] == doctest::Approx(-0.1 / (1.0 + 1e-8) -
                                            0.1 * m2 / (std::sqrt(v2) + 1e-8))
                                .epsilon(1e-10));
}

TEST_CASE("adam decay halves the rate after each period") {
    AdamConfig cfg;
    cfg.learning_rate = 0.08;
    cfg.decay_period = 500;
    cfg.decay_factor = 0.5;
    AdamState st = AdamState::for_weights({RealGrid(1, 1)}, cfg);
    CHECK(st.rate_for_step(1) == 0.08);
    CHECK(st.rate_for_step(500) == 0.08);
    CHECK(st.rate_for_step(501) == doctest::Approx(0.04));
    CHECK(st.rate_for_step(1001) == doctest::Approx(0.02));
    cfg.decay_period = 0;
    AdamState flat = AdamState::for_weights({RealGrid(1, 1)}, cfg);
    CHECK(flat.rate_for_step(100000) == 0.08);
}

TEST_CASE("weights survive a save/load roundtrip exactly") {
    DecoderConfig cfg = DecoderConfig::for_output({7, 5}, 12, 12, 3, 21);
    cfg.activation = Activation::leaky_relu;
    const DecoderNet net = init_decoder(cfg);
    const std::string path = (std::filesystem::temp_directory_path() / "fpr_wts.bin").string();
    save_weights(net, path);
    const DecoderNet back = load_weights(path);
    std::filesystem::remove(path);
    CHECK(back.config.channel_counts == net.config.channel_counts);
    CHECK(back.config.activation == net.config.activation);
    CHECK(max_abs_diff(back.latent, net.latent) == 0.0);
    for (std::size_t i = 0; i < net.weights.size(); ++i)
        CHECK(max_abs_diff(back.weights[i], net.weights[i]) == 0.0);
}

TEST_CASE("activation names roundtrip") {
    for (auto a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                   Activation::sigmoid})
        CHECK(activation_from_name(activation_name(a)) == a);
    CHECK_THROWS_AS(activation_from_name("swish"), std::invalid_argument);
}

TEST_CASE("forward stays finite when a channel saturates to a constant") {
    // relu can zero a whole channel; channel_norm must not divide by zero
    DecoderConfig cfg = DecoderConfig::for_output({4, 3}, 8, 8, 1, 2);
    DecoderNet net = init_decoder(cfg);
    for (double& v : net.weights[0].values) v = -std::abs(v);  // all pre-activations <= 0
    const ImageStack out = decoder_forward(net);
    for (double v : out[0].values) CHECK(std::isfinite(v));
}
