#include "fpr/decoder.hpp"
#include "fpr/measurement.hpp"
#include "fpr/metrics.hpp"
#include "fpr/rng.hpp"
#include "fpr/solvers.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fpr;

namespace {

RealGrid random_grid(int h, int w, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    RealGrid g(h, w);
    for (double& v : g.values) v = dist(rng);
    return g;
}

void BM_dft2(benchmark::State& state) {
    const int n = int(state.range(0));
    const RealGrid u = random_grid(n, n, 1);
    for (auto _ : state) benchmark::DoNotOptimize(dft2(u));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_dft2)->Arg(28)->Arg(56)->Arg(64)->Arg(128)->Arg(256);

void BM_loss_grad(benchmark::State& state) {
    const int n = int(state.range(0));
    const ImageStack img{random_grid(n, n, 2)};
    const MeasurementSet meas = make_measurement(img, 2.0, std::nullopt, 1e-3, 3);
    const RealGrid u = random_grid(meas.spec.outer_h, meas.spec.outer_w, 4);
    for (auto _ : state) benchmark::DoNotOptimize(smoothed_loss_grad(u, meas, 0));
}
BENCHMARK(BM_loss_grad)->Arg(28)->Arg(64)->Arg(128);

DecoderNet bench_net(int size) {
    const std::vector<int> channels =
        size == 28 ? std::vector<int>{25, 15, 10} : std::vector<int>{120, 25, 15, 10};
    return init_decoder(DecoderConfig::for_output(channels, size, size, 1, 5));
}

void BM_decoder_forward(benchmark::State& state) {
    const DecoderNet net = bench_net(int(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(decoder_forward(net));
}
BENCHMARK(BM_decoder_forward)->Arg(28)->Arg(64);

void BM_decoder_gradient(benchmark::State& state) {
    const int n = int(state.range(0));
    const DecoderNet net = bench_net(n);
    const ImageStack target{random_grid(n, n, 6)};
    for (auto _ : state) benchmark::DoNotOptimize(decoder_gradient(net, target));
}
BENCHMARK(BM_decoder_gradient)->Arg(28)->Arg(64);

void BM_admm_iterations(benchmark::State& state) {
    const int n = int(state.range(0));
    const ImageStack img{random_grid(n, n, 7)};
    const MeasurementSet meas = make_measurement(img, 2.0, std::nullopt, 1e-3, 8);
    SolverConfig cfg = SolverConfig::defaults_for(Algorithm::admm);
    cfg.outer_iters = 100;
    for (auto _ : state) benchmark::DoNotOptimize(admm_solve(meas, cfg));
    state.SetItemsProcessed(state.iterations() * cfg.outer_iters);
}
BENCHMARK(BM_admm_iterations)->Arg(28)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_net_adm_iterations(benchmark::State& state) {
    const int n = int(state.range(0));
    const ImageStack img{random_grid(n, n, 9)};
    const MeasurementSet meas = make_measurement(img, 2.0, std::nullopt, 1e-3, 10);
    SolverConfig cfg = SolverConfig::defaults_for(Algorithm::net_adm);
    cfg.outer_iters = 20;
    cfg.seed = 1;
    const DecoderConfig dec = DecoderConfig::for_output(
        n == 28 ? std::vector<int>{25, 15, 10} : std::vector<int>{120, 25, 15, 10}, n, n, 1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(net_adm_solve(meas, dec, cfg));
    state.SetItemsProcessed(state.iterations() * cfg.outer_iters);
}
BENCHMARK(BM_net_adm_iterations)->Arg(28)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ssim(benchmark::State& state) {
    const int n = int(state.range(0));
    const ImageStack a{random_grid(n, n, 11)};
    const ImageStack b{random_grid(n, n, 12)};
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_ssim)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
