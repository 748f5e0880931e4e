#include "doctest.h"
#include "fpr/experiment.hpp"
#include "fpr/image_io.hpp"
#include "support/oracles.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace fpr;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TmpDir {
    std::filesystem::path path;
    explicit TmpDir(const char* tag) {
        path = std::filesystem::temp_directory_path() / tag;
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TmpDir() { std::filesystem::remove_all(path); }
};

std::string write_test_image(const std::filesystem::path& dir) {
    auto rng = make_rng(61);
    const std::string p = (dir / "img.pgm").string();
    save_image(p, ImageStack{oracle::random_grid(8, 8, rng, 0.1, 0.9)});
    return p;
}

}  // namespace

TEST_CASE("plan parser handles comments, lists, ranges and aliases") {
    std::istringstream in(
        "# benchmark grid\n"
        "image = a.png, b.png\n"
        "algorithms = admm, net_adm\n"
        "rates = 1.2:0.4:2.0\n"
        "snr_db = 20, 40\n"
        "repeats = 3\n"
        "seed = 17\n"
        "outdir = out\n"
        "iters = 50\n"
        "inner = 2\n"
        "lr = 0.01\n"
        "net = 25, 15, 10\n"
        "crop = 64x48\n"
        "mnist_preprocess = false\n"
        "flip_metrics = yes\n"
        "parallel = 2\n");
    const ExperimentPlan plan = parse_plan(in);
    CHECK(plan.images == std::vector<std::string>{"a.png", "b.png"});
    REQUIRE(plan.algorithms.size() == 2);
    CHECK(plan.algorithms[1] == Algorithm::net_adm);
    REQUIRE(plan.rates.size() == 3);
    CHECK(plan.rates[1] == doctest::Approx(1.6));
    CHECK(plan.snrs_db == std::vector<double>{20.0, 40.0});
    CHECK(plan.repeats == 3);
    CHECK(plan.seed == 17);
    CHECK(plan.outer_iters == 50);
    CHECK(plan.inner_steps == 2);
    CHECK(plan.learning_rate == 0.01);
    CHECK(plan.net_channels == std::vector<int>{25, 15, 10});
    CHECK(plan.crop_h == 64);
    CHECK(plan.crop_w == 48);
    CHECK_FALSE(plan.mnist_preprocess);
    CHECK(plan.flip_metrics);
    CHECK(plan.parallel == 2);
}

TEST_CASE("plan parser rejects junk") {
    std::istringstream unknown("image=a\nrates=2.0\ncolour = blue\n");
    CHECK_THROWS_AS(parse_plan(unknown), std::invalid_argument);
    std::istringstream badrange("image=a\nrates=2.0:0:1.0\n");
    CHECK_THROWS_AS(parse_plan(badrange), std::invalid_argument);
    std::istringstream badbool("image=a\nrates=2.0\nmnist_preprocess=maybe\n");
    CHECK_THROWS_AS(parse_plan(badbool), std::invalid_argument);
    std::istringstream norates("image=a\n");
    CHECK_THROWS_AS(parse_plan(norates).validate(), std::invalid_argument);
    std::istringstream lowrate("image=a\nrates=0.9\n");
    CHECK_THROWS_AS(parse_plan(lowrate).validate(), std::invalid_argument);
}

TEST_CASE("default decoder widths follow the image size") {
    CHECK(default_net_channels(28, 28) == std::vector<int>{25, 15, 10});
    CHECK(default_net_channels(64, 64) == std::vector<int>{120, 25, 15, 10});
    CHECK(default_net_channels(128, 128) == std::vector<int>{128, 64, 64, 32});
    CHECK_THROWS_AS(default_net_channels(48, 48), std::invalid_argument);
}

TEST_CASE("cell seeds are injective across the grid") {
    std::set<std::uint64_t> seen;
    int count = 0;
    for (int im = 0; im < 4; ++im)
        for (int al = 0; al < 4; ++al)
            for (int ra = 0; ra < 5; ++ra)
                for (int sn = 0; sn < 3; ++sn)
                    for (int re = 0; re < 6; ++re) {
                        seen.insert(cell_seed(9, im, al, ra, sn, re));
                        ++count;
                    }
    CHECK(int(seen.size()) == count);
    CHECK(cell_seed(9, 0, 0, 0, 0, 0) != cell_seed(10, 0, 0, 0, 0, 0));
}

TEST_CASE("run_experiment writes the three csvs and aggregates exactly") {
    TmpDir tmp("fpr_harness_t1");
    ExperimentPlan plan;
    plan.images = {write_test_image(tmp.path)};
    plan.algorithms = {Algorithm::admm};
    plan.rates = {1.5, 2.0};
    plan.repeats = 3;
    plan.outer_iters = 40;
    plan.seed = 5;
    plan.outdir = (tmp.path / "out").string();
    plan.save_recon = true;
    const RunReport report = run_experiment(plan);
    REQUIRE(report.runs.size() == 6);
    REQUIRE(report.aggregates.size() == 2);
    for (const auto& agg : report.aggregates) {
        double mean = 0.0;
        int n = 0;
        double best = -1e300;
        int best_rep = -1;
        for (const auto& run : report.runs)
            if (run.ok && run.rate == agg.rate && run.algorithm == agg.algorithm) {
                mean += run.psnr_db;
                ++n;
                if (run.psnr_db > best) {
                    best = run.psnr_db;
                    best_rep = run.repeat;
                }
            }
        REQUIRE(n == agg.n_ok);
        CHECK(agg.psnr_mean == doctest::Approx(mean / n).epsilon(1e-12));
        CHECK(agg.best_repeat == best_rep);
        CHECK(agg.psnr_min <= agg.psnr_mean);
        CHECK(agg.psnr_max >= agg.psnr_mean);
    }
    CHECK(std::filesystem::exists(plan.outdir + "/runs.csv"));
    CHECK(std::filesystem::exists(plan.outdir + "/aggregate.csv"));
    CHECK(std::filesystem::exists(plan.outdir + "/curves.csv"));
    // one best-run reconstruction per aggregate cell
    int recons = 0;
    for (const auto& e : std::filesystem::directory_iterator(plan.outdir))
        if (e.path().extension() == ".pgm") ++recons;
    CHECK(recons == 2);
}

TEST_CASE("rerun and parallel execution reproduce every result exactly") {
    TmpDir tmp("fpr_harness_t2");
    ExperimentPlan plan;
    plan.images = {write_test_image(tmp.path)};
    plan.algorithms = {Algorithm::admm, Algorithm::net_adm};
    plan.rates = {1.8};
    plan.repeats = 2;
    plan.outer_iters = 12;
    plan.inner_steps = 1;
    plan.net_channels = {4, 3};
    plan.seed = 11;
    plan.save_recon = false;
    plan.outdir = (tmp.path / "a").string();
    const RunReport serial = run_experiment(plan);

    auto same_numbers = [&](const RunReport& other) {
        REQUIRE(other.runs.size() == serial.runs.size());
        for (std::size_t i = 0; i < serial.runs.size(); ++i) {
            const RunRecord& x = serial.runs[i];
            const RunRecord& y = other.runs[i];
            CHECK(x.cell_seed == y.cell_seed);
            CHECK(x.ok == y.ok);
            // everything except wall-clock must match bit for bit
            CHECK(x.psnr_db == y.psnr_db);
            CHECK(x.ssim_val == y.ssim_val);
            CHECK(x.final_loss == y.final_loss);
            CHECK(x.magnitude_mse == y.magnitude_mse);
        }
    };

    plan.outdir = (tmp.path / "b").string();
    same_numbers(run_experiment(plan));

    plan.outdir = (tmp.path / "c").string();
    plan.parallel = 3;
    same_numbers(run_experiment(plan));
}

TEST_CASE("a missing image is recorded as a failed cell, not a crash") {
    TmpDir tmp("fpr_harness_t3");
    ExperimentPlan plan;
    plan.images = {write_test_image(tmp.path), (tmp.path / "absent.png").string()};
    plan.algorithms = {Algorithm::admm};
    plan.rates = {1.5};
    plan.repeats = 1;
    plan.outer_iters = 5;
    plan.seed = 3;
    plan.save_recon = false;
    plan.outdir = (tmp.path / "out").string();
    const RunReport report = run_experiment(plan);
    REQUIRE(report.runs.size() == 2);
    int ok = 0, failed = 0;
    for (const auto& run : report.runs) {
        if (run.ok) ++ok;
        else {
            ++failed;
            CHECK_FALSE(run.error.empty());
        }
    }
    CHECK(ok == 1);
    CHECK(failed == 1);
}

TEST_CASE("traces are emitted per cell when requested") {
    TmpDir tmp("fpr_harness_t4");
    ExperimentPlan plan;
    plan.images = {write_test_image(tmp.path)};
    plan.algorithms = {Algorithm::admm};
    plan.rates = {1.5};
    plan.repeats = 1;
    plan.outer_iters = 10;
    plan.trace_every = 5;
    plan.seed = 2;
    plan.save_recon = false;
    plan.outdir = (tmp.path / "out").string();
    run_experiment(plan);
    int traces = 0;
    for (const auto& e : std::filesystem::directory_iterator(plan.outdir)) {
        const std::string name = e.path().filename().string();
        if (name.find("_rep") != std::string::npos && e.path().extension() == ".csv") ++traces;
    }
    CHECK(traces == 1);
}
