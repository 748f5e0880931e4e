#include "fpr/experiment.hpp"

#include "fpr/image_io.hpp"
#include "fpr/measurement.hpp"
#include "fpr/metrics.hpp"
#include "fpr/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fpr {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "a:step:b" inclusive range, or a plain comma list
std::vector<double> parse_reals(const std::string& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        const auto c1 = item.find(':');
        if (c1 != std::string::npos) {
            const auto c2 = item.find(':', c1 + 1);
            if (c2 == std::string::npos)
                throw std::invalid_argument("plan: bad range for " + key + ": " + item);
            const double a = std::stod(item.substr(0, c1));
            const double step = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
            const double b = std::stod(item.substr(c2 + 1));
            if (step <= 0.0) throw std::invalid_argument("plan: range step must be > 0: " + item);
            for (double v = a; v <= b + step * 1e-9; v += step)
                out.push_back(std::round(v * 1e9) / 1e9);
        } else {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("plan: bad boolean for " + key + ": " + s);
}

std::string image_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return s;
}

std::string fmt_rate(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r);
    return buf;
}

const std::vector<Algorithm> kAllAlgorithms = {Algorithm::admm, Algorithm::net_adm,
                                               Algorithm::net_gd, Algorithm::net_pgd};

struct Cell {
    int image_idx, algo_idx, rate_idx, snr_idx, repeat;
};

void csv_opt(std::ostream& os, const std::optional<double>& v) {
    if (v) os << *v;
}

}  // namespace

void ExperimentPlan::validate() const {
    if (images.empty()) throw std::invalid_argument("plan: no images");
    if (images.size() > 256) throw std::invalid_argument("plan: too many images (max 256)");
    if (rates.empty()) throw std::invalid_argument("plan: no sampling rates");
    if (rates.size() > 1024) throw std::invalid_argument("plan: too many rates (max 1024)");
    for (double r : rates)
        if (r <= 1.0) throw std::invalid_argument("plan: sampling rates must be > 1.0");
    if (snrs_db.size() > 1023) throw std::invalid_argument("plan: too many snr levels (max 1023)");
    if (repeats < 1) throw std::invalid_argument("plan: repeats must be >= 1");
    if (repeats > 65536) throw std::invalid_argument("plan: repeats too large (max 65536)");
    if (epsilon <= 0.0) throw std::invalid_argument("plan: epsilon must be > 0");
    if (rho <= 0.0) throw std::invalid_argument("plan: rho must be > 0");
    if (parallel < 1) throw std::invalid_argument("plan: parallel must be >= 1");
    if (outdir.empty()) throw std::invalid_argument("plan: outdir must be set");
}

ExperimentPlan parse_plan(std::istream& is) {
    ExperimentPlan plan;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("plan line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "image" || key == "images") {
            for (const auto& p : split_list(val)) plan.images.push_back(p);
        } else if (key == "algorithms" || key == "algorithm") {
            for (const auto& a : split_list(val)) plan.algorithms.push_back(algorithm_from_name(a));
        } else if (key == "rates" || key == "rate") {
            for (double r : parse_reals(val, key)) plan.rates.push_back(r);
        } else if (key == "snr_db" || key == "snr") {
            for (double s : parse_reals(val, key)) plan.snrs_db.push_back(s);
        } else if (key == "repeats") {
            plan.repeats = std::stoi(val);
        } else if (key == "seed") {
            plan.seed = std::stoull(val);
        } else if (key == "outdir") {
            plan.outdir = val;
        } else if (key == "outer_iters" || key == "iters") {
            plan.outer_iters = std::stoi(val);
        } else if (key == "inner_steps" || key == "inner") {
            plan.inner_steps = std::stoi(val);
        } else if (key == "epsilon") {
            plan.epsilon = std::stod(val);
        } else if (key == "rho") {
            plan.rho = std::stod(val);
        } else if (key == "learning_rate" || key == "lr") {
            plan.learning_rate = std::stod(val);
        } else if (key == "net") {
            plan.net_channels.clear();
            for (const auto& c : split_list(val)) plan.net_channels.push_back(std::stoi(c));
        } else if (key == "activation") {
            plan.activation = val;
        } else if (key == "crop") {
            const auto x = val.find('x');
            if (x == std::string::npos)
                throw std::invalid_argument("plan: crop must look like 64x64");
            plan.crop_h = std::stoi(val.substr(0, x));
            plan.crop_w = std::stoi(val.substr(x + 1));
        } else if (key == "mnist_preprocess") {
            plan.mnist_preprocess = parse_bool(val, key);
        } else if (key == "flip_metrics") {
            plan.flip_metrics = parse_bool(val, key);
        } else if (key == "trace_every") {
            plan.trace_every = std::stoi(val);
        } else if (key == "parallel") {
            plan.parallel = std::stoi(val);
        } else if (key == "save_recon") {
            plan.save_recon = parse_bool(val, key);
        } else {
            throw std::invalid_argument("plan line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
    }
    return plan;
}

ExperimentPlan parse_plan_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open plan file: " + path);
    return parse_plan(is);
}

std::vector<int> default_net_channels(int h, int w) {
    if (h == 28 && w == 28) return {25, 15, 10};
    if (h == 64 && w == 64) return {120, 25, 15, 10};
    if (h == 128 && w == 128) return {128, 64, 64, 32};
    throw std::invalid_argument("no default decoder for " + std::to_string(h) + "x" +
                                std::to_string(w) + "; set net channels explicitly");
}

std::uint64_t cell_seed(std::uint64_t base, int image_idx, int algo_idx, int rate_idx,
                        int snr_idx, int repeat) {
    // bit-packed so distinct cells map to distinct streams
    const std::uint64_t packed = (static_cast<std::uint64_t>(image_idx & 0xff) << 40) |
                                 (static_cast<std::uint64_t>(algo_idx & 0xf) << 36) |
                                 (static_cast<std::uint64_t>(rate_idx & 0x3ff) << 26) |
                                 (static_cast<std::uint64_t>((snr_idx + 1) & 0x3ff) << 16) |
                                 static_cast<std::uint64_t>(repeat & 0xffff);
    return derive_seed(base, packed);
}

namespace {

RunRecord run_cell(const ExperimentPlan& plan, const std::vector<ImageStack>& truths,
                   const std::vector<std::string>& names,
                   const std::vector<std::string>& load_errors, const Cell& cell,
                   ImageStack* recon_out) {
    RunRecord rec;
    rec.image = names[cell.image_idx];
    const Algorithm algo =
        plan.algorithms.empty() ? kAllAlgorithms[cell.algo_idx] : plan.algorithms[cell.algo_idx];
    rec.algorithm = algo;
    rec.rate = plan.rates[cell.rate_idx];
    if (cell.snr_idx >= 0) rec.snr_db = plan.snrs_db[cell.snr_idx];
    rec.repeat = cell.repeat;
    rec.cell_seed = cell_seed(plan.seed, cell.image_idx, cell.algo_idx, cell.rate_idx,
                              cell.snr_idx, cell.repeat);
    try {
        if (!load_errors[cell.image_idx].empty())
            throw std::runtime_error(load_errors[cell.image_idx]);
        const ImageStack& truth = truths[cell.image_idx];
        const MeasurementSet meas = make_measurement(truth, rec.rate, rec.snr_db, plan.epsilon,
                                                     derive_seed(rec.cell_seed, 1));
        SolverConfig cfg = SolverConfig::defaults_for(algo);
        cfg.rho = plan.rho;
        cfg.epsilon = plan.epsilon;
        if (plan.outer_iters > 0) cfg.outer_iters = plan.outer_iters;
        if (plan.inner_steps >= 0 &&
            (algo == Algorithm::net_adm || algo == Algorithm::net_pgd))
            cfg.inner_steps = plan.inner_steps;
        if (plan.learning_rate >= 0.0 && algo != Algorithm::admm)
            cfg.learning_rate = plan.learning_rate;
        cfg.trace_every = plan.trace_every;
        cfg.seed = rec.cell_seed;

        SolverResult result;
        if (algo == Algorithm::admm) {
            result = admm_solve(meas, cfg);
        } else {
            const auto channels = plan.net_channels.empty()
                                      ? default_net_channels(truth[0].height, truth[0].width)
                                      : plan.net_channels;
            DecoderConfig dec = DecoderConfig::for_output(
                channels, truth[0].height, truth[0].width, static_cast<int>(truth.size()), 0);
            dec.activation = activation_from_name(plan.activation);
            result = solve(meas, &dec, cfg);
        }

        if (plan.flip_metrics)
            scored_with_flip(result.reconstruction, truth, &rec.psnr_db, &rec.ssim_val,
                             &rec.flipped);
        else {
            rec.psnr_db = psnr(result.reconstruction, truth);
            rec.ssim_val = ssim(result.reconstruction, truth);
        }
        rec.final_loss = result.final_loss;
        rec.magnitude_mse = result.final_magnitude_mse;
        rec.elapsed_ms = result.elapsed_ms;
        rec.ok = result.status == SolverStatus::ok;
        if (!rec.ok) rec.error = result.message;

        if (plan.trace_every > 0) {
            std::ostringstream name;
            name << "trace_img" << cell.image_idx << "_" << sanitize(rec.image) << "_"
                 << algorithm_name(algo) << "_r" << fmt_rate(rec.rate);
            if (rec.snr_db) name << "_snr" << fmt_rate(*rec.snr_db);
            name << "_rep" << cell.repeat << ".csv";
            write_trace_csv(result.trace, (std::filesystem::path(plan.outdir) / name.str()).string());
        }
        if (recon_out) *recon_out = std::move(result.reconstruction);
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

RunReport run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    std::filesystem::create_directories(plan.outdir);

    const std::vector<Algorithm>& algos = plan.algorithms.empty() ? kAllAlgorithms : plan.algorithms;

    std::vector<ImageStack> truths;
    std::vector<std::string> names;
    std::vector<std::string> load_errors;
    for (std::size_t i = 0; i < plan.images.size(); ++i) {
        names.push_back(image_stem(plan.images[i]));
        try {
            ImageStack img = load_image(plan.images[i], plan.crop_h, plan.crop_w, 0);
            if (plan.mnist_preprocess) {
                if (img.size() != 1)
                    throw std::invalid_argument("mnist_preprocess needs a grayscale image");
                img[0] = preprocess_mnist(img[0]);
            }
            truths.push_back(std::move(img));
            load_errors.emplace_back();
        } catch (const std::exception& e) {
            // a bad image fails its own cells, not the whole experiment
            truths.emplace_back();
            load_errors.emplace_back(e.what());
        }
    }

    std::vector<Cell> cells;
    for (int ii = 0; ii < static_cast<int>(plan.images.size()); ++ii)
        for (int ai = 0; ai < static_cast<int>(algos.size()); ++ai)
            for (int ri = 0; ri < static_cast<int>(plan.rates.size()); ++ri) {
                const int snr_count = plan.snrs_db.empty() ? 1 : static_cast<int>(plan.snrs_db.size());
                for (int si = 0; si < snr_count; ++si)
                    for (int rep = 0; rep < plan.repeats; ++rep)
                        cells.push_back({ii, ai, ri, plan.snrs_db.empty() ? -1 : si, rep});
            }

    RunReport report;
    report.runs.resize(cells.size());
    std::vector<ImageStack> recons(cells.size());

    const int workers = std::min<int>(plan.parallel, static_cast<int>(cells.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            report.runs[i] = run_cell(plan, truths, names, load_errors, cells[i], &recons[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    report.runs[i] = run_cell(plan, truths, names, load_errors, cells[i], &recons[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    // aggregate in cell-list order: repeats are contiguous
    const std::size_t group = static_cast<std::size_t>(plan.repeats);
    for (std::size_t start = 0; start < report.runs.size(); start += group) {
        AggregateRecord agg;
        const RunRecord& first = report.runs[start];
        agg.image = first.image;
        agg.algorithm = first.algorithm;
        agg.rate = first.rate;
        agg.snr_db = first.snr_db;
        double best_psnr = -std::numeric_limits<double>::infinity();
        agg.psnr_min = agg.ssim_min = std::numeric_limits<double>::infinity();
        agg.psnr_max = agg.ssim_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = start; i < start + group; ++i) {
            const RunRecord& r = report.runs[i];
            if (!r.ok) continue;
            ++agg.n_ok;
            agg.psnr_mean += r.psnr_db;
            agg.ssim_mean += r.ssim_val;
            agg.loss_mean += r.final_loss;
            agg.elapsed_ms_mean += r.elapsed_ms;
            agg.psnr_min = std::min(agg.psnr_min, r.psnr_db);
            agg.psnr_max = std::max(agg.psnr_max, r.psnr_db);
            agg.ssim_min = std::min(agg.ssim_min, r.ssim_val);
            agg.ssim_max = std::max(agg.ssim_max, r.ssim_val);
            if (r.psnr_db > best_psnr) {
                best_psnr = r.psnr_db;
                agg.best_repeat = r.repeat;
            }
        }
        if (agg.n_ok > 0) {
            agg.psnr_mean /= agg.n_ok;
            agg.ssim_mean /= agg.n_ok;
            agg.loss_mean /= agg.n_ok;
            agg.elapsed_ms_mean /= agg.n_ok;
        } else {
            agg.psnr_mean = agg.psnr_min = agg.psnr_max = std::numeric_limits<double>::quiet_NaN();
            agg.ssim_mean = agg.ssim_min = agg.ssim_max = std::numeric_limits<double>::quiet_NaN();
            agg.loss_mean = agg.elapsed_ms_mean = std::numeric_limits<double>::quiet_NaN();
        }
        report.aggregates.push_back(agg);

        if (plan.save_recon && agg.best_repeat >= 0) {
            const std::size_t best_idx = start + static_cast<std::size_t>(agg.best_repeat);
            if (!recons[best_idx].empty()) {
                std::ostringstream name;
                name << "recon_" << sanitize(agg.image) << "_" << algorithm_name(agg.algorithm)
                     << "_r" << fmt_rate(agg.rate);
                if (agg.snr_db) name << "_snr" << fmt_rate(*agg.snr_db);
                name << (recons[best_idx].size() == 3 ? ".ppm" : ".pgm");
                save_image((std::filesystem::path(plan.outdir) / name.str()).string(),
                           recons[best_idx]);
            }
        }
    }

    const auto out = std::filesystem::path(plan.outdir);
    write_runs_csv(report, (out / "runs.csv").string());
    write_aggregate_csv(report, (out / "aggregate.csv").string());
    write_curves_csv(report, (out / "curves.csv").string());
    return report;
}

void write_runs_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "# fpr runs schema v1\n";
    os << "image,algorithm,rate,snr_db,repeat,seed,status,psnr_db,ssim,final_loss,"
          "magnitude_mse,elapsed_ms,flipped,error\n";
    os.precision(17);
    for (const auto& r : report.runs) {
        os << r.image << ',' << algorithm_name(r.algorithm) << ',' << r.rate << ',';
        csv_opt(os, r.snr_db);
        os << ',' << r.repeat << ',' << r.cell_seed << ',' << (r.ok ? "ok" : "failed") << ','
           << r.psnr_db << ',' << r.ssim_val << ',' << r.final_loss << ',' << r.magnitude_mse
           << ',' << r.elapsed_ms << ',' << (r.flipped ? 1 : 0) << ',' << r.error << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_aggregate_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "# fpr aggregate schema v1\n";
    os << "image,algorithm,rate,snr_db,n_ok,psnr_mean,psnr_min,psnr_max,ssim_mean,ssim_min,"
          "ssim_max,loss_mean,elapsed_ms_mean,best_repeat\n";
    os.precision(17);
    for (const auto& a : report.aggregates) {
        os << a.image << ',' << algorithm_name(a.algorithm) << ',' << a.rate << ',';
        csv_opt(os, a.snr_db);
        os << ',' << a.n_ok << ',' << a.psnr_mean << ',' << a.psnr_min << ',' << a.psnr_max << ','
           << a.ssim_mean << ',' << a.ssim_min << ',' << a.ssim_max << ',' << a.loss_mean << ','
           << a.elapsed_ms_mean << ',' << a.best_repeat << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_curves_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "# fpr curves schema v1\n";
    os << "image,algorithm,rate,snr_db,metric,value\n";
    os.precision(17);
    for (const auto& a : report.aggregates) {
        for (const char* metric : {"psnr_mean", "ssim_mean"}) {
            os << a.image << ',' << algorithm_name(a.algorithm) << ',' << a.rate << ',';
            csv_opt(os, a.snr_db);
            os << ',' << metric << ','
               << (std::string(metric) == "psnr_mean" ? a.psnr_mean : a.ssim_mean) << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace fpr
