#pragma once

// Reference implementations for the unit tests. Deliberately naive and
// shared with nothing in core/ so a bug there cannot hide here.

#include "fpr/grid.hpp"
#include "fpr/rng.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

inline fpr::ComplexGrid dft_direct(const fpr::ComplexGrid& in) {
    const int h = in.height, w = in.width;
    fpr::ComplexGrid out(h, w);
    const double tau = 2.0 * 3.14159265358979323846;
    for (int p = 0; p < h; ++p)
        for (int q = 0; q < w; ++q) {
            std::complex<double> acc = 0.0;
            for (int s = 0; s < h; ++s)
                for (int t = 0; t < w; ++t) {
                    const double ang = -tau * (double(p) * s / h + double(q) * t / w);
                    acc += in.at(s, t) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out.at(p, q) = acc;
        }
    return out;
}

inline fpr::ComplexGrid dft_direct(const fpr::RealGrid& in) {
    fpr::ComplexGrid c(in.height, in.width);
    for (std::size_t i = 0; i < in.values.size(); ++i) c.values[i] = in.values[i];
    return dft_direct(c);
}

// f(u) = 1/(2m) sum ( sqrt(b^2+eps) - sqrt(|F u|^2+eps) )^2 by direct sums.
inline double smoothed_loss_direct(const fpr::RealGrid& u, const fpr::RealGrid& b, double eps) {
    const fpr::ComplexGrid fu = dft_direct(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < fu.values.size(); ++i) {
        const double d = std::sqrt(b.values[i] * b.values[i] + eps) -
                         std::sqrt(std::norm(fu.values[i]) + eps);
        acc += d * d;
    }
    return acc / (2.0 * double(u.size()));
}

inline double psnr_direct(const std::vector<fpr::RealGrid>& a, const std::vector<fpr::RealGrid>& b) {
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < a.size(); ++c)
        for (std::size_t i = 0; i < a[c].values.size(); ++i) {
            auto clamp = [](double v) { return v < 0 ? 0.0 : (v > 1 ? 1.0 : v); };
            const double d = clamp(a[c].values[i]) - clamp(b[c].values[i]);
            se += d * d;
            ++n;
        }
    return -10.0 * std::log10(se / double(n));
}

inline fpr::RealGrid random_grid(int h, int w, std::mt19937_64& rng, double lo = 0.0,
                                 double hi = 1.0) {
    fpr::RealGrid g(h, w);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : g.values) v = dist(rng);
    return g;
}

inline fpr::ComplexGrid random_complex(int h, int w, std::mt19937_64& rng) {
    fpr::ComplexGrid g(h, w);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : g.values) v = {dist(rng), dist(rng)};
    return g;
}

inline double max_rel_err(const fpr::ComplexGrid& got, const fpr::ComplexGrid& want) {
    double scale = 1e-300;
    for (const auto& v : want.values) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < got.values.size(); ++i)
        worst = std::max(worst, std::abs(got.values[i] - want.values[i]) / scale);
    return worst;
}

}  // namespace oracle
