#include "fpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fpr {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void check_stacks(const ImageStack& a, const ImageStack& b, const char* what) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument(std::string(what) + ": channel count mismatch or empty");
    for (std::size_t c = 0; c < a.size(); ++c)
        if (!a[c].same_shape(b[c]))
            throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

constexpr int kWin = 11;

// Windows smaller than 11 only appear for tiny images; the standard sizes
// always use the full 11x11 kernel.
std::vector<double> gaussian_window(int win) {
    std::vector<double> w(static_cast<std::size_t>(win) * win);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double di = i - win / 2, dj = j - win / 2;
            w[i * win + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            sum += w[i * win + j];
        }
    for (double& v : w) v /= sum;
    return w;
}

double ssim_channel(const RealGrid& a, const RealGrid& b) {
    const int h = a.height, w = a.width;
    int kwin = std::min({kWin, h, w});
    if (kwin % 2 == 0) --kwin;
    const std::vector<double> win = gaussian_window(kwin);
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    long count = 0;
    for (int r0 = 0; r0 + kwin <= h; ++r0)
        for (int c0 = 0; c0 + kwin <= w; ++c0) {
            double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (int i = 0; i < kwin; ++i)
                for (int j = 0; j < kwin; ++j) {
                    const double g = win[i * kwin + j];
                    const double x = a.at(r0 + i, c0 + j);
                    const double y = b.at(r0 + i, c0 + j);
                    mx += g * x;
                    my += g * y;
                    xx += g * x * x;
                    yy += g * y * y;
                    xy += g * x * y;
                }
            const double vx = xx - mx * mx;
            const double vy = yy - my * my;
            const double cxy = xy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return total / count;
}

}  // namespace

double psnr(const ImageStack& xhat, const ImageStack& x) {
    check_stacks(xhat, x, "psnr");
    double se = 0.0;
    long n = 0;
    for (std::size_t c = 0; c < x.size(); ++c)
        for (std::size_t i = 0; i < x[c].values.size(); ++i) {
            const double d = clamp01(xhat[c].values[i]) - clamp01(x[c].values[i]);
            se += d * d;
            ++n;
        }
    const double mse = se / n;
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double ssim(const ImageStack& xhat, const ImageStack& x) {
    check_stacks(xhat, x, "ssim");
    double total = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        RealGrid a = xhat[c], b = x[c];
        for (auto& v : a.values) v = clamp01(v);
        for (auto& v : b.values) v = clamp01(v);
        total += ssim_channel(a, b);
    }
    return total / static_cast<double>(x.size());
}

std::string format_psnr_ssim(double psnr_db, double ssim_value) {
    char buf[64];
    if (std::isinf(psnr_db))
        std::snprintf(buf, sizeof buf, "inf/%.2f", ssim_value);
    else
        std::snprintf(buf, sizeof buf, "%.2f/%.2f", psnr_db, ssim_value);
    return buf;
}

ImageStack rot180(const ImageStack& x) {
    ImageStack out;
    out.reserve(x.size());
    for (const auto& g : x) {
        RealGrid r(g.height, g.width);
        for (int i = 0; i < g.height; ++i)
            for (int j = 0; j < g.width; ++j)
                r.at(i, j) = g.at(g.height - 1 - i, g.width - 1 - j);
        out.push_back(std::move(r));
    }
    return out;
}

void scored_with_flip(const ImageStack& xhat, const ImageStack& x, double* psnr_out,
                      double* ssim_out, bool* flipped_out) {
    const double direct = psnr(xhat, x);
    const ImageStack flipped = rot180(xhat);
    const double rotated = psnr(flipped, x);
    if (rotated > direct) {
        if (psnr_out) *psnr_out = rotated;
        if (ssim_out) *ssim_out = ssim(flipped, x);
        if (flipped_out) *flipped_out = true;
    } else {
        if (psnr_out) *psnr_out = direct;
        if (ssim_out) *ssim_out = ssim(xhat, x);
        if (flipped_out) *flipped_out = false;
    }
}

}  // namespace fpr
