#include "fpr/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace fpr {

namespace {

std::size_t checked_area(int h, int w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("grid dimensions must be positive");
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}

// Cached c2c plans keyed by (h, w, sign). Plans are created with
// FFTW_UNALIGNED so they can be re-executed on any caller buffer via the
// new-array interface; the planner itself is not thread-safe, so creation
// is serialized. fftw_execute_dft on distinct arrays is safe concurrently.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    void execute(int h, int w, int sign, const std::complex<double>* in, std::complex<double>* out) {
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto key = std::make_tuple(h, w, sign);
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                std::vector<std::complex<double>> a(static_cast<std::size_t>(h) * w);
                std::vector<std::complex<double>> b(a.size());
                plan = fftw_plan_dft_2d(h, w,
                                        reinterpret_cast<fftw_complex*>(a.data()),
                                        reinterpret_cast<fftw_complex*>(b.data()),
                                        sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
                if (!plan) throw std::runtime_error("fftw_plan_dft_2d failed");
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace

RealGrid::RealGrid(int h, int w, double fill) : height(h), width(w), values(checked_area(h, w), fill) {}

RealGrid::RealGrid(int h, int w, std::vector<double> v) : height(h), width(w), values(std::move(v)) {
    if (checked_area(h, w) != values.size())
        throw std::invalid_argument("RealGrid: value count does not match dimensions");
}

ComplexGrid::ComplexGrid(int h, int w) : height(h), width(w), values(checked_area(h, w)) {}

ComplexGrid::ComplexGrid(int h, int w, std::vector<std::complex<double>> v)
    : height(h), width(w), values(std::move(v)) {
    if (checked_area(h, w) != values.size())
        throw std::invalid_argument("ComplexGrid: value count does not match dimensions");
}

PadSpec::PadSpec(int ih, int iw, int oh, int ow) : inner_h(ih), inner_w(iw), outer_h(oh), outer_w(ow) {
    checked_area(ih, iw);
    checked_area(oh, ow);
    if (oh < ih || ow < iw)
        throw std::invalid_argument("PadSpec: outer dimensions must not be smaller than inner");
}

PadSpec PadSpec::from_rate(int inner_h, int inner_w, double rate) {
    if (rate < 1.0) throw std::invalid_argument("PadSpec: sampling rate must be >= 1");
    int oh = static_cast<int>(std::lround(rate * inner_h));
    int ow = static_cast<int>(std::lround(rate * inner_w));
    return PadSpec(inner_h, inner_w, std::max(oh, inner_h), std::max(ow, inner_w));
}

double PadSpec::rate_h() const {
    return std::round(1000.0 * outer_h / inner_h) / 1000.0;
}

double PadSpec::rate_w() const {
    return std::round(1000.0 * outer_w / inner_w) / 1000.0;
}

RealGrid zero_pad(const RealGrid& x, const PadSpec& spec) {
    if (x.height != spec.inner_h || x.width != spec.inner_w)
        throw std::invalid_argument("zero_pad: input does not match inner dimensions");
    RealGrid out(spec.outer_h, spec.outer_w, 0.0);
    for (int r = 0; r < spec.inner_h; ++r)
        for (int c = 0; c < spec.inner_w; ++c) out.at(r, c) = x.at(r, c);
    return out;
}

RealGrid crop(const RealGrid& u, const PadSpec& spec) {
    if (u.height != spec.outer_h || u.width != spec.outer_w)
        throw std::invalid_argument("crop: input does not match outer dimensions");
    RealGrid out(spec.inner_h, spec.inner_w);
    for (int r = 0; r < spec.inner_h; ++r)
        for (int c = 0; c < spec.inner_w; ++c) out.at(r, c) = u.at(r, c);
    return out;
}

ComplexGrid dft2(const ComplexGrid& u) {
    ComplexGrid out(u.height, u.width);
    PlanCache::instance().execute(u.height, u.width, FFTW_FORWARD, u.values.data(), out.values.data());
    return out;
}

ComplexGrid dft2(const RealGrid& u) {
    ComplexGrid tmp(u.height, u.width);
    for (std::size_t i = 0; i < u.size(); ++i) tmp.values[i] = u.values[i];
    return dft2(tmp);
}

ComplexGrid idft2(const ComplexGrid& v) {
    ComplexGrid out(v.height, v.width);
    PlanCache::instance().execute(v.height, v.width, FFTW_BACKWARD, v.values.data(), out.values.data());
    const double scale = 1.0 / (static_cast<double>(v.height) * v.width);
    for (auto& z : out.values) z *= scale;
    return out;
}

RealGrid fourier_magnitude(const RealGrid& x, const PadSpec& spec) {
    ComplexGrid spectrum = dft2(zero_pad(x, spec));
    RealGrid out(spectrum.height, spectrum.width);
    for (std::size_t i = 0; i < spectrum.size(); ++i) out.values[i] = std::abs(spectrum.values[i]);
    return out;
}

RealGrid real_part(const ComplexGrid& v) {
    RealGrid out(v.height, v.width);
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v.values[i].real();
    return out;
}

double max_abs_imag(const ComplexGrid& v) {
    double m = 0.0;
    for (const auto& z : v.values) m = std::max(m, std::abs(z.imag()));
    return m;
}

double squared_norm(const RealGrid& g) {
    double s = 0.0;
    for (double x : g.values) s += x * x;
    return s;
}

double norm(const RealGrid& g) { return std::sqrt(squared_norm(g)); }

double max_abs(const RealGrid& g) {
    double m = 0.0;
    for (double x : g.values) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const RealGrid& a, const RealGrid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

bool all_finite(const RealGrid& g) {
    for (double x : g.values)
        if (!std::isfinite(x)) return false;
    return true;
}

double stack_squared_norm(const ImageStack& s) {
    double t = 0.0;
    for (const auto& g : s) t += squared_norm(g);
    return t;
}

double stack_norm(const ImageStack& s) { return std::sqrt(stack_squared_norm(s)); }

double stack_max_abs_diff(const ImageStack& a, const ImageStack& b) {
    check_same_shape(a, b, "stack_max_abs_diff");
    double m = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, max_abs_diff(a[c], b[c]));
    return m;
}

void check_same_shape(const ImageStack& a, const ImageStack& b, const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": channel count mismatch");
    for (std::size_t c = 0; c < a.size(); ++c)
        if (!a[c].same_shape(b[c])) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace fpr
