#include "fpr/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace fpr {

namespace {

void check_channel(const MeasurementSet& meas, int channel) {
    if (channel < 0 || channel >= meas.num_channels())
        throw std::invalid_argument("measurement channel index out of range");
}

void check_padded_shape(const RealGrid& u, const MeasurementSet& meas) {
    if (u.height != meas.spec.outer_h || u.width != meas.spec.outer_w)
        throw std::invalid_argument("iterate does not match the padded measurement dimensions");
}

bool conjugate_symmetric(const RealGrid& b) {
    const int h = b.height, w = b.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double mirror = b.at((h - r) % h, (w - c) % w);
            if (std::abs(b.at(r, c) - mirror) > 1e-12 * (1.0 + std::abs(mirror))) return false;
        }
    }
    return true;
}

}  // namespace

MeasurementSet::MeasurementSet(ImageStack magnitudes, PadSpec pad, double eps)
    : channels(std::move(magnitudes)), spec(pad), epsilon(eps) {
    if (epsilon <= 0.0) throw std::invalid_argument("MeasurementSet: epsilon must be positive");
    if (channels.empty()) throw std::invalid_argument("MeasurementSet: at least one channel required");
    for (const auto& b : channels) {
        if (b.height != spec.outer_h || b.width != spec.outer_w)
            throw std::invalid_argument("MeasurementSet: magnitude grid does not match outer dimensions");
        symmetric_.push_back(conjugate_symmetric(b));
    }
}

double smoothed_loss(const RealGrid& u, const MeasurementSet& meas, int channel) {
    check_channel(meas, channel);
    check_padded_shape(u, meas);
    const RealGrid& b = meas.channels[channel];
    const double eps = meas.epsilon;
    ComplexGrid spectrum = dft2(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        double meas_amp = std::sqrt(b.values[i] * b.values[i] + eps);
        double est_amp = std::sqrt(std::norm(spectrum.values[i]) + eps);
        double d = meas_amp - est_amp;
        acc += d * d;
    }
    return acc / (2.0 * static_cast<double>(meas.m()));
}

RealGrid smoothed_loss_grad(const RealGrid& u, const MeasurementSet& meas, int channel) {
    check_channel(meas, channel);
    check_padded_shape(u, meas);
    const RealGrid& b = meas.channels[channel];
    const double eps = meas.epsilon;
    ComplexGrid spectrum = dft2(u);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        double ratio = std::sqrt(b.values[i] * b.values[i] + eps) /
                       std::sqrt(std::norm(spectrum.values[i]) + eps);
        spectrum.values[i] *= ratio;
    }
    ComplexGrid matched = idft2(spectrum);
    if (meas.channel_symmetric(channel)) {
        double residue = max_abs_imag(matched);
        double scale = std::max(1.0, max_abs(u));
        if (residue > 1e-10 * scale)
            throw std::runtime_error("smoothed_loss_grad: imaginary residue exceeds tolerance");
    }
    RealGrid grad(u.height, u.width);
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad.values[i] = u.values[i] - matched.values[i].real();
    return grad;
}

double lipschitz_bound_channel(const MeasurementSet& meas, int channel) {
    check_channel(meas, channel);
    const RealGrid& b = meas.channels[channel];
    const double eps = meas.epsilon;
    double amp_inf = 0.0;
    for (double v : b.values) amp_inf = std::max(amp_inf, std::sqrt(v * v + eps));
    return 1.0 + 2.0 / std::sqrt(eps) * amp_inf;
}

double lipschitz_bound(const MeasurementSet& meas) {
    double L = 0.0;
    for (int c = 0; c < meas.num_channels(); ++c) L = std::max(L, lipschitz_bound_channel(meas, c));
    return L;
}

RealGrid descent_step(const RealGrid& u_tilde, const MeasurementSet& meas, int channel) {
    RealGrid grad = smoothed_loss_grad(u_tilde, meas, channel);
    RealGrid out(u_tilde.height, u_tilde.width);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = u_tilde.values[i] - grad.values[i];
    return out;
}

double smoothed_loss_total(const ImageStack& u, const MeasurementSet& meas) {
    if (static_cast<int>(u.size()) != meas.num_channels())
        throw std::invalid_argument("smoothed_loss_total: channel count mismatch");
    double acc = 0.0;
    for (int c = 0; c < meas.num_channels(); ++c) acc += smoothed_loss(u[c], meas, c);
    return acc;
}

double magnitude_mse(const ImageStack& u, const MeasurementSet& meas) {
    if (static_cast<int>(u.size()) != meas.num_channels())
        throw std::invalid_argument("magnitude_mse: channel count mismatch");
    double acc = 0.0;
    for (int c = 0; c < meas.num_channels(); ++c) {
        if (u[c].height != meas.spec.outer_h || u[c].width != meas.spec.outer_w)
            throw std::invalid_argument("magnitude_mse: expected padded-grid input");
        ComplexGrid spectrum = dft2(u[c]);
        const RealGrid& b = meas.channels[c];
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            double d = b.values[i] - std::abs(spectrum.values[i]);
            acc += d * d;
        }
    }
    return acc / static_cast<double>(meas.m());
}

}  // namespace fpr
