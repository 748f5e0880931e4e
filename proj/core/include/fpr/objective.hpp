#pragma once

#include "fpr/grid.hpp"

namespace fpr {

/// Per-channel Fourier magnitude measurements b on the oversampled grid,
/// together with the padding geometry and the smoothing parameter.
/// Magnitudes may carry additive noise; only b^2 enters the objective, so
/// negative noisy entries need no clamping.
struct MeasurementSet {
    ImageStack channels;  // each outer_h x outer_w
    PadSpec spec;
    double epsilon = 1e-3;

    MeasurementSet() = default;
    MeasurementSet(ImageStack magnitudes, PadSpec pad, double eps);

    int num_channels() const { return static_cast<int>(channels.size()); }
    /// Padded per-channel pixel count; the m in every 1/(2m) factor.
    std::size_t m() const { return spec.outer_size(); }
    /// True if channel's grid is conjugate-symmetric (holds for noiseless
    /// magnitudes of a real signal; broken by i.i.d. noise).
    bool channel_symmetric(int channel) const { return symmetric_[channel]; }

private:
    std::vector<bool> symmetric_;
};

/// Smoothed amplitude residual
///   f(u) = 1/(2m) * || sqrt(b^2 + eps) - sqrt(|Fu|^2 + eps) ||^2.
/// Nonnegative; zero exactly when |Fu| matches |b| elementwise.
double smoothed_loss(const RealGrid& u, const MeasurementSet& meas, int channel);

/// Analytic gradient
///   grad f(u) = u - Re F^{-1}( sqrt(b^2+eps) / sqrt(|Fu|^2+eps) .* Fu ).
/// The real part is the exact gradient for any real b. When the channel is
/// conjugate-symmetric the inverse transform is real up to roundoff and the
/// imaginary residue is asserted <= 1e-10 as a convention guard.
RealGrid smoothed_loss_grad(const RealGrid& u, const MeasurementSet& meas, int channel);

/// Lipschitz constant of grad f:  L = 1 + (2/sqrt(eps)) * ||sqrt(b^2+eps)||_inf.
/// Always >= 3. Taken over all channels.
double lipschitz_bound(const MeasurementSet& meas);
double lipschitz_bound_channel(const MeasurementSet& meas, int channel);

/// One unit gradient step g(u) = u - grad f(u).
RealGrid descent_step(const RealGrid& u_tilde, const MeasurementSet& meas, int channel);

/// Sum of per-channel losses for a padded stack.
double smoothed_loss_total(const ImageStack& u, const MeasurementSet& meas);

/// Unsmoothed magnitude mean squared error 1/m * || b - |Fu| ||^2 summed
/// over channels; reported alongside f for noisy measurements.
double magnitude_mse(const ImageStack& u, const MeasurementSet& meas);

}  // namespace fpr
