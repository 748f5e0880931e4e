#pragma once

#include "fpr/objective.hpp"

#include <optional>

namespace fpr {

/// Oversampled magnitude measurements for an image in [0,1]. Pads each
/// channel to round(r * n) per dimension, takes |DFT|, and optionally adds
/// i.i.d. Gaussian noise with sigma^2 = Var(|F P x|) * 10^(-snr_db / 20)
/// computed per channel. Deterministic in noise_seed.
MeasurementSet make_measurement(const ImageStack& x, double rate, std::optional<double> snr_db,
                                double epsilon, std::uint64_t noise_seed);

}  // namespace fpr
