#include "fpr/measurement.hpp"

#include "fpr/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fpr {

MeasurementSet make_measurement(const ImageStack& x, double rate, std::optional<double> snr_db,
                                double epsilon, std::uint64_t noise_seed) {
    if (x.empty()) throw std::invalid_argument("make_measurement: empty image stack");
    if (rate <= 1.0) throw std::invalid_argument("make_measurement: sampling rate must be > 1");
    for (const auto& g : x)
        if (!g.same_shape(x[0])) throw std::invalid_argument("make_measurement: ragged stack");

    const PadSpec spec = PadSpec::from_rate(x[0].height, x[0].width, rate);
    ImageStack b;
    b.reserve(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        RealGrid mag = fourier_magnitude(x[c], spec);
        if (snr_db) {
            double mean = 0.0;
            for (double v : mag.values) mean += v;
            mean /= static_cast<double>(mag.values.size());
            double var = 0.0;
            for (double v : mag.values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(mag.values.size());
            const double sigma = std::sqrt(var * std::pow(10.0, -(*snr_db) / 20.0));
            auto rng = make_rng(derive_seed(noise_seed, static_cast<std::uint64_t>(c)));
            std::normal_distribution<double> gauss(0.0, sigma);
            for (double& v : mag.values) v += gauss(rng);
        }
        b.push_back(std::move(mag));
    }
    return MeasurementSet(std::move(b), spec, epsilon);
}

}  // namespace fpr
