#include "fpr/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fpr {

AdamState AdamState::for_weights(const std::vector<RealGrid>& weights, const AdamConfig& cfg) {
    AdamState st;
    st.config = cfg;
    st.m.reserve(weights.size());
    st.v.reserve(weights.size());
    for (const auto& w : weights) {
        st.m.emplace_back(w.height, w.width);
        st.v.emplace_back(w.height, w.width);
    }
    return st;
}

double AdamState::rate_for_step(long t) const {
    double lr = config.learning_rate;
    if (config.decay_period > 0 && t > 0) {
        const long halvings = (t - 1) / config.decay_period;
        for (long i = 0; i < halvings; ++i) lr *= config.decay_factor;
    }
    return lr;
}

void adam_step(AdamState& state, std::vector<RealGrid>& weights, const std::vector<RealGrid>& grads) {
    if (weights.size() != state.m.size() || grads.size() != weights.size())
        throw std::invalid_argument("adam_step: mismatched weight/gradient/state lists");

    state.step += 1;
    const double lr = state.rate_for_step(state.step);
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < weights.size(); ++i) {
        auto& w = weights[i].values;
        auto& m = state.m[i].values;
        auto& v = state.v[i].values;
        const auto& g = grads[i].values;
        if (g.size() != w.size())
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            w[k] -= lr * mhat / (std::sqrt(vhat) + state.config.eps);
        }
    }
}

}  // namespace fpr
