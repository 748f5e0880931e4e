#pragma once

#include "fpr/grid.hpp"

#include <cstdint>

namespace fpr {

struct AdamConfig {
    double learning_rate = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long decay_period = 0;  // optimizer steps between rate halvings; 0 disables
    double decay_factor = 0.5;
};

/// First/second moment accumulators shaped like the weight list, plus the
/// step counter driving bias correction and the decay schedule.
struct AdamState {
    AdamConfig config;
    long step = 0;
    std::vector<RealGrid> m;
    std::vector<RealGrid> v;

    static AdamState for_weights(const std::vector<RealGrid>& weights, const AdamConfig& cfg);

    /// Rate used by step number `t` (1-based): lr * factor^((t-1)/period).
    double rate_for_step(long t) const;
};

/// One Adam update in place. Bias-corrected, eps added outside the root.
void adam_step(AdamState& state, std::vector<RealGrid>& weights, const std::vector<RealGrid>& grads);

}  // namespace fpr
