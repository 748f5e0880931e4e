#pragma once

#include "fpr/grid.hpp"

#include <string>
#include <vector>

namespace fpr::checks {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckResult> results;
    bool all_pass() const {
        for (const auto& r : results)
            if (!r.pass) return false;
        return true;
    }
};

/// Direct O(n^2) double-sum DFT, the reference the fast path is checked
/// against. Deliberately shares no code with dft2.
ComplexGrid dft2_reference(const ComplexGrid& in);

/// Deterministic 28x28 digit-like glyph (marker pixels already set) and a
/// smooth 64x64 RGB scene; stand-ins for dataset images in self-checks.
RealGrid synthetic_digit();
ImageStack synthetic_rgb64();

CheckResult dft_oracle();
CheckResult loss_oracle();
CheckResult gradient_finite_difference(int instances = 100, double tol = 1e-6);
CheckResult lipschitz_bound_check(int pairs_per_eps = 1000);
CheckResult cross_path(int iters = 100);
CheckResult theorem2_descent(int seeds = 10, int outer_iters = 60);
CheckResult decoder_finite_difference(int coords = 50, double tol = 1e-5);
CheckResult decoder_zero_weights();
CheckResult adam_hand_case();
CheckResult degenerate_identity(int iters = 50);
CheckResult snr_calibration(int draws = 10, double tol_db = 0.5);
CheckResult ssim_constant_oracle();
CheckResult fit_descent_stat(int trials = 100);

/// Every oracle verification at fixed seeds; the `check` subcommand.
CheckReport check_suite();

}  // namespace fpr::checks
