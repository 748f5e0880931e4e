#pragma once

#include "fpr/grid.hpp"

#include <string>

namespace fpr {

/// 20*log10(1/sqrt(MSE)) over all pixels and channels. Both inputs are
/// clamped to [0,1] before comparing. Exact match reports +infinity.
double psnr(const ImageStack& xhat, const ImageStack& x);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), k1 = 0.01,
/// k2 = 0.03, dynamic range 1.0, valid-position windows, channel-averaged.
/// Images smaller than the window fall back to the largest odd window that
/// fits; standard sizes are unaffected.
double ssim(const ImageStack& xhat, const ImageStack& x);

/// "27.79/0.90" style pair.
std::string format_psnr_ssim(double psnr_db, double ssim_value);

/// 180-degree rotation, the image-domain twin of the conjugate-flip ambiguity.
ImageStack rot180(const ImageStack& x);

/// PSNR maximized over {identity, rot180} of xhat; reports the SSIM of the
/// winning orientation through the out-params.
void scored_with_flip(const ImageStack& xhat, const ImageStack& x, double* psnr_out,
                      double* ssim_out, bool* flipped_out);

}  // namespace fpr
