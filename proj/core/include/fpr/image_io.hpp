#pragma once

#include "fpr/grid.hpp"

#include <string>

namespace fpr {

/// Reads an 8-bit PGM/PPM (ascii or binary) or PNG file, scaled to [0,1].
/// When expected dims are given and the image is larger, takes the central
/// crop; a smaller image or a channel-count mismatch is an error. Zeros
/// leave dims/channels unconstrained.
ImageStack load_image(const std::string& path, int expected_h = 0, int expected_w = 0,
                      int expected_channels = 0);

/// Writes PGM (1 channel), PPM (3 channels), or PNG (either) by extension.
/// Values clamped to [0,1] and quantized to 8 bits.
void save_image(const std::string& path, const ImageStack& image);

/// Paper-style MNIST fix-up: force the two marker pixels (1,1) and (26,26)
/// to full brightness to break the 180-degree rotation ambiguity.
RealGrid preprocess_mnist(const RealGrid& img);

ImageStack center_crop(const ImageStack& image, int h, int w);

}  // namespace fpr
