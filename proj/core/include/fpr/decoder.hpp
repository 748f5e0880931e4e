#pragma once

#include "fpr/adam.hpp"
#include "fpr/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fpr {

enum class Activation { relu, leaky_relu, tanh, sigmoid };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

/// Under-parameterized decoder: J upsampling stages of
///   Z_{j+1} = upsample2x(channel_norm(act(W_j Z_j)))
/// followed by a 1x1 output layer G = sigmoid(W_J Z_J).
/// Channels are matrix rows; each row stores an h x w plane row-major.
struct DecoderConfig {
    std::vector<int> channel_counts;  // {c_0, ..., c_J}, hidden widths
    int out_channels = 1;
    int latent_h = 0;
    int latent_w = 0;
    Activation activation = Activation::relu;
    std::uint64_t seed = 0;

    int depth() const { return static_cast<int>(channel_counts.size()) - 1; }
    int output_h() const { return latent_h << depth(); }
    int output_w() const { return latent_w << depth(); }

    void validate() const;

    /// Derives latent dims from the target size (must be divisible by 2^J).
    static DecoderConfig for_output(std::vector<int> channel_counts, int out_h, int out_w,
                                    int out_channels, std::uint64_t seed);
};

struct DecoderNet {
    DecoderConfig config;
    RealGrid latent;                 // c_0 x (latent_h * latent_w), fixed after init
    std::vector<RealGrid> weights;   // W_j: c_{j+1} x c_j, then W_J: out_channels x c_J
};

/// Latent ~ U[0, 0.1), weights ~ N(0, 2/fan_in). Deterministic in config.seed.
DecoderNet init_decoder(const DecoderConfig& config);

/// Everything the reverse pass needs, captured during the forward pass.
struct DecoderForward {
    std::vector<RealGrid> z;         // Z_0..Z_J (layer inputs)
    std::vector<RealGrid> pre_act;   // A_j = W_j Z_j, j < J
    std::vector<RealGrid> act;       // act(A_j)
    std::vector<RealGrid> normed;    // channel_norm(act(A_j))
    std::vector<std::vector<double>> inv_std;  // per layer, per channel
    RealGrid out_mat;                // sigmoid(W_J Z_J), out_channels x d_J

    ImageStack output(const DecoderConfig& config) const;
};

DecoderForward decoder_forward_cached(const DecoderNet& net);
ImageStack decoder_forward(const DecoderNet& net);

/// Weight gradients for an arbitrary cotangent dL/d(out_mat). Exact
/// reverse-mode transpose of the forward pass; linear in the cotangent.
std::vector<RealGrid> decoder_backward(const DecoderNet& net, const DecoderForward& fwd,
                                       const RealGrid& out_cotangent);

/// Gradient of 0.5 * sum_c ||G_c - target_c||^2 with respect to the weights.
std::vector<RealGrid> decoder_gradient(const DecoderNet& net, const ImageStack& target,
                                       double* loss_out = nullptr);

RealGrid stack_to_matrix(const ImageStack& stack);
ImageStack matrix_to_stack(const RealGrid& mat, int h, int w);

/// Factor-2 bilinear upsampling of each row (an h x w plane, row-major) to
/// 2h x 2w, and its exact adjoint. Source positions follow the
/// align-corners-false convention: src = (dst + 0.5)/2 - 0.5, edge-clamped.
RealGrid upsample2x(const RealGrid& planes, int h, int w);
RealGrid upsample2x_adjoint(const RealGrid& planes, int h, int w);

struct FitResult {
    std::vector<double> losses;  // 0.5 ||G - target||^2 before each step
};

/// Runs `steps` Adam updates fitting the decoder output to `target`.
/// Throws std::runtime_error if the loss goes non-finite.
FitResult fit_to_target(DecoderNet& net, const ImageStack& target, int steps, AdamState& adam);

void save_weights(const DecoderNet& net, const std::string& path);
DecoderNet load_weights(const std::string& path);

}  // namespace fpr
