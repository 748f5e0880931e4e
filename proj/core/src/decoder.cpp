#include "fpr/decoder.hpp"

#include "fpr/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace fpr {

namespace {

constexpr double kNormEps = 1e-5;

// C = A * B, A: p x q, B: q x r
RealGrid matmul(const RealGrid& a, const RealGrid& b) {
    if (a.width != b.height) throw std::invalid_argument("matmul: inner dims differ");
    RealGrid c(a.height, b.width);
    for (int i = 0; i < a.height; ++i) {
        const double* arow = a.values.data() + static_cast<std::size_t>(i) * a.width;
        double* crow = c.values.data() + static_cast<std::size_t>(i) * b.width;
        for (int k = 0; k < a.width; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.values.data() + static_cast<std::size_t>(k) * b.width;
            for (int j = 0; j < b.width; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A * B^T, A: p x q, B: r x q
RealGrid matmul_transB(const RealGrid& a, const RealGrid& b) {
    if (a.width != b.width) throw std::invalid_argument("matmul_transB: inner dims differ");
    RealGrid c(a.height, b.height);
    for (int i = 0; i < a.height; ++i) {
        const double* arow = a.values.data() + static_cast<std::size_t>(i) * a.width;
        for (int j = 0; j < b.height; ++j) {
            const double* brow = b.values.data() + static_cast<std::size_t>(j) * b.width;
            double s = 0.0;
            for (int k = 0; k < a.width; ++k) s += arow[k] * brow[k];
            c.at(i, j) = s;
        }
    }
    return c;
}

// C = A^T * B, A: q x p, B: q x r
RealGrid matmul_transA(const RealGrid& a, const RealGrid& b) {
    if (a.height != b.height) throw std::invalid_argument("matmul_transA: inner dims differ");
    RealGrid c(a.width, b.width);
    for (int k = 0; k < a.height; ++k) {
        const double* arow = a.values.data() + static_cast<std::size_t>(k) * a.width;
        const double* brow = b.values.data() + static_cast<std::size_t>(k) * b.width;
        for (int i = 0; i < a.width; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.values.data() + static_cast<std::size_t>(i) * c.width;
            for (int j = 0; j < b.width; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

struct Tap {
    int i0;
    int i1;
    double t;
};

// Bilinear x2 taps, align_corners = false: src = (o + 0.5)/2 - 0.5,
// clamped into [0, n-1]; right neighbor clamped at the border.
std::vector<Tap> build_taps(int n) {
    std::vector<Tap> taps(2 * n);
    for (int o = 0; o < 2 * n; ++o) {
        double src = (o + 0.5) / 2.0 - 0.5;
        if (src < 0.0) src = 0.0;
        if (src > n - 1) src = n - 1;
        int i0 = static_cast<int>(std::floor(src));
        if (i0 > n - 1) i0 = n - 1;
        taps[o] = {i0, std::min(i0 + 1, n - 1), src - i0};
    }
    return taps;
}

}  // namespace

// rows are h x w planes; returns c x (4hw) with each plane upsampled to 2h x 2w
RealGrid upsample2x(const RealGrid& in, int h, int w) {
    const auto row_taps = build_taps(h);
    const auto col_taps = build_taps(w);
    RealGrid out(in.height, 4 * h * w);
    std::vector<double> tmp(static_cast<std::size_t>(2 * h) * w);
    for (int c = 0; c < in.height; ++c) {
        const double* src = in.values.data() + static_cast<std::size_t>(c) * in.width;
        for (int orr = 0; orr < 2 * h; ++orr) {
            const Tap& tr = row_taps[orr];
            const double* r0 = src + static_cast<std::size_t>(tr.i0) * w;
            const double* r1 = src + static_cast<std::size_t>(tr.i1) * w;
            double* trow = tmp.data() + static_cast<std::size_t>(orr) * w;
            for (int j = 0; j < w; ++j) trow[j] = (1.0 - tr.t) * r0[j] + tr.t * r1[j];
        }
        double* dst = out.values.data() + static_cast<std::size_t>(c) * out.width;
        for (int orr = 0; orr < 2 * h; ++orr) {
            const double* trow = tmp.data() + static_cast<std::size_t>(orr) * w;
            double* drow = dst + static_cast<std::size_t>(orr) * 2 * w;
            for (int oc = 0; oc < 2 * w; ++oc) {
                const Tap& tc = col_taps[oc];
                drow[oc] = (1.0 - tc.t) * trow[tc.i0] + tc.t * trow[tc.i1];
            }
        }
    }
    return out;
}

// adjoint of upsample2x: scatters cotangents back through the same taps
RealGrid upsample2x_adjoint(const RealGrid& dout, int h, int w) {
    const auto row_taps = build_taps(h);
    const auto col_taps = build_taps(w);
    RealGrid din(dout.height, h * w);
    std::vector<double> tmp(static_cast<std::size_t>(2 * h) * w);
    for (int c = 0; c < dout.height; ++c) {
        std::fill(tmp.begin(), tmp.end(), 0.0);
        const double* src = dout.values.data() + static_cast<std::size_t>(c) * dout.width;
        for (int orr = 0; orr < 2 * h; ++orr) {
            const double* drow = src + static_cast<std::size_t>(orr) * 2 * w;
            double* trow = tmp.data() + static_cast<std::size_t>(orr) * w;
            for (int oc = 0; oc < 2 * w; ++oc) {
                const Tap& tc = col_taps[oc];
                trow[tc.i0] += (1.0 - tc.t) * drow[oc];
                trow[tc.i1] += tc.t * drow[oc];
            }
        }
        double* dst = din.values.data() + static_cast<std::size_t>(c) * din.width;
        for (int orr = 0; orr < 2 * h; ++orr) {
            const Tap& tr = row_taps[orr];
            const double* trow = tmp.data() + static_cast<std::size_t>(orr) * w;
            for (int j = 0; j < w; ++j) {
                dst[static_cast<std::size_t>(tr.i0) * w + j] += (1.0 - tr.t) * trow[j];
                dst[static_cast<std::size_t>(tr.i1) * w + j] += tr.t * trow[j];
            }
        }
    }
    return din;
}

namespace {

double apply_act(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? x : 0.01 * x;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    throw std::logic_error("apply_act: bad enum");
}

// derivative given pre-activation x and activated value y
double act_deriv(Activation a, double x, double y) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? 1.0 : 0.01;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    throw std::logic_error("act_deriv: bad enum");
}

// per-row (channel) normalization with population variance, no affine part
RealGrid channel_norm(const RealGrid& in, std::vector<double>& inv_std_out) {
    RealGrid out(in.height, in.width);
    inv_std_out.resize(in.height);
    const int d = in.width;
    for (int c = 0; c < in.height; ++c) {
        const double* row = in.values.data() + static_cast<std::size_t>(c) * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dv = row[j] - mean;
            var += dv * dv;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        inv_std_out[c] = inv;
        double* orow = out.values.data() + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) orow[j] = (row[j] - mean) * inv;
    }
    return out;
}

// dx = inv_std * (dy - mean(dy) - y * mean(dy . y)), rowwise
RealGrid channel_norm_backward(const RealGrid& dnorm, const RealGrid& normed,
                               const std::vector<double>& inv_std) {
    RealGrid dx(dnorm.height, dnorm.width);
    const int d = dnorm.width;
    for (int c = 0; c < dnorm.height; ++c) {
        const double* dy = dnorm.values.data() + static_cast<std::size_t>(c) * d;
        const double* y = normed.values.data() + static_cast<std::size_t>(c) * d;
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < d; ++j) {
            m1 += dy[j];
            m2 += dy[j] * y[j];
        }
        m1 /= d;
        m2 /= d;
        double* out = dx.values.data() + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) out[j] = inv_std[c] * (dy[j] - m1 - y[j] * m2);
    }
    return dx;
}

}  // namespace

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    throw std::logic_error("activation_name: bad enum");
}

void DecoderConfig::validate() const {
    if (channel_counts.size() < 2)
        throw std::invalid_argument("decoder needs at least one hidden layer");
    for (int c : channel_counts)
        if (c <= 0) throw std::invalid_argument("decoder channel counts must be positive");
    if (out_channels <= 0) throw std::invalid_argument("decoder out_channels must be positive");
    if (latent_h <= 0 || latent_w <= 0)
        throw std::invalid_argument("decoder latent dims must be positive");
}

DecoderConfig DecoderConfig::for_output(std::vector<int> channel_counts, int out_h, int out_w,
                                        int out_channels, std::uint64_t seed) {
    DecoderConfig cfg;
    cfg.channel_counts = std::move(channel_counts);
    cfg.out_channels = out_channels;
    cfg.seed = seed;
    const int J = cfg.depth();
    if (J < 1) throw std::invalid_argument("decoder needs at least one hidden layer");
    const int f = 1 << J;
    if (out_h % f != 0 || out_w % f != 0)
        throw std::invalid_argument("decoder output size must be divisible by 2^depth");
    cfg.latent_h = out_h / f;
    cfg.latent_w = out_w / f;
    cfg.validate();
    return cfg;
}

DecoderNet init_decoder(const DecoderConfig& config) {
    config.validate();
    DecoderNet net;
    net.config = config;
    auto rng = make_rng(config.seed);

    const int d0 = config.latent_h * config.latent_w;
    net.latent = RealGrid(config.channel_counts[0], d0);
    std::uniform_real_distribution<double> unif(0.0, 0.1);
    for (auto& v : net.latent.values) v = unif(rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    const int J = config.depth();
    for (int j = 0; j <= J; ++j) {
        const int c_in = config.channel_counts[j];
        const int c_out = j < J ? config.channel_counts[j + 1] : config.out_channels;
        RealGrid w(c_out, c_in);
        const double scale = std::sqrt(2.0 / c_in);
        for (auto& v : w.values) v = scale * gauss(rng);
        net.weights.push_back(std::move(w));
    }
    return net;
}

ImageStack DecoderForward::output(const DecoderConfig& config) const {
    return matrix_to_stack(out_mat, config.output_h(), config.output_w());
}

DecoderForward decoder_forward_cached(const DecoderNet& net) {
    const auto& cfg = net.config;
    const int J = cfg.depth();
    DecoderForward f;
    f.z.push_back(net.latent);
    int h = cfg.latent_h, w = cfg.latent_w;
    for (int j = 0; j < J; ++j) {
        RealGrid a = matmul(net.weights[j], f.z[j]);
        RealGrid r(a.height, a.width);
        for (std::size_t k = 0; k < a.values.size(); ++k)
            r.values[k] = apply_act(cfg.activation, a.values[k]);
        std::vector<double> inv_std;
        RealGrid n = channel_norm(r, inv_std);
        f.z.push_back(upsample2x(n, h, w));
        f.pre_act.push_back(std::move(a));
        f.act.push_back(std::move(r));
        f.normed.push_back(std::move(n));
        f.inv_std.push_back(std::move(inv_std));
        h *= 2;
        w *= 2;
    }
    RealGrid s = matmul(net.weights[J], f.z[J]);
    f.out_mat = RealGrid(s.height, s.width);
    for (std::size_t k = 0; k < s.values.size(); ++k)
        f.out_mat.values[k] = 1.0 / (1.0 + std::exp(-s.values[k]));
    return f;
}

ImageStack decoder_forward(const DecoderNet& net) {
    return decoder_forward_cached(net).output(net.config);
}

std::vector<RealGrid> decoder_backward(const DecoderNet& net, const DecoderForward& fwd,
                                       const RealGrid& out_cotangent) {
    const auto& cfg = net.config;
    const int J = cfg.depth();
    if (out_cotangent.height != fwd.out_mat.height || out_cotangent.width != fwd.out_mat.width)
        throw std::invalid_argument("decoder_backward: cotangent shape mismatch");

    std::vector<RealGrid> grads(J + 1);

    // output layer: G = sigmoid(S), S = W_J Z_J
    RealGrid ds(out_cotangent.height, out_cotangent.width);
    for (std::size_t k = 0; k < ds.values.size(); ++k) {
        const double g = fwd.out_mat.values[k];
        ds.values[k] = out_cotangent.values[k] * g * (1.0 - g);
    }
    grads[J] = matmul_transB(ds, fwd.z[J]);
    RealGrid dz = matmul_transA(net.weights[J], ds);

    int h = cfg.latent_h << J, w = cfg.latent_w << J;
    for (int j = J - 1; j >= 0; --j) {
        h /= 2;
        w /= 2;
        RealGrid dn = upsample2x_adjoint(dz, h, w);
        RealGrid dr = channel_norm_backward(dn, fwd.normed[j], fwd.inv_std[j]);
        RealGrid da(dr.height, dr.width);
        for (std::size_t k = 0; k < da.values.size(); ++k)
            da.values[k] = dr.values[k] * act_deriv(cfg.activation, fwd.pre_act[j].values[k],
                                                    fwd.act[j].values[k]);
        grads[j] = matmul_transB(da, fwd.z[j]);
        if (j > 0) dz = matmul_transA(net.weights[j], da);
    }
    return grads;
}

RealGrid stack_to_matrix(const ImageStack& stack) {
    if (stack.empty()) throw std::invalid_argument("stack_to_matrix: empty stack");
    const int d = stack[0].height * stack[0].width;
    RealGrid mat(static_cast<int>(stack.size()), d);
    for (std::size_t c = 0; c < stack.size(); ++c) {
        if (stack[c].height != stack[0].height || stack[c].width != stack[0].width)
            throw std::invalid_argument("stack_to_matrix: ragged stack");
        std::copy(stack[c].values.begin(), stack[c].values.end(),
                  mat.values.begin() + static_cast<std::size_t>(c) * d);
    }
    return mat;
}

ImageStack matrix_to_stack(const RealGrid& mat, int h, int w) {
    if (mat.width != h * w) throw std::invalid_argument("matrix_to_stack: size mismatch");
    ImageStack stack;
    for (int c = 0; c < mat.height; ++c) {
        RealGrid g(h, w);
        std::copy(mat.values.begin() + static_cast<std::size_t>(c) * mat.width,
                  mat.values.begin() + static_cast<std::size_t>(c + 1) * mat.width,
                  g.values.begin());
        stack.push_back(std::move(g));
    }
    return stack;
}

std::vector<RealGrid> decoder_gradient(const DecoderNet& net, const ImageStack& target,
                                       double* loss_out) {
    RealGrid tmat = stack_to_matrix(target);
    DecoderForward fwd = decoder_forward_cached(net);
    if (tmat.height != fwd.out_mat.height || tmat.width != fwd.out_mat.width)
        throw std::invalid_argument("decoder_gradient: target shape mismatch");
    RealGrid cot(tmat.height, tmat.width);
    double loss = 0.0;
    for (std::size_t k = 0; k < cot.values.size(); ++k) {
        const double r = fwd.out_mat.values[k] - tmat.values[k];
        cot.values[k] = r;
        loss += r * r;
    }
    if (loss_out) *loss_out = 0.5 * loss;
    return decoder_backward(net, fwd, cot);
}

FitResult fit_to_target(DecoderNet& net, const ImageStack& target, int steps, AdamState& adam) {
    FitResult result;
    result.losses.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        double loss = 0.0;
        auto grads = decoder_gradient(net, target, &loss);
        if (!std::isfinite(loss))
            throw std::runtime_error("fit_to_target: loss diverged at step " + std::to_string(s));
        result.losses.push_back(loss);
        adam_step(adam, net.weights, grads);
    }
    return result;
}

namespace {

constexpr char kMagic[8] = {'F', 'P', 'R', 'D', 'E', 'C', 'W', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_weights(const DecoderNet& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, 8);
    put_u32(os, static_cast<std::uint32_t>(net.config.channel_counts.size()));
    for (int c : net.config.channel_counts) put_u32(os, static_cast<std::uint32_t>(c));
    put_u32(os, static_cast<std::uint32_t>(net.config.out_channels));
    put_u32(os, static_cast<std::uint32_t>(net.config.latent_h));
    put_u32(os, static_cast<std::uint32_t>(net.config.latent_w));
    put_u32(os, static_cast<std::uint32_t>(net.config.activation));
    put_u64(os, net.config.seed);
    for (double v : net.latent.values) put_f64(os, v);
    for (const auto& w : net.weights)
        for (double v : w.values) put_f64(os, v);
    if (!os) throw std::runtime_error("write failed: " + path);
}

DecoderNet load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a decoder checkpoint: " + path);

    DecoderConfig cfg;
    const std::uint32_t n = get_u32(is);
    if (n < 2 || n > 64) throw std::runtime_error("corrupt checkpoint (layer count): " + path);
    cfg.channel_counts.resize(n);
    for (auto& c : cfg.channel_counts) c = static_cast<int>(get_u32(is));
    cfg.out_channels = static_cast<int>(get_u32(is));
    cfg.latent_h = static_cast<int>(get_u32(is));
    cfg.latent_w = static_cast<int>(get_u32(is));
    const std::uint32_t act = get_u32(is);
    if (act > 3) throw std::runtime_error("corrupt checkpoint (activation): " + path);
    cfg.activation = static_cast<Activation>(act);
    cfg.seed = get_u64(is);
    cfg.validate();

    DecoderNet net;
    net.config = cfg;
    net.latent = RealGrid(cfg.channel_counts[0], cfg.latent_h * cfg.latent_w);
    for (auto& v : net.latent.values) v = get_f64(is);
    const int J = cfg.depth();
    for (int j = 0; j <= J; ++j) {
        const int c_in = cfg.channel_counts[j];
        const int c_out = j < J ? cfg.channel_counts[j + 1] : cfg.out_channels;
        RealGrid w(c_out, c_in);
        for (auto& v : w.values) v = get_f64(is);
        net.weights.push_back(std::move(w));
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return net;
}

}  // namespace fpr
