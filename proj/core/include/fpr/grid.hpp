#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fpr {

/// Real-valued 2D grid, row-major. Carrier for images, per-channel signals
/// and padded solver iterates. Double precision throughout.
struct RealGrid {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // height * width, row-major

    RealGrid() = default;
    RealGrid(int h, int w, double fill = 0.0);
    RealGrid(int h, int w, std::vector<double> v);

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const RealGrid& o) const { return height == o.height && width == o.width; }
};

/// Complex 2D grid, the Fourier-domain intermediary.
struct ComplexGrid {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> values;

    ComplexGrid() = default;
    ComplexGrid(int h, int w);
    ComplexGrid(int h, int w, std::vector<std::complex<double>> v);

    std::complex<double>& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    std::complex<double> at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return values.size(); }
};

/// Pairing of signal dimensions (inner) with oversampled measurement
/// dimensions (outer). The padding operator maps inner grids to outer grids
/// by appending zero rows/columns at the bottom/right; its transpose keeps
/// the top-left inner block.
struct PadSpec {
    int inner_h = 0;
    int inner_w = 0;
    int outer_h = 0;
    int outer_w = 0;

    PadSpec() = default;
    PadSpec(int ih, int iw, int oh, int ow);

    /// outer_i = round(rate * inner_i) per dimension.
    static PadSpec from_rate(int inner_h, int inner_w, double rate);

    /// Realized per-dimension sampling rates, rounded to 3 decimals.
    double rate_h() const;
    double rate_w() const;

    std::size_t outer_size() const { return static_cast<std::size_t>(outer_h) * outer_w; }
    std::size_t inner_size() const { return static_cast<std::size_t>(inner_h) * inner_w; }
};

/// A stack of same-shaped channels (1 for grayscale, 3 for RGB).
using ImageStack = std::vector<RealGrid>;

/// Appends zeros on the bottom/right so the result has the outer dimensions.
RealGrid zero_pad(const RealGrid& x, const PadSpec& spec);

/// Keeps the top-left inner block; transpose of zero_pad.
RealGrid crop(const RealGrid& u, const PadSpec& spec);

/// Unnormalized forward 2D DFT:
///   out[p,q] = sum_{s,t} in[s,t] * exp(-2*pi*i*(p*s/h + q*t/w)).
/// Under this convention ||dft2(u)||^2 = h*w * ||u||^2.
ComplexGrid dft2(const RealGrid& u);
ComplexGrid dft2(const ComplexGrid& u);

/// Inverse with 1/(h*w) scaling, so idft2(dft2(u)) == u up to roundoff.
ComplexGrid idft2(const ComplexGrid& v);

/// |dft2(zero_pad(x))| elementwise.
RealGrid fourier_magnitude(const RealGrid& x, const PadSpec& spec);

RealGrid real_part(const ComplexGrid& v);
double max_abs_imag(const ComplexGrid& v);

double squared_norm(const RealGrid& g);
double norm(const RealGrid& g);
double max_abs(const RealGrid& g);
double max_abs_diff(const RealGrid& a, const RealGrid& b);
bool all_finite(const RealGrid& g);

double stack_squared_norm(const ImageStack& s);
double stack_norm(const ImageStack& s);
double stack_max_abs_diff(const ImageStack& a, const ImageStack& b);
void check_same_shape(const ImageStack& a, const ImageStack& b, const char* what);

}  // namespace fpr
