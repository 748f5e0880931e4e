#include "doctest.h"
#include "fpr/grid.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <complex>

using namespace fpr;

TEST_CASE("dft2 matches the direct double sum on non-square grids") {
    auto rng = make_rng(11);
    for (auto [h, w] : {std::pair{1, 1}, {3, 5}, {8, 6}, {7, 7}, {4, 9}}) {
        const ComplexGrid in = oracle::random_complex(h, w, rng);
        CHECK(oracle::max_rel_err(dft2(in), oracle::dft_direct(in)) < 1e-12);
    }
}

TEST_CASE("dft2 of a real grid equals the complex path") {
    auto rng = make_rng(12);
    const RealGrid in = oracle::random_grid(6, 8, rng);
    const ComplexGrid a = dft2(in);
    ComplexGrid inc(6, 8);
    for (std::size_t i = 0; i < in.values.size(); ++i) inc.values[i] = in.values[i];
    const ComplexGrid b = dft2(inc);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(std::abs(a.values[i] - b.values[i]) < 1e-12);
}

TEST_CASE("parseval under the unnormalized convention") {
    auto rng = make_rng(13);
    const RealGrid u = oracle::random_grid(9, 5, rng, -1.0, 1.0);
    const ComplexGrid fu = dft2(u);
    double sf = 0.0;
    for (const auto& v : fu.values) sf += std::norm(v);
    CHECK(sf == doctest::Approx(45.0 * squared_norm(u)).epsilon(1e-12));
}

TEST_CASE("idft2 inverts dft2") {
    auto rng = make_rng(14);
    const ComplexGrid in = oracle::random_complex(5, 7, rng);
    const ComplexGrid back = idft2(dft2(in));
    for (std::size_t i = 0; i < in.values.size(); ++i)
        CHECK(std::abs(back.values[i] - in.values[i]) < 1e-12);
}

TEST_CASE("dft2 of a shifted delta is a phase ramp") {
    RealGrid d(4, 6);
    d.at(1, 2) = 1.0;
    const ComplexGrid fd = dft2(d);
    const double tau = 2.0 * 3.14159265358979323846;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 6; ++q) {
            const double ang = -tau * (p * 1.0 / 4 + q * 2.0 / 6);
            CHECK(std::abs(fd.at(p, q) - std::polar(1.0, ang)) < 1e-13);
        }
}

TEST_CASE("zero_pad and crop geometry") {
    const PadSpec spec(3, 4, 5, 7);
    RealGrid x(3, 4);
    for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] = double(i) + 1.0;
    const RealGrid u = zero_pad(x, spec);
    REQUIRE(u.height == 5);
    REQUIRE(u.width == 7);
    CHECK(u.at(2, 3) == x.at(2, 3));
    CHECK(u.at(3, 0) == 0.0);
    CHECK(u.at(0, 4) == 0.0);
    const RealGrid back = crop(u, spec);
    CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("crop is the adjoint of zero_pad") {
    auto rng = make_rng(15);
    const PadSpec spec(4, 5, 9, 8);
    const RealGrid x = oracle::random_grid(4, 5, rng, -2.0, 2.0);
    const RealGrid y = oracle::random_grid(9, 8, rng, -2.0, 2.0);
    double lhs = 0.0, rhs = 0.0;
    const RealGrid px = zero_pad(x, spec);
    const RealGrid pty = crop(y, spec);
    for (std::size_t i = 0; i < px.values.size(); ++i) lhs += px.values[i] * y.values[i];
    for (std::size_t i = 0; i < x.values.size(); ++i) rhs += x.values[i] * pty.values[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("PadSpec::from_rate rounds per dimension") {
    const PadSpec a = PadSpec::from_rate(28, 28, 1.2);
    CHECK(a.outer_h == 34);
    CHECK(a.outer_w == 34);
    const PadSpec b = PadSpec::from_rate(8, 8, 2.0);
    CHECK(b.outer_h == 16);
    CHECK(a.rate_h() == doctest::Approx(1.214).epsilon(1e-9));
    CHECK(b.rate_w() == 2.0);
    CHECK_THROWS_AS(PadSpec::from_rate(8, 8, 0.5), std::invalid_argument);
}

TEST_CASE("fourier_magnitude agrees with the two-step route") {
    auto rng = make_rng(16);
    const PadSpec spec = PadSpec::from_rate(6, 6, 1.5);
    const RealGrid x = oracle::random_grid(6, 6, rng);
    const RealGrid mag = fourier_magnitude(x, spec);
    const ComplexGrid fu = dft2(zero_pad(x, spec));
    REQUIRE(mag.height == spec.outer_h);
    for (std::size_t i = 0; i < mag.values.size(); ++i)
        CHECK(mag.values[i] == doctest::Approx(std::abs(fu.values[i])).epsilon(1e-13));
}

TEST_CASE("norm helpers") {
    RealGrid g(2, 2, {3.0, -4.0, 0.0, 0.0});
    CHECK(squared_norm(g) == 25.0);
    CHECK(norm(g) == 5.0);
    CHECK(max_abs(g) == 4.0);
    RealGrid h(2, 2, {3.0, -4.0, 1.0, 0.0});
    CHECK(max_abs_diff(g, h) == 1.0);
    CHECK(all_finite(g));
    g.at(0, 1) = std::nan("");
    CHECK_FALSE(all_finite(g));
}

TEST_CASE("stack helpers enforce shapes") {
    ImageStack a{RealGrid(2, 2, 1.0), RealGrid(2, 2, 2.0)};
    ImageStack b{RealGrid(2, 2, 1.0), RealGrid(2, 2, 2.5)};
    CHECK(stack_squared_norm(a) == doctest::Approx(20.0));
    CHECK(stack_max_abs_diff(a, b) == doctest::Approx(0.5));
    ImageStack c{RealGrid(2, 3)};
    CHECK_THROWS_AS(check_same_shape(a, c, "test"), std::invalid_argument);
}

TEST_CASE("grid constructors validate sizes") {
    CHECK_THROWS_AS(RealGrid(2, 2, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PadSpec(4, 4, 3, 8), std::invalid_argument);
    const RealGrid f(3, 2, 0.25);
    CHECK(f.values == std::vector<double>(6, 0.25));
}
