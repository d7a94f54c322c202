#include <gtest/gtest.h>

#include <cmath>

#include "ia/resample.hpp"
#include "oracles.hpp"

namespace {

ia::Grid quad_grid() {
    // [[1,2],[3,4]] with rows y=0,1
    ia::Grid g(2, 2, 1);
    g.at(0, 0, 0) = 1;
    g.at(0, 1, 0) = 2;
    g.at(1, 0, 0) = 3;
    g.at(1, 1, 0) = 4;
    return g;
}

TEST(Nearest, PicksClosestLatticePoint) {
    ia::Grid g = quad_grid();
    EXPECT_FLOAT_EQ(ia::sample(g, 0.4, 0.4, ia::ResampleMethod::Nearest)[0], 1.0f);
    EXPECT_FLOAT_EQ(ia::sample(g, 1.0, 1.0, ia::ResampleMethod::Nearest)[0], 4.0f);
    EXPECT_FLOAT_EQ(ia::sample(g, -5.0, 0.0, ia::ResampleMethod::Nearest)[0], 1.0f);
}

TEST(Nearest, TieBreaksHalfUp) {
    ia::Grid g = quad_grid();
    EXPECT_FLOAT_EQ(ia::sample(g, 0.5, 0.5, ia::ResampleMethod::Nearest)[0], 4.0f);
    EXPECT_FLOAT_EQ(ia::sample(g, 0.5, 0.0, ia::ResampleMethod::Nearest)[0], 2.0f);
}

TEST(Bilinear, KnownValues) {
    ia::Grid g = quad_grid();
    EXPECT_FLOAT_EQ(ia::sample(g, 0.5, 0.5, ia::ResampleMethod::Bilinear)[0], 2.5f);
    EXPECT_FLOAT_EQ(ia::sample(g, 1.0, 0.0, ia::ResampleMethod::Bilinear)[0], 2.0f);
    // 0.75*1 + 0.25*2
    EXPECT_FLOAT_EQ(ia::sample(g, 0.25, 0.0, ia::ResampleMethod::Bilinear)[0], 1.25f);
}

TEST(Bicubic, ConstantGridIsFixedPoint) {
    ia::Grid g(5, 5, 1, 7.0f);
    for (double a : {-1.3, 0.0, 0.4, 2.5, 6.7})
        for (double b : {-0.2, 1.5, 4.9})
            EXPECT_NEAR(ia::sample(g, a, b, ia::ResampleMethod::Bicubic)[0], 7.0f, 1e-6);
}

TEST(Bicubic, ReproducesLinearRamp) {
    // 1-D ramp X[x] = x, sampled at a = 1.5. Keys a=-0.5 reproduces linear
    // polynomials; cross-check the value against the brute-force kernel sum.
    ia::Grid g(1, 8, 1);
    for (int x = 0; x < 8; ++x) g.at(0, x, 0) = static_cast<float>(x);
    double ref[1];
    oracle::sample_bicubic(g, 1.5, 0.0, ref);
    EXPECT_NEAR(ref[0], 1.5, 1e-12);
    EXPECT_NEAR(ia::sample(g, 1.5, 0.0, ia::ResampleMethod::Bicubic)[0], 1.5f, 1e-6);
}

TEST(AllMethods, IntegerCoordinateIdentityIsExact) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        ia::Grid g = oracle::random_grid(6, 7, 2, seed, -3.0, 3.0);
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x)
                for (auto m : {ia::ResampleMethod::Nearest, ia::ResampleMethod::Bilinear,
                               ia::ResampleMethod::Bicubic}) {
                    auto v = ia::sample(g, x, y, m);
                    for (int c = 0; c < g.channels(); ++c) EXPECT_EQ(v[c], g.at(y, x, c));
                }
    }
}

TEST(AllMethods, MatchBruteForceOracleOffLattice) {
    ia::Grid g = oracle::random_grid(9, 8, 3, 123, -1.0, 2.0);
    ia::Rng rng(321);
    std::vector<double> want(3);
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform(-2.0, 10.0);
        double b = rng.uniform(-2.0, 11.0);
        for (auto m : {ia::ResampleMethod::Nearest, ia::ResampleMethod::Bilinear,
                       ia::ResampleMethod::Bicubic}) {
            oracle::sample(g, a, b, m, want.data());
            auto got = ia::sample(g, a, b, m);
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[c], want[c], 1e-5);
        }
    }
}

TEST(Bilinear, OutputsStayInsideSupportEnvelope) {
    ia::Grid g = oracle::random_grid(6, 6, 1, 77, -5.0, 5.0);
    ia::Rng rng(78);
    for (int i = 0; i < 500; ++i) {
        double a = rng.uniform(0.0, 5.0);
        double b = rng.uniform(0.0, 5.0);
        int x0 = static_cast<int>(std::floor(a)), y0 = static_cast<int>(std::floor(b));
        float lo = 1e30f, hi = -1e30f;
        for (int j = 0; j <= 1; ++j)
            for (int i2 = 0; i2 <= 1; ++i2) {
                float v = g.at(oracle::clampi(y0 + j, 6), oracle::clampi(x0 + i2, 6), 0);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        float got = ia::sample(g, a, b, ia::ResampleMethod::Bilinear)[0];
        EXPECT_GE(got, lo - 1e-6f);
        EXPECT_LE(got, hi + 1e-6f);
    }
}

TEST(Warp, ZeroFlowIsIdentity) {
    ia::Grid g = oracle::random_grid(8, 8, 2, 5);
    ia::FlowField flow(8, 8);
    for (auto m : {ia::ResampleMethod::Nearest, ia::ResampleMethod::Bilinear,
                   ia::ResampleMethod::Bicubic}) {
        ia::Grid out = ia::backward_warp(g, flow, m);
        EXPECT_EQ(out.data(), g.data());
    }
}

TEST(Warp, RampShiftsByOneUnderClamp) {
    int W = 6;
    ia::Grid g(3, W, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < W; ++x) g.at(y, x, 0) = static_cast<float>(x);
    ia::FlowField flow(3, W, 1.0f, 0.0f);
    ia::Grid out = ia::backward_warp(g, flow, ia::ResampleMethod::Bilinear);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < W - 1; ++x) EXPECT_FLOAT_EQ(out.at(y, x, 0), static_cast<float>(x + 1));
        EXPECT_FLOAT_EQ(out.at(y, W - 1, 0), static_cast<float>(W - 1));
    }
}

TEST(Warp, HalfPixelNearestEqualsRoundHalfUpShift) {
    ia::Grid g = oracle::random_grid(8, 8, 1, 7);
    ia::FlowField flow(8, 8, 0.5f, 0.0f);
    ia::Grid out = ia::backward_warp(g, flow, ia::ResampleMethod::Nearest);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            EXPECT_EQ(out.at(y, x, 0), g.at(y, oracle::clampi(x + 1, 8), 0));
}

TEST(Warp, MatchesPixelwiseOracleOnRandomFlows) {
    ia::Grid g = oracle::random_grid(16, 16, 2, 99, -1.0, 1.0);
    ia::FlowField flow(16, 16);
    ia::Rng rng(100);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            flow.u(y, x) = static_cast<float>(rng.uniform(-3.0, 3.0));
            flow.v(y, x) = static_cast<float>(rng.uniform(-3.0, 3.0));
        }
    for (auto m : {ia::ResampleMethod::Nearest, ia::ResampleMethod::Bilinear,
                   ia::ResampleMethod::Bicubic}) {
        ia::Grid got = ia::backward_warp(g, flow, m);
        ia::Grid want = oracle::warp(g, flow, m);
        for (size_t i = 0; i < got.data().size(); ++i)
            EXPECT_NEAR(got.data()[i], want.data()[i], 1e-5) << "method " << ia::to_string(m);
    }
}

TEST(Warp, ConstantGridIsFixedPoint) {
    ia::Grid g(7, 7, 1, 3.25f);
    ia::FlowField flow(7, 7, -1.7f, 2.3f);
    for (auto m : {ia::ResampleMethod::Nearest, ia::ResampleMethod::Bilinear,
                   ia::ResampleMethod::Bicubic}) {
        ia::Grid out = ia::backward_warp(g, flow, m);
        for (float v : out.data()) EXPECT_NEAR(v, 3.25f, 1e-6f);
    }
}

TEST(Warp, RejectsShapeMismatch) {
    ia::Grid g(4, 4, 1);
    ia::FlowField flow(4, 5);
    EXPECT_THROW(ia::backward_warp(g, flow, ia::ResampleMethod::Bilinear), std::invalid_argument);
}

}  // namespace
