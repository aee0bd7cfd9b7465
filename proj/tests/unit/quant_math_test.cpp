// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tuneqn/quant_math.hpp"

namespace tuneqn {
namespace {

TEST(QParams, SymmetricUnitRangeToU8) {
    const QuantParams p = compute_qparams(-1.0, 1.0, DType::U8);
    EXPECT_EQ(p.scale, 2.0 / 255.0);
    EXPECT_EQ(p.zero_point, 128);
    EXPECT_EQ(quantize_value(0.0f, p), 128);
}

TEST(QParams, DegenerateRange) {
    const QuantParams u = compute_qparams(0, 0, DType::U8);
    EXPECT_EQ(u.scale, 1.0);
    EXPECT_EQ(u.zero_point, 0);
    const QuantParams i = compute_qparams(0, 0, DType::I8);
    EXPECT_EQ(i.scale, 1.0);
    EXPECT_EQ(i.zero_point, 0);
}

TEST(QParams, SymmetricI8UsesLargestMagnitude) {
    const QuantParams p = compute_qparams(-0.5, 0.25, DType::I8);
    EXPECT_EQ(p.scale, 0.5 / 127.0);
    EXPECT_EQ(p.zero_point, 0);
}

TEST(QParams, RangeIsWidenedToZeroAndValidated) {
    const QuantParams p = compute_qparams(2.0, 5.0, DType::U8);
    EXPECT_EQ(p.scale, 5.0 / 255.0);
    EXPECT_EQ(p.zero_point, 0);
    const QuantParams n = compute_qparams(-3.0, -1.0, DType::U8);
    EXPECT_EQ(n.zero_point, 255);
    EXPECT_THROW(compute_qparams(1.0, -1.0, DType::U8), ArgumentError);
}

TEST(Quantize, UnitRangeEndpoints) {
    const QuantParams p = compute_qparams(-1.0, 1.0, DType::U8);
    const Tensor q = quantize_tensor(Tensor({3}, std::vector<float>{-1, 0, 1}), p);
    ASSERT_EQ(q.dtype(), DType::U8);
    EXPECT_EQ(q, Tensor({3}, std::vector<std::uint8_t>{0, 128, 255}));
}

TEST(Quantize, ZerosMapToZeroPoint) {
    const QuantParams p{0.37f, 77, DType::U8};
    const Tensor q = quantize_tensor(Tensor(DType::F32, {5}), p);
    for (auto v : q.values<std::uint8_t>())
        EXPECT_EQ(v, 77);
}

TEST(Quantize, SaturatesAtDtypeBounds) {
    const QuantParams u{0.1f, 10, DType::U8};
    EXPECT_EQ(quantize_value(1e6f, u), 255);
    EXPECT_EQ(quantize_value(-1e6f, u), 0);
    const QuantParams i{0.1f, 0, DType::I8};
    EXPECT_EQ(quantize_value(1e6f, i), 127);
    EXPECT_EQ(quantize_value(-1e6f, i), -128);
}

TEST(Quantize, RoundsHalfToEven) {
    const QuantParams p{1.0f, 0, DType::I8};
    EXPECT_EQ(quantize_value(0.5f, p), 0);
    EXPECT_EQ(quantize_value(1.5f, p), 2);
    EXPECT_EQ(quantize_value(2.5f, p), 2);
    EXPECT_EQ(quantize_value(-2.5f, p), -2);
}

TEST(Dequantize, ScalarFormula) {
    const QuantParams p = compute_qparams(-1.0, 1.0, DType::U8);
    EXPECT_EQ(dequantize_tensor(Tensor({1}, std::vector<std::uint8_t>{128}), p).values<float>()[0], 0.0f);
    const float top = dequantize_tensor(Tensor({1}, std::vector<std::uint8_t>{255}), p).values<float>()[0];
    EXPECT_FLOAT_EQ(top, 127.0f * 2.0f / 255.0f);
    EXPECT_THROW(dequantize_tensor(Tensor({1}, std::vector<std::int8_t>{1}), p), ArgumentError);
}

TEST(Quantize, RoundTripWithinHalfStep) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lo_dist(-4.0, 0.0), hi_dist(0.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        const QuantParams p = compute_qparams(lo_dist(rng), hi_dist(rng), DType::U8);
        const double lo = (0 - p.zero_point) * double(p.scale), hi = (255 - p.zero_point) * double(p.scale);
        std::uniform_real_distribution<float> x_dist(static_cast<float>(lo), static_cast<float>(hi));
        for (int k = 0; k < 200; ++k) {
            const float x = x_dist(rng);
            const float back = dequantize_value(quantize_value(x, p), p);
            const double ulp = std::nextafter(std::fabs(back), INFINITY) - std::fabs(back);
            EXPECT_LE(std::fabs(double(x) - double(back)), p.scale / 2.0 + ulp);
        }
    }
}

TEST(Range, ZeroInclusive) {
    const std::vector<float> pos{5, 5, 5};
    EXPECT_EQ(zero_inclusive_range(pos), (std::pair<float, float>{0.0f, 5.0f}));
    const std::vector<float> mixed{-2, 1, 3};
    EXPECT_EQ(zero_inclusive_range(mixed), (std::pair<float, float>{-2.0f, 3.0f}));
}

} // namespace
} // namespace tuneqn
