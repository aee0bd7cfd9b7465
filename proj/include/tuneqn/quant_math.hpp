// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "tuneqn/graph.hpp"

namespace tuneqn {

std::int32_t dtype_min(DType dtype);
std::int32_t dtype_max(DType dtype);

/// Scale and zero-point for the range [min, max] (widened to contain 0).
///   U8: scale = (max - min) / 255, zero_point = round(-min / scale) clamped to [0, 255]
///   I8: scale = max(|min|, |max|) / 127, zero_point = 0
///   I32: symmetric over the int32 range (bias grids are normally derived, not computed here)
/// An all-zero range yields scale 1 and zero_point 0.
QuantParams compute_qparams(double min, double max, DType target);

/// clamp(round_half_even(x / scale) + zero_point, dtype range)
std::int32_t quantize_value(float x, const QuantParams& p);
/// (q - zero_point) * scale
float dequantize_value(std::int32_t q, const QuantParams& p);
/// Snaps x onto the quantization grid, keeping it in F32.
inline float fake_quantize_value(float x, const QuantParams& p) { return dequantize_value(quantize_value(x, p), p); }

Tensor quantize_tensor(const Tensor& t, const QuantParams& p);
Tensor dequantize_tensor(const Tensor& q, const QuantParams& p);

/// Min and max of the values, widened to include 0.
std::pair<float, float> zero_inclusive_range(std::span<const float> values);

} // namespace tuneqn
