// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/quant_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tuneqn {

std::int32_t dtype_min(DType dtype) {
    switch (dtype) {
    case DType::I8: return -128;
    case DType::U8: return 0;
    case DType::I32: return std::numeric_limits<std::int32_t>::min();
    default: throw ArgumentError("no quantized range for " + std::string(dtype_name(dtype)));
    }
}

std::int32_t dtype_max(DType dtype) {
    switch (dtype) {
    case DType::I8: return 127;
    case DType::U8: return 255;
    case DType::I32: return std::numeric_limits<std::int32_t>::max();
    default: throw ArgumentError("no quantized range for " + std::string(dtype_name(dtype)));
    }
}

QuantParams compute_qparams(double min, double max, DType target) {
    if (!(min <= max))
        throw ArgumentError("quantization range has min > max");
    min = std::min(min, 0.0);
    max = std::max(max, 0.0);
    if (min == 0.0 && max == 0.0)
        return {1.0, 0, target};

    switch (target) {
    case DType::U8: {
        const double span = max - min;
        const double scale = span / 255.0;
        const double zp = std::nearbyint(-min * 255.0 / span);
        return {scale, static_cast<std::int32_t>(std::clamp(zp, 0.0, 255.0)), target};
    }
    case DType::I8:
        return {std::max(std::abs(min), std::abs(max)) / 127.0, 0, target};
    case DType::I32:
        return {std::max(std::abs(min), std::abs(max)) / 2147483647.0, 0, target};
    default:
        throw ArgumentError("cannot quantize to " + std::string(dtype_name(target)));
    }
}

std::int32_t quantize_value(float x, const QuantParams& p) {
    const double q = std::nearbyint(static_cast<double>(x) / p.scale) + p.zero_point;
    return static_cast<std::int32_t>(std::clamp(q, static_cast<double>(dtype_min(p.dtype)),
                                                static_cast<double>(dtype_max(p.dtype))));
}

float dequantize_value(std::int32_t q, const QuantParams& p) {
    return static_cast<float>((static_cast<double>(q) - p.zero_point) * p.scale);
}

namespace {

template <class Q>
Tensor quantize_as(const Tensor& t, const QuantParams& p) {
    auto src = t.values<float>();
    std::vector<Q> out(src.size());
    const double lo = dtype_min(p.dtype), hi = dtype_max(p.dtype);
    const double scale = p.scale;
    for (std::size_t i = 0; i < src.size(); ++i)
        out[i] = static_cast<Q>(std::clamp(std::nearbyint(src[i] / scale) + p.zero_point, lo, hi));
    return Tensor(t.shape(), std::move(out));
}

template <class Q>
Tensor dequantize_as(const Tensor& q, const QuantParams& p) {
    auto src = q.values<Q>();
    std::vector<float> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        out[i] = dequantize_value(static_cast<std::int32_t>(src[i]), p);
    return Tensor(q.shape(), std::move(out));
}

} // namespace

Tensor quantize_tensor(const Tensor& t, const QuantParams& p) {
    if (!(p.scale > 0.0))
        throw ArgumentError("quantization scale must be positive");
    switch (p.dtype) {
    case DType::I8: return quantize_as<std::int8_t>(t, p);
    case DType::U8: return quantize_as<std::uint8_t>(t, p);
    case DType::I32: return quantize_as<std::int32_t>(t, p);
    default: throw ArgumentError("cannot quantize to " + std::string(dtype_name(p.dtype)));
    }
}

Tensor dequantize_tensor(const Tensor& q, const QuantParams& p) {
    if (q.dtype() != p.dtype)
        throw ArgumentError("tensor dtype " + std::string(dtype_name(q.dtype())) + " does not match parameters (" +
                            std::string(dtype_name(p.dtype)) + ")");
    switch (p.dtype) {
    case DType::I8: return dequantize_as<std::int8_t>(q, p);
    case DType::U8: return dequantize_as<std::uint8_t>(q, p);
    case DType::I32: return dequantize_as<std::int32_t>(q, p);
    default: throw ArgumentError("cannot dequantize " + std::string(dtype_name(p.dtype)));
    }
}

std::pair<float, float> zero_inclusive_range(std::span<const float> values) {
    float lo = 0.0f, hi = 0.0f;
    for (float v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

} // namespace tuneqn
