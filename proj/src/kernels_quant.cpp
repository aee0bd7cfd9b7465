// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

// Integer Conv/Gemm/MatMul. Activations enter as F32, are quantized to U8
// (static: calibrated parameters, dynamic: per-sample runtime range), multiplied
// against I8 weights with I32-saturated accumulation, then either requantized to
// the calibrated U8 output grid (static) or rescaled to F32 (dynamic). Outputs
// leave the node as F32 so unquantized neighbours need no special handling.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "tuneqn/quant_math.hpp"

namespace tuneqn::kernels {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ExecutionError(msg); }

std::int32_t saturate_i32(std::int64_t v) {
    return static_cast<std::int32_t>(std::clamp<std::int64_t>(v, std::numeric_limits<std::int32_t>::min(),
                                                              std::numeric_limits<std::int32_t>::max()));
}

struct QuantizedInput {
    std::vector<std::int32_t> centered;  // q - zero_point
    std::vector<QuantParams> per_sample;
};

QuantizedInput quantize_input(const Tensor& x, const NodeQuant& nq) {
    auto src = x.values<float>();
    const std::int64_t samples = x.rank() > 0 ? x.dim(0) : 1;
    const std::int64_t row = samples > 0 ? x.size() / samples : 0;
    QuantizedInput out;
    out.centered.resize(src.size());
    for (std::int64_t s = 0; s < samples; ++s) {
        auto slice = src.subspan(static_cast<std::size_t>(s * row), static_cast<std::size_t>(row));
        QuantParams p;
        if (nq.mode == QuantMode::Static) {
            if (!nq.input)
                fail("static quantized node lacks input parameters");
            p = *nq.input;
        } else {
            auto [lo, hi] = zero_inclusive_range(slice);
            p = compute_qparams(lo, hi, DType::U8);
        }
        for (std::int64_t i = 0; i < row; ++i)
            out.centered[static_cast<std::size_t>(s * row + i)] = quantize_value(slice[i], p) - p.zero_point;
        out.per_sample.push_back(p);
    }
    return out;
}

const QuantParams& weight_params(const Node& node, std::size_t index) {
    auto it = node.weight_params.find(node.inputs.at(index));
    if (it == node.weight_params.end())
        fail("quantized node lacks parameters for '" + node.inputs.at(index) + "'");
    return it->second;
}

/// Maps each accumulator to its F32 output. `bias_at(i)` yields the bias element
/// broadcast to output index i, `sample_of(i)` the sample it belongs to.
template <class BiasAt, class SampleOf>
Tensor finish(const Node& node, const std::vector<std::int64_t>& acc, Shape shape, const QuantizedInput& qin,
              const QuantParams& pw, const Tensor* bias, double alpha, double beta, BiasAt bias_at,
              SampleOf sample_of) {
    Tensor out(DType::F32, std::move(shape));
    auto dst = out.values<float>();
    const NodeQuant& nq = *node.quant;
    if (nq.mode == QuantMode::Static) {
        if (!nq.output)
            fail("static quantized node lacks output parameters");
        const QuantParams& po = *nq.output;
        if (bias && bias->dtype() != DType::I32)
            fail("static quantized bias must be I32");
        const double multiplier =
            alpha * static_cast<double>(qin.per_sample.front().scale) * static_cast<double>(pw.scale) /
            static_cast<double>(po.scale);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            std::int64_t a = saturate_i32(acc[i]);
            if (bias)
                a = saturate_i32(a + bias->values<std::int32_t>()[bias_at(static_cast<std::int64_t>(i))]);
            const double q = std::nearbyint(static_cast<double>(a) * multiplier) + po.zero_point;
            const auto qc = static_cast<std::int32_t>(std::clamp(q, 0.0, 255.0));
            dst[i] = dequantize_value(qc, po);
        }
    } else {
        if (bias && bias->dtype() != DType::F32)
            fail("dynamic quantized bias must be F32");
        const auto beta_f = static_cast<float>(beta);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const QuantParams& pin = qin.per_sample[static_cast<std::size_t>(sample_of(static_cast<std::int64_t>(i)))];
            float y = static_cast<float>(alpha * static_cast<double>(pin.scale) * static_cast<double>(pw.scale) *
                                         static_cast<double>(saturate_i32(acc[i])));
            if (bias)
                y += beta_f * bias->values<float>()[bias_at(static_cast<std::int64_t>(i))];
            dst[i] = y;
        }
    }
    return out;
}

} // namespace

Tensor run_quantized(const Node& node, const Inputs& in) {
    if (!node.quant)
        fail("node '" + node.id + "' is not quantized");
    if (in.size() < 2 || !in[0] || !in[1])
        fail("quantized node '" + node.id + "' is missing inputs");
    const Tensor& x = *in[0];
    const Tensor& w = *in[1];
    if (x.dtype() != DType::F32 || w.dtype() != DType::I8)
        fail("quantized node '" + node.id + "' expects F32 activations and I8 weights");
    const QuantParams& pw = weight_params(node, 1);
    const Tensor* bias = in.size() > 2 && in[2] && in[2]->size() > 0 ? in[2] : nullptr;
    const QuantizedInput qin = quantize_input(x, *node.quant);
    auto wq = w.values<std::int8_t>();

    switch (node.op) {
    case OpKind::Conv: {
        const auto g = conv_geometry(x.shape(), w.shape(), node.attrs);
        std::vector<std::int64_t> acc(static_cast<std::size_t>(element_count(g.output_shape())));
        conv_accumulate<std::int64_t>(g, qin.centered.data(), wq.data(), acc.data());
        const std::int64_t plane = g.out_h * g.out_w;
        const std::int64_t per_sample = plane * g.out_channels;
        if (bias && bias->size() != g.out_channels)
            fail("Conv bias size mismatch in '" + node.id + "'");
        return finish(
            node, acc, g.output_shape(), qin, pw, bias, 1.0, 1.0,
            [&](std::int64_t i) { return (i / plane) % g.out_channels; }, [&](std::int64_t i) { return i / per_sample; });
    }
    case OpKind::Gemm: {
        const auto s = gemm_shape(x.shape(), w.shape(), node.attrs);
        if (s.trans_a)
            fail("quantized Gemm does not support transA");
        std::vector<std::int64_t> acc(static_cast<std::size_t>(s.rows * s.cols));
        gemm_accumulate<std::int64_t>(qin.centered.data(), wq.data(), s.rows, s.inner, s.cols, false, s.trans_b,
                                      acc.data());
        const Shape out_shape{s.rows, s.cols};
        if (bias && broadcast_shapes(bias->shape(), out_shape) != out_shape)
            fail("Gemm C does not broadcast in '" + node.id + "'");
        const double alpha = attr_float(node.attrs, "alpha", 1.0);
        const double beta = attr_float(node.attrs, "beta", 1.0);
        return finish(
            node, acc, out_shape, qin, pw, bias, alpha, beta,
            [&](std::int64_t i) { return bias ? broadcast_offset(bias->shape(), out_shape, i) : 0; },
            [&](std::int64_t i) { return i / s.cols; });
    }
    case OpKind::MatMul: {
        const auto s = matmul_shape(x.shape(), w.shape());
        if (s.b_batched)
            fail("quantized MatMul needs a 2-D weight");
        std::vector<std::int64_t> acc(static_cast<std::size_t>(element_count(s.out)));
        for (std::int64_t b = 0; b < s.batches; ++b)
            gemm_accumulate<std::int64_t>(qin.centered.data() + b * s.rows * s.inner, wq.data(), s.rows, s.inner,
                                          s.cols, false, false, acc.data() + b * s.rows * s.cols);
        const std::int64_t per_sample = s.out.empty() ? 1 : element_count(s.out) / std::max<std::int64_t>(s.out[0], 1);
        return finish(
            node, acc, s.out, qin, pw, nullptr, 1.0, 1.0, [](std::int64_t) { return std::int64_t{0}; },
            [&](std::int64_t i) { return i / per_sample; });
    }
    default:
        fail("operator " + std::string(op_name(node.op)) + " cannot run quantized");
    }
}

} // namespace tuneqn::kernels
