// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

// Internal kernel interface shared by the engine translation units.

#pragma once

#include <cstdint>
#include <vector>

#include "tuneqn/graph.hpp"

namespace tuneqn::kernels {

using Inputs = std::vector<const Tensor*>;  // nullptr marks an omitted optional input

struct Conv2dGeometry {
    std::int64_t batch, channels, height, width;
    std::int64_t out_channels, group_channels, kernel_h, kernel_w, group;
    std::int64_t out_h, out_w, stride_h, stride_w, pad_top, pad_left;

    Shape output_shape() const { return {batch, out_channels, out_h, out_w}; }
};

Conv2dGeometry conv_geometry(const Shape& x, const Shape& w, const AttributeMap& attrs);

/// out[n, m, oy, ox] = sum over (c, ky, kx) ascending of x * w; padded taps contribute nothing.
template <class Acc, class X, class W>
void conv_accumulate(const Conv2dGeometry& g, const X* x, const W* w, Acc* out) {
    const std::int64_t per_group = g.out_channels / g.group;
    for (std::int64_t n = 0; n < g.batch; ++n) {
        for (std::int64_t m = 0; m < g.out_channels; ++m) {
            const std::int64_t first_c = (m / per_group) * g.group_channels;
            const W* wm = w + m * g.group_channels * g.kernel_h * g.kernel_w;
            for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
                for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
                    Acc acc = 0;
                    for (std::int64_t ci = 0; ci < g.group_channels; ++ci) {
                        const X* xc = x + ((n * g.channels) + first_c + ci) * g.height * g.width;
                        const W* wc = wm + ci * g.kernel_h * g.kernel_w;
                        for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
                            const std::int64_t iy = oy * g.stride_h - g.pad_top + ky;
                            if (iy < 0 || iy >= g.height)
                                continue;
                            for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                                const std::int64_t ix = ox * g.stride_w - g.pad_left + kx;
                                if (ix < 0 || ix >= g.width)
                                    continue;
                                acc += static_cast<Acc>(xc[iy * g.width + ix]) * static_cast<Acc>(wc[ky * g.kernel_w + kx]);
                            }
                        }
                    }
                    out[((n * g.out_channels + m) * g.out_h + oy) * g.out_w + ox] = acc;
                }
            }
        }
    }
}

/// out[i, j] = sum over k ascending of op(a)[i, k] * op(b)[k, j]
template <class Acc, class A, class B>
void gemm_accumulate(const A* a, const B* b, std::int64_t rows, std::int64_t inner, std::int64_t cols, bool trans_a,
                     bool trans_b, Acc* out) {
    for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t j = 0; j < cols; ++j) {
            Acc acc = 0;
            for (std::int64_t k = 0; k < inner; ++k) {
                const A av = trans_a ? a[k * rows + i] : a[i * inner + k];
                const B bv = trans_b ? b[j * inner + k] : b[k * cols + j];
                acc += static_cast<Acc>(av) * static_cast<Acc>(bv);
            }
            out[i * cols + j] = acc;
        }
    }
}

struct GemmShape {
    std::int64_t rows, inner, cols;
    bool trans_a, trans_b;
};

GemmShape gemm_shape(const Shape& a, const Shape& b, const AttributeMap& attrs);

/// Batched MatMul layout: `batches` independent [rows x inner] * [inner x cols]
/// products; b is shared when b_batched is false.
struct MatMulShape {
    std::int64_t batches, rows, inner, cols;
    bool b_batched;
    Shape out;
};

MatMulShape matmul_shape(const Shape& a, const Shape& b);

/// Offset into a tensor of shape `src` broadcast (numpy rules) to `out` for the
/// flat output index `flat`.
std::int64_t broadcast_offset(const Shape& src, const Shape& out, std::int64_t flat);
Shape broadcast_shapes(const Shape& a, const Shape& b);

std::vector<Tensor> run_f32(OpKind kind, const Inputs& inputs, const AttributeMap& attrs, std::int64_t opset);

/// Conv/Gemm/MatMul with I8 weights under static or dynamic quantization.
Tensor run_quantized(const Node& node, const Inputs& inputs);

} // namespace tuneqn::kernels
