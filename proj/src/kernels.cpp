// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace tuneqn::kernels {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ExecutionError(msg); }

const Tensor& need(const Inputs& in, std::size_t i, const char* what) {
    if (i >= in.size() || in[i] == nullptr)
        fail(std::string("missing input ") + what);
    return *in[i];
}

const Tensor* optional_input(const Inputs& in, std::size_t i) {
    return i < in.size() && in[i] != nullptr && in[i]->size() > 0 ? in[i] : nullptr;
}

std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank) {
    if (axis < -rank || axis >= std::max<std::int64_t>(rank, 1))
        fail("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
    return axis < 0 ? axis + rank : axis;
}

std::int64_t product(const Shape& s, std::size_t begin, std::size_t end) {
    std::int64_t p = 1;
    for (std::size_t i = begin; i < end; ++i)
        p *= s[i];
    return p;
}

void require_rank(const Tensor& t, std::int64_t rank, const char* op) {
    if (t.rank() != rank)
        fail(std::string(op) + " expects a rank-" + std::to_string(rank) + " input, got " + shape_string(t.shape()));
}

void require_unit_dilations(const AttributeMap& attrs) {
    for (auto d : attr_ints(attrs, "dilations"))
        if (d != 1)
            fail("dilations other than 1 are not supported");
}

struct PoolGeometry {
    std::int64_t batch, channels, height, width, kernel_h, kernel_w, stride_h, stride_w;
    std::int64_t pad_top, pad_left, pad_bottom, pad_right, out_h, out_w;
};

std::int64_t pooled_extent(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t pb, std::int64_t pe,
                           bool ceil_mode) {
    const std::int64_t span = in + pb + pe - k;
    if (span < 0)
        fail("pooling window larger than padded input");
    std::int64_t out = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    // The last window has to start inside the input or the leading padding.
    if (ceil_mode && (out - 1) * s >= in + pb)
        --out;
    return out;
}

PoolGeometry pool_geometry(const Tensor& x, const AttributeMap& attrs) {
    require_rank(x, 4, "pooling");
    require_unit_dilations(attrs);
    const auto k = attr_ints(attrs, "kernel_shape");
    if (k.size() != 2 || k[0] < 1 || k[1] < 1)
        fail("kernel_shape must hold two positive extents");
    const auto s = attr_ints(attrs, "strides", {1, 1});
    auto p = attr_ints(attrs, "pads", {0, 0, 0, 0});
    if (s.size() != 2 || s[0] < 1 || s[1] < 1 || p.size() != 4)
        fail("bad strides or pads");
    const auto auto_pad = attr_string(attrs, "auto_pad", "NOTSET");
    const bool ceil_mode = attr_int(attrs, "ceil_mode", 0) != 0;
    PoolGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), k[0], k[1], s[0], s[1], p[0], p[1], p[2], p[3], 0, 0};
    if (auto_pad == "VALID") {
        g.pad_top = g.pad_left = g.pad_bottom = g.pad_right = 0;
    } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
        auto same = [&](std::int64_t in, std::int64_t kk, std::int64_t ss, std::int64_t& begin, std::int64_t& end) {
            const std::int64_t out = (in + ss - 1) / ss;
            const std::int64_t total = std::max<std::int64_t>((out - 1) * ss + kk - in, 0);
            begin = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
            end = total - begin;
        };
        same(g.height, g.kernel_h, g.stride_h, g.pad_top, g.pad_bottom);
        same(g.width, g.kernel_w, g.stride_w, g.pad_left, g.pad_right);
    } else if (auto_pad != "NOTSET") {
        fail("unknown auto_pad '" + auto_pad + "'");
    }
    g.out_h = pooled_extent(g.height, g.kernel_h, g.stride_h, g.pad_top, g.pad_bottom, ceil_mode);
    g.out_w = pooled_extent(g.width, g.kernel_w, g.stride_w, g.pad_left, g.pad_right, ceil_mode);
    return g;
}

Tensor max_pool(const Tensor& x, const AttributeMap& attrs) {
    const auto g = pool_geometry(x, attrs);
    Tensor out(DType::F32, {g.batch, g.channels, g.out_h, g.out_w});
    auto src = x.values<float>();
    auto dst = out.values<float>();
    std::int64_t o = 0;
    for (std::int64_t nc = 0; nc < g.batch * g.channels; ++nc) {
        const float* plane = src.data() + nc * g.height * g.width;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy)
            for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
                    const std::int64_t iy = oy * g.stride_h - g.pad_top + ky;
                    if (iy < 0 || iy >= g.height)
                        continue;
                    for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                        const std::int64_t ix = ox * g.stride_w - g.pad_left + kx;
                        if (ix >= 0 && ix < g.width)
                            best = std::max(best, plane[iy * g.width + ix]);
                    }
                }
                dst[o++] = best;
            }
    }
    return out;
}

Tensor average_pool(const Tensor& x, const AttributeMap& attrs) {
    const auto g = pool_geometry(x, attrs);
    const bool include_pad = attr_int(attrs, "count_include_pad", 0) != 0;
    Tensor out(DType::F32, {g.batch, g.channels, g.out_h, g.out_w});
    auto src = x.values<float>();
    auto dst = out.values<float>();
    std::int64_t o = 0;
    for (std::int64_t nc = 0; nc < g.batch * g.channels; ++nc) {
        const float* plane = src.data() + nc * g.height * g.width;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy)
            for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
                float sum = 0.0f;
                std::int64_t count = 0, padded_count = 0;
                for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
                    const std::int64_t iy = oy * g.stride_h - g.pad_top + ky;
                    for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                        const std::int64_t ix = ox * g.stride_w - g.pad_left + kx;
                        if (iy >= -g.pad_top && iy < g.height + g.pad_bottom && ix >= -g.pad_left &&
                            ix < g.width + g.pad_right)
                            ++padded_count;
                        if (iy < 0 || iy >= g.height || ix < 0 || ix >= g.width)
                            continue;
                        sum += plane[iy * g.width + ix];
                        ++count;
                    }
                }
                const std::int64_t divisor = include_pad ? padded_count : count;
                dst[o++] = divisor > 0 ? sum / static_cast<float>(divisor) : 0.0f;
            }
    }
    return out;
}

Tensor global_average_pool(const Tensor& x) {
    if (x.rank() < 3)
        fail("GlobalAveragePool expects rank >= 3, got " + shape_string(x.shape()));
    const std::int64_t outer = x.dim(0) * x.dim(1);
    const std::int64_t spatial = product(x.shape(), 2, x.shape().size());
    Shape shape = x.shape();
    std::fill(shape.begin() + 2, shape.end(), 1);
    Tensor out(DType::F32, shape);
    auto src = x.values<float>();
    auto dst = out.values<float>();
    for (std::int64_t i = 0; i < outer; ++i) {
        float sum = 0.0f;
        for (std::int64_t j = 0; j < spatial; ++j)
            sum += src[i * spatial + j];
        dst[i] = sum / static_cast<float>(spatial);
    }
    return out;
}

Tensor conv(const Inputs& in, const AttributeMap& attrs) {
    const Tensor& x = need(in, 0, "X");
    const Tensor& w = need(in, 1, "W");
    const auto g = conv_geometry(x.shape(), w.shape(), attrs);
    Tensor out(DType::F32, g.output_shape());
    auto dst = out.values<float>();
    conv_accumulate<float>(g, x.values<float>().data(), w.values<float>().data(), dst.data());
    if (const Tensor* b = optional_input(in, 2)) {
        if (b->size() != g.out_channels)
            fail("Conv bias has " + std::to_string(b->size()) + " elements for " + std::to_string(g.out_channels) +
                 " output channels");
        auto bias = b->values<float>();
        const std::int64_t plane = g.out_h * g.out_w;
        for (std::int64_t i = 0; i < out.size(); ++i)
            dst[i] += bias[(i / plane) % g.out_channels];
    }
    return out;
}

Tensor gemm(const Inputs& in, const AttributeMap& attrs) {
    const Tensor& a = need(in, 0, "A");
    const Tensor& b = need(in, 1, "B");
    const auto s = gemm_shape(a.shape(), b.shape(), attrs);
    const auto alpha = static_cast<float>(attr_float(attrs, "alpha", 1.0));
    const auto beta = static_cast<float>(attr_float(attrs, "beta", 1.0));
    Tensor out(DType::F32, {s.rows, s.cols});
    auto dst = out.values<float>();
    gemm_accumulate<float>(a.values<float>().data(), b.values<float>().data(), s.rows, s.inner, s.cols, s.trans_a,
                           s.trans_b, dst.data());
    const Tensor* c = optional_input(in, 2);
    if (c && broadcast_shapes(c->shape(), out.shape()) != out.shape())
        fail("Gemm C of shape " + shape_string(c->shape()) + " does not broadcast to " + shape_string(out.shape()));
    for (std::int64_t i = 0; i < out.size(); ++i) {
        dst[i] = alpha * dst[i];
        if (c)
            dst[i] += beta * c->values<float>()[broadcast_offset(c->shape(), out.shape(), i)];
    }
    return out;
}

Tensor matmul(const Inputs& in) {
    const Tensor& a = need(in, 0, "A");
    const Tensor& b = need(in, 1, "B");
    const auto s = matmul_shape(a.shape(), b.shape());
    Tensor out(DType::F32, s.out);
    auto pa = a.values<float>();
    auto pb = b.values<float>();
    auto dst = out.values<float>();
    for (std::int64_t i = 0; i < s.batches; ++i)
        gemm_accumulate<float>(pa.data() + i * s.rows * s.inner,
                               pb.data() + (s.b_batched ? i * s.inner * s.cols : 0), s.rows, s.inner, s.cols, false,
                               false, dst.data() + i * s.rows * s.cols);
    return out;
}

Tensor add(const Inputs& in) {
    const Tensor& a = need(in, 0, "A");
    const Tensor& b = need(in, 1, "B");
    const Shape shape = broadcast_shapes(a.shape(), b.shape());
    Tensor out(DType::F32, shape);
    auto pa = a.values<float>();
    auto pb = b.values<float>();
    auto dst = out.values<float>();
    const bool same = a.shape() == shape && b.shape() == shape;
    for (std::int64_t i = 0; i < out.size(); ++i)
        dst[i] = same ? pa[i] + pb[i]
                      : pa[broadcast_offset(a.shape(), shape, i)] + pb[broadcast_offset(b.shape(), shape, i)];
    return out;
}

template <class F>
Tensor map_f32(const Tensor& x, F f) {
    Tensor out(DType::F32, x.shape());
    auto src = x.values<float>();
    auto dst = out.values<float>();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = f(src[i]);
    return out;
}

float scalar_bound(const Tensor* t, float fallback) {
    if (!t)
        return fallback;
    if (t->size() != 1)
        fail("Clip bounds must be scalars");
    return t->values<float>()[0];
}

Tensor clip(const Inputs& in, const AttributeMap& attrs, std::int64_t opset) {
    float lo = -std::numeric_limits<float>::infinity();
    float hi = std::numeric_limits<float>::infinity();
    if (opset < 11) {
        lo = static_cast<float>(attr_float(attrs, "min", lo));
        hi = static_cast<float>(attr_float(attrs, "max", hi));
    } else {
        lo = scalar_bound(optional_input(in, 1), lo);
        hi = scalar_bound(optional_input(in, 2), hi);
    }
    return map_f32(need(in, 0, "input"), [&](float v) { return std::min(std::max(v, lo), hi); });
}

Tensor flatten(const Tensor& x, const AttributeMap& attrs) {
    const std::int64_t rank = x.rank();
    std::int64_t axis = attr_int(attrs, "axis", 1);
    if (axis < -rank || axis > rank)
        fail("Flatten axis out of range");
    if (axis < 0)
        axis += rank;
    const auto ax = static_cast<std::size_t>(axis);
    return x.reshaped({product(x.shape(), 0, ax), product(x.shape(), ax, x.shape().size())});
}

Tensor reshape(const Inputs& in) {
    const Tensor& x = need(in, 0, "data");
    const Tensor& target = need(in, 1, "shape");
    if (target.dtype() != DType::I64 || target.rank() != 1)
        fail("Reshape shape must be a 1-D INT64 tensor");
    Shape shape(target.values<std::int64_t>().begin(), target.values<std::int64_t>().end());
    std::int64_t known = 1;
    int infer = -1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == 0) {
            if (i >= x.shape().size())
                fail("Reshape copies a dimension the input lacks");
            shape[i] = x.shape()[i];
        }
        if (shape[i] == -1) {
            if (infer >= 0)
                fail("Reshape with more than one -1");
            infer = static_cast<int>(i);
        } else if (shape[i] < 0) {
            fail("Reshape with negative extent");
        } else {
            known *= shape[i];
        }
    }
    if (infer >= 0) {
        if (known == 0 || x.size() % known != 0)
            fail("Reshape cannot infer extent for " + shape_string(x.shape()));
        shape[static_cast<std::size_t>(infer)] = x.size() / known;
    }
    if (element_count(shape) != x.size())
        fail("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
    return x.reshaped(std::move(shape));
}

void softmax_rows(const float* src, float* dst, std::int64_t outer, std::int64_t len, std::int64_t stride) {
    for (std::int64_t o = 0; o < outer; ++o) {
        const std::int64_t base = (o / stride) * len * stride + (o % stride);
        float mx = -std::numeric_limits<float>::infinity();
        for (std::int64_t i = 0; i < len; ++i)
            mx = std::max(mx, src[base + i * stride]);
        float sum = 0.0f;
        for (std::int64_t i = 0; i < len; ++i) {
            const float e = std::exp(src[base + i * stride] - mx);
            dst[base + i * stride] = e;
            sum += e;
        }
        for (std::int64_t i = 0; i < len; ++i)
            dst[base + i * stride] /= sum;
    }
}

Tensor softmax(const Tensor& x, const AttributeMap& attrs, std::int64_t opset) {
    const std::int64_t rank = x.rank();
    Tensor out(DType::F32, x.shape());
    auto src = x.values<float>();
    auto dst = out.values<float>();
    if (opset < 13) {
        // Coerce to 2-D at `axis` and normalise each row.
        const auto axis = static_cast<std::size_t>(normalize_axis(attr_int(attrs, "axis", 1), rank));
        const std::int64_t len = product(x.shape(), axis, x.shape().size());
        softmax_rows(src.data(), dst.data(), x.size() / std::max<std::int64_t>(len, 1), len, 1);
    } else {
        const auto axis = static_cast<std::size_t>(normalize_axis(attr_int(attrs, "axis", -1), rank));
        const std::int64_t len = x.shape()[axis];
        const std::int64_t stride = product(x.shape(), axis + 1, x.shape().size());
        softmax_rows(src.data(), dst.data(), x.size() / std::max<std::int64_t>(len, 1), len, stride);
    }
    return out;
}

Tensor batch_norm(const Inputs& in, const AttributeMap& attrs) {
    const Tensor& x = need(in, 0, "X");
    if (x.rank() < 2)
        fail("BatchNormalization expects rank >= 2");
    const std::int64_t channels = x.dim(1);
    std::array<std::span<const float>, 4> p;
    for (std::size_t i = 0; i < 4; ++i) {
        const Tensor& t = need(in, i + 1, "BatchNormalization parameter");
        if (t.size() != channels)
            fail("BatchNormalization parameter size does not match channel count");
        p[i] = t.values<float>();
    }
    const auto eps = static_cast<float>(attr_float(attrs, "epsilon", 1e-5));
    const std::int64_t plane = product(x.shape(), 2, x.shape().size());
    Tensor out(DType::F32, x.shape());
    auto src = x.values<float>();
    auto dst = out.values<float>();
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const auto c = static_cast<std::size_t>((i / plane) % channels);
        dst[i] = (src[i] - p[2][c]) / std::sqrt(p[3][c] + eps) * p[0][c] + p[1][c];
    }
    return out;
}

void require_f32(const Inputs& in, OpKind kind) {
    for (const Tensor* t : in)
        if (t && t->dtype() != DType::F32 && !(kind == OpKind::Reshape && t == in[1]))
            fail(std::string(op_name(kind)) + " expects F32 inputs, got " + std::string(dtype_name(t->dtype())));
}

} // namespace

Conv2dGeometry conv_geometry(const Shape& x, const Shape& w, const AttributeMap& attrs) {
    if (x.size() != 4 || w.size() != 4)
        fail("Conv supports 2-D convolution only (input " + shape_string(x) + ", weight " + shape_string(w) + ")");
    require_unit_dilations(attrs);
    const std::int64_t group = attr_int(attrs, "group", 1);
    if (group < 1 || x[1] % group != 0 || w[0] % group != 0 || w[1] * group != x[1])
        fail("Conv channel/group mismatch: input " + shape_string(x) + ", weight " + shape_string(w) + ", group " +
             std::to_string(group));
    const auto k = attr_ints(attrs, "kernel_shape", {w[2], w[3]});
    if (k.size() != 2 || k[0] != w[2] || k[1] != w[3])
        fail("Conv kernel_shape disagrees with weight shape");
    const auto s = attr_ints(attrs, "strides", {1, 1});
    auto p = attr_ints(attrs, "pads", {0, 0, 0, 0});
    if (s.size() != 2 || s[0] < 1 || s[1] < 1 || p.size() != 4)
        fail("bad Conv strides or pads");
    const auto auto_pad = attr_string(attrs, "auto_pad", "NOTSET");
    if (auto_pad == "VALID") {
        p = {0, 0, 0, 0};
    } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
        for (int d = 0; d < 2; ++d) {
            const std::int64_t in = x[2 + d], out = (in + s[d] - 1) / s[d];
            const std::int64_t total = std::max<std::int64_t>((out - 1) * s[d] + k[d] - in, 0);
            p[d] = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
            p[d + 2] = total - p[d];
        }
    } else if (auto_pad != "NOTSET") {
        fail("unknown auto_pad '" + auto_pad + "'");
    }
    Conv2dGeometry g{};
    g.batch = x[0];
    g.channels = x[1];
    g.height = x[2];
    g.width = x[3];
    g.out_channels = w[0];
    g.group_channels = w[1];
    g.kernel_h = w[2];
    g.kernel_w = w[3];
    g.group = group;
    g.stride_h = s[0];
    g.stride_w = s[1];
    g.pad_top = p[0];
    g.pad_left = p[1];
    const std::int64_t span_h = g.height + p[0] + p[2] - g.kernel_h;
    const std::int64_t span_w = g.width + p[1] + p[3] - g.kernel_w;
    if (span_h < 0 || span_w < 0)
        fail("Conv kernel larger than padded input");
    g.out_h = span_h / g.stride_h + 1;
    g.out_w = span_w / g.stride_w + 1;
    return g;
}

GemmShape gemm_shape(const Shape& a, const Shape& b, const AttributeMap& attrs) {
    if (a.size() != 2 || b.size() != 2)
        fail("Gemm expects 2-D operands, got " + shape_string(a) + " and " + shape_string(b));
    const bool ta = attr_int(attrs, "transA", 0) != 0;
    const bool tb = attr_int(attrs, "transB", 0) != 0;
    const std::int64_t rows = ta ? a[1] : a[0];
    const std::int64_t inner = ta ? a[0] : a[1];
    const std::int64_t inner_b = tb ? b[1] : b[0];
    const std::int64_t cols = tb ? b[0] : b[1];
    if (inner != inner_b)
        fail("Gemm inner dimensions differ: " + shape_string(a) + " x " + shape_string(b));
    return {rows, inner, cols, ta, tb};
}

MatMulShape matmul_shape(const Shape& a, const Shape& b) {
    if (a.size() < 2 || b.size() < 2)
        fail("MatMul expects operands of rank >= 2");
    const std::int64_t rows = a[a.size() - 2], inner = a.back();
    const std::int64_t inner_b = b[b.size() - 2], cols = b.back();
    if (inner != inner_b)
        fail("MatMul inner dimensions differ: " + shape_string(a) + " x " + shape_string(b));
    const bool b_batched = b.size() > 2;
    if (b_batched && (b.size() != a.size() || !std::equal(a.begin(), a.end() - 2, b.begin())))
        fail("MatMul batch dimensions must match: " + shape_string(a) + " x " + shape_string(b));
    Shape out(a.begin(), a.end() - 1);
    out.push_back(cols);
    return {product(a, 0, a.size() - 2), rows, inner, cols, b_batched, out};
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1)
            fail("shapes " + shape_string(a) + " and " + shape_string(b) + " do not broadcast");
        out[i] = da == 1 ? db : da;
    }
    return out;
}

std::int64_t broadcast_offset(const Shape& src, const Shape& out, std::int64_t flat) {
    std::int64_t offset = 0, stride = 1;
    const std::size_t lead = out.size() - src.size();
    for (std::size_t i = out.size(); i-- > 0;) {
        const std::int64_t coord = flat % out[i];
        flat /= out[i];
        if (i < lead)
            continue;
        const std::int64_t extent = src[i - lead];
        if (extent != 1)
            offset += coord * stride;
        stride *= extent;
    }
    return offset;
}

std::vector<Tensor> run_f32(OpKind kind, const Inputs& in, const AttributeMap& attrs, std::int64_t opset) {
    require_f32(in, kind);
    switch (kind) {
    case OpKind::Conv: return {conv(in, attrs)};
    case OpKind::Relu: return {map_f32(need(in, 0, "X"), [](float v) { return v > 0.0f ? v : 0.0f; })};
    case OpKind::Clip: return {clip(in, attrs, opset)};
    case OpKind::MaxPool: return {max_pool(need(in, 0, "X"), attrs)};
    case OpKind::AveragePool: return {average_pool(need(in, 0, "X"), attrs)};
    case OpKind::GlobalAveragePool: return {global_average_pool(need(in, 0, "X"))};
    case OpKind::Add: return {add(in)};
    case OpKind::Gemm: return {gemm(in, attrs)};
    case OpKind::MatMul: return {matmul(in)};
    case OpKind::Flatten: return {flatten(need(in, 0, "input"), attrs)};
    case OpKind::Reshape: return {reshape(in)};
    case OpKind::Softmax: return {softmax(need(in, 0, "input"), attrs, opset)};
    case OpKind::BatchNormalization: return {batch_norm(in, attrs)};
    }
    fail("unknown operator");
}

} // namespace tuneqn::kernels
