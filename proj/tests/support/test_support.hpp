// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

// Fixture paths, scratch directories, tiny graph builders and brute-force
// reference implementations shared by the unit and acceptance tests. The
// reference code deliberately avoids the library's kernels and helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tuneqn/graph.hpp"

namespace tuneqn::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TUNEQN_FIXTURE_DIR) / name;
}

/// Unique scratch directory removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag = "tuneqn") {
        std::random_device rd;
        std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
        for (;;) {
            path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rng() % 1000000000ULL));
            if (std::filesystem::create_directory(path_))
                break;
        }
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// input[-1, in] -> Gemm(W[out, in] transposed, bias) -> "logits".
inline Graph gemm_graph(std::int64_t in, std::int64_t out, std::vector<float> w, std::vector<float> b,
                        const std::string& id = "fc") {
    Graph g;
    g.name = "gemm";
    g.inputs = {{"input", DType::F32, {-1, in}}};
    Node n;
    n.id = id;
    n.op = OpKind::Gemm;
    n.inputs = {"input", id + ".W", id + ".B"};
    n.outputs = {"logits"};
    n.attrs["transB"] = std::int64_t{1};
    n.weights.emplace(id + ".W", Tensor({out, in}, std::move(w)));
    n.weights.emplace(id + ".B", Tensor({out}, std::move(b)));
    g.nodes.push_back(std::move(n));
    g.outputs = {"logits"};
    g.logits_output = "logits";
    return g;
}

inline std::vector<float> random_floats(std::size_t n, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v)
        x = dist(rng);
    return v;
}

namespace oracle {

/// Direct convolution in double: NCHW input, MCkk weight, symmetric pads, no groups.
inline std::vector<double> conv2d(const std::vector<float>& x, std::int64_t n, std::int64_t c, std::int64_t h,
                                  std::int64_t w, const std::vector<float>& k, std::int64_t m, std::int64_t kh,
                                  std::int64_t kw, std::int64_t stride, std::int64_t pad,
                                  const std::vector<float>& bias, std::int64_t& oh, std::int64_t& ow) {
    oh = (h + 2 * pad - kh) / stride + 1;
    ow = (w + 2 * pad - kw) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(n * m * oh * ow), 0.0);
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t f = 0; f < m; ++f)
            for (std::int64_t y = 0; y < oh; ++y)
                for (std::int64_t z = 0; z < ow; ++z) {
                    double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(f)];
                    for (std::int64_t ch = 0; ch < c; ++ch)
                        for (std::int64_t i = 0; i < kh; ++i)
                            for (std::int64_t j = 0; j < kw; ++j) {
                                const std::int64_t yy = y * stride + i - pad, zz = z * stride + j - pad;
                                if (yy < 0 || zz < 0 || yy >= h || zz >= w)
                                    continue;
                                acc += double(x[static_cast<std::size_t>(((b * c + ch) * h + yy) * w + zz)]) *
                                       double(k[static_cast<std::size_t>(((f * c + ch) * kh + i) * kw + j)]);
                            }
                    out[static_cast<std::size_t>(((b * m + f) * oh + y) * ow + z)] = acc;
                }
    return out;
}

/// Max over every window by explicit enumeration; padding never wins.
inline std::vector<float> max_pool(const std::vector<float>& x, std::int64_t nc, std::int64_t h, std::int64_t w,
                                   std::int64_t k, std::int64_t stride, std::int64_t& oh, std::int64_t& ow) {
    oh = (h - k) / stride + 1;
    ow = (w - k) / stride + 1;
    std::vector<float> out;
    for (std::int64_t p = 0; p < nc; ++p)
        for (std::int64_t y = 0; y < oh; ++y)
            for (std::int64_t z = 0; z < ow; ++z) {
                std::vector<float> window;
                for (std::int64_t i = 0; i < k; ++i)
                    for (std::int64_t j = 0; j < k; ++j)
                        window.push_back(x[static_cast<std::size_t>((p * h + y * stride + i) * w + z * stride + j)]);
                out.push_back(*std::max_element(window.begin(), window.end()));
            }
    return out;
}

/// Full stable sort of class indices by score descending.
inline std::vector<std::int64_t> top_k(const std::vector<float>& row, std::int64_t k) {
    std::vector<std::int64_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
        return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

inline bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (b[i] < a[i])
            return false;
        better = better || a[i] < b[i];
    }
    return better;
}

/// Peels non-dominated layers one at a time by pairwise comparison.
inline std::vector<std::vector<std::int64_t>> fronts(const std::vector<std::vector<double>>& pts) {
    std::vector<std::int64_t> remaining(pts.size());
    std::iota(remaining.begin(), remaining.end(), std::int64_t{0});
    std::vector<std::vector<std::int64_t>> out;
    while (!remaining.empty()) {
        std::vector<std::int64_t> front, rest;
        for (auto p : remaining) {
            bool dominated = false;
            for (auto q : remaining)
                dominated = dominated || dominates(pts[static_cast<std::size_t>(q)], pts[static_cast<std::size_t>(p)]);
            (dominated ? rest : front).push_back(p);
        }
        out.push_back(front);
        remaining = rest;
    }
    return out;
}

/// (sum |a - b|) / (sum |a| + eps), one term at a time.
inline double relative_error(const std::vector<float>& a, const std::vector<float>& b) {
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::fabs(static_cast<long double>(a[i]) - static_cast<long double>(b[i]));
        den += std::fabs(static_cast<long double>(a[i]));
    }
    return static_cast<double>(num / (den + 1e-12L));
}

} // namespace oracle

} // namespace tuneqn::testing
