// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tuneqn {

namespace {

bool bound_f32(const Node& node, std::size_t index) {
    const Tensor* t = node.weight(index);
    return t && t->dtype() == DType::F32;
}

QuantParams weight_qparams(const Tensor& w) {
    float lo = 0.0f, hi = 0.0f;
    for (float v : w.values<float>()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return compute_qparams(lo, hi, DType::I8);
}

const std::pair<float, float>& calibrated(const CalibrationMap& cal, const std::string& value, const Node& node) {
    auto it = cal.find(value);
    if (it == cal.end())
        throw RecipeError("calibration has no range for '" + value + "' (input/output of node '" + node.id + "')");
    return it->second;
}

QuantParams activation_params(const CalibrationMap& cal, const std::string& value, const Node& node) {
    const auto& [lo, hi] = calibrated(cal, value, node);
    return compute_qparams(lo, hi, DType::U8);
}

/// I32 bias on the grid of scale = alpha * input_scale * weight_scale; beta folded in.
std::pair<Tensor, QuantParams> quantize_bias(const Tensor& bias, double alpha, double beta, const QuantParams& in,
                                             const QuantParams& w) {
    const QuantParams p{alpha * in.scale * w.scale, 0,
                        DType::I32};
    std::vector<std::int32_t> q;
    q.reserve(static_cast<std::size_t>(bias.size()));
    for (float b : bias.values<float>()) {
        const double v = std::nearbyint(beta * static_cast<double>(b) / static_cast<double>(p.scale));
        q.push_back(static_cast<std::int32_t>(
            std::clamp(v, static_cast<double>(std::numeric_limits<std::int32_t>::min()),
                       static_cast<double>(std::numeric_limits<std::int32_t>::max()))));
    }
    return {Tensor(bias.shape(), std::move(q)), p};
}

double gemm_alpha(const Node& n) { return n.op == OpKind::Gemm ? attr_float(n.attrs, "alpha", 1.0) : 1.0; }
double gemm_beta(const Node& n) { return n.op == OpKind::Gemm ? attr_float(n.attrs, "beta", 1.0) : 1.0; }

void check_exclusions(const Graph& g, const std::vector<std::string>& excluded) {
    for (const auto& id : excluded) {
        auto idx = g.index_of(id);
        if (!idx)
            throw RecipeError("excluded layer '" + id + "' is not a node of graph '" + g.name + "'");
        if (!is_quantizable(g.nodes[*idx]))
            throw RecipeError("excluded layer '" + id + "' is not quantizable");
    }
}

} // namespace

bool is_quantizable(const Node& node) {
    switch (node.op) {
    case OpKind::Conv:
        return bound_f32(node, 1) && (node.inputs.size() < 3 || node.inputs[2].empty() || bound_f32(node, 2));
    case OpKind::Gemm:
        return bound_f32(node, 1) && attr_int(node.attrs, "transA", 0) == 0 &&
               (node.inputs.size() < 3 || node.inputs[2].empty() || bound_f32(node, 2));
    case OpKind::MatMul:
        return bound_f32(node, 1) && node.weight(1)->rank() == 2;
    default:
        return false;
    }
}

std::vector<std::string> quantizable_nodes(const Graph& g) {
    std::vector<std::string> ids;
    for (const auto& n : g.nodes)
        if (is_quantizable(n))
            ids.push_back(n.id);
    return ids;
}

CalibrationMap calibrate(const Graph& g, const Dataset& calib_data, std::size_t max_samples, std::int64_t chunk_size) {
    if (calib_data.samples.empty())
        throw DatasetError("calibration dataset is empty");
    if (max_samples == 0)
        throw ArgumentError("calibration needs at least one sample");
    const Dataset used = calib_data.head(max_samples);
    const Tensor batch = used.batch();

    ExecutionOptions opts;
    opts.chunk_size = chunk_size;
    opts.capture_activations = true;
    const auto result = execute(g, batch, opts);

    CalibrationMap cal;
    cal[g.inputs.front().name] = zero_inclusive_range(batch.values<float>());
    for (const auto& n : g.nodes)
        cal[n.outputs.front()] = zero_inclusive_range(result.trace.at(n.id).values<float>());
    return cal;
}

Graph selective_quantize(const Graph& g, const QuantRecipe& recipe) {
    check_exclusions(g, recipe.excluded_layers);
    if (recipe.mode == QuantMode::Static && !recipe.calibration)
        throw RecipeError("static quantization requires calibration ranges");
    const std::set<std::string> excluded(recipe.excluded_layers.begin(), recipe.excluded_layers.end());

    Graph out = g;
    for (auto& n : out.nodes) {
        if (!is_quantizable(n) || excluded.contains(n.id))
            continue;
        const std::string& w_name = n.inputs[1];
        const QuantParams pw = weight_qparams(n.weights.at(w_name));
        n.weights.at(w_name) = quantize_tensor(n.weights.at(w_name), pw);
        n.weight_params[w_name] = pw;

        NodeQuant nq;
        nq.mode = recipe.mode;
        if (recipe.mode == QuantMode::Static) {
            nq.input = activation_params(*recipe.calibration, n.inputs[0], n);
            nq.output = activation_params(*recipe.calibration, n.outputs[0], n);
            if (n.inputs.size() > 2 && !n.inputs[2].empty()) {
                const std::string& b_name = n.inputs[2];
                auto [bq, pb] = quantize_bias(n.weights.at(b_name), gemm_alpha(n), gemm_beta(n), *nq.input, pw);
                n.weights.at(b_name) = std::move(bq);
                n.weight_params[b_name] = pb;
            }
        }
        n.quant = nq;
    }
    return out;
}

Graph qdq_simulate_layer(const Graph& g, const std::string& node_id, QuantMode mode, const CalibrationMap* calibration) {
    auto idx = g.index_of(node_id);
    if (!idx)
        throw RecipeError("no node '" + node_id + "' in graph '" + g.name + "'");
    if (!is_quantizable(g.nodes[*idx]))
        throw RecipeError("node '" + node_id + "' is not quantizable");
    if (mode == QuantMode::Static && !calibration)
        throw RecipeError("static QDQ simulation requires calibration ranges");

    Graph out = g;
    Node& n = out.nodes[*idx];
    const std::string& w_name = n.inputs[1];
    const QuantParams pw = weight_qparams(n.weights.at(w_name));
    n.weights.at(w_name) = dequantize_tensor(quantize_tensor(n.weights.at(w_name), pw), pw);

    FakeQuant fq;
    if (mode == QuantMode::Static) {
        const QuantParams pin = activation_params(*calibration, n.inputs[0], n);
        if (n.inputs.size() > 2 && !n.inputs[2].empty()) {
            const std::string& b_name = n.inputs[2];
            const double beta = gemm_beta(n);
            auto [bq, pb] = quantize_bias(n.weights.at(b_name), gemm_alpha(n), beta, pin, pw);
            // Undo the beta fold so the F32 kernel's beta * C lands on the same grid.
            Tensor snapped = dequantize_tensor(bq, pb);
            if (beta != 1.0)
                for (auto& v : snapped.values<float>())
                    v = static_cast<float>(static_cast<double>(v) / beta);
            n.weights.at(b_name) = std::move(snapped);
        }
        fq.output = FakeQuantSite{activation_params(*calibration, n.outputs[0], n)};
    } else {
        fq.input = FakeQuantSite{};
    }
    n.fake_quant = fq;
    return out;
}

} // namespace tuneqn
