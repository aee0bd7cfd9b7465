// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/engine.hpp"

#include <algorithm>
#include <numeric>

#include "kernels.hpp"
#include "tuneqn/quant_math.hpp"

namespace tuneqn {

const Tensor& ActivationTrace::at(const std::string& node_id) const {
    auto it = per_node.find(node_id);
    if (it == per_node.end())
        throw AnalysisError("activation trace has no entry for node '" + node_id + "'");
    return it->second;
}

namespace {

/// Snaps every sample of `t` onto a U8 grid: fixed parameters, or per-sample
/// zero-inclusive runtime range when `params` is empty.
Tensor fake_quantize(const Tensor& t, const FakeQuantSite& site) {
    Tensor out = t;
    auto v = out.values<float>();
    if (site.params) {
        for (auto& x : v)
            x = fake_quantize_value(x, *site.params);
        return out;
    }
    const std::int64_t samples = t.rank() > 0 ? t.dim(0) : 1;
    const std::int64_t row = samples > 0 ? t.size() / samples : 0;
    for (std::int64_t s = 0; s < samples; ++s) {
        auto slice = v.subspan(static_cast<std::size_t>(s * row), static_cast<std::size_t>(row));
        auto [lo, hi] = zero_inclusive_range(slice);
        const QuantParams p = compute_qparams(lo, hi, DType::U8);
        for (auto& x : slice)
            x = fake_quantize_value(x, p);
    }
    return out;
}

Tensor run_node_ptrs(const Node& node, const kernels::Inputs& inputs, std::int64_t opset) {
    if (node.quant)
        return kernels::run_quantized(node, inputs);
    if (!node.fake_quant)
        return kernels::run_f32(node.op, inputs, node.attrs, opset).front();

    kernels::Inputs local = inputs;
    Tensor snapped_input;
    if (node.fake_quant->input && !inputs.empty() && inputs[0]) {
        snapped_input = fake_quantize(*inputs[0], *node.fake_quant->input);
        local[0] = &snapped_input;
    }
    Tensor out = kernels::run_f32(node.op, local, node.attrs, opset).front();
    if (node.fake_quant->output)
        out = fake_quantize(out, *node.fake_quant->output);
    return out;
}

void check_batch(const Graph& g, const Tensor& batch) {
    if (g.inputs.size() != 1)
        throw ExecutionError("graph '" + g.name + "' must have exactly one input to run on a batch");
    const ValueInfo& sig = g.inputs.front();
    if (batch.dtype() != sig.dtype)
        throw ExecutionError("input '" + sig.name + "' expects " + std::string(dtype_name(sig.dtype)));
    if (batch.rank() != static_cast<std::int64_t>(sig.shape.size()) || batch.rank() == 0)
        throw ExecutionError("input '" + sig.name + "' expects shape " + shape_string(sig.shape) + ", got " +
                             shape_string(batch.shape()));
    for (std::size_t i = 1; i < sig.shape.size(); ++i)
        if (sig.shape[i] != batch.shape()[i])
            throw ExecutionError("input '" + sig.name + "' expects shape " + shape_string(sig.shape) + ", got " +
                                 shape_string(batch.shape()));
    if (sig.shape[0] >= 0 && sig.shape[0] != batch.dim(0))
        throw ExecutionError("input '" + sig.name + "' has a fixed batch of " + std::to_string(sig.shape[0]));
    if (batch.dim(0) == 0)
        throw ExecutionError("empty batch");
}

} // namespace

Tensor run_node(const Node& node, std::span<const Tensor> inputs, std::int64_t opset) {
    kernels::Inputs ptrs;
    for (const auto& t : inputs)
        ptrs.push_back(&t);
    return run_node_ptrs(node, ptrs, opset);
}

std::vector<Tensor> run_op(OpKind kind, std::span<const Tensor> inputs, const AttributeMap& attrs, std::int64_t opset) {
    kernels::Inputs ptrs;
    for (const auto& t : inputs)
        ptrs.push_back(&t);
    return kernels::run_f32(kind, ptrs, attrs, opset);
}

ExecutionResult execute(const Graph& g, const Tensor& batch, const ExecutionOptions& opts) {
    if (opts.chunk_size < 1)
        throw ArgumentError("chunk_size must be at least 1");
    check_batch(g, batch);

    const std::int64_t total = batch.dim(0);
    std::map<std::string, std::vector<Tensor>> output_parts;
    std::map<std::string, std::vector<Tensor>> trace_parts;

    for (std::int64_t begin = 0; begin < total; begin += opts.chunk_size) {
        const std::int64_t end = std::min(total, begin + opts.chunk_size);
        std::map<std::string, Tensor> values;
        values.emplace(g.inputs.front().name, slice_batch(batch, begin, end));

        for (const auto& node : g.nodes) {
            kernels::Inputs inputs;
            inputs.reserve(node.inputs.size());
            for (const auto& name : node.inputs) {
                if (name.empty()) {
                    inputs.push_back(nullptr);
                } else if (auto w = node.weights.find(name); w != node.weights.end()) {
                    inputs.push_back(&w->second);
                } else if (auto v = values.find(name); v != values.end()) {
                    inputs.push_back(&v->second);
                } else {
                    throw ExecutionError("node '" + node.id + "': value '" + name + "' is undefined");
                }
            }
            Tensor out;
            try {
                out = run_node_ptrs(node, inputs, g.opset_version);
            } catch (const ExecutionError& e) {
                throw ExecutionError("node '" + node.id + "': " + e.what());
            } catch (const ArgumentError& e) {
                throw ExecutionError("node '" + node.id + "': " + e.what());
            }
            if (opts.capture_activations && (!opts.capture_filter || opts.capture_filter->contains(node.id)))
                trace_parts[node.id].push_back(out);
            values.insert_or_assign(node.outputs.front(), std::move(out));
        }
        for (const auto& name : g.outputs)
            output_parts[name].push_back(values.at(name));
    }

    ExecutionResult result;
    for (auto& [name, parts] : output_parts)
        result.outputs.emplace(name, concat_batch(parts));
    for (auto& [id, parts] : trace_parts)
        result.trace.per_node.emplace(id, concat_batch(parts));
    return result;
}

Tensor run_logits(const Graph& g, const Tensor& batch, std::int64_t chunk_size) {
    ExecutionOptions opts;
    opts.chunk_size = chunk_size;
    auto result = execute(g, batch, opts);
    return std::move(result.outputs.at(g.logits_output));
}

std::vector<std::vector<std::int64_t>> top_k(const Tensor& logits, std::int64_t k) {
    if (logits.rank() != 2)
        throw ArgumentError("top_k expects [batch, classes] logits, got " + shape_string(logits.shape()));
    const std::int64_t classes = logits.dim(1);
    if (k < 1 || k > classes)
        throw ArgumentError("k=" + std::to_string(k) + " outside [1, " + std::to_string(classes) + "]");
    auto v = logits.values<float>();
    std::vector<std::vector<std::int64_t>> result;
    result.reserve(static_cast<std::size_t>(logits.dim(0)));
    std::vector<std::int64_t> order(static_cast<std::size_t>(classes));
    for (std::int64_t s = 0; s < logits.dim(0); ++s) {
        const float* row = v.data() + s * classes;
        std::iota(order.begin(), order.end(), std::int64_t{0});
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::int64_t a, std::int64_t b) {
            return row[a] > row[b] || (row[a] == row[b] && a < b);
        });
        result.emplace_back(order.begin(), order.begin() + k);
    }
    return result;
}

} // namespace tuneqn
