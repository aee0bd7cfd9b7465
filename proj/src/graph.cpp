// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/graph.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace tuneqn {

namespace {

struct OpInfo {
    OpKind op;
    std::string_view name;
    std::size_t min_inputs;
    std::size_t max_inputs;
    std::array<std::string_view, 2> required_attrs;
};

constexpr std::array kOps{
    OpInfo{OpKind::Conv, "Conv", 2, 3, {}},
    OpInfo{OpKind::Relu, "Relu", 1, 1, {}},
    OpInfo{OpKind::Clip, "Clip", 1, 3, {}},
    OpInfo{OpKind::MaxPool, "MaxPool", 1, 1, {"kernel_shape"}},
    OpInfo{OpKind::AveragePool, "AveragePool", 1, 1, {"kernel_shape"}},
    OpInfo{OpKind::GlobalAveragePool, "GlobalAveragePool", 1, 1, {}},
    OpInfo{OpKind::Add, "Add", 2, 2, {}},
    OpInfo{OpKind::Gemm, "Gemm", 2, 3, {}},
    OpInfo{OpKind::MatMul, "MatMul", 2, 2, {}},
    OpInfo{OpKind::Flatten, "Flatten", 1, 1, {}},
    OpInfo{OpKind::Reshape, "Reshape", 2, 2, {}},
    OpInfo{OpKind::Softmax, "Softmax", 1, 1, {}},
    OpInfo{OpKind::BatchNormalization, "BatchNormalization", 5, 5, {}},
};

const OpInfo& info(OpKind op) {
    for (const auto& i : kOps)
        if (i.op == op)
            return i;
    throw ArgumentError("invalid op kind");
}

template <class T>
const T* find_attr(const AttributeMap& attrs, const std::string& name) {
    auto it = attrs.find(name);
    if (it == attrs.end())
        return nullptr;
    if (auto* v = std::get_if<T>(&it->second))
        return v;
    throw GraphError("attribute '" + name + "' has the wrong type");
}

} // namespace

std::string_view op_name(OpKind op) { return info(op).name; }

std::optional<OpKind> try_op_from_name(std::string_view name) {
    for (const auto& i : kOps)
        if (i.name == name)
            return i.op;
    return std::nullopt;
}

OpKind op_from_name(std::string_view name) {
    if (auto op = try_op_from_name(name))
        return *op;
    throw UnsupportedOpError({std::string(name)});
}

std::int64_t attr_int(const AttributeMap& attrs, const std::string& name, std::int64_t fallback) {
    const auto* v = find_attr<std::int64_t>(attrs, name);
    return v ? *v : fallback;
}

double attr_float(const AttributeMap& attrs, const std::string& name, double fallback) {
    auto it = attrs.find(name);
    if (it == attrs.end())
        return fallback;
    if (const auto* d = std::get_if<double>(&it->second))
        return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second))
        return static_cast<double>(*i);
    throw GraphError("attribute '" + name + "' has the wrong type");
}

std::vector<std::int64_t> attr_ints(const AttributeMap& attrs, const std::string& name,
                                    std::vector<std::int64_t> fallback) {
    const auto* v = find_attr<std::vector<std::int64_t>>(attrs, name);
    return v ? *v : std::move(fallback);
}

std::string attr_string(const AttributeMap& attrs, const std::string& name, std::string fallback) {
    const auto* v = find_attr<std::string>(attrs, name);
    return v ? *v : std::move(fallback);
}

std::string_view mode_name(QuantMode mode) { return mode == QuantMode::Static ? "static" : "dynamic"; }

QuantMode mode_from_name(std::string_view name) {
    if (name == "static" || name == "Static")
        return QuantMode::Static;
    if (name == "dynamic" || name == "Dynamic")
        return QuantMode::Dynamic;
    throw ArgumentError("mode must be static or dynamic, got '" + std::string(name) + "'");
}

const Tensor* Node::weight(std::size_t input_index) const {
    if (input_index >= inputs.size() || inputs[input_index].empty())
        return nullptr;
    auto it = weights.find(inputs[input_index]);
    return it == weights.end() ? nullptr : &it->second;
}

const Node& Graph::node(std::string_view id) const {
    for (const auto& n : nodes)
        if (n.id == id)
            return n;
    throw GraphError("no node '" + std::string(id) + "'");
}

Node& Graph::node(std::string_view id) {
    return const_cast<Node&>(static_cast<const Graph&>(*this).node(id));
}

std::optional<std::size_t> Graph::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id)
            return i;
    return std::nullopt;
}

void validate(const Graph& g) {
    std::set<std::string> ids;
    std::set<std::string> defined;
    for (const auto& in : g.inputs) {
        if (in.name.empty() || !defined.insert(in.name).second)
            throw GraphError("duplicate or empty graph input '" + in.name + "'");
        for (std::size_t i = 0; i < in.shape.size(); ++i)
            if (in.shape[i] < -1 || (in.shape[i] == -1 && i != 0))
                throw GraphError("graph input '" + in.name + "' has an invalid extent; only the leading "
                                 "dimension may be symbolic");
    }
    for (const auto& n : g.nodes) {
        if (n.id.empty() || !ids.insert(n.id).second)
            throw GraphError("duplicate or empty node id '" + n.id + "'");
        const OpInfo& oi = info(n.op);
        if (n.inputs.size() < oi.min_inputs || n.inputs.size() > oi.max_inputs)
            throw GraphError("node '" + n.id + "' (" + std::string(oi.name) + ") has " +
                             std::to_string(n.inputs.size()) + " inputs");
        if (n.outputs.size() != 1 || n.outputs[0].empty())
            throw GraphError("node '" + n.id + "' must have exactly one output");
        for (auto req : oi.required_attrs)
            if (!req.empty() && !n.attrs.contains(std::string(req)))
                throw GraphError("node '" + n.id + "' is missing required attribute '" + std::string(req) + "'");
        for (const auto& [name, _] : n.weights)
            if (std::find(n.inputs.begin(), n.inputs.end(), name) == n.inputs.end())
                throw GraphError("node '" + n.id + "' binds weight '" + name + "' that is not one of its inputs");
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
            const auto& in = n.inputs[i];
            if (in.empty())
                continue;
            if (!defined.contains(in) && !n.is_weight(in))
                throw GraphError(in);
        }
        if (!defined.insert(n.outputs[0]).second)
            throw GraphError("value '" + n.outputs[0] + "' is defined twice");
    }
    if (g.outputs.empty())
        throw GraphError("graph declares no outputs");
    for (const auto& out : g.outputs)
        if (!defined.contains(out))
            throw GraphError(out);
    if (std::find(g.outputs.begin(), g.outputs.end(), g.logits_output) == g.outputs.end())
        throw GraphError("logits output '" + g.logits_output + "' is not a graph output");
}

void topological_sort(Graph& g) {
    std::set<std::string> defined;
    for (const auto& in : g.inputs)
        defined.insert(in.name);
    std::vector<Node> pending = std::move(g.nodes);
    std::vector<Node> ordered;
    ordered.reserve(pending.size());
    while (!pending.empty()) {
        auto ready = std::find_if(pending.begin(), pending.end(), [&](const Node& n) {
            return std::all_of(n.inputs.begin(), n.inputs.end(), [&](const std::string& in) {
                return in.empty() || defined.contains(in) || n.is_weight(in);
            });
        });
        if (ready == pending.end()) {
            std::set<std::string> produced;
            for (const auto& n : pending)
                produced.insert(n.outputs.begin(), n.outputs.end());
            for (const auto& n : pending)
                for (const auto& in : n.inputs)
                    if (!in.empty() && !defined.contains(in) && !produced.contains(in) && !n.is_weight(in))
                        throw GraphError(in);
            throw GraphError("cycle in graph");
        }
        for (const auto& out : ready->outputs)
            defined.insert(out);
        ordered.push_back(std::move(*ready));
        pending.erase(ready);
    }
    g.nodes = std::move(ordered);
}

} // namespace tuneqn
