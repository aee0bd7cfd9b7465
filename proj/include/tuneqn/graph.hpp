// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tuneqn/tensor.hpp"

namespace tuneqn {

enum class OpKind {
    Conv,
    Relu,
    Clip,
    MaxPool,
    AveragePool,
    GlobalAveragePool,
    Add,
    Gemm,
    MatMul,
    Flatten,
    Reshape,
    Softmax,
    BatchNormalization,
};

std::string_view op_name(OpKind op);
/// Throws UnsupportedOpError for anything outside the supported subset.
OpKind op_from_name(std::string_view name);
std::optional<OpKind> try_op_from_name(std::string_view name);

using Attribute = std::variant<std::int64_t, double, std::vector<std::int64_t>, std::string>;
using AttributeMap = std::map<std::string, Attribute>;

std::int64_t attr_int(const AttributeMap& attrs, const std::string& name, std::int64_t fallback);
double attr_float(const AttributeMap& attrs, const std::string& name, double fallback);
std::vector<std::int64_t> attr_ints(const AttributeMap& attrs, const std::string& name,
                                    std::vector<std::int64_t> fallback = {});
std::string attr_string(const AttributeMap& attrs, const std::string& name, std::string fallback);

enum class QuantMode { Static, Dynamic };

std::string_view mode_name(QuantMode mode);
QuantMode mode_from_name(std::string_view name);

/// Affine mapping real = (q - zero_point) * scale. I8 is symmetric (zero_point 0),
/// U8 asymmetric; I32 is used for static-mode biases.
struct QuantParams {
    double scale = 1.0;
    std::int32_t zero_point = 0;
    DType dtype = DType::U8;

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// Execution-time quantization of a Conv/Gemm/MatMul node. Weight parameters live in
/// Node::weight_params; static mode fixes activation parameters ahead of time.
struct NodeQuant {
    QuantMode mode = QuantMode::Static;
    std::optional<QuantParams> input;
    std::optional<QuantParams> output;

    friend bool operator==(const NodeQuant&, const NodeQuant&) = default;
};

/// Quantize-dequantize snapping of an activation edge that stays F32.
/// Without params, the U8 range is taken per sample from the runtime values.
struct FakeQuantSite {
    std::optional<QuantParams> params;

    friend bool operator==(const FakeQuantSite&, const FakeQuantSite&) = default;
};

struct FakeQuant {
    std::optional<FakeQuantSite> input;
    std::optional<FakeQuantSite> output;

    friend bool operator==(const FakeQuant&, const FakeQuant&) = default;
};

struct Node {
    std::string id;
    OpKind op = OpKind::Relu;
    std::vector<std::string> inputs;  // "" marks an omitted optional input
    std::vector<std::string> outputs;
    AttributeMap attrs;
    std::map<std::string, Tensor> weights;           // keyed by input name
    std::map<std::string, QuantParams> weight_params; // present for quantized weights
    std::optional<NodeQuant> quant;
    std::optional<FakeQuant> fake_quant;

    bool is_weight(const std::string& input) const { return weights.contains(input); }
    const Tensor* weight(std::size_t input_index) const;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Graph input signature; an extent of -1 is symbolic (resolved from the batch at run time).
struct ValueInfo {
    std::string name;
    DType dtype = DType::F32;
    Shape shape;

    friend bool operator==(const ValueInfo&, const ValueInfo&) = default;
};

struct Graph {
    std::string name;
    std::vector<Node> nodes;  // topological order
    std::vector<ValueInfo> inputs;
    std::vector<std::string> outputs;
    std::string logits_output;
    std::int64_t opset_version = 13;

    const Node& node(std::string_view id) const;
    Node& node(std::string_view id);
    std::optional<std::size_t> index_of(std::string_view id) const;

    friend bool operator==(const Graph&, const Graph&) = default;
};

/// Checks every Graph invariant: unique ids, supported ops with their arity and
/// required attributes, topological order, declared outputs and logits output.
void validate(const Graph& g);

/// Reorders nodes into a topological order, keeping the original relative order
/// wherever dependencies allow. Throws GraphError on cycles or dangling inputs.
void topological_sort(Graph& g);

} // namespace tuneqn
