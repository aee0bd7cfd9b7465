// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tuneqn/graph.hpp"

namespace tuneqn {

struct ExecutionOptions {
    std::int64_t chunk_size = 64;  // samples per execution chunk, >= 1
    bool capture_activations = false;
    std::optional<std::set<std::string>> capture_filter;  // node ids; all nodes when unset
};

/// Per-node outputs concatenated over chunks along the batch axis.
struct ActivationTrace {
    std::map<std::string, Tensor> per_node;

    bool contains(const std::string& node_id) const { return per_node.contains(node_id); }
    const Tensor& at(const std::string& node_id) const;
};

struct ExecutionResult {
    std::map<std::string, Tensor> outputs;
    ActivationTrace trace;
};

/// Runs `g` over `batch` (leading axis = samples) in chunks of opts.chunk_size.
/// Every kernel accumulates in a fixed ascending order and samples never interact,
/// so results are bit-identical for any chunk size.
ExecutionResult execute(const Graph& g, const Tensor& batch, const ExecutionOptions& opts = {});

/// Convenience: the designated logits output of execute().
Tensor run_logits(const Graph& g, const Tensor& batch, std::int64_t chunk_size = 64);

/// Plain F32 kernel for one operator. `inputs` may contain empty tensors for
/// omitted optional inputs.
std::vector<Tensor> run_op(OpKind kind, std::span<const Tensor> inputs, const AttributeMap& attrs,
                           std::int64_t opset = 13);

/// Executes a single node, honouring its quantization and fake-quant annotations.
Tensor run_node(const Node& node, std::span<const Tensor> inputs, std::int64_t opset);

/// Per sample, the k highest-scoring class indices in descending order; ties go
/// to the lower index. `logits` must be [batch, classes].
std::vector<std::vector<std::int64_t>> top_k(const Tensor& logits, std::int64_t k);

} // namespace tuneqn
