// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tuneqn/dataset.hpp"
#include "tuneqn/engine.hpp"
#include "tuneqn/graph.hpp"
#include "tuneqn/quant_math.hpp"

namespace tuneqn {

/// Observed (min, max) per value name, zero-inclusive.
using CalibrationMap = std::map<std::string, std::pair<float, float>>;

struct QuantRecipe {
    QuantMode mode = QuantMode::Static;
    std::vector<std::string> excluded_layers;  // node ids kept in F32
    std::optional<CalibrationMap> calibration;  // required for Static
};

/// Conv, Gemm (no transA) and MatMul nodes whose weight operand, and bias if any,
/// are bound F32 weights. BatchNormalization and everything else stays F32.
bool is_quantizable(const Node& node);
std::vector<std::string> quantizable_nodes(const Graph& g);

/// Runs the first `max_samples` samples through `g` and records the
/// zero-inclusive range of the graph input and every node output.
CalibrationMap calibrate(const Graph& g, const Dataset& calib_data, std::size_t max_samples,
                         std::int64_t chunk_size = 64);

/// Quantizes every quantizable node not named in recipe.excluded_layers:
/// I8 symmetric weights; Static adds I32 biases and calibrated U8 activation
/// parameters, Dynamic keeps F32 biases and derives activation ranges at run time.
/// Throws RecipeError for unknown or non-quantizable exclusions and for
/// Static recipes lacking calibration.
Graph selective_quantize(const Graph& g, const QuantRecipe& recipe);

/// All-F32 copy of `g` in which only `node_id` sees quantization noise: its
/// weights are snapped to the I8 grid and, in Static mode, its bias to the I32 grid
/// and its output to the calibrated U8 grid; in Dynamic mode its input is snapped
/// per sample to the runtime U8 grid instead.
Graph qdq_simulate_layer(const Graph& g, const std::string& node_id, QuantMode mode,
                         const CalibrationMap* calibration);

} // namespace tuneqn
