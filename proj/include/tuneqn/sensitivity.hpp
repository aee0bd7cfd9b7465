// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tuneqn/dataset.hpp"
#include "tuneqn/engine.hpp"
#include "tuneqn/quantizer.hpp"

namespace tuneqn {

struct LayerErrorRecord {
    std::string node_id;
    double qdq_err = 0.0;
    double xmodel_err = 0.0;
    double norm_qdq_err = 0.0;
    double norm_xmodel_err = 0.0;
    double error_metric = 0.0;
    std::int64_t rank = 0;  // position after the descending sort

    bool operator==(const LayerErrorRecord&) const = default;
};

inline constexpr double kRelativeErrorEpsilon = 1e-12;

/// sum |reference - other| / (sum |reference| + 1e-12), accumulated in double.
double relative_l1_error(const Tensor& reference, const Tensor& other);

double compute_xmodel_err(const ActivationTrace& fp32_trace, const ActivationTrace& quant_trace,
                          const std::string& node_id);

/// Runs `g` and its single-layer QDQ simulation on `calib_data` and compares
/// node_id's output. `calibration` is required for Static mode.
double compute_qdq_err(const Graph& g, const std::string& node_id, const Dataset& calib_data, QuantMode mode,
                       const CalibrationMap* calibration, std::int64_t chunk_size = 64);

/// Min-max normalization to [0, 1]; a constant list maps to all zeros.
std::vector<double> normalize_errors(const std::vector<double>& values);

/// Node ids by error_metric descending; equal metrics keep the records' order,
/// which callers supply topologically.
std::vector<std::string> rank_layers(const std::vector<LayerErrorRecord>& records);

struct AnalysisOptions {
    QuantMode mode = QuantMode::Static;
    std::size_t calib_samples = 50;
    std::int64_t chunk_size = 64;
    double xmodel_weight = 0.5;
    double qdq_weight = 0.5;
};

struct LayerAnalysis {
    std::vector<LayerErrorRecord> records;  // topological order, rank filled
    std::vector<std::string> ranking;
    CalibrationMap calibration;  // empty in Dynamic mode
};

/// Calibrates (Static), then measures qdq_err and xmodel_err for every
/// quantizable node over the first calib_samples samples of `calib_data`.
LayerAnalysis analyze_layers(const Graph& g, const Dataset& calib_data, const AnalysisOptions& opts);

nlohmann::json layer_errors_to_json(const std::vector<LayerErrorRecord>& records);
std::vector<LayerErrorRecord> layer_errors_from_json(const nlohmann::json& j);
void write_layer_errors(const std::vector<LayerErrorRecord>& records, const std::filesystem::path& path);

} // namespace tuneqn
