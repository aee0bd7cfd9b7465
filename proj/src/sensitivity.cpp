// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tuneqn/canonical_json.hpp"
#include "tuneqn/io.hpp"

namespace tuneqn {

double relative_l1_error(const Tensor& reference, const Tensor& other) {
    if (reference.shape() != other.shape())
        throw AnalysisError("cannot compare activations of shape " + shape_string(reference.shape()) + " and " +
                            shape_string(other.shape()));
    if (reference.dtype() != DType::F32 || other.dtype() != DType::F32)
        throw AnalysisError("activation comparison expects F32 tensors");
    auto a = reference.values<float>();
    auto b = other.values<float>();
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
        norm += std::abs(static_cast<double>(a[i]));
    }
    return diff / (norm + kRelativeErrorEpsilon);
}

double compute_xmodel_err(const ActivationTrace& fp32_trace, const ActivationTrace& quant_trace,
                          const std::string& node_id) {
    return relative_l1_error(fp32_trace.at(node_id), quant_trace.at(node_id));
}

double compute_qdq_err(const Graph& g, const std::string& node_id, const Dataset& calib_data, QuantMode mode,
                       const CalibrationMap* calibration, std::int64_t chunk_size) {
    const Graph qdq = qdq_simulate_layer(g, node_id, mode, calibration);
    const Tensor batch = calib_data.batch();
    ExecutionOptions opts;
    opts.chunk_size = chunk_size;
    opts.capture_activations = true;
    opts.capture_filter = std::set<std::string>{node_id};
    const auto ref = execute(g, batch, opts);
    const auto sim = execute(qdq, batch, opts);
    return compute_xmodel_err(ref.trace, sim.trace, node_id);
}

std::vector<double> normalize_errors(const std::vector<double>& values) {
    if (values.empty())
        throw ArgumentError("cannot normalize an empty error list");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo, max = *hi;
    std::vector<double> out(values.size(), 0.0);
    if (max == min)
        return out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = (values[i] - min) / (max - min);
    return out;
}

std::vector<std::string> rank_layers(const std::vector<LayerErrorRecord>& records) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].error_metric > records[b].error_metric;
    });
    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (std::size_t i : order)
        ids.push_back(records[i].node_id);
    return ids;
}

LayerAnalysis analyze_layers(const Graph& g, const Dataset& calib_data, const AnalysisOptions& opts) {
    if (opts.xmodel_weight < 0.0 || opts.qdq_weight < 0.0)
        throw ArgumentError("error metric weights must be non-negative");
    LayerAnalysis result;
    const auto ids = quantizable_nodes(g);
    if (ids.empty())
        return result;

    const Dataset used = calib_data.head(opts.calib_samples);
    if (used.size() == 0)
        throw DatasetError("analysis needs at least one sample");
    if (opts.mode == QuantMode::Static)
        result.calibration = calibrate(g, used, used.size(), opts.chunk_size);
    const CalibrationMap* cal = opts.mode == QuantMode::Static ? &result.calibration : nullptr;

    const Tensor batch = used.batch();
    ExecutionOptions exec;
    exec.chunk_size = opts.chunk_size;
    exec.capture_activations = true;
    exec.capture_filter = std::set<std::string>(ids.begin(), ids.end());
    const auto fp32 = execute(g, batch, exec);

    QuantRecipe recipe;
    recipe.mode = opts.mode;
    if (cal)
        recipe.calibration = *cal;
    const auto quant = execute(selective_quantize(g, recipe), batch, exec);

    std::vector<double> qdq, xmodel;
    for (const auto& id : ids) {
        xmodel.push_back(compute_xmodel_err(fp32.trace, quant.trace, id));
        qdq.push_back(compute_qdq_err(g, id, used, opts.mode, cal, opts.chunk_size));
    }
    const auto nq = normalize_errors(qdq);
    const auto nx = normalize_errors(xmodel);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        LayerErrorRecord r;
        r.node_id = ids[i];
        r.qdq_err = qdq[i];
        r.xmodel_err = xmodel[i];
        r.norm_qdq_err = nq[i];
        r.norm_xmodel_err = nx[i];
        r.error_metric = opts.xmodel_weight * nx[i] + opts.qdq_weight * nq[i];
        result.records.push_back(r);
    }
    result.ranking = rank_layers(result.records);
    for (std::size_t pos = 0; pos < result.ranking.size(); ++pos)
        for (auto& r : result.records)
            if (r.node_id == result.ranking[pos])
                r.rank = static_cast<std::int64_t>(pos);
    return result;
}

nlohmann::json layer_errors_to_json(const std::vector<LayerErrorRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records)
        arr.push_back({{"node_id", r.node_id},
                       {"qdq_err", r.qdq_err},
                       {"xmodel_err", r.xmodel_err},
                       {"norm_qdq_err", r.norm_qdq_err},
                       {"norm_xmodel_err", r.norm_xmodel_err},
                       {"error_metric", r.error_metric},
                       {"rank", r.rank}});
    return arr;
}

std::vector<LayerErrorRecord> layer_errors_from_json(const nlohmann::json& j) {
    if (!j.is_array())
        throw FormatError("layer errors must be a JSON array");
    std::vector<LayerErrorRecord> out;
    try {
        for (const auto& e : j) {
            LayerErrorRecord r;
            r.node_id = e.at("node_id").get<std::string>();
            r.qdq_err = e.at("qdq_err").get<double>();
            r.xmodel_err = e.at("xmodel_err").get<double>();
            r.norm_qdq_err = e.at("norm_qdq_err").get<double>();
            r.norm_xmodel_err = e.at("norm_xmodel_err").get<double>();
            r.error_metric = e.at("error_metric").get<double>();
            r.rank = e.at("rank").get<std::int64_t>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed layer error record: ") + e.what());
    }
    return out;
}

void write_layer_errors(const std::vector<LayerErrorRecord>& records, const std::filesystem::path& path) {
    write_file_atomic(path, dump_canonical(layer_errors_to_json(records)));
}

} // namespace tuneqn
