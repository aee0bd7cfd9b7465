// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tuneqn/pareto.hpp"
#include "tuneqn/sensitivity.hpp"

namespace tuneqn {

enum class VariantStatus { Pending, Done, Failed };

std::string_view status_name(VariantStatus s);
VariantStatus status_from_name(std::string_view name);

struct VariantRecord {
    std::int64_t variant_index = 0;
    std::vector<std::string> excluded_layers;
    std::int64_t size_bytes = 0;
    double top1_mismatch = 0.0;  // vs. the F32 original's top-1
    double topk_mismatch = 0.0;  // top-k lists share no class
    std::optional<double> top1_accuracy;  // vs. dataset labels
    VariantStatus status = VariantStatus::Pending;

    bool operator==(const VariantRecord&) const = default;
};

nlohmann::json variant_to_json(const VariantRecord& v);
VariantRecord variant_from_json(const nlohmann::json& j);

/// Objective 0 = top1_mismatch, objective 1 = size_bytes.
std::vector<ObjectivePoint> variant_objectives(const std::vector<VariantRecord>& variants);

struct ReportMetadata {
    std::string model;
    std::string mode;
    std::uint64_t seed = 0;
    std::int64_t calib_samples = 0;
    std::int64_t eval_samples = 0;
    std::int64_t dataset_samples = 0;
    std::int64_t top_k = 0;
    std::int64_t original_size_bytes = 0;
    std::vector<std::int64_t> eval_indices;
    std::string config_hash;
    std::string timestamp;

    bool operator==(const ReportMetadata&) const = default;
};

struct SweepReport {
    ReportMetadata metadata;
    std::vector<LayerErrorRecord> layer_errors;
    std::vector<std::string> ranking;
    std::vector<VariantRecord> variants;
    ParetoResult pareto;
    std::vector<std::vector<double>> normalized_objectives;  // per variant, [0, 100]

    bool operator==(const SweepReport&) const = default;
};

/// Fills pareto and normalized_objectives from the (complete) variants.
void finalize_report(SweepReport& r, std::size_t top_candidates = 3);

/// Throws ArgumentError when variants are not complete and index-contiguous
/// from 0 or Pareto indices reference unknown variants.
void validate_report(const SweepReport& r);

nlohmann::json report_to_json(const SweepReport& r);
SweepReport report_from_json(const nlohmann::json& j);

/// Canonical JSON text (sorted keys, 6 significant digits).
std::string render_report(const SweepReport& r);
void write_report(const SweepReport& r, const std::filesystem::path& path);
SweepReport read_report(const std::filesystem::path& path);

/// Fixed 800x480 viewport; the plot area spans x in [80, 720] and y in [48, 432]
/// (10% margins). Points are spread evenly over x in index order, a single
/// point sits at x = 400.
struct PlotFrame {
    static constexpr double width = 800.0, height = 480.0;
    static constexpr double left = 80.0, right = 720.0, top = 48.0, bottom = 432.0;

    static double x_at(std::size_t index, std::size_t count);
    /// Maps value in [lo, hi] to the vertical pixel coordinate (hi at the top).
    static double y_at(double value, double lo, double hi);
};

/// norm_qdq_err and norm_xmodel_err per layer, topological order, y in [0, 1].
std::string render_layer_errors_svg(const std::vector<LayerErrorRecord>& records);
void plot_layer_errors(const std::vector<LayerErrorRecord>& records, const std::filesystem::path& path);

/// Normalized objectives per variant, y in [0, 100], plus one vertical line per
/// top candidate.
std::string render_objectives_svg(const SweepReport& r);
void plot_objectives(const SweepReport& r, const std::filesystem::path& path);

} // namespace tuneqn
