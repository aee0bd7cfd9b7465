// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tuneqn/dataset.hpp"
#include "tuneqn/report.hpp"

namespace tuneqn {

struct SweepConfig {
    std::filesystem::path model;
    std::filesystem::path dataset;                       // evaluation manifest
    std::optional<std::filesystem::path> calib_dataset;  // defaults to `dataset`
    QuantMode mode = QuantMode::Static;
    std::size_t calib_samples = 50;
    std::size_t eval_samples = 300;
    std::int64_t chunk_size = 64;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "tuneqn_out";
    std::optional<std::vector<std::string>> excluded_layers;  // explicit single-variant path
    std::int64_t top_k = 5;
    std::size_t pareto_candidates = 3;
    double xmodel_weight = 0.5;
    double qdq_weight = 0.5;
    std::optional<std::string> timestamp;  // report timestamp override
};

/// Parses `key = value` lines (strings, integers, floats, booleans and
/// single-line arrays of strings; `#` starts a comment). Relative paths are
/// resolved against `base_dir`. Throws ConfigError.
SweepConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
SweepConfig load_config(const std::filesystem::path& path);

/// Checks value ranges and that every referenced path exists. Throws ConfigError.
void validate_config(const SweepConfig& cfg);

/// Loads an `.onnx` file through the importer, anything else as a QTM container.
Graph load_model(const std::filesystem::path& path);

/// Hex digest over every result-affecting setting plus the model and dataset contents.
std::string config_hash(const SweepConfig& cfg);

inline constexpr const char* kCheckpointFile = "sweep_state.json";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kLayerErrorsFile = "layer_errors.json";
inline constexpr const char* kLayerErrorsPlot = "layer_errors.svg";
inline constexpr const char* kObjectivesPlot = "objectives.svg";

struct SweepCheckpoint {
    std::string model_name;
    QuantMode mode = QuantMode::Static;
    std::vector<std::string> ranking;
    std::vector<LayerErrorRecord> layer_errors;
    std::vector<VariantRecord> variants;
    std::string config_hash;
    std::uint64_t rng_seed = 0;
    std::vector<std::int64_t> eval_indices;
    std::string started_at;

    bool operator==(const SweepCheckpoint&) const = default;
};

nlohmann::json checkpoint_to_json(const SweepCheckpoint& c);
/// Throws CheckpointError on malformed content or a broken prefix rule.
SweepCheckpoint checkpoint_from_json(const nlohmann::json& j);
void write_checkpoint(const SweepCheckpoint& c, const std::filesystem::path& path);
SweepCheckpoint read_checkpoint(const std::filesystem::path& path);

/// Variant i excludes ranking[0, i); all Pending.
std::vector<VariantRecord> plan_sweep(const Graph& g, const std::vector<std::string>& ranking);

/// Everything a variant evaluation needs besides the graph and the variant itself.
struct EvalContext {
    QuantMode mode = QuantMode::Static;
    const CalibrationMap* calibration = nullptr;
    Tensor eval_batch;
    std::vector<std::int64_t> labels;
    std::vector<std::vector<std::int64_t>> baseline_topk;  // F32 original, per sample
    std::int64_t top_k = 5;
    std::int64_t chunk_size = 64;
};

/// Quantizes `g` without v.excluded_layers and measures size and mismatch rates.
VariantRecord evaluate_variant(const Graph& g, VariantRecord v, const EvalContext& ctx);

/// Interrupts a sweep from a hook; the checkpoint stays resumable.
class SweepStopped : public Error {
public:
    using Error::Error;
};

struct SweepHooks {
    std::function<void(std::int64_t variant_index)> before_evaluate;
    /// Called after the checkpoint containing `v` has been committed.
    std::function<void(const VariantRecord& v)> on_variant_done;
};

/// Fresh run: analysis, ranking, plan, evaluation of every variant in index
/// order with a checkpoint commit after each, then Pareto selection. Writes
/// report.json, layer_errors.json and both plots under cfg.output_dir.
/// With cfg.excluded_layers set, evaluates just that one variant instead.
SweepReport run_sweep(const SweepConfig& cfg, const SweepHooks& hooks = {});

/// Continues from `checkpoint_path`, re-running only variants not yet done.
/// Throws ResumeError when the configuration digest differs and
/// CheckpointError when the file is missing or corrupt.
SweepReport resume_sweep(const std::filesystem::path& checkpoint_path, const SweepConfig& cfg,
                         const SweepHooks& hooks = {});

/// The selectively quantized graph for one exclusion list, calibrated like the sweep.
Graph build_variant(const SweepConfig& cfg, const std::vector<std::string>& excluded);

/// Layer analysis only, writing layer_errors.json and layer_errors.svg.
LayerAnalysis run_analysis(const SweepConfig& cfg);

} // namespace tuneqn
