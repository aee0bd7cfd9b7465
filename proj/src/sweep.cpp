// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <memory>
#include <numeric>
#include <random>

#include "tuneqn/container.hpp"
#include "tuneqn/io.hpp"
#include "tuneqn/onnx_import.hpp"

namespace tuneqn {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t dataset_digest(const Dataset& ds) {
    std::uint64_t h = fnv1a64(std::string_view("dataset"));
    for (const auto& s : ds.samples) {
        h = fnv1a64(shape_string(s.input.shape()), h);
        h = fnv1a64(s.input.bytes(), h);
        h = fnv1a64(std::to_string(s.label), h);
    }
    return h;
}

std::string digest(const SweepConfig& cfg, const std::vector<std::byte>& model_bytes, const Dataset& eval,
                   const Dataset& calib) {
    json j{{"model", hex64(fnv1a64(model_bytes))},
           {"model_format", cfg.model.extension() == ".onnx" ? "onnx" : "qtm"},
           {"dataset", hex64(dataset_digest(eval))},
           {"calib_dataset", hex64(dataset_digest(calib))},
           {"mode", mode_name(cfg.mode)},
           {"calib_samples", cfg.calib_samples},
           {"eval_samples", cfg.eval_samples},
           {"seed", cfg.seed},
           {"top_k", cfg.top_k},
           {"pareto_candidates", cfg.pareto_candidates},
           {"xmodel_weight", cfg.xmodel_weight},
           {"qdq_weight", cfg.qdq_weight},
           {"excluded_layers", cfg.excluded_layers ? json(*cfg.excluded_layers) : json(nullptr)},
           {"timestamp", cfg.timestamp ? json(*cfg.timestamp) : json(nullptr)}};
    return hex64(fnv1a64(j.dump()));
}

std::string iso_utc(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string resolve_timestamp(const SweepConfig& cfg) {
    if (cfg.timestamp)
        return *cfg.timestamp;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        char* end = nullptr;
        const long long secs = std::strtoll(epoch, &end, 10);
        if (end && *end == '\0')
            return iso_utc(static_cast<std::time_t>(secs));
    }
    return iso_utc(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

std::vector<std::int64_t> choose_eval_indices(std::size_t available, std::size_t wanted, std::uint64_t seed) {
    std::vector<std::int64_t> idx(available);
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    if (wanted >= available)
        return idx;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(wanted);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Loaded model, data and baseline shared by fresh and resumed runs.
struct Session {
    SweepConfig cfg;
    Graph graph;
    Dataset eval_all;
    Dataset calib;
    std::string hash;
    std::vector<std::int64_t> eval_indices;
    CalibrationMap calibration;
    EvalContext ctx;
    std::int64_t original_size = 0;
};

std::unique_ptr<Session> open_session(const SweepConfig& cfg) {
    validate_config(cfg);
    auto s = std::make_unique<Session>();
    s->cfg = cfg;
    const auto model_bytes = read_file_bytes(cfg.model);
    s->graph = cfg.model.extension() == ".onnx" ? parse_onnx(model_bytes) : parse_model_container(model_bytes);
    if (s->graph.name.empty())
        s->graph.name = cfg.model.stem().string();
    s->eval_all = load_dataset(cfg.dataset);
    s->calib = (cfg.calib_dataset ? load_dataset(*cfg.calib_dataset) : s->eval_all).head(cfg.calib_samples);
    s->hash = digest(cfg, model_bytes, s->eval_all, s->calib);
    s->eval_indices = choose_eval_indices(s->eval_all.size(), cfg.eval_samples, cfg.seed);
    s->original_size = static_cast<std::int64_t>(serialize_model_bytes(s->graph).size());
    return s;
}

/// Calibration and F32 baseline; separate from open_session so a digest
/// mismatch is reported before any execution.
void prepare_evaluation(Session& s) {
    if (s.cfg.mode == QuantMode::Static)
        s.calibration = calibrate(s.graph, s.calib, s.calib.size(), s.cfg.chunk_size);
    std::vector<std::size_t> picked(s.eval_indices.begin(), s.eval_indices.end());
    const Dataset eval = s.eval_all.subset(picked);

    EvalContext& ctx = s.ctx;
    ctx.mode = s.cfg.mode;
    ctx.calibration = s.cfg.mode == QuantMode::Static ? &s.calibration : nullptr;
    ctx.eval_batch = eval.batch();
    ctx.labels.clear();
    for (const auto& smp : eval.samples)
        ctx.labels.push_back(smp.label);
    ctx.chunk_size = s.cfg.chunk_size;
    const Tensor logits = run_logits(s.graph, ctx.eval_batch, ctx.chunk_size);
    if (logits.rank() != 2)
        throw ExecutionError("logits output '" + s.graph.logits_output + "' must be [batch, classes], got " +
                             shape_string(logits.shape()));
    ctx.top_k = std::min(s.cfg.top_k, logits.dim(1));
    ctx.baseline_topk = top_k(logits, ctx.top_k);
}

ReportMetadata metadata_for(const Session& s, const std::string& timestamp) {
    ReportMetadata m;
    m.model = s.graph.name;
    m.mode = std::string(mode_name(s.cfg.mode));
    m.seed = s.cfg.seed;
    m.calib_samples = static_cast<std::int64_t>(s.calib.size());
    m.eval_samples = static_cast<std::int64_t>(s.eval_indices.size());
    m.dataset_samples = static_cast<std::int64_t>(s.eval_all.size());
    m.top_k = s.ctx.top_k;
    m.original_size_bytes = s.original_size;
    m.eval_indices = s.eval_indices;
    m.config_hash = s.hash;
    m.timestamp = timestamp;
    return m;
}

void write_artifacts(const SweepReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_report(r, dir / kReportFile);
    plot_objectives(r, dir / kObjectivesPlot);
    if (!r.layer_errors.empty()) {
        write_layer_errors(r.layer_errors, dir / kLayerErrorsFile);
        plot_layer_errors(r.layer_errors, dir / kLayerErrorsPlot);
    }
}

SweepReport continue_sweep(Session& s, SweepCheckpoint& c, const std::filesystem::path& checkpoint_path,
                           const SweepHooks& hooks) {
    for (auto& v : c.variants) {
        if (v.status == VariantStatus::Done)
            continue;
        if (hooks.before_evaluate)
            hooks.before_evaluate(v.variant_index);
        try {
            v = evaluate_variant(s.graph, v, s.ctx);
        } catch (const Error&) {
            v.status = VariantStatus::Failed;
            write_checkpoint(c, checkpoint_path);
            throw;
        }
        write_checkpoint(c, checkpoint_path);
        if (hooks.on_variant_done)
            hooks.on_variant_done(v);
    }

    SweepReport r;
    r.metadata = metadata_for(s, c.started_at);
    r.layer_errors = c.layer_errors;
    r.ranking = c.ranking;
    r.variants = c.variants;
    finalize_report(r, s.cfg.pareto_candidates);
    write_artifacts(r, s.cfg.output_dir);
    return r;
}

SweepReport run_explicit(Session& s) {
    prepare_evaluation(s);
    VariantRecord v;
    v.excluded_layers = *s.cfg.excluded_layers;
    SweepReport r;
    r.metadata = metadata_for(s, resolve_timestamp(s.cfg));
    r.ranking = v.excluded_layers;
    r.variants.push_back(evaluate_variant(s.graph, v, s.ctx));
    finalize_report(r, s.cfg.pareto_candidates);
    write_artifacts(r, s.cfg.output_dir);
    return r;
}

void check_prefix_rule(const SweepCheckpoint& c) {
    if (c.variants.size() != c.ranking.size() + 1)
        throw CheckpointError("checkpoint has " + std::to_string(c.variants.size()) + " variants for a ranking of " +
                              std::to_string(c.ranking.size()) + " layers");
    for (std::size_t i = 0; i < c.variants.size(); ++i) {
        const auto& v = c.variants[i];
        if (v.variant_index != static_cast<std::int64_t>(i))
            throw CheckpointError("checkpoint variant indices are not contiguous");
        if (!std::equal(v.excluded_layers.begin(), v.excluded_layers.end(), c.ranking.begin(),
                        c.ranking.begin() + static_cast<std::ptrdiff_t>(i)) ||
            v.excluded_layers.size() != i)
            throw CheckpointError("variant " + std::to_string(i) + " does not exclude the ranking prefix");
    }
}

} // namespace

Graph load_model(const std::filesystem::path& path) {
    if (path.extension() == ".onnx")
        return import_onnx(path);
    return load_model_container(path);
}

std::string config_hash(const SweepConfig& cfg) { return open_session(cfg)->hash; }

json checkpoint_to_json(const SweepCheckpoint& c) {
    json variants = json::array();
    for (const auto& v : c.variants)
        variants.push_back(variant_to_json(v));
    return json{{"model_name", c.model_name},
                {"mode", mode_name(c.mode)},
                {"ranking", c.ranking},
                {"layer_errors", layer_errors_to_json(c.layer_errors)},
                {"variants", variants},
                {"config_hash", c.config_hash},
                {"rng_seed", c.rng_seed},
                {"eval_indices", c.eval_indices},
                {"started_at", c.started_at}};
}

SweepCheckpoint checkpoint_from_json(const json& j) {
    SweepCheckpoint c;
    try {
        c.model_name = j.at("model_name").get<std::string>();
        c.mode = mode_from_name(j.at("mode").get<std::string>());
        c.ranking = j.at("ranking").get<std::vector<std::string>>();
        c.layer_errors = layer_errors_from_json(j.at("layer_errors"));
        for (const auto& v : j.at("variants"))
            c.variants.push_back(variant_from_json(v));
        c.config_hash = j.at("config_hash").get<std::string>();
        c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        c.eval_indices = j.at("eval_indices").get<std::vector<std::int64_t>>();
        c.started_at = j.at("started_at").get<std::string>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const FormatError& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ArgumentError& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    check_prefix_rule(c);
    return c;
}

void write_checkpoint(const SweepCheckpoint& c, const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, checkpoint_to_json(c).dump(2) + "\n");
}

SweepCheckpoint read_checkpoint(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file_text(path);
    } catch (const IoError& e) {
        throw CheckpointError(std::string("cannot read checkpoint: ") + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

std::vector<VariantRecord> plan_sweep(const Graph& g, const std::vector<std::string>& ranking) {
    auto quantizable = quantizable_nodes(g);
    auto sorted_ranking = ranking;
    std::sort(quantizable.begin(), quantizable.end());
    std::sort(sorted_ranking.begin(), sorted_ranking.end());
    if (quantizable != sorted_ranking)
        throw ArgumentError("ranking must list every quantizable node of '" + g.name + "' exactly once");
    std::vector<VariantRecord> variants;
    for (std::size_t i = 0; i <= ranking.size(); ++i) {
        VariantRecord v;
        v.variant_index = static_cast<std::int64_t>(i);
        v.excluded_layers.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(i));
        variants.push_back(std::move(v));
    }
    return variants;
}

VariantRecord evaluate_variant(const Graph& g, VariantRecord v, const EvalContext& ctx) {
    QuantRecipe recipe;
    recipe.mode = ctx.mode;
    recipe.excluded_layers = v.excluded_layers;
    if (ctx.calibration)
        recipe.calibration = *ctx.calibration;
    const Graph q = selective_quantize(g, recipe);
    v.size_bytes = static_cast<std::int64_t>(serialize_model_bytes(q).size());

    const auto predicted = top_k(run_logits(q, ctx.eval_batch, ctx.chunk_size), ctx.top_k);
    if (predicted.size() != ctx.baseline_topk.size())
        throw ExecutionError("variant produced " + std::to_string(predicted.size()) + " predictions for " +
                             std::to_string(ctx.baseline_topk.size()) + " samples");
    std::size_t top1_diff = 0, topk_diff = 0, correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto& mine = predicted[i];
        const auto& base = ctx.baseline_topk[i];
        top1_diff += mine.front() != base.front();
        const bool disjoint = std::none_of(mine.begin(), mine.end(), [&](std::int64_t c) {
            return std::find(base.begin(), base.end(), c) != base.end();
        });
        topk_diff += disjoint;
        if (i < ctx.labels.size())
            correct += mine.front() == ctx.labels[i];
    }
    const double n = static_cast<double>(predicted.size());
    v.top1_mismatch = static_cast<double>(top1_diff) / n;
    v.topk_mismatch = static_cast<double>(topk_diff) / n;
    if (ctx.labels.size() == predicted.size())
        v.top1_accuracy = static_cast<double>(correct) / n;
    v.status = VariantStatus::Done;
    return v;
}

SweepReport run_sweep(const SweepConfig& cfg, const SweepHooks& hooks) {
    auto s = open_session(cfg);
    if (cfg.excluded_layers)
        return run_explicit(*s);
    prepare_evaluation(*s);

    AnalysisOptions opts;
    opts.mode = cfg.mode;
    opts.calib_samples = s->calib.size();
    opts.chunk_size = cfg.chunk_size;
    opts.xmodel_weight = cfg.xmodel_weight;
    opts.qdq_weight = cfg.qdq_weight;
    const LayerAnalysis analysis = analyze_layers(s->graph, s->calib, opts);

    SweepCheckpoint c;
    c.model_name = s->graph.name;
    c.mode = cfg.mode;
    c.ranking = analysis.ranking;
    c.layer_errors = analysis.records;
    c.variants = plan_sweep(s->graph, analysis.ranking);
    c.config_hash = s->hash;
    c.rng_seed = cfg.seed;
    c.eval_indices = s->eval_indices;
    c.started_at = resolve_timestamp(cfg);

    const auto checkpoint_path = cfg.output_dir / kCheckpointFile;
    write_checkpoint(c, checkpoint_path);
    return continue_sweep(*s, c, checkpoint_path, hooks);
}

SweepReport resume_sweep(const std::filesystem::path& checkpoint_path, const SweepConfig& cfg,
                         const SweepHooks& hooks) {
    SweepCheckpoint c = read_checkpoint(checkpoint_path);
    auto s = open_session(cfg);
    if (cfg.excluded_layers)
        throw ResumeError("an explicit exclusion list cannot resume a sweep");
    if (c.config_hash != s->hash)
        throw ResumeError("configuration digest " + s->hash + " does not match checkpoint digest " + c.config_hash);
    if (c.model_name != s->graph.name || c.mode != cfg.mode || c.rng_seed != cfg.seed ||
        c.eval_indices != s->eval_indices)
        throw CheckpointError("checkpoint metadata disagrees with its configuration digest");
    plan_sweep(s->graph, c.ranking);
    prepare_evaluation(*s);
    return continue_sweep(*s, c, checkpoint_path, hooks);
}

Graph build_variant(const SweepConfig& cfg, const std::vector<std::string>& excluded) {
    validate_config(cfg);
    const Graph g = load_model(cfg.model);
    QuantRecipe recipe;
    recipe.mode = cfg.mode;
    recipe.excluded_layers = excluded;
    if (cfg.mode == QuantMode::Static) {
        const Dataset calib = load_dataset(cfg.calib_dataset ? *cfg.calib_dataset : cfg.dataset);
        recipe.calibration = calibrate(g, calib, cfg.calib_samples, cfg.chunk_size);
    }
    return selective_quantize(g, recipe);
}

LayerAnalysis run_analysis(const SweepConfig& cfg) {
    validate_config(cfg);
    const Graph g = load_model(cfg.model);
    const Dataset calib = load_dataset(cfg.calib_dataset ? *cfg.calib_dataset : cfg.dataset);
    AnalysisOptions opts;
    opts.mode = cfg.mode;
    opts.calib_samples = cfg.calib_samples;
    opts.chunk_size = cfg.chunk_size;
    opts.xmodel_weight = cfg.xmodel_weight;
    opts.qdq_weight = cfg.qdq_weight;
    LayerAnalysis analysis = analyze_layers(g, calib, opts);
    std::filesystem::create_directories(cfg.output_dir);
    write_layer_errors(analysis.records, cfg.output_dir / kLayerErrorsFile);
    if (!analysis.records.empty())
        plot_layer_errors(analysis.records, cfg.output_dir / kLayerErrorsPlot);
    return analysis;
}

} // namespace tuneqn
