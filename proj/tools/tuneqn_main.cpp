// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

// tuneqn command-line driver. Diagnostics go to stderr; stdout receives a single
// JSON summary line.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tuneqn/container.hpp"
#include "tuneqn/sweep.hpp"

namespace {

using nlohmann::json;
using namespace tuneqn;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitExecution = 3;

struct Flags {
    std::string config;
    std::string mode;
    std::uint64_t seed = 0;
    bool resume = false;
    std::string exclude;
    std::string out;
    std::string model_out;
    std::int64_t stop_after = -1;
    std::size_t candidates = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* exclude_opt = nullptr;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty())
            out.push_back(item);
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

/// Config file values with command-line overrides applied.
SweepConfig effective_config(const Flags& f) {
    if (f.config.empty())
        throw ConfigError("--config is required");
    SweepConfig cfg = load_config(f.config);
    if (!f.mode.empty()) {
        try {
            cfg.mode = mode_from_name(f.mode);
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string("--mode: ") + e.what());
        }
    }
    if (f.seed_opt && f.seed_opt->count())
        cfg.seed = f.seed;
    if (!f.out.empty())
        cfg.output_dir = f.out;
    if (f.exclude_opt && f.exclude_opt->count())
        cfg.excluded_layers = split_list(f.exclude);
    validate_config(cfg);
    return cfg;
}

std::filesystem::path report_dir(const Flags& f) {
    if (!f.out.empty())
        return f.out;
    if (!f.config.empty())
        return load_config(f.config).output_dir;
    throw ConfigError("either --out or --config is required");
}

json cmd_analyze(const Flags& f) {
    const SweepConfig cfg = effective_config(f);
    const LayerAnalysis a = run_analysis(cfg);
    std::cerr << "analyzed " << a.records.size() << " quantizable layers\n";
    return {{"command", "analyze"},
            {"mode", mode_name(cfg.mode)},
            {"layers", a.records.size()},
            {"ranking", a.ranking},
            {"output_dir", cfg.output_dir.string()}};
}

json cmd_quantize(const Flags& f) {
    const SweepConfig cfg = effective_config(f);
    const std::vector<std::string> excluded = cfg.excluded_layers.value_or(std::vector<std::string>{});
    const Graph q = build_variant(cfg, excluded);
    std::filesystem::path path = f.model_out.empty()
                                     ? cfg.output_dir / (cfg.model.stem().string() + "_" +
                                                         std::string(mode_name(cfg.mode)) + ".qtm")
                                     : std::filesystem::path(f.model_out);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const auto size = serialize_model(q, path);
    std::cerr << "wrote " << path.string() << " (" << size << " bytes)\n";
    return {{"command", "quantize"},
            {"mode", mode_name(cfg.mode)},
            {"excluded_layers", excluded},
            {"size_bytes", size},
            {"output", path.string()}};
}

json cmd_sweep(const Flags& f) {
    const SweepConfig cfg = effective_config(f);
    const auto checkpoint = cfg.output_dir / kCheckpointFile;
    SweepHooks hooks;
    std::int64_t completed = 0;
    hooks.on_variant_done = [&](const VariantRecord& v) {
        ++completed;
        std::cerr << "variant " << v.variant_index << ": size " << v.size_bytes << " bytes, top-1 mismatch "
                  << v.top1_mismatch << "\n";
        if (f.stop_after >= 0 && v.variant_index >= f.stop_after)
            throw SweepStopped("stopped after variant " + std::to_string(v.variant_index));
    };
    try {
        const SweepReport r = f.resume ? resume_sweep(checkpoint, cfg, hooks) : run_sweep(cfg, hooks);
        return {{"command", "sweep"},
                {"status", "complete"},
                {"resumed", f.resume},
                {"evaluated", completed},
                {"variants", r.variants.size()},
                {"top_candidates", r.pareto.top_candidates},
                {"report", (cfg.output_dir / kReportFile).string()}};
    } catch (const SweepStopped& e) {
        std::cerr << e.what() << "\n";
        return {{"command", "sweep"},
                {"status", "stopped"},
                {"resumed", f.resume},
                {"evaluated", completed},
                {"checkpoint", checkpoint.string()}};
    }
}

json cmd_pareto(const Flags& f) {
    const auto dir = report_dir(f);
    SweepReport r = read_report(dir / kReportFile);
    std::size_t k = f.candidates;
    if (k == 0)
        k = f.config.empty() ? 3 : load_config(f.config).pareto_candidates;
    finalize_report(r, k);
    write_report(r, dir / kReportFile);
    return {{"command", "pareto"}, {"fronts", r.pareto.fronts}, {"top_candidates", r.pareto.top_candidates}};
}

json cmd_plot(const Flags& f) {
    const auto dir = report_dir(f);
    const SweepReport r = read_report(dir / kReportFile);
    std::vector<std::string> files;
    plot_objectives(r, dir / kObjectivesPlot);
    files.push_back((dir / kObjectivesPlot).string());
    if (!r.layer_errors.empty()) {
        plot_layer_errors(r.layer_errors, dir / kLayerErrorsPlot);
        files.push_back((dir / kLayerErrorsPlot).string());
    }
    return {{"command", "plot"}, {"files", files}};
}

void add_config(CLI::App* sub, Flags& f, bool required) {
    auto* opt = sub->add_option("--config", f.config, "Key/value configuration file");
    if (required)
        opt->required();
    sub->add_option("--out", f.out, "Output directory (overrides output_dir)");
}

void add_pipeline(CLI::App* sub, Flags& f) {
    add_config(sub, f, true);
    sub->add_option("--mode", f.mode, "Quantization mode")->check(CLI::IsMember({"static", "dynamic"}));
    f.seed_opt = sub->add_option("--seed", f.seed, "Evaluation subsampling seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective quantization tuner: per-layer sensitivity analysis, decremental sweep, Pareto selection"};
    app.require_subcommand(1);
    Flags f;

    auto* analyze = app.add_subcommand("analyze", "Rank layers by quantization sensitivity");
    add_pipeline(analyze, f);

    auto* quantize = app.add_subcommand("quantize", "Write one selectively quantized model");
    add_pipeline(quantize, f);
    quantize->add_option("--exclude", f.exclude, "Comma-separated node ids kept in float");
    quantize->add_option("--model-out", f.model_out, "Output model path");

    auto* sweep = app.add_subcommand("sweep", "Run the decremental sweep and select Pareto candidates");
    add_pipeline(sweep, f);
    sweep->add_flag("--resume", f.resume, "Continue from the checkpoint in the output directory");
    sweep->add_option("--stop-after", f.stop_after, "Stop once this variant index has been committed");

    auto* pareto = app.add_subcommand("pareto", "Recompute Pareto fronts of an existing report");
    add_config(pareto, f, false);
    pareto->add_option("--candidates", f.candidates, "Number of top candidates")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "Re-render plots from an existing report");
    add_config(plot, f, false);

    // --exclude belongs to quantize and sweep; both bind the same storage.
    auto* sweep_exclude = sweep->add_option("--exclude", f.exclude, "Evaluate only this exclusion list");
    auto* quantize_exclude = quantize->get_option("--exclude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    f.exclude_opt = sweep->parsed() ? sweep_exclude : quantize_exclude;

    try {
        json summary;
        if (analyze->parsed())
            summary = cmd_analyze(f);
        else if (quantize->parsed())
            summary = cmd_quantize(f);
        else if (sweep->parsed())
            summary = cmd_sweep(f);
        else if (pareto->parsed())
            summary = cmd_pareto(f);
        else
            summary = cmd_plot(f);
        std::cout << summary.dump() << std::endl;
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ResumeError& e) {
        std::cerr << "resume refused: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitExecution;
    }
}
