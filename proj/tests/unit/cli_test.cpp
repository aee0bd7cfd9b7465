// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>

#include "json.hpp"
#include "tuneqn/container.hpp"
#include "tuneqn/engine.hpp"
#include "tuneqn/dataset.hpp"
#include "tuneqn/io.hpp"
#include "tuneqn/quantizer.hpp"
#include "tuneqn/sweep.hpp"
#include "test_support.hpp"

namespace tuneqn {
namespace {

using nlohmann::json;
using testing::fixture;
using testing::ScratchDir;

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;

    json summary() const { return json::parse(out); }
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s)
        q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

CliRun run_cli(const ScratchDir& dir, const std::vector<std::string>& args) {
    std::string cmd = quote(TUNEQN_CLI_PATH);
    for (const auto& a : args)
        cmd += " " + quote(a);
    cmd += " > " + quote((dir / "stdout.txt").string()) + " 2> " + quote((dir / "stderr.txt").string());
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file_text(dir / "stdout.txt");
    r.err = read_file_text(dir / "stderr.txt");
    return r;
}

/// Writes a config for tiny_cnn into dir and returns its path.
std::string write_config(const ScratchDir& dir, const std::string& extra = "") {
    const std::string text = "model = " + json(fixture("tiny_cnn.onnx").string()).dump() + "\n" +
                             "dataset = " + json(fixture("tiny_set/manifest.json").string()).dump() + "\n" +
                             "calib_samples = 10\neval_samples = 10\nchunk_size = 4\nseed = 3\ntop_k = 2\n" +
                             "output_dir = \"out\"\ntimestamp = \"2026-01-01T00:00:00Z\"\n" + extra;
    write_file_atomic(dir / "tuneqn.toml", std::string_view(text));
    return (dir / "tuneqn.toml").string();
}

void expect_single_json_line(const CliRun& r) {
    ASSERT_FALSE(r.out.empty());
    EXPECT_EQ(r.out.back(), '\n');
    EXPECT_EQ(r.out.find('\n'), r.out.size() - 1) << r.out;
    EXPECT_NO_THROW(json::parse(r.out));
}

TEST(Cli, AnalyzeWritesOneRecordPerQuantizableNode) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    const CliRun r = run_cli(dir, {"analyze", "--config", cfg});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    expect_single_json_line(r);
    const auto records = json::parse(read_file_text(dir / "out" / kLayerErrorsFile));
    const auto count = quantizable_nodes(load_model(fixture("tiny_cnn.onnx"))).size();
    EXPECT_EQ(records.size(), count);
    EXPECT_EQ(r.summary()["layers"], count);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / kLayerErrorsPlot));
}

TEST(Cli, AnalyzeDynamicNeedsNoCalibration) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    const CliRun r = run_cli(dir, {"analyze", "--config", cfg, "--mode", "dynamic"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.summary()["mode"], "dynamic");
}

TEST(Cli, MissingModelExitsTwoNamingThePath) {
    ScratchDir dir;
    write_file_atomic(dir / "bad.toml",
                      std::string_view("model = \"no_such_model.onnx\"\ndataset = \"no_such_set.json\"\n"));
    const CliRun r = run_cli(dir, {"analyze", "--config", (dir / "bad.toml").string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("no_such_model.onnx"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, UsageErrorsExitTwo) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    EXPECT_EQ(run_cli(dir, {"analyze", "--config", cfg, "--mode", "fast"}).exit_code, 2);
    EXPECT_EQ(run_cli(dir, {"sweep"}).exit_code, 2);
    EXPECT_EQ(run_cli(dir, {"frobnicate"}).exit_code, 2);
    write_file_atomic(dir / "typo.toml", std::string_view("modle = \"x\"\n"));
    EXPECT_EQ(run_cli(dir, {"sweep", "--config", (dir / "typo.toml").string()}).exit_code, 2);
}

TEST(Cli, ExecutionErrorsExitThree) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    const CliRun r = run_cli(dir, {"quantize", "--config", cfg, "--exclude", "ghost"});
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.err.find("ghost"), std::string::npos);
    EXPECT_EQ(run_cli(dir, {"plot", "--out", (dir / "empty").string()}).exit_code, 3);
}

TEST(Cli, SweepWritesAllArtifactsAndRegeneratesSizes) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    const CliRun r = run_cli(dir, {"sweep", "--config", cfg});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    expect_single_json_line(r);
    EXPECT_EQ(r.summary()["status"], "complete");
    for (const char* f : {kReportFile, kCheckpointFile, kLayerErrorsFile, kLayerErrorsPlot, kObjectivesPlot})
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;

    const SweepReport report = read_report(dir / "out" / kReportFile);
    for (const auto& v : report.variants) {
        std::string list;
        for (const auto& id : v.excluded_layers)
            list += (list.empty() ? "" : ",") + id;
        const auto model = dir / ("v" + std::to_string(v.variant_index) + ".qtm");
        const CliRun q = run_cli(dir, {"quantize", "--config", cfg, "--exclude", list, "--model-out", model.string()});
        ASSERT_EQ(q.exit_code, 0) << q.err;
        EXPECT_EQ(static_cast<std::int64_t>(std::filesystem::file_size(model)), v.size_bytes) << v.variant_index;
        EXPECT_EQ(q.summary()["size_bytes"], v.size_bytes);
    }
}

TEST(Cli, QuantizeFullAndEmptyExclusion) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    const Graph original = load_model(fixture("tiny_cnn.onnx"));
    const auto ids = quantizable_nodes(original);
    std::string all;
    for (const auto& id : ids)
        all += (all.empty() ? "" : ",") + id;

    ASSERT_EQ(run_cli(dir, {"quantize", "--config", cfg, "--exclude", all, "--model-out", (dir / "f32.qtm").string()})
                  .exit_code,
              0);
    const Tensor batch = load_dataset(fixture("tiny_set/manifest.json")).batch();
    const Graph kept = load_model_container(dir / "f32.qtm");
    EXPECT_EQ(run_logits(kept, batch), run_logits(original, batch));
    EXPECT_EQ(read_file_bytes(dir / "f32.qtm"), read_file_bytes(fixture("tiny_cnn.qtm")));

    const CliRun q = run_cli(dir, {"quantize", "--config", cfg, "--exclude", ""});
    ASSERT_EQ(q.exit_code, 0) << q.err;
    const auto path = dir / "out" / "tiny_cnn_static.qtm";
    EXPECT_EQ(q.summary()["output"], path.string());
    const Graph full = load_model_container(path);
    for (const auto& id : ids)
        EXPECT_TRUE(full.node(id).quant.has_value()) << id;
}

TEST(Cli, FlagsOverrideConfigValues) {
    ScratchDir dir;
    const auto cfg = write_config(dir, "mode = \"static\"\n");
    const auto out = dir / "override";
    const CliRun r =
        run_cli(dir, {"sweep", "--config", cfg, "--seed", "41", "--mode", "dynamic", "--out", out.string()});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const SweepCheckpoint c = read_checkpoint(out / kCheckpointFile);
    EXPECT_EQ(c.rng_seed, 41u);
    EXPECT_EQ(c.mode, QuantMode::Dynamic);
    EXPECT_FALSE(std::filesystem::exists(dir / "out"));
}

TEST(Cli, StopThenResumeMatchesUninterruptedRun) {
    ScratchDir ref, dir;
    ASSERT_EQ(run_cli(ref, {"sweep", "--config", write_config(ref)}).exit_code, 0);
    const auto cfg = write_config(dir);
    const CliRun stopped = run_cli(dir, {"sweep", "--config", cfg, "--stop-after", "1"});
    ASSERT_EQ(stopped.exit_code, 0) << stopped.err;
    EXPECT_EQ(stopped.summary()["status"], "stopped");
    EXPECT_FALSE(std::filesystem::exists(dir / "out" / kReportFile));

    const CliRun resumed = run_cli(dir, {"sweep", "--config", cfg, "--resume"});
    ASSERT_EQ(resumed.exit_code, 0) << resumed.err;
    expect_single_json_line(resumed);
    const auto n = quantizable_nodes(load_model(fixture("tiny_cnn.onnx"))).size();
    EXPECT_EQ(resumed.summary()["evaluated"], n + 1 - 2);
    EXPECT_EQ(read_file_bytes(dir / "out" / kReportFile), read_file_bytes(ref / "out" / kReportFile));

    const CliRun refused = run_cli(dir, {"sweep", "--config", cfg, "--resume", "--seed", "8"});
    EXPECT_EQ(refused.exit_code, 2);
}

TEST(Cli, ResumeWithoutCheckpointFails) {
    ScratchDir dir;
    const CliRun r = run_cli(dir, {"sweep", "--config", write_config(dir), "--resume"});
    EXPECT_NE(r.exit_code, 0);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, SweepExcludeEmitsSingleVariant) {
    ScratchDir dir;
    const auto ids = quantizable_nodes(load_model(fixture("tiny_cnn.onnx")));
    const CliRun r = run_cli(dir, {"sweep", "--config", write_config(dir), "--exclude", ids.front()});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const SweepReport report = read_report(dir / "out" / kReportFile);
    ASSERT_EQ(report.variants.size(), 1u);
    EXPECT_EQ(report.variants[0].excluded_layers, std::vector<std::string>{ids.front()});
}

TEST(Cli, ParetoAndPlotRecomputeFromReport) {
    ScratchDir dir;
    const auto cfg = write_config(dir);
    ASSERT_EQ(run_cli(dir, {"sweep", "--config", cfg}).exit_code, 0);
    const auto before = read_file_bytes(dir / "out" / kReportFile);
    const CliRun p = run_cli(dir, {"pareto", "--config", cfg});
    ASSERT_EQ(p.exit_code, 0) << p.err;
    EXPECT_EQ(read_file_bytes(dir / "out" / kReportFile), before);
    const CliRun one = run_cli(dir, {"pareto", "--out", (dir / "out").string(), "--candidates", "1"});
    ASSERT_EQ(one.exit_code, 0) << one.err;
    EXPECT_EQ(one.summary()["top_candidates"].size(), 1u);

    std::filesystem::remove(dir / "out" / kObjectivesPlot);
    const CliRun plot = run_cli(dir, {"plot", "--config", cfg});
    ASSERT_EQ(plot.exit_code, 0) << plot.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / kObjectivesPlot));
    EXPECT_EQ(plot.summary()["files"].size(), 2u);
}

} // namespace
} // namespace tuneqn
