// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "tuneqn/container.hpp"
#include "tuneqn/dataset.hpp"
#include "tuneqn/engine.hpp"
#include "tuneqn/io.hpp"
#include "tuneqn/quantizer.hpp"
#include "tuneqn/sweep.hpp"
#include "test_support.hpp"

namespace tuneqn {
namespace {

using testing::fixture;
using testing::ScratchDir;

SweepConfig tiny_config(const std::filesystem::path& out, QuantMode mode = QuantMode::Static) {
    SweepConfig cfg;
    cfg.model = fixture("tiny_cnn.onnx");
    cfg.dataset = fixture("tiny_set/manifest.json");
    cfg.mode = mode;
    cfg.calib_samples = 10;
    cfg.eval_samples = 10;
    cfg.chunk_size = 4;
    cfg.seed = 3;
    cfg.top_k = 2;
    cfg.output_dir = out;
    cfg.timestamp = "2026-01-01T00:00:00Z";
    return cfg;
}

std::size_t quantizable_count(const std::filesystem::path& model) {
    return quantizable_nodes(load_model(model)).size();
}

TEST(Config, ParsesEveryValueKind) {
    const SweepConfig cfg = parse_config_text(R"(
# comment line
model = "models/net.onnx"   # trailing comment
dataset = 'data/manifest.json'
mode = "dynamic"
calib_samples = 12
eval_samples = 40
chunk_size = 8
seed = 99
output_dir = "/abs/out"
excluded_layers = ["conv1", "fc"]
top_k = 3
xmodel_weight = 0.25
qdq_weight = 0.75
)",
                                              "/base");
    EXPECT_EQ(cfg.model, std::filesystem::path("/base/models/net.onnx"));
    EXPECT_EQ(cfg.dataset, std::filesystem::path("/base/data/manifest.json"));
    EXPECT_EQ(cfg.output_dir, std::filesystem::path("/abs/out"));
    EXPECT_EQ(cfg.mode, QuantMode::Dynamic);
    EXPECT_EQ(cfg.calib_samples, 12u);
    EXPECT_EQ(cfg.eval_samples, 40u);
    EXPECT_EQ(cfg.chunk_size, 8);
    EXPECT_EQ(cfg.seed, 99u);
    ASSERT_TRUE(cfg.excluded_layers);
    EXPECT_EQ(*cfg.excluded_layers, (std::vector<std::string>{"conv1", "fc"}));
    EXPECT_EQ(cfg.top_k, 3);
    EXPECT_DOUBLE_EQ(cfg.xmodel_weight, 0.25);
    EXPECT_DOUBLE_EQ(cfg.qdq_weight, 0.75);
}

TEST(Config, DefaultsApplyWhenKeysAreAbsent) {
    const SweepConfig cfg = parse_config_text("model = \"m.qtm\"\ndataset = \"d.json\"\n");
    EXPECT_EQ(cfg.mode, QuantMode::Static);
    EXPECT_EQ(cfg.calib_samples, 50u);
    EXPECT_EQ(cfg.eval_samples, 300u);
    EXPECT_EQ(cfg.chunk_size, 64);
    EXPECT_FALSE(cfg.excluded_layers);
}

TEST(Config, RejectsMalformedInput) {
    for (const char* text : {"model = \"a\"\nmodel = \"b\"\n", "colour = \"red\"\n", "[section]\n", "seed = \"x\"\n",
                             "mode = \"fast\"\n", "calib_samples = 1.5\n", "model \"a\"\n", "excluded_layers = [1, 2]\n",
                             "model = \"unterminated\n", "seed = -4\n"})
        EXPECT_THROW(parse_config_text(text), ConfigError) << text;
}

TEST(Config, LoadResolvesAgainstFileDirectory) {
    ScratchDir dir;
    std::filesystem::create_directories(dir / "sub");
    write_file_atomic(dir / "sub" / "tuneqn.toml", std::string_view("model = \"m.qtm\"\ndataset = \"../d.json\"\n"));
    const SweepConfig cfg = load_config(dir / "sub" / "tuneqn.toml");
    EXPECT_EQ(cfg.model.lexically_normal(), (dir / "sub" / "m.qtm").lexically_normal());
    EXPECT_EQ(cfg.dataset.lexically_normal(), (dir / "d.json").lexically_normal());
    EXPECT_THROW(load_config(dir / "missing.toml"), ConfigError);
}

TEST(Config, ValidationNamesMissingPaths) {
    ScratchDir dir;
    SweepConfig cfg = tiny_config(dir.path());
    EXPECT_NO_THROW(validate_config(cfg));
    cfg.model = dir / "absent.onnx";
    try {
        validate_config(cfg);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("absent.onnx"), std::string::npos);
    }
    cfg = tiny_config(dir.path());
    cfg.chunk_size = 0;
    EXPECT_THROW(validate_config(cfg), ConfigError);
    cfg = tiny_config(dir.path());
    cfg.eval_samples = 0;
    EXPECT_THROW(validate_config(cfg), ConfigError);
}

TEST(Config, HashTracksResultAffectingSettingsOnly) {
    ScratchDir dir;
    const SweepConfig base = tiny_config(dir.path());
    SweepConfig other = base;
    other.chunk_size = 1;
    other.output_dir = dir / "elsewhere";
    EXPECT_EQ(config_hash(base), config_hash(other));
    other = base;
    other.seed = 4;
    EXPECT_NE(config_hash(base), config_hash(other));
    other = base;
    other.mode = QuantMode::Dynamic;
    EXPECT_NE(config_hash(base), config_hash(other));
    other = base;
    other.model = fixture("small_cnn.onnx");
    EXPECT_NE(config_hash(base), config_hash(other));
}

TEST(Plan, PrefixExclusionFromRanking) {
    Graph g;
    g.name = "three";
    g.inputs = {{"input", DType::F32, {-1, 2}}};
    const auto add_fc = [&](const std::string& id, const std::string& in, const std::string& out) {
        Node n;
        n.id = id;
        n.op = OpKind::Gemm;
        n.inputs = {in, id + ".W"};
        n.outputs = {out};
        n.attrs["transB"] = std::int64_t{1};
        n.weights.emplace(id + ".W", Tensor({2, 2}, std::vector<float>{1, 0, 0, 1}));
        g.nodes.push_back(std::move(n));
    };
    add_fc("a", "input", "x1");
    add_fc("b", "x1", "x2");
    add_fc("c", "x2", "logits");
    g.outputs = {"logits"};
    g.logits_output = "logits";
    const auto plan = plan_sweep(g, {"a", "c", "b"});
    ASSERT_EQ(plan.size(), 4u);
    const std::vector<std::vector<std::string>> expected{{}, {"a"}, {"a", "c"}, {"a", "c", "b"}};
    for (std::size_t i = 0; i < plan.size(); ++i) {
        EXPECT_EQ(plan[i].variant_index, static_cast<std::int64_t>(i));
        EXPECT_EQ(plan[i].excluded_layers, expected[i]);
        EXPECT_EQ(plan[i].status, VariantStatus::Pending);
    }
    EXPECT_THROW(plan_sweep(g, {"a", "c"}), ArgumentError);
    EXPECT_THROW(plan_sweep(g, {"a", "c", "b", "b"}), ArgumentError);
}

TEST(Plan, NoQuantizableLayersGivesOneVariant) {
    Graph g;
    g.name = "relu";
    g.inputs = {{"input", DType::F32, {-1, 2}}};
    Node n;
    n.id = "relu";
    n.op = OpKind::Relu;
    n.inputs = {"input"};
    n.outputs = {"logits"};
    g.nodes.push_back(n);
    g.outputs = {"logits"};
    g.logits_output = "logits";
    const auto plan = plan_sweep(g, {});
    ASSERT_EQ(plan.size(), 1u);
    EXPECT_TRUE(plan[0].excluded_layers.empty());
}

TEST(Plan, TinyVariantCountIsQuantizableCountPlusOne) {
    const Graph g = load_model(fixture("tiny_cnn.qtm"));
    std::size_t scan = 0;
    for (const auto& node : g.nodes)
        scan += (node.op == OpKind::Conv || node.op == OpKind::Gemm || node.op == OpKind::MatMul) ? 1 : 0;
    EXPECT_EQ(plan_sweep(g, quantizable_nodes(g)).size(), scan + 1);
}

class TinyEval : public ::testing::Test {
protected:
    void SetUp() override {
        g = load_model(fixture("tiny_cnn.qtm"));
        ds = load_dataset(fixture("tiny_set/manifest.json"));
        cal = calibrate(g, ds, 10);
        ctx.mode = QuantMode::Static;
        ctx.calibration = &cal;
        ctx.eval_batch = ds.batch();
        for (const auto& sample : ds.samples)
            ctx.labels.push_back(sample.label);
        ctx.top_k = 2;
        ctx.chunk_size = 3;
        ctx.baseline_topk = top_k(run_logits(g, ctx.eval_batch), ctx.top_k);
    }
    Graph g;
    Dataset ds;
    CalibrationMap cal;
    EvalContext ctx;
};

TEST_F(TinyEval, EndpointsBehave) {
    const auto plan = plan_sweep(g, quantizable_nodes(g));
    const VariantRecord all_q = evaluate_variant(g, plan.front(), ctx);
    const VariantRecord none_q = evaluate_variant(g, plan.back(), ctx);
    EXPECT_EQ(none_q.status, VariantStatus::Done);
    EXPECT_EQ(none_q.top1_mismatch, 0.0);
    EXPECT_EQ(none_q.topk_mismatch, 0.0);
    EXPECT_EQ(none_q.size_bytes, static_cast<std::int64_t>(std::filesystem::file_size(fixture("tiny_cnn.qtm"))));
    EXPECT_GE(all_q.top1_mismatch, none_q.top1_mismatch);
    EXPECT_LT(all_q.size_bytes, none_q.size_bytes);
    ASSERT_TRUE(none_q.top1_accuracy);
}

TEST_F(TinyEval, MismatchCountsAgainstBaselineTop1) {
    const auto plan = plan_sweep(g, quantizable_nodes(g));
    const VariantRecord v = evaluate_variant(g, plan.front(), ctx);
    const Graph q = selective_quantize(g, {QuantMode::Static, {}, cal});
    const auto got = top_k(run_logits(q, ctx.eval_batch), 2);
    std::size_t diff = 0, disjoint = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        diff += got[i][0] != ctx.baseline_topk[i][0];
        bool shared = false;
        for (auto a : got[i])
            for (auto b : ctx.baseline_topk[i])
                shared = shared || a == b;
        disjoint += !shared;
    }
    EXPECT_DOUBLE_EQ(v.top1_mismatch, static_cast<double>(diff) / static_cast<double>(got.size()));
    EXPECT_DOUBLE_EQ(v.topk_mismatch, static_cast<double>(disjoint) / static_cast<double>(got.size()));
    EXPECT_EQ(v.size_bytes, static_cast<std::int64_t>(serialize_model_bytes(q).size()));
}

TEST(Sweep, FreshTinyRunCompletesEveryVariant) {
    ScratchDir dir;
    const SweepConfig cfg = tiny_config(dir.path());
    const SweepReport r = run_sweep(cfg);
    const std::size_t n = quantizable_count(cfg.model);
    ASSERT_EQ(r.variants.size(), n + 1);
    for (const auto& v : r.variants)
        EXPECT_EQ(v.status, VariantStatus::Done);
    EXPECT_EQ(r.variants.back().top1_mismatch, 0.0);
    for (const auto& v : r.variants)
        EXPECT_GE(v.size_bytes, r.variants.front().size_bytes);
    for (const char* f : {kReportFile, kCheckpointFile, kLayerErrorsFile, kLayerErrorsPlot, kObjectivesPlot})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    EXPECT_EQ(read_file_text(dir / kReportFile), render_report(r));
    const SweepCheckpoint c = read_checkpoint(dir / kCheckpointFile);
    EXPECT_EQ(c.config_hash, config_hash(cfg));
    EXPECT_EQ(c.rng_seed, 3u);
    EXPECT_EQ(c.ranking, r.ranking);
    EXPECT_EQ(c.variants, r.variants);
}

TEST(Sweep, EvalSubsetIsSeededAndSorted) {
    ScratchDir a, b, c;
    SweepConfig cfg = tiny_config(a.path());
    cfg.eval_samples = 6;
    const auto first = run_sweep(cfg).metadata.eval_indices;
    cfg.output_dir = b.path();
    EXPECT_EQ(run_sweep(cfg).metadata.eval_indices, first);
    ASSERT_EQ(first.size(), 6u);
    EXPECT_TRUE(std::is_sorted(first.begin(), first.end()));
    cfg.output_dir = c.path();
    cfg.seed = 1234;
    EXPECT_NE(run_sweep(cfg).metadata.eval_indices, first);
}

TEST(Sweep, ExplicitExclusionEvaluatesOneVariant) {
    ScratchDir dir;
    SweepConfig cfg = tiny_config(dir.path(), QuantMode::Dynamic);
    const auto ids = quantizable_nodes(load_model(cfg.model));
    cfg.excluded_layers = std::vector<std::string>{ids.front()};
    const SweepReport r = run_sweep(cfg);
    ASSERT_EQ(r.variants.size(), 1u);
    EXPECT_EQ(r.variants[0].excluded_layers, *cfg.excluded_layers);
    EXPECT_FALSE(std::filesystem::exists(dir / kCheckpointFile));
    cfg.excluded_layers = std::vector<std::string>{"ghost"};
    EXPECT_THROW(run_sweep(cfg), RecipeError);
}

class Resume : public ::testing::TestWithParam<QuantMode> {};

TEST_P(Resume, KillAtEveryVariantThenResumeIsByteIdentical) {
    ScratchDir ref;
    const SweepConfig ref_cfg = tiny_config(ref.path(), GetParam());
    run_sweep(ref_cfg);
    const auto expected = read_file_bytes(ref / kReportFile);
    const std::int64_t n = static_cast<std::int64_t>(quantizable_count(ref_cfg.model));

    for (std::int64_t k = 0; k <= n; ++k) {
        ScratchDir dir;
        SweepConfig cfg = tiny_config(dir.path(), GetParam());
        cfg.chunk_size = 1 + k % 3;
        SweepHooks stop;
        stop.before_evaluate = [k](std::int64_t idx) {
            if (idx == k)
                throw SweepStopped("stop");
        };
        EXPECT_THROW(run_sweep(cfg, stop), SweepStopped);
        EXPECT_FALSE(std::filesystem::exists(dir / kReportFile));
        const SweepCheckpoint partial = read_checkpoint(dir / kCheckpointFile);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(partial.variants.size()); ++i)
            EXPECT_EQ(partial.variants[static_cast<std::size_t>(i)].status == VariantStatus::Done, i < k);

        std::vector<std::int64_t> ran;
        SweepHooks count;
        count.before_evaluate = [&](std::int64_t idx) { ran.push_back(idx); };
        resume_sweep(dir / kCheckpointFile, cfg, count);
        EXPECT_EQ(static_cast<std::int64_t>(ran.size()), n + 1 - k) << "k=" << k;
        if (!ran.empty()) {
            EXPECT_EQ(ran.front(), k);
        }
        EXPECT_EQ(read_file_bytes(dir / kReportFile), expected) << "k=" << k;
    }
}

INSTANTIATE_TEST_SUITE_P(Modes, Resume, ::testing::Values(QuantMode::Static, QuantMode::Dynamic),
                         [](const ::testing::TestParamInfo<QuantMode>& info) { return std::string(mode_name(info.param)); });

TEST(Sweep, ResumeOfFinishedRunEvaluatesNothing) {
    ScratchDir dir;
    const SweepConfig cfg = tiny_config(dir.path());
    run_sweep(cfg);
    const auto before = read_file_bytes(dir / kReportFile);
    std::size_t calls = 0;
    SweepHooks hooks;
    hooks.before_evaluate = [&](std::int64_t) { ++calls; };
    resume_sweep(dir / kCheckpointFile, cfg, hooks);
    EXPECT_EQ(calls, 0u);
    EXPECT_EQ(read_file_bytes(dir / kReportFile), before);
}

TEST(Sweep, ResumeRefusesChangedConfiguration) {
    ScratchDir dir;
    SweepConfig cfg = tiny_config(dir.path());
    SweepHooks stop;
    stop.before_evaluate = [](std::int64_t idx) {
        if (idx == 1)
            throw SweepStopped("stop");
    };
    EXPECT_THROW(run_sweep(cfg, stop), SweepStopped);
    const auto checkpoint = read_file_bytes(dir / kCheckpointFile);
    cfg.seed = 77;
    std::size_t calls = 0;
    SweepHooks hooks;
    hooks.before_evaluate = [&](std::int64_t) { ++calls; };
    EXPECT_THROW(resume_sweep(dir / kCheckpointFile, cfg, hooks), ResumeError);
    EXPECT_EQ(calls, 0u);
    EXPECT_EQ(read_file_bytes(dir / kCheckpointFile), checkpoint);
}

TEST(Sweep, FailedVariantIsRerunOnResume) {
    ScratchDir dir;
    const SweepConfig cfg = tiny_config(dir.path());
    run_sweep(cfg);
    const auto expected = read_file_bytes(dir / kReportFile);
    auto j = nlohmann::json::parse(read_file_text(dir / kCheckpointFile));
    j["variants"][1]["status"] = "failed";
    for (std::size_t i = 2; i < j["variants"].size(); ++i)
        j["variants"][i]["status"] = "pending";
    write_file_atomic(dir / kCheckpointFile, std::string_view(j.dump(2)));
    std::vector<std::int64_t> ran;
    SweepHooks hooks;
    hooks.before_evaluate = [&](std::int64_t idx) { ran.push_back(idx); };
    resume_sweep(dir / kCheckpointFile, cfg, hooks);
    ASSERT_FALSE(ran.empty());
    EXPECT_EQ(ran.front(), 1);
    EXPECT_EQ(read_file_bytes(dir / kReportFile), expected);
}

TEST(Checkpoint, CorruptFilesAreCheckpointErrors) {
    ScratchDir dir;
    const SweepConfig cfg = tiny_config(dir.path());
    run_sweep(cfg);
    const std::string text = read_file_text(dir / kCheckpointFile);
    write_file_atomic(dir / "truncated.json", std::string_view(text).substr(0, text.size() / 2));
    EXPECT_THROW(read_checkpoint(dir / "truncated.json"), CheckpointError);
    EXPECT_THROW(resume_sweep(dir / "truncated.json", cfg), CheckpointError);
    EXPECT_THROW(read_checkpoint(dir / "nowhere.json"), CheckpointError);

    auto j = nlohmann::json::parse(text);
    j["variants"][2]["excluded_layers"] = nlohmann::json::array();
    EXPECT_THROW(checkpoint_from_json(j), CheckpointError);
    j = nlohmann::json::parse(text);
    j.erase("rng_seed");
    EXPECT_THROW(checkpoint_from_json(j), CheckpointError);
}

TEST(Checkpoint, JsonRoundTripAndFieldNames) {
    ScratchDir dir;
    run_sweep(tiny_config(dir.path()));
    const SweepCheckpoint c = read_checkpoint(dir / kCheckpointFile);
    const nlohmann::json j = checkpoint_to_json(c);
    for (const char* key : {"model_name", "mode", "ranking", "layer_errors", "variants", "config_hash", "rng_seed"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(checkpoint_from_json(j), c);
    write_checkpoint(c, dir / "copy.json");
    EXPECT_EQ(read_checkpoint(dir / "copy.json"), c);
}

} // namespace
} // namespace tuneqn
