// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "tuneqn/container.hpp"
#include "tuneqn/dataset.hpp"
#include "tuneqn/io.hpp"
#include "test_support.hpp"

namespace tuneqn {
namespace {

using testing::fixture;
using testing::ScratchDir;

std::vector<std::byte> replace_all(std::vector<std::byte> bytes, std::string_view from, std::string_view to) {
    EXPECT_EQ(from.size(), to.size());
    std::string s(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return {reinterpret_cast<const std::byte*>(s.data()), reinterpret_cast<const std::byte*>(s.data()) + s.size()};
}

TEST(Container, LoadsTinyFixture) {
    const Graph g = load_model_container(fixture("tiny_cnn.qtm"));
    EXPECT_EQ(g.name, "tiny_cnn");
    ASSERT_EQ(g.nodes.size(), 6u);
    EXPECT_EQ(g.nodes[0].id, "conv1");
    EXPECT_EQ(g.nodes[0].op, OpKind::Conv);
    EXPECT_EQ(g.nodes[0].weights.at("conv1.W").shape(), (Shape{8, 3, 3, 3}));
    EXPECT_EQ(g.inputs.at(0).shape, (Shape{-1, 3, 8, 8}));
    EXPECT_EQ(g.logits_output, "probs");
}

TEST(Container, ReserializationReproducesFixtureBytes) {
    for (const char* name : {"tiny_cnn.qtm", "small_cnn.qtm"}) {
        const auto bytes = read_file_bytes(fixture(name));
        EXPECT_EQ(serialize_model_bytes(parse_model_container(bytes)), bytes) << name;
    }
}

TEST(Container, RoundTripPreservesQuantAnnotations) {
    Graph g = testing::gemm_graph(2, 2, {1, 0, 0, 1}, {0.5f, -0.5f});
    Node& n = g.nodes[0];
    n.weights.at("fc.W") = Tensor({2, 2}, std::vector<std::int8_t>{127, 0, 0, 127});
    n.weight_params["fc.W"] = {1.0f / 127.0f, 0, DType::I8};
    n.quant = NodeQuant{QuantMode::Static, QuantParams{0.1f, 3, DType::U8}, QuantParams{0.2f, 128, DType::U8}};
    n.fake_quant = FakeQuant{FakeQuantSite{}, FakeQuantSite{QuantParams{0.25f, 0, DType::U8}}};
    EXPECT_EQ(parse_model_container(serialize_model_bytes(g)), g);
}

TEST(Container, RejectsBadMagicAndTruncation) {
    auto bytes = read_file_bytes(fixture("tiny_cnn.qtm"));
    auto bad = bytes;
    bad[0] = std::byte{'X'};
    EXPECT_THROW(parse_model_container(bad), FormatError);
    std::vector<std::byte> truncated(bytes.begin(), bytes.begin() + 40);
    EXPECT_THROW(parse_model_container(truncated), FormatError);
    std::vector<std::byte> short_blob(bytes.begin(), bytes.end() - 4);
    EXPECT_THROW(parse_model_container(short_blob), FormatError);
}

TEST(Container, ListsEveryUnsupportedOp) {
    auto bytes = read_file_bytes(fixture("tiny_cnn.qtm"));
    bytes = replace_all(bytes, "\"op\":\"Relu\"", "\"op\":\"LSTM\"");
    bytes = replace_all(bytes, "\"op\":\"Softmax\"", "\"op\":\"TopKish\"");
    try {
        parse_model_container(bytes);
        FAIL() << "expected UnsupportedOpError";
    } catch (const UnsupportedOpError& e) {
        EXPECT_EQ(e.ops(), (std::vector<std::string>{"LSTM", "TopKish"}));
    }
}

TEST(Container, EmptyGraphCannotBeSerialized) {
    Graph g;
    g.name = "empty";
    EXPECT_THROW(serialize_model_bytes(g), FormatError);
}

TEST(TensorFile, RoundTripAllDtypes) {
    ScratchDir dir;
    const std::vector<Tensor> tensors{Tensor({2, 2}, std::vector<float>{1.5f, -2, 0, 3}),
                                      Tensor({3}, std::vector<std::int8_t>{-128, 0, 127}),
                                      Tensor({2}, std::vector<std::uint8_t>{0, 255}),
                                      Tensor({1}, std::vector<std::int32_t>{-70000}),
                                      Tensor({2}, std::vector<std::int64_t>{-1, 1LL << 40})};
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto path = dir / ("t" + std::to_string(i) + ".qtt");
        write_tensor_file(tensors[i], path);
        EXPECT_EQ(read_tensor_file(path), tensors[i]);
    }
}

TEST(TensorFile, RejectsTruncatedPayload) {
    ScratchDir dir;
    write_tensor_file(Tensor({4}, std::vector<float>{1, 2, 3, 4}), dir / "t.qtt");
    auto bytes = read_file_bytes(dir / "t.qtt");
    bytes.pop_back();
    EXPECT_THROW(parse_tensor_file(bytes), FormatError);
}

TEST(Dataset, LoadsFixtureSets) {
    const Dataset tiny = load_dataset(fixture("tiny_set/manifest.json"));
    EXPECT_EQ(tiny.size(), 10u);
    EXPECT_EQ(tiny.samples[0].input.shape(), (Shape{3, 8, 8}));
    const Dataset small = load_dataset(fixture("small_set/manifest.json"));
    EXPECT_EQ(small.size(), 200u);
    EXPECT_EQ(small.batch().shape(), (Shape{200, 3, 8, 8}));
    EXPECT_EQ(small.head(7).size(), 7u);
    const std::vector<std::size_t> pick{3, 1};
    EXPECT_EQ(small.subset(pick).samples[0].input, small.samples[3].input);
}

TEST(Dataset, WriteThenLoadRoundTrip) {
    ScratchDir dir;
    Dataset ds;
    ds.name = "mini";
    ds.samples.push_back({Tensor({2}, std::vector<float>{1, 2}), 0});
    ds.samples.push_back({Tensor({2}, std::vector<float>{3, 4}), 5});
    write_dataset(ds, dir.path());
    const Dataset back = load_dataset(dir / "manifest.json");
    EXPECT_EQ(back.name, "mini");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.samples[1].input, ds.samples[1].input);
    EXPECT_EQ(back.samples[1].label, 5);
}

TEST(Dataset, ReportsBrokenManifests) {
    ScratchDir dir;
    EXPECT_THROW(load_dataset(dir / "missing.json"), IoError);
    write_file_atomic(dir / "bad.json", std::string_view("{\"samples\": [ }"));
    EXPECT_THROW(load_dataset(dir / "bad.json"), DatasetError);
    write_tensor_file(Tensor({2}, std::vector<float>{1, 2}), dir / "a.qtt");
    write_file_atomic(dir / "neg.json",
                      std::string_view("{\"name\":\"n\",\"samples\":[{\"tensor\":\"a.qtt\",\"label\":-1}]}"));
    EXPECT_THROW(load_dataset(dir / "neg.json"), DatasetError);
    write_file_atomic(dir / "gone.json",
                      std::string_view("{\"name\":\"n\",\"samples\":[{\"tensor\":\"zzz.qtt\",\"label\":0}]}"));
    EXPECT_THROW(load_dataset(dir / "gone.json"), IoError);
    write_file_atomic(dir / "empty.json", std::string_view("{\"name\":\"n\",\"samples\":[]}"));
    EXPECT_THROW(load_dataset(dir / "empty.json"), DatasetError);
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
    ScratchDir dir;
    write_file_atomic(dir / "f.txt", std::string_view("hello"));
    EXPECT_EQ(read_file_text(dir / "f.txt"), "hello");
    EXPECT_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
    EXPECT_NE(fnv1a64(std::string_view("a")), fnv1a64(std::string_view("b")));
}

} // namespace
} // namespace tuneqn
