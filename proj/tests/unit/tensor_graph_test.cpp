// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "tuneqn/container.hpp"
#include "tuneqn/graph.hpp"
#include "tuneqn/tensor.hpp"
#include "test_support.hpp"

namespace tuneqn {
namespace {

using testing::gemm_graph;

TEST(Tensor, ShapeAndValues) {
    Tensor t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.dtype(), DType::F32);
    EXPECT_EQ(t.rank(), 2);
    EXPECT_EQ(t.size(), 6);
    EXPECT_EQ(t.byte_size(), 24u);
    EXPECT_EQ(t.values<float>()[4], 5.0f);
    EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ArgumentError);
    EXPECT_THROW(t.values<std::int8_t>(), ArgumentError);
}

TEST(Tensor, ZeroFilledAndScalar) {
    Tensor z(DType::I8, {4});
    for (auto v : z.values<std::int8_t>())
        EXPECT_EQ(v, 0);
    EXPECT_EQ(Tensor::scalar(2.5f).rank(), 0);
    EXPECT_EQ(Tensor::scalar(2.5f).size(), 1);
}

TEST(Tensor, BatchSliceConcatRoundTrip) {
    Tensor t({4, 2}, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7});
    std::vector<Tensor> parts{slice_batch(t, 0, 1), slice_batch(t, 1, 3), slice_batch(t, 3, 4)};
    EXPECT_EQ(parts[1].shape(), (Shape{2, 2}));
    EXPECT_EQ(concat_batch(parts), t);
    EXPECT_THROW(slice_batch(t, 3, 5), ArgumentError);
}

TEST(Tensor, StackAddsLeadingAxis) {
    std::vector<Tensor> items{Tensor({2}, std::vector<float>{1, 2}), Tensor({2}, std::vector<float>{3, 4})};
    const Tensor s = stack(items);
    EXPECT_EQ(s.shape(), (Shape{2, 2}));
    EXPECT_EQ(s.values<float>()[2], 3.0f);
}

TEST(Tensor, EqualityIsBitwise) {
    Tensor a({1}, std::vector<float>{0.0f});
    Tensor b({1}, std::vector<float>{-0.0f});
    EXPECT_FALSE(a == b);
    EXPECT_TRUE(a == Tensor({1}, std::vector<float>{0.0f}));
}

TEST(Tensor, DTypeNames) {
    for (DType d : {DType::F32, DType::I8, DType::U8, DType::I32, DType::I64})
        EXPECT_EQ(dtype_from_name(dtype_name(d)), d);
    EXPECT_THROW(dtype_from_name("F64"), FormatError);
}

TEST(Graph, OpNames) {
    EXPECT_EQ(op_from_name("Conv"), OpKind::Conv);
    EXPECT_EQ(op_name(OpKind::BatchNormalization), "BatchNormalization");
    try {
        op_from_name("LSTM");
        FAIL() << "expected UnsupportedOpError";
    } catch (const UnsupportedOpError& e) {
        ASSERT_EQ(e.ops().size(), 1u);
        EXPECT_EQ(e.ops()[0], "LSTM");
    }
}

TEST(Graph, ValidateAcceptsGemmGraph) {
    EXPECT_NO_THROW(validate(gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0})));
}

TEST(Graph, ValidateRejectsDuplicateIds) {
    Graph g = gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0});
    Node r;
    r.id = "fc";
    r.op = OpKind::Relu;
    r.inputs = {"logits"};
    r.outputs = {"relu"};
    g.nodes.push_back(r);
    EXPECT_THROW(validate(g), GraphError);
}

TEST(Graph, ValidateRejectsUndefinedInputNamingIt) {
    Graph g = gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0});
    g.nodes[0].inputs[0] = "nowhere";
    try {
        validate(g);
        FAIL() << "expected GraphError";
    } catch (const GraphError& e) {
        EXPECT_NE(std::string(e.what()).find("nowhere"), std::string::npos);
    }
}

TEST(Graph, ValidateRejectsBadArityAndLogits) {
    Graph g = gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0});
    g.nodes[0].inputs.resize(1);
    EXPECT_THROW(validate(g), GraphError);
    Graph h = gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0});
    h.logits_output = "missing";
    EXPECT_THROW(validate(h), GraphError);
}

TEST(Graph, TopologicalSortRestoresOrderAndDetectsCycles) {
    Graph g = gemm_graph(2, 2, {1, 0, 0, 1}, {0, 0});
    g.nodes[0].outputs = {"fc_out"};
    Node relu;
    relu.id = "relu";
    relu.op = OpKind::Relu;
    relu.inputs = {"fc_out"};
    relu.outputs = {"logits"};
    g.nodes.insert(g.nodes.begin(), relu);
    EXPECT_THROW(validate(g), GraphError);
    topological_sort(g);
    EXPECT_EQ(g.nodes[0].id, "fc");
    EXPECT_NO_THROW(validate(g));

    g.nodes[0].inputs[0] = "logits";
    EXPECT_THROW(topological_sort(g), GraphError);
}

TEST(Graph, AttributeAccessors) {
    AttributeMap a{{"i", std::int64_t{3}}, {"f", 0.5}, {"v", std::vector<std::int64_t>{1, 2}}, {"s", std::string("x")}};
    EXPECT_EQ(attr_int(a, "i", 0), 3);
    EXPECT_EQ(attr_float(a, "f", 0), 0.5);
    EXPECT_EQ(attr_ints(a, "v", {}), (std::vector<std::int64_t>{1, 2}));
    EXPECT_EQ(attr_string(a, "s", ""), "x");
    EXPECT_EQ(attr_int(a, "absent", 7), 7);
}

} // namespace
} // namespace tuneqn
