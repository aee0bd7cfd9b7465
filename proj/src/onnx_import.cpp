// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal protobuf wire-format reader for the ONNX messages the importer needs.
// Field numbers follow onnx/onnx.proto; unknown fields are skipped.

#include "tuneqn/onnx_import.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <cstring>
#include <map>
#include <set>
#include <string_view>

#include "tuneqn/io.hpp"

namespace tuneqn {

namespace {

enum WireType : std::uint32_t { kVarint = 0, kFixed64 = 1, kLen = 2, kFixed32 = 5 };

class ProtoReader {
public:
    explicit ProtoReader(std::span<const std::byte> data) : data_(data) {}

    bool done() const { return pos_ >= data_.size(); }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            if (pos_ >= data_.size())
                throw FormatError("truncated varint");
            const auto b = static_cast<std::uint8_t>(data_[pos_++]);
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80))
                return v;
        }
        throw FormatError("varint longer than 10 bytes");
    }

    /// Returns (field number, wire type).
    std::pair<std::uint32_t, std::uint32_t> tag() {
        const auto t = varint();
        const auto wire = static_cast<std::uint32_t>(t & 7);
        const auto field = static_cast<std::uint32_t>(t >> 3);
        if (field == 0)
            throw FormatError("invalid field number 0");
        if (wire != kVarint && wire != kFixed64 && wire != kLen && wire != kFixed32)
            throw FormatError("unsupported wire type " + std::to_string(wire));
        return {field, wire};
    }

    std::span<const std::byte> bytes() {
        const auto n = varint();
        if (n > data_.size() - pos_)
            throw FormatError("length-delimited field overruns its message");
        auto s = data_.subspan(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }

    std::string string() {
        auto s = bytes();
        return {reinterpret_cast<const char*>(s.data()), s.size()};
    }

    std::uint32_t fixed32() {
        if (data_.size() - pos_ < 4)
            throw FormatError("truncated fixed32");
        std::uint32_t v;
        std::memcpy(&v, data_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }

    float float32() { return std::bit_cast<float>(fixed32()); }

    void skip(std::uint32_t wire) {
        switch (wire) {
        case kVarint: varint(); break;
        case kFixed64:
            if (data_.size() - pos_ < 8)
                throw FormatError("truncated fixed64");
            pos_ += 8;
            break;
        case kLen: bytes(); break;
        case kFixed32: fixed32(); break;
        default: throw FormatError("unsupported wire type " + std::to_string(wire));
        }
    }

private:
    std::span<const std::byte> data_;
    std::size_t pos_ = 0;
};

void expect_wire(std::uint32_t got, std::uint32_t want, const char* field) {
    if (got != want)
        throw FormatError(std::string("unexpected wire type for ") + field);
}

/// Repeated int64 field that may arrive packed or unpacked.
void read_int64s(ProtoReader& r, std::uint32_t wire, std::vector<std::int64_t>& out) {
    if (wire == kLen) {
        ProtoReader packed(r.bytes());
        while (!packed.done())
            out.push_back(static_cast<std::int64_t>(packed.varint()));
    } else {
        expect_wire(wire, kVarint, "int64");
        out.push_back(static_cast<std::int64_t>(r.varint()));
    }
}

void read_floats(ProtoReader& r, std::uint32_t wire, std::vector<float>& out) {
    if (wire == kLen) {
        ProtoReader packed(r.bytes());
        while (!packed.done())
            out.push_back(packed.float32());
    } else {
        expect_wire(wire, kFixed32, "float");
        out.push_back(r.float32());
    }
}

// TensorProto.DataType
constexpr std::int64_t kOnnxFloat = 1;
constexpr std::int64_t kOnnxInt64 = 7;

struct RawTensor {
    std::string name;
    std::int64_t data_type = 0;
    Shape dims;
    std::vector<float> float_data;
    std::vector<std::int64_t> int64_data;
    std::span<const std::byte> raw;
    bool has_raw = false;
    bool external = false;
};

RawTensor parse_tensor(std::span<const std::byte> data) {
    RawTensor t;
    ProtoReader r(data);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
        case 1: read_int64s(r, wire, t.dims); break;
        case 2: expect_wire(wire, kVarint, "data_type"); t.data_type = static_cast<std::int64_t>(r.varint()); break;
        case 4: read_floats(r, wire, t.float_data); break;
        case 7: read_int64s(r, wire, t.int64_data); break;
        case 8: expect_wire(wire, kLen, "name"); t.name = r.string(); break;
        case 9: expect_wire(wire, kLen, "raw_data"); t.raw = r.bytes(); t.has_raw = true; break;
        case 13: t.external = true; r.skip(wire); break;
        case 14:
            expect_wire(wire, kVarint, "data_location");
            if (r.varint() != 0)
                t.external = true;
            break;
        default: r.skip(wire);
        }
    }
    return t;
}

Tensor to_tensor(const RawTensor& rt) {
    if (rt.external)
        throw FormatError("initializer '" + rt.name + "' uses external data");
    if (rt.data_type == kOnnxFloat) {
        if (rt.has_raw)
            return Tensor::from_bytes(DType::F32, rt.dims, rt.raw);
        return Tensor(rt.dims, rt.float_data);
    }
    if (rt.data_type == kOnnxInt64) {
        if (rt.has_raw)
            return Tensor::from_bytes(DType::I64, rt.dims, rt.raw);
        return Tensor(rt.dims, rt.int64_data);
    }
    throw UnsupportedDtypeError("initializer '" + rt.name + "' has unsupported ONNX data type " +
                                std::to_string(rt.data_type));
}

struct RawAttribute {
    std::string name;
    std::int64_t type = 0;
    std::optional<float> f;
    std::optional<std::int64_t> i;
    std::optional<std::string> s;
    std::vector<std::int64_t> ints;
    bool saw_ints = false;
    bool has_tensor = false;
    bool saw_floats = false;
};

RawAttribute parse_attribute(std::span<const std::byte> data) {
    RawAttribute a;
    ProtoReader r(data);
    std::vector<float> floats;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
        case 1: expect_wire(wire, kLen, "attribute name"); a.name = r.string(); break;
        case 2: expect_wire(wire, kFixed32, "attribute f"); a.f = r.float32(); break;
        case 3: expect_wire(wire, kVarint, "attribute i"); a.i = static_cast<std::int64_t>(r.varint()); break;
        case 4: expect_wire(wire, kLen, "attribute s"); a.s = r.string(); break;
        case 5: a.has_tensor = true; r.skip(wire); break;
        case 7: read_floats(r, wire, floats); a.saw_floats = true; break;
        case 8: read_int64s(r, wire, a.ints); a.saw_ints = true; break;
        case 20: expect_wire(wire, kVarint, "attribute type"); a.type = static_cast<std::int64_t>(r.varint()); break;
        default: r.skip(wire);
        }
    }
    return a;
}

// AttributeProto.AttributeType
constexpr std::int64_t kAttrFloat = 1, kAttrInt = 2, kAttrString = 3, kAttrInts = 7;

std::optional<Attribute> to_attribute(const RawAttribute& a) {
    switch (a.type) {
    case kAttrFloat: return static_cast<double>(a.f.value_or(0.0f));
    case kAttrInt: return a.i.value_or(0);
    case kAttrString: return a.s.value_or("");
    case kAttrInts: return a.ints;
    case 0:
        if (a.f)
            return static_cast<double>(*a.f);
        if (a.i)
            return *a.i;
        if (a.s)
            return *a.s;
        if (a.saw_ints)
            return a.ints;
        return std::nullopt;
    default:
        // Tensor, graph and float-list attributes are not used by the supported operators.
        return std::nullopt;
    }
}

struct RawNode {
    std::string name;
    std::string op_type;
    std::string domain;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<RawAttribute> attrs;
};

RawNode parse_node(std::span<const std::byte> data) {
    RawNode n;
    ProtoReader r(data);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
        case 1: expect_wire(wire, kLen, "node input"); n.inputs.push_back(r.string()); break;
        case 2: expect_wire(wire, kLen, "node output"); n.outputs.push_back(r.string()); break;
        case 3: expect_wire(wire, kLen, "node name"); n.name = r.string(); break;
        case 4: expect_wire(wire, kLen, "op_type"); n.op_type = r.string(); break;
        case 5: expect_wire(wire, kLen, "attribute"); n.attrs.push_back(parse_attribute(r.bytes())); break;
        case 7: expect_wire(wire, kLen, "domain"); n.domain = r.string(); break;
        default: r.skip(wire);
        }
    }
    return n;
}

struct RawValueInfo {
    std::string name;
    std::int64_t elem_type = 0;
    Shape shape;
};

Shape parse_shape(std::span<const std::byte> data) {
    Shape shape;
    ProtoReader r(data);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field != 1) {
            r.skip(wire);
            continue;
        }
        expect_wire(wire, kLen, "dim");
        ProtoReader dim(r.bytes());
        std::int64_t extent = -1;
        while (!dim.done()) {
            auto [df, dw] = dim.tag();
            if (df == 1) {
                expect_wire(dw, kVarint, "dim_value");
                extent = static_cast<std::int64_t>(dim.varint());
            } else {
                dim.skip(dw);
            }
        }
        shape.push_back(extent);
    }
    return shape;
}

RawValueInfo parse_value_info(std::span<const std::byte> data) {
    RawValueInfo v;
    ProtoReader r(data);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field == 1) {
            expect_wire(wire, kLen, "value name");
            v.name = r.string();
        } else if (field == 2) {
            expect_wire(wire, kLen, "value type");
            ProtoReader type(r.bytes());
            while (!type.done()) {
                auto [tf, tw] = type.tag();
                if (tf != 1) {
                    type.skip(tw);
                    continue;
                }
                expect_wire(tw, kLen, "tensor_type");
                ProtoReader tensor(type.bytes());
                while (!tensor.done()) {
                    auto [ef, ew] = tensor.tag();
                    if (ef == 1) {
                        expect_wire(ew, kVarint, "elem_type");
                        v.elem_type = static_cast<std::int64_t>(tensor.varint());
                    } else if (ef == 2) {
                        expect_wire(ew, kLen, "shape");
                        v.shape = parse_shape(tensor.bytes());
                    } else {
                        tensor.skip(ew);
                    }
                }
            }
        } else {
            r.skip(wire);
        }
    }
    return v;
}

} // namespace

Graph parse_onnx(std::span<const std::byte> data) {
    std::span<const std::byte> graph_bytes;
    bool has_graph = false;
    std::int64_t opset = 0;

    ProtoReader model(data);
    while (!model.done()) {
        auto [field, wire] = model.tag();
        if (field == 7) {
            expect_wire(wire, kLen, "graph");
            graph_bytes = model.bytes();
            has_graph = true;
        } else if (field == 8) {
            expect_wire(wire, kLen, "opset_import");
            ProtoReader os(model.bytes());
            std::string domain;
            std::int64_t version = 0;
            while (!os.done()) {
                auto [of, ow] = os.tag();
                if (of == 1) {
                    expect_wire(ow, kLen, "opset domain");
                    domain = os.string();
                } else if (of == 2) {
                    expect_wire(ow, kVarint, "opset version");
                    version = static_cast<std::int64_t>(os.varint());
                } else {
                    os.skip(ow);
                }
            }
            if (domain.empty() || domain == "ai.onnx")
                opset = version;
        } else {
            model.skip(wire);
        }
    }
    if (!has_graph)
        throw FormatError("ONNX model has no graph");

    std::vector<RawNode> raw_nodes;
    std::map<std::string, RawTensor> initializers;
    std::vector<RawValueInfo> raw_inputs;
    std::vector<RawValueInfo> raw_outputs;
    Graph g;
    g.opset_version = opset;

    ProtoReader gr(graph_bytes);
    while (!gr.done()) {
        auto [field, wire] = gr.tag();
        switch (field) {
        case 1: expect_wire(wire, kLen, "node"); raw_nodes.push_back(parse_node(gr.bytes())); break;
        case 2: expect_wire(wire, kLen, "graph name"); g.name = gr.string(); break;
        case 5: {
            expect_wire(wire, kLen, "initializer");
            auto t = parse_tensor(gr.bytes());
            initializers[t.name] = t;
            break;
        }
        case 11: expect_wire(wire, kLen, "graph input"); raw_inputs.push_back(parse_value_info(gr.bytes())); break;
        case 12: expect_wire(wire, kLen, "graph output"); raw_outputs.push_back(parse_value_info(gr.bytes())); break;
        default: gr.skip(wire);
        }
    }

    std::vector<std::string> unsupported;
    for (const auto& n : raw_nodes) {
        const bool default_domain = n.domain.empty() || n.domain == "ai.onnx";
        if ((!default_domain || !try_op_from_name(n.op_type)) &&
            std::find(unsupported.begin(), unsupported.end(), n.op_type) == unsupported.end())
            unsupported.push_back(n.op_type);
    }
    if (!unsupported.empty())
        throw UnsupportedOpError(unsupported);

    std::map<std::string, Tensor> weights;
    for (const auto& [name, rt] : initializers)
        weights.emplace(name, to_tensor(rt));

    for (const auto& in : raw_inputs) {
        if (initializers.contains(in.name))
            continue;
        if (in.elem_type != kOnnxFloat)
            throw UnsupportedDtypeError("graph input '" + in.name + "' must be float");
        g.inputs.push_back({in.name, DType::F32, in.shape});
    }
    for (const auto& out : raw_outputs)
        g.outputs.push_back(out.name);
    if (!g.outputs.empty())
        g.logits_output = g.outputs.front();

    std::set<std::string> used_ids;
    for (std::size_t idx = 0; idx < raw_nodes.size(); ++idx) {
        const auto& rn = raw_nodes[idx];
        Node n;
        n.op = op_from_name(rn.op_type);
        n.id = rn.name.empty() ? rn.op_type + "_" + std::to_string(idx) : rn.name;
        while (used_ids.contains(n.id))
            n.id += "_";
        used_ids.insert(n.id);
        n.inputs = rn.inputs;
        n.outputs = rn.outputs;
        for (const auto& ra : rn.attrs)
            if (auto a = to_attribute(ra))
                n.attrs[ra.name] = *a;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
            auto it = weights.find(n.inputs[i]);
            if (it == weights.end())
                continue;
            if (it->second.dtype() == DType::I64 && !(n.op == OpKind::Reshape && i == 1))
                throw UnsupportedDtypeError("INT64 initializer '" + it->first + "' is only accepted as a Reshape shape");
            n.weights.emplace(it->first, it->second);
        }
        g.nodes.push_back(std::move(n));
    }

    topological_sort(g);
    validate(g);
    return g;
}

Graph import_onnx(const std::filesystem::path& path) { return parse_onnx(read_file_bytes(path)); }

} // namespace tuneqn
