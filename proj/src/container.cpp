// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/container.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string_view>

#include "json.hpp"

#include "tuneqn/io.hpp"

namespace tuneqn {

using nlohmann::json;

namespace {

constexpr std::string_view kModelMagic = "QTMODEL1";
constexpr std::string_view kTensorMagic = "QTTENSOR";

template <class T>
T read_le(std::span<const std::byte> data, std::size_t& pos) {
    if (pos + sizeof(T) > data.size())
        throw FormatError("unexpected end of file");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

template <class T>
void append_le(std::vector<std::byte>& out, T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

void append(std::vector<std::byte>& out, std::string_view s) {
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    out.insert(out.end(), p, p + s.size());
}

bool has_magic(std::span<const std::byte> data, std::string_view magic) {
    return data.size() >= magic.size() && std::memcmp(data.data(), magic.data(), magic.size()) == 0;
}

json attr_to_json(const Attribute& a) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>)
                return {{"i", v}};
            else if constexpr (std::is_same_v<T, double>)
                return {{"f", v}};
            else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>)
                return {{"ints", v}};
            else
                return {{"s", v}};
        },
        a);
}

Attribute attr_from_json(const std::string& name, const json& j) {
    if (!j.is_object() || j.size() != 1)
        throw FormatError("attribute '" + name + "' must be a single-key object");
    const auto it = j.begin();
    const std::string& kind = it.key();
    const json& v = it.value();
    if (kind == "i")
        return v.get<std::int64_t>();
    if (kind == "f")
        return v.get<double>();
    if (kind == "ints")
        return v.get<std::vector<std::int64_t>>();
    if (kind == "s")
        return v.get<std::string>();
    throw FormatError("attribute '" + name + "' has unknown kind '" + kind + "'");
}

json qparams_to_json(const QuantParams& p) {
    return {{"scale", p.scale}, {"zero_point", p.zero_point}, {"dtype", dtype_name(p.dtype)}};
}

QuantParams qparams_from_json(const json& j) {
    QuantParams p;
    p.scale = j.at("scale").get<double>();
    p.zero_point = j.at("zero_point").get<std::int32_t>();
    p.dtype = dtype_from_name(j.at("dtype").get<std::string>());
    return p;
}

json site_to_json(const FakeQuantSite& s) {
    json j = json::object();
    if (s.params)
        j["params"] = qparams_to_json(*s.params);
    return j;
}

FakeQuantSite site_from_json(const json& j) {
    FakeQuantSite s;
    if (j.contains("params"))
        s.params = qparams_from_json(j["params"]);
    return s;
}

json value_info_to_json(const ValueInfo& v) {
    return {{"name", v.name}, {"dtype", dtype_name(v.dtype)}, {"shape", v.shape}};
}

} // namespace

std::vector<std::byte> serialize_model_bytes(const Graph& g) {
    if (g.nodes.empty())
        throw FormatError("cannot serialize graph '" + g.name + "' without nodes");
    validate(g);

    std::vector<std::byte> blob;
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json attrs = json::object();
        for (const auto& [name, a] : n.attrs)
            attrs[name] = attr_to_json(a);
        json weights = json::array();
        std::vector<std::string> order;
        for (const auto& input : n.inputs)
            if (n.weights.contains(input) && std::find(order.begin(), order.end(), input) == order.end())
                order.push_back(input);
        for (const auto& input : order) {
            const Tensor& t = n.weights.at(input);
            json w = {{"input", input},
                      {"dtype", dtype_name(t.dtype())},
                      {"shape", t.shape()},
                      {"offset", blob.size()},
                      {"length", t.byte_size()}};
            if (auto it = n.weight_params.find(input); it != n.weight_params.end()) {
                w["scale"] = it->second.scale;
                w["zero_point"] = it->second.zero_point;
            }
            auto raw = t.bytes();
            blob.insert(blob.end(), raw.begin(), raw.end());
            weights.push_back(std::move(w));
        }
        json jn = {{"id", n.id},       {"op", op_name(n.op)}, {"inputs", n.inputs},
                   {"outputs", n.outputs}, {"attrs", attrs},     {"weights", weights}};
        if (n.quant) {
            json q = {{"mode", mode_name(n.quant->mode)}};
            if (n.quant->input)
                q["input"] = qparams_to_json(*n.quant->input);
            if (n.quant->output)
                q["output"] = qparams_to_json(*n.quant->output);
            jn["quant"] = std::move(q);
        }
        if (n.fake_quant) {
            json f = json::object();
            if (n.fake_quant->input)
                f["input"] = site_to_json(*n.fake_quant->input);
            if (n.fake_quant->output)
                f["output"] = site_to_json(*n.fake_quant->output);
            jn["fake_quant"] = std::move(f);
        }
        nodes.push_back(std::move(jn));
    }
    json inputs = json::array();
    for (const auto& in : g.inputs)
        inputs.push_back(value_info_to_json(in));
    json header = {{"name", g.name},       {"opset", g.opset_version}, {"inputs", inputs},
                   {"outputs", g.outputs}, {"logits", g.logits_output}, {"nodes", nodes}};
    const std::string text = header.dump();

    std::vector<std::byte> out;
    out.reserve(kModelMagic.size() + 8 + text.size() + blob.size());
    append(out, kModelMagic);
    append_le<std::uint64_t>(out, text.size());
    append(out, text);
    out.insert(out.end(), blob.begin(), blob.end());
    return out;
}

std::uint64_t serialize_model(const Graph& g, const std::filesystem::path& path) {
    auto bytes = serialize_model_bytes(g);
    write_file_atomic(path, bytes);
    return bytes.size();
}

Graph parse_model_container(std::span<const std::byte> data) {
    if (!has_magic(data, kModelMagic))
        throw FormatError("not a QTM container (bad magic or version)");
    std::size_t pos = kModelMagic.size();
    const auto header_len = read_le<std::uint64_t>(data, pos);
    if (header_len > data.size() - pos)
        throw FormatError("header length exceeds file size");
    const std::string_view text(reinterpret_cast<const char*>(data.data() + pos), header_len);
    const auto blob = data.subspan(pos + header_len);

    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed container header: ") + e.what());
    }

    Graph g;
    try {
        g.name = header.at("name").get<std::string>();
        g.opset_version = header.at("opset").get<std::int64_t>();
        for (const auto& in : header.at("inputs"))
            g.inputs.push_back({in.at("name").get<std::string>(), dtype_from_name(in.at("dtype").get<std::string>()),
                                in.at("shape").get<Shape>()});
        g.outputs = header.at("outputs").get<std::vector<std::string>>();
        g.logits_output = header.contains("logits") ? header["logits"].get<std::string>()
                                                    : (g.outputs.empty() ? "" : g.outputs.front());

        std::vector<std::string> unsupported;
        for (const auto& jn : header.at("nodes")) {
            const auto op = jn.at("op").get<std::string>();
            if (!try_op_from_name(op) && std::find(unsupported.begin(), unsupported.end(), op) == unsupported.end())
                unsupported.push_back(op);
        }
        if (!unsupported.empty())
            throw UnsupportedOpError(unsupported);

        for (const auto& jn : header.at("nodes")) {
            Node n;
            n.id = jn.at("id").get<std::string>();
            n.op = op_from_name(jn.at("op").get<std::string>());
            n.inputs = jn.at("inputs").get<std::vector<std::string>>();
            n.outputs = jn.at("outputs").get<std::vector<std::string>>();
            const json attrs = jn.value("attrs", json::object());
            for (const auto& [name, a] : attrs.items())
                n.attrs[name] = attr_from_json(name, a);
            const json weights = jn.value("weights", json::array());
            for (const auto& w : weights) {
                const auto input = w.at("input").get<std::string>();
                const auto dtype = dtype_from_name(w.at("dtype").get<std::string>());
                const auto offset = w.at("offset").get<std::uint64_t>();
                const auto length = w.at("length").get<std::uint64_t>();
                if (offset > blob.size() || length > blob.size() - offset)
                    throw FormatError("weight '" + input + "' lies outside the weight blob");
                n.weights.emplace(input, Tensor::from_bytes(dtype, w.at("shape").get<Shape>(),
                                                            blob.subspan(offset, length)));
                if (w.contains("scale"))
                    n.weight_params[input] = {w["scale"].get<double>(), w.at("zero_point").get<std::int32_t>(), dtype};
            }
            if (jn.contains("quant")) {
                const auto& q = jn["quant"];
                NodeQuant nq;
                nq.mode = mode_from_name(q.at("mode").get<std::string>());
                if (q.contains("input"))
                    nq.input = qparams_from_json(q["input"]);
                if (q.contains("output"))
                    nq.output = qparams_from_json(q["output"]);
                n.quant = nq;
            }
            if (jn.contains("fake_quant")) {
                const auto& f = jn["fake_quant"];
                FakeQuant fq;
                if (f.contains("input"))
                    fq.input = site_from_json(f["input"]);
                if (f.contains("output"))
                    fq.output = site_from_json(f["output"]);
                n.fake_quant = fq;
            }
            g.nodes.push_back(std::move(n));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed container header: ") + e.what());
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("malformed container header: ") + e.what());
    }
    validate(g);
    return g;
}

Graph load_model_container(const std::filesystem::path& path) { return parse_model_container(read_file_bytes(path)); }

Tensor parse_tensor_file(std::span<const std::byte> data) {
    if (!has_magic(data, kTensorMagic))
        throw FormatError("not a QTT tensor file (bad magic)");
    std::size_t pos = kTensorMagic.size();
    const auto dtype = dtype_from_code(read_le<std::uint8_t>(data, pos));
    const auto rank = read_le<std::uint32_t>(data, pos);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const auto d = read_le<std::uint64_t>(data, pos);
        if (d > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            throw FormatError("tensor extent out of range");
        shape.push_back(static_cast<std::int64_t>(d));
    }
    return Tensor::from_bytes(dtype, std::move(shape), data.subspan(pos));
}

Tensor read_tensor_file(const std::filesystem::path& path) { return parse_tensor_file(read_file_bytes(path)); }

void write_tensor_file(const Tensor& t, const std::filesystem::path& path) {
    std::vector<std::byte> out;
    append(out, kTensorMagic);
    append_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype()));
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape())
        append_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    auto raw = t.bytes();
    out.insert(out.end(), raw.begin(), raw.end());
    write_file_atomic(path, out);
}

} // namespace tuneqn
