// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/canonical_json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "tuneqn/errors.hpp"

namespace tuneqn {

namespace {

std::string printf_g(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

void dump(const nlohmann::json& j, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
    switch (j.type()) {
    case nlohmann::json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first)
                out += ",\n";
            first = false;
            out += pad + nlohmann::json(key).dump() + ": ";
            dump(value, depth + 1, out);
        }
        out += "\n" + close_pad + "}";
        return;
    }
    case nlohmann::json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i)
                out += ",\n";
            out += pad;
            dump(j[i], depth + 1, out);
        }
        out += "\n" + close_pad + "]";
        return;
    }
    case nlohmann::json::value_t::number_float:
        out += format_float6(j.get<double>());
        return;
    default:
        out += j.dump();
        return;
    }
}

} // namespace

std::string format_float6(double v) {
    if (!std::isfinite(v))
        throw ArgumentError("non-finite value cannot be written to JSON");
    std::string text = printf_g(v, 6);
    if (text.find_first_of(".eEn") == std::string::npos)
        text += ".0";
    return text;
}

std::string dump_canonical(const nlohmann::json& j) {
    std::string out;
    dump(j, 0, out);
    out += '\n';
    return out;
}

} // namespace tuneqn
