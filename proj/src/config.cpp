// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <variant>

#include "tuneqn/io.hpp"
#include "tuneqn/sweep.hpp"

namespace tuneqn {

namespace {

using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

class LineParser {
public:
    LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    Value value() {
        skip_space();
        if (at_end())
            fail("missing value");
        const char c = s_[pos_];
        if (c == '"' || c == '\'')
            return string();
        if (c == '[')
            return array();
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number();
    }

    void expect_end() {
        skip_space();
        if (!at_end() && s_[pos_] != '#')
            fail("unexpected text after value");
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }
    bool at_end() const { return pos_ >= s_.size(); }
    void skip_space() {
        while (!at_end() && (s_[pos_] == ' ' || s_[pos_] == '\t'))
            ++pos_;
    }

    std::string string() {
        const char quote = s_[pos_++];
        std::string out;
        while (!at_end() && s_[pos_] != quote) {
            char c = s_[pos_++];
            if (c == '\\' && quote == '"') {
                if (at_end())
                    fail("unterminated escape");
                switch (s_[pos_++]) {
                case 'n':
                    c = '\n';
                    break;
                case 't':
                    c = '\t';
                    break;
                case '"':
                    c = '"';
                    break;
                case '\\':
                    c = '\\';
                    break;
                default:
                    fail("unsupported escape sequence");
                }
            }
            out += c;
        }
        if (at_end())
            fail("unterminated string");
        ++pos_;
        return out;
    }

    std::vector<std::string> array() {
        ++pos_;
        std::vector<std::string> items;
        skip_space();
        if (!at_end() && s_[pos_] == ']') {
            ++pos_;
            return items;
        }
        while (true) {
            skip_space();
            if (at_end() || (s_[pos_] != '"' && s_[pos_] != '\''))
                fail("arrays may only hold strings");
            items.push_back(string());
            skip_space();
            if (at_end())
                fail("unterminated array");
            if (s_[pos_] == ']') {
                ++pos_;
                return items;
            }
            if (s_[pos_] != ',')
                fail("expected ',' or ']' in array");
            ++pos_;
            skip_space();
            if (!at_end() && s_[pos_] == ']') {
                ++pos_;
                return items;
            }
        }
    }

    Value number() {
        std::size_t end = pos_;
        while (end < s_.size() && !std::isspace(static_cast<unsigned char>(s_[end])) && s_[end] != '#')
            ++end;
        std::string_view tok = s_.substr(pos_, end - pos_);
        if (!tok.empty() && tok.front() == '+')
            tok.remove_prefix(1);
        const char* first = tok.data();
        const char* last = tok.data() + tok.size();
        std::int64_t i = 0;
        if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc{} && p == last) {
            pos_ = end;
            return i;
        }
        double d = 0.0;
        if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc{} && p == last) {
            pos_ = end;
            return d;
        }
        fail("cannot parse value '" + std::string(tok) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_;
};

const char* type_name(const Value& v) {
    switch (v.index()) {
    case 0:
        return "string";
    case 1:
        return "integer";
    case 2:
        return "float";
    case 3:
        return "boolean";
    default:
        return "array";
    }
}

template <class T>
const T& as(const std::string& key, const Value& v, const char* expected) {
    if (auto p = std::get_if<T>(&v))
        return *p;
    throw ConfigError("config key '" + key + "' must be " + expected + ", got " + type_name(v));
}

double as_number(const std::string& key, const Value& v) {
    if (auto i = std::get_if<std::int64_t>(&v))
        return static_cast<double>(*i);
    return as<double>(key, v, "a number");
}

std::int64_t as_positive(const std::string& key, const Value& v) {
    const auto i = as<std::int64_t>(key, v, "an integer");
    if (i < 1)
        throw ConfigError("config key '" + key + "' must be at least 1");
    return i;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty())
        return base / path;
    return path;
}

} // namespace

SweepConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
    std::map<std::string, Value> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty() || line.front() == '#')
            continue;
        if (line.front() == '[')
            throw ConfigError("config line " + std::to_string(line_no) + ": tables are not supported");
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
            }))
            throw ConfigError("config line " + std::to_string(line_no) + ": invalid key '" + key + "'");
        LineParser parser(line.substr(eq + 1), line_no);
        Value v = parser.value();
        parser.expect_end();
        if (!entries.emplace(key, std::move(v)).second)
            throw ConfigError("config key '" + key + "' is set twice");
    }

    SweepConfig cfg;
    bool has_model = false, has_dataset = false;
    for (const auto& [key, v] : entries) {
        if (key == "model") {
            cfg.model = resolve(base_dir, as<std::string>(key, v, "a string"));
            has_model = true;
        } else if (key == "dataset") {
            cfg.dataset = resolve(base_dir, as<std::string>(key, v, "a string"));
            has_dataset = true;
        } else if (key == "calib_dataset") {
            cfg.calib_dataset = resolve(base_dir, as<std::string>(key, v, "a string"));
        } else if (key == "mode") {
            try {
                cfg.mode = mode_from_name(as<std::string>(key, v, "a string"));
            } catch (const ArgumentError& e) {
                throw ConfigError(std::string("config key 'mode': ") + e.what());
            }
        } else if (key == "calib_samples") {
            cfg.calib_samples = static_cast<std::size_t>(as_positive(key, v));
        } else if (key == "eval_samples") {
            cfg.eval_samples = static_cast<std::size_t>(as_positive(key, v));
        } else if (key == "chunk_size") {
            cfg.chunk_size = as_positive(key, v);
        } else if (key == "seed") {
            const auto s = as<std::int64_t>(key, v, "an integer");
            if (s < 0)
                throw ConfigError("config key 'seed' must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "output_dir") {
            cfg.output_dir = resolve(base_dir, as<std::string>(key, v, "a string"));
        } else if (key == "excluded_layers") {
            cfg.excluded_layers = as<std::vector<std::string>>(key, v, "an array of strings");
        } else if (key == "top_k") {
            cfg.top_k = as_positive(key, v);
        } else if (key == "pareto_candidates") {
            cfg.pareto_candidates = static_cast<std::size_t>(as_positive(key, v));
        } else if (key == "xmodel_weight") {
            cfg.xmodel_weight = as_number(key, v);
        } else if (key == "qdq_weight") {
            cfg.qdq_weight = as_number(key, v);
        } else if (key == "timestamp") {
            cfg.timestamp = as<std::string>(key, v, "a string");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    if (!has_model)
        throw ConfigError("config is missing 'model'");
    if (!has_dataset)
        throw ConfigError("config is missing 'dataset'");
    return cfg;
}

SweepConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file_text(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_config_text(text, path.parent_path());
}

void validate_config(const SweepConfig& cfg) {
    auto require_file = [](const std::filesystem::path& p, const char* what) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec))
            throw ConfigError(std::string(what) + " not found: " + p.string());
    };
    require_file(cfg.model, "model file");
    require_file(cfg.dataset, "dataset manifest");
    if (cfg.calib_dataset)
        require_file(*cfg.calib_dataset, "calibration dataset manifest");
    if (cfg.calib_samples < 1 || cfg.eval_samples < 1 || cfg.chunk_size < 1 || cfg.top_k < 1 ||
        cfg.pareto_candidates < 1)
        throw ConfigError("sample counts, chunk_size, top_k and pareto_candidates must be at least 1");
    if (!(cfg.xmodel_weight >= 0.0) || !(cfg.qdq_weight >= 0.0) || cfg.xmodel_weight + cfg.qdq_weight <= 0.0)
        throw ConfigError("xmodel_weight and qdq_weight must be non-negative and not both zero");
    if (cfg.output_dir.empty())
        throw ConfigError("output_dir must not be empty");
}

} // namespace tuneqn
