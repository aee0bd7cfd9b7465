// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "tuneqn/container.hpp"
#include "tuneqn/io.hpp"

namespace tuneqn {

using nlohmann::json;

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
    std::vector<Tensor> rows;
    rows.reserve(indices.size());
    for (auto i : indices) {
        if (i >= samples.size())
            throw ArgumentError("sample index " + std::to_string(i) + " out of range");
        rows.push_back(samples[i].input);
    }
    return stack(rows);
}

Tensor Dataset::batch() const {
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return batch(all);
}

Dataset Dataset::head(std::size_t n) const {
    Dataset d{name, {}};
    d.samples.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(std::min(n, samples.size())));
    return d;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset d{name, {}};
    for (auto i : indices)
        d.samples.push_back(samples.at(i));
    return d;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    json manifest;
    try {
        manifest = json::parse(read_file_text(manifest_path));
    } catch (const json::exception& e) {
        throw DatasetError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    const auto root = manifest_path.parent_path();
    Dataset ds;
    try {
        ds.name = manifest.value("name", manifest_path.parent_path().filename().string());
        for (const auto& s : manifest.at("samples")) {
            Sample sample;
            sample.input = read_tensor_file(root / s.at("tensor").get<std::string>());
            sample.label = s.at("label").get<std::int64_t>();
            if (sample.label < 0)
                throw DatasetError("negative label in '" + manifest_path.string() + "'");
            if (sample.input.dtype() != DType::F32)
                throw DatasetError("sample tensors must be F32");
            if (!ds.samples.empty() && sample.input.shape() != ds.samples.front().input.shape())
                throw DatasetError("sample shape " + shape_string(sample.input.shape()) + " differs from " +
                                   shape_string(ds.samples.front().input.shape()));
            ds.samples.push_back(std::move(sample));
        }
    } catch (const json::exception& e) {
        throw DatasetError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (ds.samples.empty())
        throw DatasetError("dataset '" + manifest_path.string() + "' has no samples");
    return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json samples = json::array();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%04zu.qtt", i);
        write_tensor_file(ds.samples[i].input, dir / name);
        samples.push_back({{"tensor", name}, {"label", ds.samples[i].label}});
    }
    write_file_atomic(dir / "manifest.json", json{{"name", ds.name}, {"samples", samples}}.dump(1));
}

} // namespace tuneqn
