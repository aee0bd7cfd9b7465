// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tuneqn/tensor.hpp"

namespace tuneqn {

struct Sample {
    Tensor input;  // F32, no batch axis
    std::int64_t label = 0;
};

struct Dataset {
    std::string name;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    /// Stacks the selected samples into one [n, ...] batch.
    Tensor batch(std::span<const std::size_t> indices) const;
    Tensor batch() const;
    /// Dataset restricted to the first `n` samples (all of them if n exceeds the size).
    Dataset head(std::size_t n) const;
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// Reads `manifest.json` and the QTT tensor files it references (paths relative
/// to the manifest's directory).
Dataset load_dataset(const std::filesystem::path& manifest_path);
/// Writes a manifest plus one tensor file per sample into `dir`.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

} // namespace tuneqn
