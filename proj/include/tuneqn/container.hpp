// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tuneqn/graph.hpp"

namespace tuneqn {

// QTM model container:
//   "QTMODEL1" | u64 LE header length | UTF-8 JSON header | raw weight blob
// Weight descriptors in the header locate each tensor in the blob by offset and
// length; quantized descriptors also carry scale and zero_point.

Graph load_model_container(const std::filesystem::path& path);
Graph parse_model_container(std::span<const std::byte> data);

/// Exact container bytes for `g`. Throws FormatError for a graph without nodes.
std::vector<std::byte> serialize_model_bytes(const Graph& g);
/// Writes the container and returns the file size in bytes.
std::uint64_t serialize_model(const Graph& g, const std::filesystem::path& path);

// QTT tensor file: "QTTENSOR" | u8 dtype code | u32 rank | u64 dims[rank] | raw LE data

Tensor read_tensor_file(const std::filesystem::path& path);
Tensor parse_tensor_file(std::span<const std::byte> data);
void write_tensor_file(const Tensor& t, const std::filesystem::path& path);

} // namespace tuneqn
