// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>

#include "tuneqn/graph.hpp"

namespace tuneqn {

/// Reads an ONNX ModelProto restricted to the supported operator subset.
/// Initializers become node weights; nodes are re-sorted topologically if needed.
Graph import_onnx(const std::filesystem::path& path);
Graph parse_onnx(std::span<const std::byte> data);

} // namespace tuneqn
