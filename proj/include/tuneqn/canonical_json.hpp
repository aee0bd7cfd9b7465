// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "json.hpp"

namespace tuneqn {

/// Shortest decimal with at most 6 significant digits that denotes the same
/// value as the 6-digit rounding of `v`. Throws ArgumentError for NaN and infinities.
std::string format_float6(double v);

/// Byte-stable rendering: keys sorted, two-space indent, integers exact,
/// floats via format_float6, trailing newline.
std::string dump_canonical(const nlohmann::json& j);

} // namespace tuneqn
