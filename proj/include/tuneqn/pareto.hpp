// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tuneqn {

/// Objectives are minimized.
struct ObjectivePoint {
    std::int64_t variant_index = 0;
    std::vector<double> objectives;

    bool operator==(const ObjectivePoint&) const = default;
};

struct ParetoResult {
    std::vector<std::vector<std::int64_t>> fronts;  // rank order, indices ascending
    std::vector<std::int64_t> top_candidates;

    bool operator==(const ParetoResult&) const = default;
};

/// a <= b everywhere and a < b somewhere. Throws ArgumentError on arity mismatch.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

/// Fast non-dominated sort on raw objective values. Fronts hold variant indices.
std::vector<std::vector<std::int64_t>> non_dominated_sort(const std::vector<ObjectivePoint>& points);

/// Per objective, (v - min) / (max - min) * 100; a constant objective becomes 0.
std::vector<ObjectivePoint> normalize_objectives(const std::vector<ObjectivePoint>& points);

/// Walks the fronts in rank order; inside a front, points with the smaller sum
/// of normalized objectives come first (then the lower variant index).
std::vector<std::int64_t> select_top_candidates(const std::vector<std::vector<std::int64_t>>& fronts,
                                                const std::vector<ObjectivePoint>& points, std::size_t k = 3);

ParetoResult compute_pareto(const std::vector<ObjectivePoint>& points, std::size_t k = 3);

} // namespace tuneqn
