// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "tuneqn/errors.hpp"

namespace tuneqn {

namespace {

void check_points(const std::vector<ObjectivePoint>& points) {
    if (points.empty())
        throw ArgumentError("no objective points");
    const std::size_t arity = points.front().objectives.size();
    std::map<std::int64_t, int> seen;
    for (const auto& p : points) {
        if (p.objectives.size() != arity)
            throw ArgumentError("objective arity differs between points");
        for (double v : p.objectives)
            if (!std::isfinite(v))
                throw ArgumentError("objective of variant " + std::to_string(p.variant_index) + " is not finite");
        if (seen[p.variant_index]++)
            throw ArgumentError("duplicate variant index " + std::to_string(p.variant_index));
    }
}

} // namespace

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
    if (a.objectives.size() != b.objectives.size())
        throw ArgumentError("cannot compare points with " + std::to_string(a.objectives.size()) + " and " +
                            std::to_string(b.objectives.size()) + " objectives");
    bool strictly = false;
    for (std::size_t i = 0; i < a.objectives.size(); ++i) {
        if (a.objectives[i] > b.objectives[i])
            return false;
        if (a.objectives[i] < b.objectives[i])
            strictly = true;
    }
    return strictly;
}

std::vector<std::vector<std::int64_t>> non_dominated_sort(const std::vector<ObjectivePoint>& points) {
    check_points(points);
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q)
                continue;
            if (dominates(points[p], points[q]))
                dominated[p].push_back(q);
            else if (dominates(points[q], points[p]))
                ++domination_count[p];
        }
        if (domination_count[p] == 0)
            current.push_back(p);
    }

    std::vector<std::vector<std::int64_t>> fronts;
    while (!current.empty()) {
        std::vector<std::int64_t> front;
        std::vector<std::size_t> next;
        for (std::size_t p : current) {
            front.push_back(points[p].variant_index);
            for (std::size_t q : dominated[p])
                if (--domination_count[q] == 0)
                    next.push_back(q);
        }
        std::sort(front.begin(), front.end());
        fronts.push_back(std::move(front));
        current = std::move(next);
    }
    return fronts;
}

std::vector<ObjectivePoint> normalize_objectives(const std::vector<ObjectivePoint>& points) {
    check_points(points);
    std::vector<ObjectivePoint> out = points;
    for (std::size_t m = 0; m < points.front().objectives.size(); ++m) {
        double lo = points.front().objectives[m], hi = lo;
        for (const auto& p : points) {
            lo = std::min(lo, p.objectives[m]);
            hi = std::max(hi, p.objectives[m]);
        }
        for (auto& p : out)
            p.objectives[m] = hi == lo ? 0.0 : (p.objectives[m] - lo) / (hi - lo) * 100.0;
    }
    return out;
}

std::vector<std::int64_t> select_top_candidates(const std::vector<std::vector<std::int64_t>>& fronts,
                                                const std::vector<ObjectivePoint>& points, std::size_t k) {
    const auto normalized = normalize_objectives(points);
    std::map<std::int64_t, double> score;
    for (const auto& p : normalized)
        score[p.variant_index] = std::accumulate(p.objectives.begin(), p.objectives.end(), 0.0);

    std::vector<std::int64_t> picked;
    for (const auto& front : fronts) {
        std::vector<std::int64_t> order = front;
        for (auto idx : order)
            if (!score.contains(idx))
                throw ArgumentError("front references unknown variant " + std::to_string(idx));
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            return score[a] < score[b] || (score[a] == score[b] && a < b);
        });
        for (auto idx : order) {
            if (picked.size() == k)
                return picked;
            picked.push_back(idx);
        }
    }
    return picked;
}

ParetoResult compute_pareto(const std::vector<ObjectivePoint>& points, std::size_t k) {
    ParetoResult r;
    r.fronts = non_dominated_sort(points);
    r.top_candidates = select_top_candidates(r.fronts, points, k);
    return r;
}

} // namespace tuneqn
