#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/features.hpp"

namespace inkrec {

enum class LocalMetric : std::uint8_t { Euclidean, Manhattan };

enum class AggregateMode : std::uint8_t { Min, Mean };

struct DtwConfig {
    LocalMetric local_metric = LocalMetric::Euclidean;
    bool normalize_by_path = true;
};

inline double local_distance(std::span<const double> a, std::span<const double> b, LocalMetric metric) {
    double acc = 0.0;
    if (metric == LocalMetric::Euclidean) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - b[k];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        acc += std::abs(a[k] - b[k]);
    }
    return acc;
}

/// Accumulated cost of the cheapest monotone warping path over the full
/// n x m grid, steps (1,0), (0,1) and (1,1). `cost(i, j)` is the local cost
/// of pairing element i of the first sequence with element j of the second.
template <class Cost>
double dtw_accumulate(std::size_t n, std::size_t m, Cost&& cost) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf);
    std::vector<double> cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            cur[j] = cost(i - 1, j - 1) + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

inline double dtw_distance(const FeatureSequence& a, const FeatureSequence& b, const DtwConfig& cfg = {}) {
    if (a.empty() || b.empty()) {
        throw Error(ErrorCode::EmptyRecord, "dtw_distance needs non-empty sequences");
    }
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    const double total = dtw_accumulate(a.size(), b.size(), [&](std::size_t i, std::size_t j) {
        return local_distance(a.row(i), b.row(j), cfg.local_metric);
    });
    return cfg.normalize_by_path ? total / static_cast<double>(a.size() + b.size()) : total;
}

/// Collapses the distances from a probe to every enrolment sample into one.
inline double aggregate_reference(const FeatureSequence& probe, std::span<const FeatureSequence> refs,
                                  AggregateMode mode, const DtwConfig& cfg = {}) {
    if (refs.empty()) {
        throw Error(ErrorCode::EmptyReferenceSet, "no enrolment samples");
    }
    double best = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& r : refs) {
        const double d = dtw_distance(probe, r, cfg);
        best = std::min(best, d);
        sum += d;
    }
    return mode == AggregateMode::Min ? best : sum / static_cast<double>(refs.size());
}

}  // namespace inkrec
