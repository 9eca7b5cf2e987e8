#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/ink.hpp"

namespace inkrec {

/// Ordered run of equal-dimension real vectors, stored row-major.
class FeatureSequence {
public:
    FeatureSequence() = default;

    FeatureSequence(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
        if (dim_ == 0) {
            throw Error(ErrorCode::InvalidParams, "feature dimension must be >= 1");
        }
        if (data_.empty() || data_.size() % dim_ != 0) {
            throw Error(ErrorCode::InvalidParams, "feature data must hold a positive multiple of dim values");
        }
    }

    static FeatureSequence from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) {
            throw Error(ErrorCode::InvalidParams, "empty feature sequence");
        }
        const std::size_t dim = rows.front().size();
        std::vector<double> data;
        data.reserve(dim * rows.size());
        for (const auto& r : rows) {
            if (r.size() != dim) {
                throw Error(ErrorCode::DimensionMismatch, "rows of unequal dimension");
            }
            data.insert(data.end(), r.begin(), r.end());
        }
        return FeatureSequence(dim, std::move(data));
    }

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> data() const noexcept { return data_; }

    /// Contiguous rows [first, first + count).
    FeatureSequence slice(std::size_t first, std::size_t count) const {
        return FeatureSequence(dim_, std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                                                         data_.begin() + static_cast<std::ptrdiff_t>((first + count) * dim_)));
    }

    bool operator==(const FeatureSequence&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

enum class Normalization : std::uint8_t { CentroidScale, None };

struct FeatureConfig {
    bool use_x = true;
    bool use_y = true;
    bool use_pressure = false;
    bool include_derivatives = true;
    Normalization normalization = Normalization::CentroidScale;

    std::size_t base_channels() const { return std::size_t(use_x) + std::size_t(use_y) + std::size_t(use_pressure); }
    std::size_t dim() const { return base_channels() * (include_derivatives ? 2 : 1); }
};

/// One vector per sample: the selected channels, then (optionally) their
/// central differences over the sample index.
inline FeatureSequence extract_features(const InkRecord& record, const FeatureConfig& cfg = {}) {
    const std::size_t nch = cfg.base_channels();
    if (nch == 0) {
        throw Error(ErrorCode::InvalidParams, "feature config selects no channels");
    }
    const auto& s = record.samples;
    const std::size_t n = s.size();
    if (n == 0) {
        throw Error(ErrorCode::EmptyRecord, "record has no samples");
    }

    double cx = 0.0, cy = 0.0, scale = 1.0, pscale = 1.0;
    if (cfg.normalization == Normalization::CentroidScale) {
        for (const auto& p : s) {
            cx += p.x;
            cy += p.y;
        }
        cx /= static_cast<double>(n);
        cy /= static_cast<double>(n);
        double vx = 0.0, vy = 0.0, pmax = 0.0;
        for (const auto& p : s) {
            vx += (p.x - cx) * (p.x - cx);
            vy += (p.y - cy) * (p.y - cy);
            pmax = std::max(pmax, p.pressure);
        }
        scale = std::sqrt(std::max(vx, vy) / static_cast<double>(n));
        if (!(scale > 0.0)) {
            throw Error(ErrorCode::DegenerateGeometry, "all samples at one point");
        }
        pscale = pmax > 0.0 ? pmax : 1.0;
    }

    std::vector<double> base(n * nch);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        if (cfg.use_x) base[i * nch + c++] = (s[i].x - cx) / scale;
        if (cfg.use_y) base[i * nch + c++] = (s[i].y - cy) / scale;
        if (cfg.use_pressure) base[i * nch + c++] = s[i].pressure / pscale;
    }
    if (!cfg.include_derivatives) {
        return FeatureSequence(nch, std::move(base));
    }

    const std::size_t dim = 2 * nch;
    std::vector<double> out(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < nch; ++c) {
            out[i * dim + c] = base[i * nch + c];
            double d = 0.0;
            if (n > 1) {
                if (i == 0) {
                    d = base[nch + c] - base[c];
                } else if (i == n - 1) {
                    d = base[i * nch + c] - base[(i - 1) * nch + c];
                } else {
                    d = 0.5 * (base[(i + 1) * nch + c] - base[(i - 1) * nch + c]);
                }
            }
            out[i * dim + nch + c] = d;
        }
    }
    return FeatureSequence(dim, std::move(out));
}

}  // namespace inkrec
