#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/features.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/random.hpp"
#include "inkrec/text_io.hpp"

namespace inkrec {

struct GridCoord {
    int row = 0;
    int col = 0;

    auto operator<=>(const GridCoord&) const = default;
};

struct SomParams {
    std::size_t grid = 8;       // G: the map is G x G
    std::size_t resample = 16;  // R: points per preprocessed stroke
    int epochs = 40;
    double lr_initial = 0.5;
    double lr_final = 0.01;
    double radius_initial = 4.0;
    double radius_final = 0.5;
    std::uint64_t seed = 1;
};

inline void validate(const SomParams& p) {
    if (p.grid < 2 || p.resample < 4 || p.epochs < 1) {
        throw Error(ErrorCode::InvalidParams, "SOM needs grid >= 2, resample >= 4, epochs >= 1");
    }
    if (!(p.lr_final > 0.0) || !(p.radius_final > 0.0) || p.lr_initial < p.lr_final ||
        p.radius_initial < p.radius_final) {
        throw Error(ErrorCode::InvalidParams, "learning rate and radius must be positive and non-increasing");
    }
}

/// Stroke-prototype map for one (word, channel) pair. Prototype (row, col)
/// is stored at row-major index row * grid + col.
struct SomCatalogue {
    std::string word_id;
    PenState channel = PenState::OnSurface;
    std::size_t grid = 0;
    std::size_t resample = 0;
    std::vector<double> prototypes;

    std::size_t dim() const noexcept { return 2 * resample; }
    std::size_t size() const noexcept { return grid * grid; }
    std::span<const double> prototype(std::size_t index) const { return {prototypes.data() + index * dim(), dim()}; }
    std::span<const double> prototype(GridCoord c) const {
        return prototype(static_cast<std::size_t>(c.row) * grid + static_cast<std::size_t>(c.col));
    }
    GridCoord coord(std::size_t index) const {
        return {static_cast<int>(index / grid), static_cast<int>(index % grid)};
    }

    /// Nearest prototype by Euclidean distance; ties resolve to the
    /// lexicographically smallest (row, col).
    std::pair<std::size_t, double> winner(std::span<const double> v) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < size(); ++p) {
            const double* w = prototypes.data() + p * dim();
            double d = 0.0;
            for (std::size_t k = 0; k < dim(); ++k) {
                const double e = v[k] - w[k];
                d += e * e;
            }
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
        return {best, best_d};
    }

    bool operator==(const SomCatalogue&) const = default;
};

using Point2 = std::array<double, 2>;

/// `count` points equally spaced by arc length along the pen trajectory,
/// first and last points included.
inline std::vector<Point2> resample_by_arc_length(std::span<const PenSample> samples, std::size_t count) {
    if (samples.size() < 2 || count < 2) {
        throw Error(ErrorCode::DegenerateStroke, "stroke has fewer than 2 samples");
    }
    std::vector<double> cum(samples.size(), 0.0);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        cum[i] = cum[i - 1] + std::hypot(samples[i].x - samples[i - 1].x, samples[i].y - samples[i - 1].y);
    }
    const double length = cum.back();
    if (!(length > 0.0)) {
        throw Error(ErrorCode::DegenerateStroke, "stroke has zero path length");
    }
    std::vector<Point2> out;
    out.reserve(count);
    std::size_t seg = 1;
    for (std::size_t k = 0; k < count; ++k) {
        if (k + 1 == count) {
            out.push_back({samples.back().x, samples.back().y});
            break;
        }
        const double target = length * static_cast<double>(k) / static_cast<double>(count - 1);
        while (seg + 1 < samples.size() && cum[seg] < target) {
            ++seg;
        }
        const double span = cum[seg] - cum[seg - 1];
        const double u = span > 0.0 ? (target - cum[seg - 1]) / span : 0.0;
        out.push_back({samples[seg - 1].x + u * (samples[seg].x - samples[seg - 1].x),
                       samples[seg - 1].y + u * (samples[seg].y - samples[seg - 1].y)});
    }
    return out;
}

/// Arc-length resampling to R points, zero centroid, larger positional std
/// scaled to 1, interleaved as (x1, y1, ..., xR, yR).
inline std::vector<double> preprocess_stroke(const Stroke& stroke, std::size_t resample) {
    auto pts = resample_by_arc_length(stroke.samples, resample);
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p[0];
        cy += p[1];
    }
    const auto n = static_cast<double>(pts.size());
    cx /= n;
    cy /= n;
    double vx = 0.0, vy = 0.0;
    for (const auto& p : pts) {
        vx += (p[0] - cx) * (p[0] - cx);
        vy += (p[1] - cy) * (p[1] - cy);
    }
    const double scale = std::sqrt(std::max(vx, vy) / n);
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::DegenerateStroke, "stroke collapses to a point");
    }
    std::vector<double> out;
    out.reserve(2 * pts.size());
    for (const auto& p : pts) {
        out.push_back((p[0] - cx) / scale);
        out.push_back((p[1] - cy) / scale);
    }
    return out;
}

/// Mean Euclidean distance from each vector to its winning prototype.
inline double som_quantization_error(const FeatureSequence& strokes, const SomCatalogue& cat) {
    if (strokes.dim() != cat.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "stroke vectors do not match the catalogue");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        total += std::sqrt(cat.winner(strokes.row(i)).second);
    }
    return total / static_cast<double>(strokes.size());
}

struct SomTrace {
    double initial_error = 0.0;
    double final_error = 0.0;
};

/// Online Kohonen training. Prototypes start uniformly inside the training
/// data's bounding box; every epoch presents all strokes in a fresh seeded
/// order, pulling each prototype toward the stroke by lr * h, with h a
/// Gaussian of the grid distance to the winner. Learning rate and radius
/// decay linearly from their initial to final values across epochs.
inline SomCatalogue train_catalogue(const FeatureSequence& strokes, const SomParams& params, std::string word_id = {},
                                    PenState channel = PenState::OnSurface, SomTrace* trace = nullptr) {
    validate(params);
    if (strokes.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no strokes to train the catalogue");
    }
    SomCatalogue cat{std::move(word_id), channel, params.grid, params.resample, {}};
    const std::size_t dim = cat.dim();
    if (strokes.dim() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "stroke dim " + std::to_string(strokes.dim()) + " but 2R = " + std::to_string(dim));
    }

    Rng rng(params.seed);
    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        const auto r = strokes.row(i);
        for (std::size_t k = 0; k < dim; ++k) {
            lo[k] = std::min(lo[k], r[k]);
            hi[k] = std::max(hi[k], r[k]);
        }
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    cat.prototypes.resize(cat.size() * dim);
    for (std::size_t p = 0; p < cat.size(); ++p) {
        for (std::size_t k = 0; k < dim; ++k) {
            cat.prototypes[p * dim + k] = lo[k] + unit(rng) * (hi[k] - lo[k]);
        }
    }
    if (trace) {
        trace->initial_error = som_quantization_error(strokes, cat);
    }

    std::vector<std::size_t> order(strokes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const int epochs = params.epochs;
    for (int e = 0; e < epochs; ++e) {
        const double frac = epochs > 1 ? static_cast<double>(e) / static_cast<double>(epochs - 1) : 1.0;
        const double lr = params.lr_initial + (params.lr_final - params.lr_initial) * frac;
        const double radius = params.radius_initial + (params.radius_final - params.radius_initial) * frac;
        const double inv_two_r2 = 1.0 / (2.0 * radius * radius);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            const auto x = strokes.row(idx);
            const GridCoord w = cat.coord(cat.winner(x).first);
            for (std::size_t p = 0; p < cat.size(); ++p) {
                const GridCoord c = cat.coord(p);
                const double dr = c.row - w.row;
                const double dc = c.col - w.col;
                const double h = std::exp(-(dr * dr + dc * dc) * inv_two_r2);
                const double step = lr * h;
                if (step < 1e-12) {
                    continue;
                }
                double* proto = cat.prototypes.data() + p * dim;
                for (std::size_t k = 0; k < dim; ++k) {
                    proto[k] += step * (x[k] - proto[k]);
                }
            }
        }
    }
    if (trace) {
        trace->final_error = som_quantization_error(strokes, cat);
    }
    return cat;
}

constexpr std::string_view channel_token(PenState s) { return s == PenState::InAir ? "air" : "surface"; }

// Text persistence:
//   #catalogue v1 word=<id> channel=<air|surface> grid=<G> resample=<R>
//   then G*G rows of 2R values, row-major over the grid.
inline std::string write_catalogue(const SomCatalogue& cat) {
    std::string out = "#catalogue v1 word=" + cat.word_id + " channel=" + std::string(channel_token(cat.channel)) +
                      " grid=" + std::to_string(cat.grid) + " resample=" + std::to_string(cat.resample) + "\n";
    for (std::size_t p = 0; p < cat.size(); ++p) {
        const auto row = cat.prototype(p);
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ' ';
            out += detail::format_double(row[k]);
        }
        out += '\n';
    }
    return out;
}

inline SomCatalogue parse_catalogue(std::string_view content) {
    std::size_t line_no = 0;
    const auto tok = detail::split_ws(detail::take_line(content, line_no));
    if (tok.size() != 6 || tok[0] != "#catalogue" || tok[1] != "v1") {
        throw detail::line_error(ErrorCode::MalformedLine, line_no,
                                 "expected '#catalogue v1 word=.. channel=.. grid=.. resample=..'");
    }
    SomCatalogue cat;
    cat.word_id = std::string(detail::value_of(tok[2], "word"));
    const auto ch = detail::value_of(tok[3], "channel");
    if (cat.word_id.empty() || (ch != "air" && ch != "surface")) {
        throw detail::line_error(ErrorCode::MalformedLine, line_no, "bad word or channel");
    }
    cat.channel = ch == "air" ? PenState::InAir : PenState::OnSurface;
    cat.grid = static_cast<std::size_t>(detail::header_int(tok[4], "grid", 1, 4096, line_no));
    cat.resample = static_cast<std::size_t>(detail::header_int(tok[5], "resample", 2, 1 << 16, line_no));
    cat.prototypes = detail::read_rows(content, cat.size(), cat.dim(), line_no);
    while (!content.empty()) {
        if (!detail::split_ws(detail::take_line(content, line_no)).empty()) {
            throw detail::line_error(ErrorCode::MalformedLine, line_no, "trailing data");
        }
    }
    return cat;
}

}  // namespace inkrec
