#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "inkrec/dtw.hpp"
#include "inkrec/error.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/som.hpp"

namespace inkrec {

/// A word realization re-encoded as two sequences of stroke-prototype grid
/// coordinates, one per pen channel.
struct EncodedWord {
    std::string word_id;
    std::vector<GridCoord> air_seq;
    std::vector<GridCoord> surface_seq;

    const std::vector<GridCoord>& channel(PenState c) const { return c == PenState::InAir ? air_seq : surface_seq; }
    bool operator==(const EncodedWord&) const = default;
};

/// Preprocessed stroke vectors of one channel, in writing order. Strokes
/// too short to resample are dropped.
inline std::vector<std::vector<double>> channel_strokes(const InkRecord& record, PenState channel,
                                                        std::size_t resample) {
    std::vector<std::vector<double>> out;
    for (const auto& s : segment_strokes(record)) {
        if (s.kind != channel) {
            continue;
        }
        try {
            out.push_back(preprocess_stroke(s, resample));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateStroke) {
                throw;
            }
        }
    }
    return out;
}

inline EncodedWord encode_word(const InkRecord& record, const SomCatalogue& air_cat, const SomCatalogue& surf_cat) {
    const std::string word(to_string(record.task_id));
    if (!is_word_task(record.task_id)) {
        throw Error(ErrorCode::CatalogueMismatch, "record task " + word + " is not a word");
    }
    if (air_cat.channel != PenState::InAir || surf_cat.channel != PenState::OnSurface) {
        throw Error(ErrorCode::CatalogueMismatch, "catalogue channels swapped");
    }
    if (air_cat.word_id != word || surf_cat.word_id != word) {
        throw Error(ErrorCode::CatalogueMismatch,
                    "catalogues for " + air_cat.word_id + "/" + surf_cat.word_id + " applied to " + word);
    }
    if (air_cat.resample != surf_cat.resample) {
        throw Error(ErrorCode::CatalogueMismatch, "catalogues resample strokes differently");
    }

    EncodedWord enc{word, {}, {}};
    for (const auto& s : segment_strokes(record)) {
        const SomCatalogue& cat = s.kind == PenState::InAir ? air_cat : surf_cat;
        std::vector<double> v;
        try {
            v = preprocess_stroke(s, cat.resample);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateStroke) {
                continue;
            }
            throw;
        }
        const GridCoord c = cat.coord(cat.winner(v).first);
        (s.kind == PenState::InAir ? enc.air_seq : enc.surface_seq).push_back(c);
    }
    if (enc.air_seq.empty() && enc.surface_seq.empty()) {
        throw Error(ErrorCode::NoUsableStrokes, "no stroke of " + record.subject_id + "/" + word + " could be encoded");
    }
    return enc;
}

namespace detail {

inline void check_encoded_pair(const EncodedWord& a, const EncodedWord& b, PenState channel) {
    if (a.word_id != b.word_id) {
        throw Error(ErrorCode::WordMismatch, a.word_id + " vs " + b.word_id);
    }
    if (a.channel(channel).empty() || b.channel(channel).empty()) {
        throw Error(ErrorCode::EmptyChannel, std::string(channel_token(channel)) + " sequence is empty");
    }
}

}  // namespace detail

/// DTW between encodings where the local cost of two prototypes is the
/// Euclidean distance between their grid cells, normalized by l1 + l2.
inline double encoded_dtw(const EncodedWord& a, const EncodedWord& b, PenState channel) {
    detail::check_encoded_pair(a, b, channel);
    const auto& s = a.channel(channel);
    const auto& t = b.channel(channel);
    const double total = dtw_accumulate(s.size(), t.size(), [&](std::size_t i, std::size_t j) {
        return std::hypot(static_cast<double>(s[i].row - t[j].row), static_cast<double>(s[i].col - t[j].col));
    });
    return total / static_cast<double>(s.size() + t.size());
}

/// Variant whose local cost is the distance between the prototype vectors
/// themselves rather than their grid positions.
inline double encoded_dtw(const EncodedWord& a, const EncodedWord& b, PenState channel, const SomCatalogue& cat) {
    detail::check_encoded_pair(a, b, channel);
    if (cat.channel != channel || cat.word_id != a.word_id) {
        throw Error(ErrorCode::CatalogueMismatch, "catalogue does not match word and channel");
    }
    const auto& s = a.channel(channel);
    const auto& t = b.channel(channel);
    const double total = dtw_accumulate(s.size(), t.size(), [&](std::size_t i, std::size_t j) {
        return local_distance(cat.prototype(s[i]), cat.prototype(t[j]), LocalMetric::Euclidean);
    });
    return total / static_cast<double>(s.size() + t.size());
}

inline double fuse_channels(double d_air, double d_surface, double w_air = 0.5) {
    if (!(w_air >= 0.0 && w_air <= 1.0)) {
        throw Error(ErrorCode::InvalidParams, "w_air must lie in [0, 1]");
    }
    if (w_air == 1.0) {
        return d_air;
    }
    if (w_air == 0.0) {
        return d_surface;
    }
    return w_air * d_air + (1.0 - w_air) * d_surface;
}

inline double fuse_words(std::span<const double> per_word) {
    if (per_word.empty()) {
        throw Error(ErrorCode::EmptyList, "no per-word dissimilarities");
    }
    double sum = 0.0;
    for (double d : per_word) {
        sum += d;
    }
    return sum / static_cast<double>(per_word.size());
}

}  // namespace inkrec
