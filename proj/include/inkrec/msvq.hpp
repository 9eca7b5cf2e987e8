#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/features.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/random.hpp"
#include "inkrec/text_io.hpp"

namespace inkrec {

struct Codebook {
    int bits = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // 2^bits rows of `dim`

    std::size_t size() const noexcept { return dim == 0 ? 0 : centroids.size() / dim; }
    std::span<const double> centroid(std::size_t i) const { return {centroids.data() + i * dim, dim}; }

    /// (index, squared distance) of the nearest centroid; ties go to the lower index.
    std::pair<std::size_t, double> nearest(std::span<const double> v) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0, n = size(); c < n; ++c) {
            const double* row = centroids.data() + c * dim;
            double d = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double e = v[k] - row[k];
                d += e * e;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        return {best, best_d};
    }

    bool operator==(const Codebook&) const = default;
};

struct LbgParams {
    double split_epsilon = 0.01;
    int max_iters = 50;
    double rel_improvement_threshold = 1e-4;
    std::uint64_t seed = 1;
};

/// Distortion history of one training run. `level_distortion[b]` is the
/// training distortion of the 2^b codebook (level 0 = global centroid);
/// `iterations[b - 1]` holds the distortion after every assignment step at level b.
struct LbgTrace {
    std::vector<double> level_distortion;
    std::vector<std::vector<double>> iterations;
};

namespace detail {

struct Assignment {
    std::vector<std::size_t> labels;
    std::vector<std::size_t> counts;
    std::vector<double> cell_sse;
    double distortion = 0.0;  // mean squared distance
};

inline Assignment assign_cells(const FeatureSequence& data, const Codebook& cb) {
    Assignment a;
    a.labels.resize(data.size());
    a.counts.assign(cb.size(), 0);
    a.cell_sse.assign(cb.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto [c, d] = cb.nearest(data.row(i));
        a.labels[i] = c;
        ++a.counts[c];
        a.cell_sse[c] += d;
        total += d;
    }
    a.distortion = total / static_cast<double>(data.size());
    return a;
}

// Moves every populated centroid to the mean of its cell.
inline void update_centroids(const FeatureSequence& data, const Assignment& a, Codebook& cb) {
    std::vector<double> sums(cb.centroids.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.row(i);
        double* s = sums.data() + a.labels[i] * cb.dim;
        for (std::size_t k = 0; k < cb.dim; ++k) {
            s[k] += row[k];
        }
    }
    for (std::size_t c = 0; c < cb.size(); ++c) {
        if (a.counts[c] == 0) {
            continue;
        }
        for (std::size_t k = 0; k < cb.dim; ++k) {
            cb.centroids[c * cb.dim + k] = sums[c * cb.dim + k] / static_cast<double>(a.counts[c]);
        }
    }
}

// Re-seeds each empty cell next to the centroid of the most populous cell
// that still has spread. Populated centroids stay put, so the distortion
// after the next assignment cannot rise. Returns false when nothing moved.
inline bool repair_empty_cells(Assignment& a, Codebook& cb, double epsilon, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    bool moved = false;
    for (std::size_t e = 0; e < cb.size(); ++e) {
        if (a.counts[e] != 0) {
            continue;
        }
        std::size_t donor = cb.size();
        for (std::size_t c = 0; c < cb.size(); ++c) {
            if (a.counts[c] > 1 && a.cell_sse[c] > 0.0 && (donor == cb.size() || a.counts[c] > a.counts[donor])) {
                donor = c;
            }
        }
        if (donor == cb.size()) {
            break;
        }
        const double spread = std::sqrt(a.cell_sse[donor] / static_cast<double>(a.counts[donor]));
        std::vector<double> dir(cb.dim);
        double norm = 0.0;
        while (norm == 0.0) {
            norm = 0.0;
            for (auto& d : dir) {
                d = normal(rng);
                norm += d * d;
            }
            norm = std::sqrt(norm);
        }
        for (std::size_t k = 0; k < cb.dim; ++k) {
            cb.centroids[e * cb.dim + k] = cb.centroids[donor * cb.dim + k] + epsilon * spread * dir[k] / norm;
        }
        // Split bookkeeping so consecutive empty cells spread over donors.
        const std::size_t half = a.counts[donor] / 2;
        a.counts[e] = half;
        a.counts[donor] -= half;
        a.cell_sse[e] = a.cell_sse[donor] / 2.0;
        a.cell_sse[donor] /= 2.0;
        moved = true;
    }
    return moved;
}

}  // namespace detail

/// Binary-splitting LBG (generalized Lloyd) codebook of 2^bits centroids.
///
/// Starts from the global centroid. Each level splits every centroid c into
/// c(1 + eps*r) and c(1 - eps*r), with r a seeded per-component factor in
/// [0.5, 1.5] that breaks symmetric ties (zero components use the data's RMS
/// spread instead of c), then runs Lloyd iterations until the relative
/// distortion improvement drops below the threshold or max_iters is hit.
inline Codebook lbg_train(const FeatureSequence& vectors, int bits, const LbgParams& params = {},
                          LbgTrace* trace = nullptr) {
    if (vectors.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training vectors");
    }
    if (bits < 1 || bits > 8) {
        throw Error(ErrorCode::InvalidParams, "bits must lie in [1, 8]");
    }
    if (!(params.split_epsilon > 0.0) || params.rel_improvement_threshold < 0.0 || params.max_iters < 1) {
        throw Error(ErrorCode::InvalidParams, "split_epsilon > 0, threshold >= 0 and max_iters >= 1 required");
    }

    const std::size_t dim = vectors.dim();
    const std::size_t n = vectors.size();
    Rng rng(params.seed);
    std::uniform_real_distribution<double> factor(0.5, 1.5);

    Codebook cb{0, dim, std::vector<double>(dim, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = vectors.row(i);
        for (std::size_t k = 0; k < dim; ++k) {
            cb.centroids[k] += row[k];
        }
    }
    for (auto& c : cb.centroids) {
        c /= static_cast<double>(n);
    }
    double distortion = detail::assign_cells(vectors, cb).distortion;
    const double spread = std::sqrt(distortion / static_cast<double>(dim));
    if (trace) {
        trace->level_distortion.assign(1, distortion);
        trace->iterations.clear();
    }

    for (int level = 1; level <= bits; ++level) {
        const std::size_t old = cb.size();
        std::vector<double> next(2 * old * dim);
        for (std::size_t c = 0; c < old; ++c) {
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = cb.centroids[c * dim + k];
                const double offset = params.split_epsilon * factor(rng) * (v != 0.0 ? v : spread);
                next[(2 * c) * dim + k] = v + offset;
                next[(2 * c + 1) * dim + k] = v - offset;
            }
        }
        cb.centroids = std::move(next);
        cb.bits = level;

        std::vector<double> history;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0;; ++it) {
            auto a = detail::assign_cells(vectors, cb);
            bool repaired = false;
            for (int round = 0; round < 4; ++round) {
                if (!detail::repair_empty_cells(a, cb, params.split_epsilon, rng)) {
                    break;
                }
                repaired = true;
                a = detail::assign_cells(vectors, cb);
            }
            history.push_back(a.distortion);
            distortion = a.distortion;
            const bool converged = !repaired && (a.distortion == 0.0 ||
                                                 (std::isfinite(prev) &&
                                                  prev - a.distortion <= params.rel_improvement_threshold * prev));
            if (converged || it + 1 >= params.max_iters) {
                break;
            }
            prev = a.distortion;
            detail::update_centroids(vectors, a, cb);
        }
        if (trace) {
            trace->level_distortion.push_back(distortion);
            trace->iterations.push_back(std::move(history));
        }
    }
    return cb;
}

/// Mean squared distance from each vector to its nearest centroid.
inline double quantization_distortion(const FeatureSequence& vectors, const Codebook& cb) {
    if (vectors.dim() != cb.dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "vector dim " + std::to_string(vectors.dim()) + " vs codebook dim " + std::to_string(cb.dim));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        total += cb.nearest(vectors.row(i)).second;
    }
    return total / static_cast<double>(vectors.size());
}

/// Contiguous partition into `sections` parts; with length q*S + r the first
/// r parts get q + 1 vectors.
inline std::vector<FeatureSequence> split_sections(const FeatureSequence& seq, std::size_t sections) {
    if (sections == 0) {
        throw Error(ErrorCode::InvalidParams, "section count must be >= 1");
    }
    if (seq.size() < sections) {
        throw Error(ErrorCode::TooShort,
                    "sequence of " + std::to_string(seq.size()) + " vectors cannot form " + std::to_string(sections) +
                        " sections");
    }
    const std::size_t q = seq.size() / sections;
    const std::size_t r = seq.size() % sections;
    std::vector<FeatureSequence> out;
    out.reserve(sections);
    std::size_t first = 0;
    for (std::size_t i = 0; i < sections; ++i) {
        const std::size_t len = q + (i < r ? 1 : 0);
        out.push_back(seq.slice(first, len));
        first += len;
    }
    return out;
}

struct MsvqModel {
    std::string user_id;
    std::vector<Codebook> codebooks;  // initial -> final section

    std::size_t sections() const noexcept { return codebooks.size(); }
    bool operator==(const MsvqModel&) const = default;
};

/// One codebook per section, trained on the pooled i-th sections of all
/// enrolment sequences. Section i trains with a seed derived from (seed, i).
inline MsvqModel build_msvq_model(std::span<const FeatureSequence> training, std::size_t sections, int bits,
                                  const LbgParams& params = {}, std::string user_id = {}) {
    if (training.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no enrolment sequences");
    }
    const std::size_t dim = training.front().dim();
    std::vector<std::vector<double>> pooled(sections);
    for (const auto& seq : training) {
        if (seq.dim() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "enrolment sequences of unequal dimension");
        }
        auto parts = split_sections(seq, sections);
        for (std::size_t s = 0; s < sections; ++s) {
            const auto d = parts[s].data();
            pooled[s].insert(pooled[s].end(), d.begin(), d.end());
        }
    }
    MsvqModel model;
    model.user_id = std::move(user_id);
    for (std::size_t s = 0; s < sections; ++s) {
        LbgParams p = params;
        p.seed = derive_seed(params.seed, {s});
        model.codebooks.push_back(lbg_train(FeatureSequence(dim, std::move(pooled[s])), bits, p));
    }
    return model;
}

/// Average over sections of the mean squared quantization error of the
/// probe's i-th section against codebook i.
inline double msvq_distortion(const FeatureSequence& probe, const MsvqModel& model) {
    if (model.codebooks.empty()) {
        throw Error(ErrorCode::InvalidParams, "model has no codebooks");
    }
    const auto parts = split_sections(probe, model.sections());
    double total = 0.0;
    for (std::size_t s = 0; s < parts.size(); ++s) {
        total += quantization_distortion(parts[s], model.codebooks[s]);
    }
    return total / static_cast<double>(parts.size());
}

// Text persistence:
//   #msvq v1 user=<id> sections=<S> bits=<b> dim=<d>
//   then S * 2^b rows of d values, section-major.
inline std::string write_msvq_model(const MsvqModel& m) {
    if (m.codebooks.empty()) {
        throw Error(ErrorCode::InvalidParams, "model has no codebooks");
    }
    const auto& first = m.codebooks.front();
    std::string out = "#msvq v1 user=" + m.user_id + " sections=" + std::to_string(m.sections()) +
                      " bits=" + std::to_string(first.bits) + " dim=" + std::to_string(first.dim) + "\n";
    for (const auto& cb : m.codebooks) {
        for (std::size_t c = 0; c < cb.size(); ++c) {
            const auto row = cb.centroid(c);
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (k) out += ' ';
                out += detail::format_double(row[k]);
            }
            out += '\n';
        }
    }
    return out;
}

inline MsvqModel parse_msvq_model(std::string_view content) {
    std::size_t line_no = 0;
    const auto tok = detail::split_ws(detail::take_line(content, line_no));
    if (tok.size() != 6 || tok[0] != "#msvq" || tok[1] != "v1") {
        throw detail::line_error(ErrorCode::MalformedLine, line_no, "expected '#msvq v1 user=.. sections=.. bits=.. dim=..'");
    }
    if (tok[2].substr(0, 5) != "user=") {
        throw detail::line_error(ErrorCode::MalformedLine, line_no, "bad header field user");
    }
    MsvqModel m;
    m.user_id = std::string(tok[2].substr(5));
    const auto sections = static_cast<std::size_t>(detail::header_int(tok[3], "sections", 1, 1000, line_no));
    const int bits = static_cast<int>(detail::header_int(tok[4], "bits", 1, 8, line_no));
    const auto dim = static_cast<std::size_t>(detail::header_int(tok[5], "dim", 1, 1 << 20, line_no));
    for (std::size_t s = 0; s < sections; ++s) {
        m.codebooks.push_back(Codebook{bits, dim, detail::read_rows(content, std::size_t{1} << bits, dim, line_no)});
    }
    while (!content.empty()) {
        if (!detail::split_ws(detail::take_line(content, line_no)).empty()) {
            throw detail::line_error(ErrorCode::MalformedLine, line_no, "trailing data");
        }
    }
    return m;
}

}  // namespace inkrec
