#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inkrec/error.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/parallel.hpp"

namespace inkrec {

struct ProbeInfo {
    std::string id;
    std::string subject;
    std::optional<Phase> phase;
    std::optional<TaskId> task;
};

/// Probe x model dissimilarities. Each probe's true model is the column whose
/// subject matches the probe's subject.
struct ScoreMatrix {
    std::vector<ProbeInfo> probes;
    std::vector<std::string> models;
    std::vector<std::size_t> true_model;
    std::vector<double> scores;  // row-major, probes x models

    std::size_t rows() const noexcept { return probes.size(); }
    std::size_t cols() const noexcept { return models.size(); }
    double at(std::size_t probe, std::size_t model) const { return scores[probe * cols() + model]; }
    double genuine(std::size_t probe) const { return at(probe, true_model[probe]); }

    std::vector<double> genuine_scores() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < rows(); ++i) {
            out.push_back(genuine(i));
        }
        return out;
    }

    std::vector<double> impostor_scores() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t j = 0; j < cols(); ++j) {
                if (j != true_model[i]) {
                    out.push_back(at(i, j));
                }
            }
        }
        return out;
    }
};

/// Assembles a matrix from precomputed scores, resolving each probe's true
/// model by subject.
inline ScoreMatrix make_score_matrix(std::vector<ProbeInfo> probes, std::vector<std::string> models,
                                     std::vector<double> scores) {
    if (scores.size() != probes.size() * models.size()) {
        throw Error(ErrorCode::DimensionMismatch, "score count does not match probes x models");
    }
    ScoreMatrix m{std::move(probes), std::move(models), {}, std::move(scores)};
    for (const auto& p : m.probes) {
        const auto it = std::find(m.models.begin(), m.models.end(), p.subject);
        if (it == m.models.end()) {
            throw Error(ErrorCode::MissingModel, "probe " + p.id + " has no model for subject " + p.subject);
        }
        m.true_model.push_back(static_cast<std::size_t>(it - m.models.begin()));
    }
    for (double s : m.scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw Error(ErrorCode::InvalidParams, "dissimilarities must be finite and non-negative");
        }
    }
    return m;
}

template <class P>
concept ScoreableProbe = requires(const P& p) {
    { p.info } -> std::convertible_to<ProbeInfo>;
};

template <class M>
concept ScoreableModel = requires(const M& m) {
    { m.subject } -> std::convertible_to<std::string>;
};

/// Scores every (probe, model) pair with `scorer(probe, model)`. Rows may be
/// computed concurrently; assembly is ordered. A matcher error is rethrown
/// with the offending pair prepended to its message.
template <ScoreableProbe P, ScoreableModel M, class Scorer>
ScoreMatrix build_score_matrix(std::span<const P> probes, std::span<const M> models, Scorer&& scorer,
                               unsigned threads = 1) {
    std::vector<double> scores(probes.size() * models.size());
    parallel_for(probes.size(), threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < models.size(); ++j) {
            try {
                scores[i * models.size() + j] = scorer(probes[i], models[j]);
            } catch (const Error& e) {
                throw Error(e.code(), "probe " + probes[i].info.id + " vs model " + std::string(models[j].subject) +
                                          ": " + e.what());
            }
        }
    });
    std::vector<ProbeInfo> infos;
    std::vector<std::string> names;
    for (const auto& p : probes) infos.push_back(p.info);
    for (const auto& m : models) names.emplace_back(m.subject);
    return make_score_matrix(std::move(infos), std::move(names), std::move(scores));
}

struct ProbeOutcome {
    std::size_t predicted = 0;
    std::size_t rank = 0;  // 1 = true model strictly best
};

struct IdentificationReport {
    double idr = 0.0;  // percent
    std::vector<ProbeOutcome> per_probe;
};

/// Closed-set identification by minimum dissimilarity. A model tying the
/// true model counts against it, so exact ties are misidentifications.
inline IdentificationReport identify(const ScoreMatrix& m) {
    IdentificationReport rep;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::size_t best = 0;
        std::size_t rank = 1;
        const double truth = m.genuine(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (m.at(i, j) < m.at(i, best)) {
                best = j;
            }
            if (j != m.true_model[i] && m.at(i, j) <= truth) {
                ++rank;
            }
        }
        rep.per_probe.push_back({best, rank});
        hits += rank == 1 ? 1 : 0;
    }
    rep.idr = m.rows() == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(m.rows());
    return rep;
}

struct CurvePoint {
    double threshold = 0.0;  // accept iff dissimilarity <= threshold
    double far = 0.0;        // percent
    double frr = 0.0;        // percent
};

struct VerificationReport {
    std::vector<CurvePoint> curve;
    double eer = 0.0;  // percent
    double eer_threshold = 0.0;
};

/// FAR/FRR staircase: a -inf sentinel, one point per distinct score in
/// ascending order, and a +inf sentinel.
inline std::vector<CurvePoint> far_frr_curve(const ScoreMatrix& m) {
    auto gen = m.genuine_scores();
    auto imp = m.impostor_scores();
    if (gen.empty()) {
        throw Error(ErrorCode::NoGenuine, "no genuine scores");
    }
    if (imp.empty()) {
        throw Error(ErrorCode::NoImpostor, "no impostor scores");
    }
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    std::vector<double> thresholds;
    thresholds.reserve(gen.size() + imp.size());
    std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    constexpr double inf = std::numeric_limits<double>::infinity();
    const double ng = static_cast<double>(gen.size());
    const double ni = static_cast<double>(imp.size());
    std::vector<CurvePoint> curve;
    curve.reserve(thresholds.size() + 2);
    curve.push_back({-inf, 0.0, 100.0});
    std::size_t gi = 0, ii = 0;
    for (double t : thresholds) {
        while (gi < gen.size() && gen[gi] <= t) ++gi;
        while (ii < imp.size() && imp[ii] <= t) ++ii;
        curve.push_back({t, 100.0 * static_cast<double>(ii) / ni, 100.0 * (ng - static_cast<double>(gi)) / ng});
    }
    curve.push_back({inf, 100.0, 0.0});
    return curve;
}

/// Equal error rate on the lower convex hull of the (FAR, FRR) staircase:
/// the hull segment that crosses FAR = FRR is interpolated linearly, which
/// reduces to the staircase value whenever a sweep point lies on the line.
inline VerificationReport verify_eer(const ScoreMatrix& m) {
    VerificationReport rep;
    rep.curve = far_frr_curve(m);

    // Points ordered by FAR ascending, FRR ascending; first occurrence keeps
    // the lowest threshold for duplicated operating points.
    std::vector<CurvePoint> pts = rep.curve;
    std::stable_sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.far < b.far || (a.far == b.far && a.frr < b.frr);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const CurvePoint& a, const CurvePoint& b) { return a.far == b.far && a.frr == b.frr; }),
              pts.end());

    auto cross = [](const CurvePoint& o, const CurvePoint& a, const CurvePoint& b) {
        return (a.far - o.far) * (b.frr - o.frr) - (a.frr - o.frr) * (b.far - o.far);
    };
    std::vector<CurvePoint> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) < 0.0) {
            hull.pop_back();
        }
        hull.push_back(p);
    }

    for (std::size_t k = 0; k < hull.size(); ++k) {
        const double dk = hull[k].frr - hull[k].far;
        if (dk > 0.0) {
            continue;
        }
        if (dk == 0.0 || k == 0) {
            rep.eer = hull[k].far;
            rep.eer_threshold = hull[k].threshold;
            break;
        }
        const auto& a = hull[k - 1];
        const auto& b = hull[k];
        const double da = a.frr - a.far;
        const double alpha = da / (da - dk);
        rep.eer = a.far + alpha * (b.far - a.far);
        if (std::isfinite(a.threshold) && std::isfinite(b.threshold)) {
            rep.eer_threshold = a.threshold + alpha * (b.threshold - a.threshold);
        } else {
            rep.eer_threshold = std::isfinite(a.threshold) ? a.threshold : b.threshold;
        }
        break;
    }
    return rep;
}

namespace detail {

inline nlohmann::ordered_json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

/// Report object for one score matrix. Sentinel thresholds (+-inf) are
/// written as null.
inline nlohmann::ordered_json report_json(const ScoreMatrix& m, const IdentificationReport& id,
                                          const VerificationReport& ver) {
    nlohmann::ordered_json j;
    j["idr"] = id.idr;
    j["eer"] = ver.eer;
    j["eer_threshold"] = detail::finite_or_null(ver.eer_threshold);
    auto curve = nlohmann::ordered_json::array();
    for (const auto& p : ver.curve) {
        nlohmann::ordered_json c;
        c["threshold"] = detail::finite_or_null(p.threshold);
        c["far"] = p.far;
        c["frr"] = p.frr;
        curve.push_back(std::move(c));
    }
    j["curve"] = std::move(curve);
    auto probes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::ordered_json p;
        p["probe"] = m.probes[i].id;
        p["true_model"] = m.models[m.true_model[i]];
        p["predicted"] = m.models[id.per_probe[i].predicted];
        p["rank"] = id.per_probe[i].rank;
        p["genuine_score"] = m.genuine(i);
        probes.push_back(std::move(p));
    }
    j["per_probe"] = std::move(probes);
    return j;
}

}  // namespace inkrec
