#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/random.hpp"

namespace inkrec {

/// Parameters of the synthetic corpus. Lengths are tablet units, times ms.
struct SynthParams {
    std::size_t n_writers = 20;
    std::uint64_t seed = 42;
    std::array<double, 4> fatigue{0.0, 0.2, 0.8, 0.5};  // BASE, MEIF, SEIF, POST_SEIF

    // per-writer style
    int min_pen_lifts = 1;  // signature pen-lifts
    int max_pen_lifts = 3;
    double base_amplitude = 600.0;
    double amplitude_spread = 0.2;  // log-normal sigma across writers
    double base_tempo = 6.0;        // pen speed, units per ms
    double tempo_spread = 0.2;
    double style_spread = 1.0;  // scales how different writers' shapes are
    double intra_noise = 1.0;   // scales record-to-record variation of one writer

    // fatigue distortion, applied with f = fatigue level, u ~ U[0.5, 1.5]
    double vertical_gain = 0.3;    // y *= 1 + vertical_gain * f * u
    double horizontal_gain = 0.15; // x *= 1 + horizontal_gain * f * u
    double timing_gain = 0.2;      // duration *= 1 + timing_gain * f * u
    double jitter_gain = 0.2;      // per-sample jitter std = jitter_gain * f * amplitude

    double sample_period_ms = 5.0;
};

inline void validate(const SynthParams& p) {
    auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidParams, what); };
    if (p.n_writers < 2) throw bad("n_writers must be >= 2");
    for (double f : p.fatigue) {
        if (!(f >= 0.0 && f <= 1.0)) throw bad("fatigue levels must lie in [0, 1]");
    }
    if (p.min_pen_lifts < 0 || p.max_pen_lifts < p.min_pen_lifts) throw bad("pen-lift range is empty");
    if (!(p.base_amplitude > 0.0) || !(p.base_tempo > 0.0) || !(p.sample_period_ms > 0.0)) {
        throw bad("amplitude, tempo and sample period must be positive");
    }
    if (p.amplitude_spread < 0.0 || p.tempo_spread < 0.0 || p.style_spread < 0.0 || p.intra_noise < 0.0 ||
        p.vertical_gain < 0.0 || p.horizontal_gain < 0.0 || p.timing_gain < 0.0 || p.jitter_gain < 0.0) {
        throw bad("spreads and gains must be non-negative");
    }
}

/// Multipliers applied to one record at fatigue level f with draw u.
struct FatigueDistortion {
    double vertical = 1.0;
    double horizontal = 1.0;
    double timing = 1.0;
    double jitter_std = 0.0;
};

inline FatigueDistortion fatigue_distortion(const SynthParams& p, double f, double u, double amplitude) {
    return {1.0 + p.vertical_gain * f * u, 1.0 + p.horizontal_gain * f * u, 1.0 + p.timing_gain * f * u,
            p.jitter_gain * f * amplitude};
}

/// Fatigue indicator labels attached to each phase of the synthetic corpus,
/// a monotone function of the phase's fatigue level.
inline PhaseLabel synthetic_phase_label(Phase phase, double f) {
    PhaseLabel l;
    l.phase = phase;
    l.lactate = std::round((1.0 + 13.0 * f) * 100.0) / 100.0;
    l.flight_height = std::round((36.0 - 3.0 * f) * 100.0) / 100.0;
    l.rpe = std::round((1.0 + 8.0 * f) * 100.0) / 100.0;
    return l;
}

inline std::string subject_name(std::size_t writer) {
    std::string digits = std::to_string(writer + 1);
    if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
    return "S" + digits;
}

namespace detail {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

using Polyline = std::vector<Vec2>;

struct Glyph {
    std::vector<Polyline> strokes;  // control points, letter units (height 1)
    double width = 0.7;
};

struct WriterStyle {
    double amplitude = 0.0;
    double tempo = 0.0;
    double slant = 0.0;
    double width = 1.0;
    double spacing = 0.25;
    double air_bulge = 0.3;
    double pressure = 500.0;
    double consistency = 1.0;  // multiplies the corpus-wide intra-writer noise
    std::map<char, Glyph> letters;
    std::vector<Polyline> signature;
};

enum StreamTag : std::uint64_t { kAlphabetStream = 1, kWriterStream = 2, kShapeStream = 3, kJitterStream = 4 };

inline constexpr std::string_view kLetters = "ABCDEGHILMNOPRSTVZ";
inline constexpr int kAllographsPerLetter = 3;

inline Glyph random_glyph(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Glyph g;
    g.width = 0.5 + 0.4 * unit(rng);
    const double pick = unit(rng);
    const int n_strokes = pick < 0.3 ? 1 : pick < 0.8 ? 2 : 3;
    for (int s = 0; s < n_strokes; ++s) {
        const int n_points = 2 + static_cast<int>(unit(rng) * 4.0);
        Polyline line;
        Vec2 p{unit(rng) * g.width, unit(rng)};
        line.push_back(p);
        for (int k = 1; k < n_points; ++k) {
            const double len = 0.35 + 0.5 * unit(rng);
            const double ang = 2.0 * std::numbers::pi * unit(rng);
            p.x = std::clamp(p.x + len * std::cos(ang), 0.0, g.width);
            p.y = std::clamp(p.y + len * std::sin(ang), 0.0, 1.0);
            line.push_back(p);
        }
        g.strokes.push_back(std::move(line));
    }
    return g;
}

inline std::map<char, std::vector<Glyph>> make_alphabet(std::uint64_t seed) {
    std::map<char, std::vector<Glyph>> alphabet;
    for (char c : kLetters) {
        Rng rng(derive_seed(seed, {kAlphabetStream, static_cast<std::uint64_t>(c)}));
        for (int v = 0; v < kAllographsPerLetter; ++v) {
            alphabet[c].push_back(random_glyph(rng));
        }
    }
    return alphabet;
}

inline WriterStyle make_writer(const SynthParams& p, const std::map<char, std::vector<Glyph>>& alphabet,
                               std::size_t writer) {
    Rng rng(derive_seed(p.seed, {kWriterStream, writer}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ss = p.style_spread;

    WriterStyle w;
    w.amplitude = p.base_amplitude * std::exp(p.amplitude_spread * normal(rng));
    w.tempo = p.base_tempo * std::exp(p.tempo_spread * normal(rng));
    w.slant = 0.15 * ss * normal(rng);
    w.width = std::exp(0.12 * ss * normal(rng));
    w.spacing = 0.15 + 0.25 * unit(rng);
    w.air_bulge = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 0.4 * unit(rng));
    w.pressure = 250.0 + 450.0 * unit(rng);
    w.consistency = std::exp(0.35 * normal(rng));

    for (const auto& [c, variants] : alphabet) {
        const auto v = static_cast<std::size_t>(unit(rng) * kAllographsPerLetter) % variants.size();
        Glyph g = variants[v];
        for (auto& stroke : g.strokes) {
            for (auto& pt : stroke) {
                pt.x += 0.06 * ss * normal(rng);
                pt.y += 0.06 * ss * normal(rng);
            }
        }
        w.letters[c] = std::move(g);
    }

    const int lifts = p.min_pen_lifts + static_cast<int>(unit(rng) * (p.max_pen_lifts - p.min_pen_lifts + 1));
    double cursor = 0.0;
    for (int s = 0; s <= std::min(lifts, p.max_pen_lifts); ++s) {
        Polyline line;
        const int n_points = 5 + static_cast<int>(unit(rng) * 5.0);
        cursor += 0.1 + 0.3 * unit(rng);
        double y = 0.3 * normal(rng);
        for (int k = 0; k < n_points; ++k) {
            line.push_back({cursor, y});
            cursor += 0.25 + 0.45 * unit(rng);
            y = std::clamp(0.5 * normal(rng), -1.2, 1.2);
        }
        w.signature.push_back(std::move(line));
    }
    return w;
}

// Uniform Catmull-Rom through the control points, `sub` segments per span.
inline Polyline densify(const Polyline& ctrl, int sub) {
    if (ctrl.size() < 2) return ctrl;
    Polyline out;
    const auto at = [&](std::ptrdiff_t i) {
        return ctrl[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, std::ssize(ctrl) - 1))];
    };
    for (std::ptrdiff_t i = 0; i + 1 < std::ssize(ctrl); ++i) {
        const Vec2 p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
        for (int k = 0; k < sub; ++k) {
            const double t = static_cast<double>(k) / sub;
            const double t2 = t * t, t3 = t2 * t;
            auto blend = [&](double a, double b, double c, double d) {
                return 0.5 * (2.0 * b + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                              (-a + 3.0 * b - 3.0 * c + d) * t3);
            };
            out.push_back({blend(p0.x, p1.x, p2.x, p3.x), blend(p0.y, p1.y, p2.y, p3.y)});
        }
    }
    out.push_back(ctrl.back());
    return out;
}

inline std::vector<double> cumulative_length(const Polyline& line) {
    std::vector<double> cum(line.size(), 0.0);
    for (std::size_t i = 1; i < line.size(); ++i) {
        cum[i] = cum[i - 1] + std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
    }
    return cum;
}

inline Vec2 point_at(const Polyline& line, const std::vector<double>& cum, double s) {
    const auto it = std::lower_bound(cum.begin(), cum.end(), s);
    if (it == cum.begin()) return line.front();
    if (it == cum.end()) return line.back();
    const auto i = static_cast<std::size_t>(it - cum.begin());
    const double span = cum[i] - cum[i - 1];
    const double u = span > 0.0 ? (s - cum[i - 1]) / span : 0.0;
    return {line[i - 1].x + u * (line[i].x - line[i - 1].x), line[i - 1].y + u * (line[i].y - line[i - 1].y)};
}

struct RenderContext {
    const SynthParams& params;
    const WriterStyle& writer;
    double tempo = 0.0;   // this record's pen speed
    double timing = 1.0;  // fatigue dilation
    double jitter = 0.0;  // per-sample std
    Rng* jitter_rng = nullptr;
};

// Appends the timed samples of one trajectory. Pen-down strokes use a
// bell-shaped speed profile over all n samples; pen-up moves skip both
// endpoints, which coincide with the neighbouring pen-down samples.
inline void emit(const RenderContext& ctx, const Polyline& path, PenState state, std::vector<PenSample>& out) {
    const auto cum = cumulative_length(path);
    const double length = cum.back();
    const double speed = (state == PenState::InAir ? 1.5 : 1.0) * ctx.tempo * ctx.params.sample_period_ms;
    const auto n = static_cast<std::size_t>(std::max(4.0, std::round(length / speed * ctx.timing)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t first = state == PenState::InAir ? 1 : 0;
    const std::size_t last = state == PenState::InAir ? n - 1 : n;
    for (std::size_t k = first; k < last; ++k) {
        const double tau = state == PenState::InAir ? static_cast<double>(k) / static_cast<double>(n)
                                                    : static_cast<double>(k) / static_cast<double>(n - 1);
        const double s = length * (tau - std::sin(2.0 * std::numbers::pi * tau) / (2.0 * std::numbers::pi));
        const Vec2 p = point_at(path, cum, s);
        PenSample smp;
        smp.t = out.empty() ? 0.0 : out.back().t + ctx.params.sample_period_ms;
        smp.x = std::round(p.x + ctx.jitter * normal(*ctx.jitter_rng));
        smp.y = std::round(p.y + ctx.jitter * normal(*ctx.jitter_rng));
        smp.pen_state = state;
        if (state == PenState::OnSurface) {
            const double bell = 0.6 + 0.4 * std::sin(std::numbers::pi * tau);
            smp.pressure = std::max(1.0, std::round(ctx.writer.pressure * bell + 15.0 * normal(*ctx.jitter_rng)));
        }
        out.push_back(smp);
    }
}

}  // namespace detail

/// Deterministic synthetic corpus: per writer and phase, two signatures and
/// one realization of each of the four words. Every record draws from its
/// own streams derived from (seed, writer, phase, task), so a record's shape
/// noise does not depend on the fatigue level of its phase or on any other
/// record.
class SynthCorpus {
public:
    explicit SynthCorpus(const SynthParams& params) : params_(params) {
        validate(params_);
        const auto alphabet = detail::make_alphabet(params_.seed);
        for (std::size_t w = 0; w < params_.n_writers; ++w) {
            writers_.push_back(detail::make_writer(params_, alphabet, w));
        }
    }

    const SynthParams& params() const noexcept { return params_; }
    std::size_t writers() const noexcept { return writers_.size(); }

    InkRecord record(std::size_t writer, Phase phase, TaskId task) const {
        using namespace detail;
        const WriterStyle& ws = writers_.at(writer);
        const auto phase_idx = static_cast<std::size_t>(phase);
        const double f = params_.fatigue[phase_idx];
        Rng shape(derive_seed(params_.seed, {kShapeStream, writer, phase_idx, static_cast<std::uint64_t>(task)}));
        Rng jitter(derive_seed(params_.seed, {kJitterStream, writer, phase_idx, static_cast<std::uint64_t>(task)}));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const double intra = params_.intra_noise * ws.consistency;
        const double u = 0.5 + unit(shape);
        const FatigueDistortion fd = fatigue_distortion(params_, f, u, ws.amplitude);
        const double scale = ws.amplitude * std::exp(0.03 * intra * normal(shape));
        const double theta = 0.02 * intra * normal(shape);
        const double tempo = ws.tempo * std::exp(0.05 * intra * normal(shape));
        const double cp_noise = 0.035 * intra;

        // Pen-down control polylines in writer units.
        std::vector<Polyline> strokes;
        if (is_word_task(task)) {
            double cursor = 0.0;
            for (char c : word_text(task)) {
                const Glyph& g = ws.letters.at(c);
                const double dx = cursor + 0.04 * intra * normal(shape);
                for (const auto& s : g.strokes) {
                    Polyline line;
                    for (const auto& pt : s) {
                        line.push_back({dx + pt.x + cp_noise * normal(shape), pt.y + cp_noise * normal(shape)});
                    }
                    strokes.push_back(std::move(line));
                }
                cursor += g.width + ws.spacing;
            }
        } else {
            for (const auto& s : ws.signature) {
                Polyline line;
                for (const auto& pt : s) {
                    line.push_back({pt.x + cp_noise * normal(shape), pt.y + cp_noise * normal(shape)});
                }
                strokes.push_back(std::move(line));
            }
        }

        const double ct = std::cos(theta), st = std::sin(theta);
        auto to_device = [&](Vec2 p) {
            const double x = ws.width * (p.x + ws.slant * p.y) * scale;
            const double y = p.y * scale;
            return Vec2{(ct * x - st * y) * fd.horizontal, (st * x + ct * y) * fd.vertical};
        };

        RenderContext ctx{params_, ws, tempo, fd.timing,
                          std::sqrt(std::pow(0.004 * intra * ws.amplitude, 2) + std::pow(fd.jitter_std, 2)), &jitter};
        InkRecord rec;
        rec.subject_id = subject_name(writer);
        rec.phase = synthetic_phase_label(phase, f);
        rec.task_id = task;
        Polyline prev_end;
        for (std::size_t i = 0; i < strokes.size(); ++i) {
            Polyline ctrl;
            for (const auto& p : strokes[i]) ctrl.push_back(to_device(p));
            const Polyline dense = densify(ctrl, 12);
            if (i > 0) {
                const Vec2 a = prev_end.back();
                const Vec2 b = dense.front();
                const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y) + ws.air_bulge * scale * fd.vertical};
                Polyline air;
                for (int k = 0; k <= 24; ++k) {
                    const double t = k / 24.0;
                    air.push_back({(1 - t) * (1 - t) * a.x + 2 * (1 - t) * t * mid.x + t * t * b.x,
                                   (1 - t) * (1 - t) * a.y + 2 * (1 - t) * t * mid.y + t * t * b.y});
                }
                emit(ctx, air, PenState::InAir, rec.samples);
            }
            emit(ctx, dense, PenState::OnSurface, rec.samples);
            prev_end = dense;
        }
        return rec;
    }

    /// All records ordered by writer, phase, task.
    std::vector<InkRecord> all() const {
        std::vector<InkRecord> out;
        out.reserve(writers_.size() * kAllPhases.size() * kAllTasks.size());
        for (std::size_t w = 0; w < writers_.size(); ++w) {
            for (Phase p : kAllPhases) {
                for (TaskId t : kAllTasks) {
                    out.push_back(record(w, p, t));
                }
            }
        }
        return out;
    }

private:
    SynthParams params_;
    std::vector<detail::WriterStyle> writers_;
};

inline std::vector<InkRecord> synth_dataset(const SynthParams& params) { return SynthCorpus(params).all(); }

}  // namespace inkrec
