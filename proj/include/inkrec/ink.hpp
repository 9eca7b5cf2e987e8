#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inkrec/error.hpp"
#include "inkrec/text_io.hpp"

namespace inkrec {

enum class PenState : std::uint8_t { OnSurface, InAir };

enum class Phase : std::uint8_t { Base, Meif, Seif, PostSeif };

enum class TaskId : std::uint8_t { Sig1, Sig2, W1, W2, W3, W4 };

inline constexpr std::array<Phase, 4> kAllPhases{Phase::Base, Phase::Meif, Phase::Seif, Phase::PostSeif};
inline constexpr std::array<TaskId, 6> kAllTasks{TaskId::Sig1, TaskId::Sig2, TaskId::W1,
                                                 TaskId::W2,   TaskId::W3,   TaskId::W4};
inline constexpr std::array<TaskId, 2> kSignatureTasks{TaskId::Sig1, TaskId::Sig2};
inline constexpr std::array<TaskId, 4> kWordTasks{TaskId::W1, TaskId::W2, TaskId::W3, TaskId::W4};

constexpr std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Base: return "BASE";
    case Phase::Meif: return "MEIF";
    case Phase::Seif: return "SEIF";
    case Phase::PostSeif: return "POST_SEIF";
    }
    return "?";
}

constexpr std::string_view to_string(TaskId t) {
    switch (t) {
    case TaskId::Sig1: return "SIG1";
    case TaskId::Sig2: return "SIG2";
    case TaskId::W1: return "W1";
    case TaskId::W2: return "W2";
    case TaskId::W3: return "W3";
    case TaskId::W4: return "W4";
    }
    return "?";
}

constexpr std::string_view to_string(PenState s) {
    return s == PenState::OnSurface ? "OnSurface" : "InAir";
}

inline std::optional<Phase> parse_phase(std::string_view s) {
    for (Phase p : kAllPhases) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

inline std::optional<TaskId> parse_task(std::string_view s) {
    for (TaskId t : kAllTasks) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

constexpr bool is_word_task(TaskId t) { return t != TaskId::Sig1 && t != TaskId::Sig2; }

/// Uppercase text written for each word task.
constexpr std::string_view word_text(TaskId t) {
    switch (t) {
    case TaskId::W1: return "BIODEGRADABLE";
    case TaskId::W2: return "DELEZNABLE";
    case TaskId::W3: return "DESAPROVECHAMIENTO";
    case TaskId::W4: return "DESBRIZNAR";
    default: return "";
    }
}

struct PenSample {
    double t = 0.0;  // ms
    double x = 0.0;
    double y = 0.0;
    double pressure = 0.0;
    PenState pen_state = PenState::OnSurface;

    bool operator==(const PenSample&) const = default;
};

/// Acquisition phase plus the fatigue indicators measured for it. The
/// indicators are labels only; nothing in the matchers reads them.
struct PhaseLabel {
    Phase phase = Phase::Base;
    std::optional<double> lactate;        // mmol/L
    std::optional<double> flight_height;  // MFFH
    std::optional<double> rpe;            // Borg, [1, 10]

    bool operator==(const PhaseLabel&) const = default;
};

struct InkRecord {
    std::vector<PenSample> samples;
    std::string subject_id;
    PhaseLabel phase;
    TaskId task_id = TaskId::Sig1;

    bool operator==(const InkRecord&) const = default;
};

struct Stroke {
    PenState kind = PenState::OnSurface;
    std::size_t first = 0;  // index of the first sample in the source record
    std::vector<PenSample> samples;
};

inline void validate_sample(const PenSample& s, std::size_t index) {
    const bool consistent = s.pen_state == PenState::InAir ? s.pressure == 0.0 : s.pressure > 0.0;
    if (!consistent) {
        throw Error(ErrorCode::InconsistentPressureState,
                    "sample " + std::to_string(index) + " has pressure " + detail::format_double(s.pressure) +
                        " with pen state " + std::string(to_string(s.pen_state)));
    }
}

/// Throws on the first violated record invariant.
inline void validate(const InkRecord& r) {
    if (r.samples.size() < 2) {
        throw Error(ErrorCode::EmptyRecord, "record needs at least 2 samples, has " + std::to_string(r.samples.size()));
    }
    if (r.phase.rpe && (*r.phase.rpe < 1.0 || *r.phase.rpe > 10.0)) {
        throw Error(ErrorCode::InvalidParams, "rpe outside [1, 10]");
    }
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        validate_sample(r.samples[i], i);
        if (i > 0 && !(r.samples[i].t > r.samples[i - 1].t)) {
            throw Error(ErrorCode::NonMonotoneTime, "sample " + std::to_string(i) + " does not advance time");
        }
    }
}

/// Parses the text ink format:
///
///     #ink v1 subject=<id> phase=<PHASE> task=<TASK>
///     #fatigue lactate=<f> mffh=<f> rpe=<f>      (optional, any subset of keys)
///     t x y pressure pen                         (one line per sample)
inline InkRecord parse_ink(std::string_view content) {
    using detail::line_error;
    InkRecord rec;
    bool have_header = false;
    bool have_fatigue = false;
    std::size_t line_no = 0;

    while (!content.empty()) {
        const std::size_t nl = content.find('\n');
        std::string_view line = content.substr(0, nl);
        content = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        const auto tok = detail::split_ws(line);
        if (tok.empty()) {
            continue;
        }

        if (!have_header) {
            if (tok.size() != 5 || tok[0] != "#ink" || tok[1] != "v1") {
                throw line_error(ErrorCode::MalformedLine, line_no, "expected '#ink v1 subject=.. phase=.. task=..'");
            }
            const auto subject = detail::value_of(tok[2], "subject");
            const auto phase = parse_phase(detail::value_of(tok[3], "phase"));
            const auto task = parse_task(detail::value_of(tok[4], "task"));
            if (subject.empty() || !phase || !task) {
                throw line_error(ErrorCode::MalformedLine, line_no, "bad header field");
            }
            rec.subject_id = std::string(subject);
            rec.phase.phase = *phase;
            rec.task_id = *task;
            have_header = true;
            continue;
        }

        if (tok[0] == "#fatigue") {
            if (have_fatigue || !rec.samples.empty() || tok.size() < 2 || tok.size() > 4) {
                throw line_error(ErrorCode::MalformedLine, line_no, "misplaced or malformed #fatigue line");
            }
            have_fatigue = true;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const auto eq = tok[k].find('=');
                double v = 0.0;
                if (eq == std::string_view::npos || !detail::parse_double(tok[k].substr(eq + 1), v) ||
                    !std::isfinite(v)) {
                    throw line_error(ErrorCode::MalformedLine, line_no, "bad fatigue field");
                }
                const auto key = tok[k].substr(0, eq);
                std::optional<double>* slot = key == "lactate" ? &rec.phase.lactate
                                              : key == "mffh"  ? &rec.phase.flight_height
                                              : key == "rpe"   ? &rec.phase.rpe
                                                               : nullptr;
                if (slot == nullptr || slot->has_value()) {
                    throw line_error(ErrorCode::MalformedLine, line_no, "unknown or repeated fatigue key");
                }
                *slot = v;
            }
            if (rec.phase.rpe && (*rec.phase.rpe < 1.0 || *rec.phase.rpe > 10.0)) {
                throw line_error(ErrorCode::MalformedLine, line_no, "rpe outside [1, 10]");
            }
            continue;
        }

        if (tok.size() != 5) {
            throw line_error(ErrorCode::MalformedLine, line_no,
                             "expected 5 fields, got " + std::to_string(tok.size()));
        }
        PenSample s;
        double* fields[4] = {&s.t, &s.x, &s.y, &s.pressure};
        for (int k = 0; k < 4; ++k) {
            if (!detail::parse_double(tok[k], *fields[k]) || !std::isfinite(*fields[k])) {
                throw line_error(ErrorCode::MalformedLine, line_no, "non-numeric field '" + std::string(tok[k]) + "'");
            }
        }
        if (tok[4] == "1") {
            s.pen_state = PenState::OnSurface;
        } else if (tok[4] == "0") {
            s.pen_state = PenState::InAir;
        } else {
            throw line_error(ErrorCode::MalformedLine, line_no, "pen state must be 0 or 1");
        }
        if (s.t < 0.0) {
            throw line_error(ErrorCode::MalformedLine, line_no, "negative timestamp");
        }
        if (!rec.samples.empty() && !(s.t > rec.samples.back().t)) {
            throw line_error(ErrorCode::NonMonotoneTime, line_no, "timestamp does not increase");
        }
        try {
            validate_sample(s, rec.samples.size());
        } catch (const Error& e) {
            throw line_error(e.code(), line_no, e.what());
        }
        rec.samples.push_back(s);
    }

    if (!have_header) {
        throw Error(ErrorCode::EmptyRecord, "no header");
    }
    if (rec.samples.size() < 2) {
        throw Error(ErrorCode::EmptyRecord, "record needs at least 2 samples, has " + std::to_string(rec.samples.size()));
    }
    return rec;
}

inline std::string write_ink(const InkRecord& r) {
    using detail::format_double;
    std::string out;
    out.reserve(32 * r.samples.size() + 96);
    out += "#ink v1 subject=" + r.subject_id + " phase=" + std::string(to_string(r.phase.phase)) +
           " task=" + std::string(to_string(r.task_id)) + "\n";
    if (r.phase.lactate || r.phase.flight_height || r.phase.rpe) {
        out += "#fatigue";
        if (r.phase.lactate) out += " lactate=" + format_double(*r.phase.lactate);
        if (r.phase.flight_height) out += " mffh=" + format_double(*r.phase.flight_height);
        if (r.phase.rpe) out += " rpe=" + format_double(*r.phase.rpe);
        out += "\n";
    }
    for (const auto& s : r.samples) {
        out += format_double(s.t);
        out += ' ';
        out += format_double(s.x);
        out += ' ';
        out += format_double(s.y);
        out += ' ';
        out += format_double(s.pressure);
        out += s.pen_state == PenState::OnSurface ? " 1\n" : " 0\n";
    }
    return out;
}

/// Splits a record into maximal runs of equal pen state.
inline std::vector<Stroke> segment_strokes(const InkRecord& r) {
    std::vector<Stroke> strokes;
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        const auto& s = r.samples[i];
        if (strokes.empty() || strokes.back().kind != s.pen_state) {
            strokes.push_back(Stroke{s.pen_state, i, {}});
        }
        strokes.back().samples.push_back(s);
    }
    return strokes;
}

}  // namespace inkrec
