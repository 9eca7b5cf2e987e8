#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "inkrec/atdr.hpp"
#include "inkrec/dtw.hpp"
#include "inkrec/error.hpp"
#include "inkrec/eval.hpp"
#include "inkrec/features.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/msvq.hpp"
#include "inkrec/random.hpp"
#include "inkrec/som.hpp"
#include "inkrec/stats.hpp"
#include "inkrec/text_io.hpp"

namespace inkrec {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset on disk: <root>/<subject>/<phase>/<task>.ink

struct Dataset {
    std::vector<InkRecord> records;

    const InkRecord* find(std::string_view subject, Phase phase, TaskId task) const {
        for (const auto& r : records) {
            if (r.subject_id == subject && r.phase.phase == phase && r.task_id == task) {
                return &r;
            }
        }
        return nullptr;
    }

    const InkRecord& require(std::string_view subject, Phase phase, TaskId task) const {
        const InkRecord* r = find(subject, phase, task);
        if (r == nullptr) {
            throw Error(ErrorCode::MissingRecord, "subject " + std::string(subject) + " has no " +
                                                      std::string(to_string(phase)) + " " +
                                                      std::string(to_string(task)) + " record");
        }
        return *r;
    }

    /// Subject ids in ascending order.
    std::vector<std::string> subjects() const {
        std::vector<std::string> out;
        for (const auto& r : records) out.push_back(r.subject_id);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool has_phase(Phase p) const {
        return std::any_of(records.begin(), records.end(), [&](const InkRecord& r) { return r.phase.phase == p; });
    }
};

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
}

inline fs::path record_path(const fs::path& root, const InkRecord& r) {
    return root / r.subject_id / std::string(to_string(r.phase.phase)) / (std::string(to_string(r.task_id)) + ".ink");
}

inline void save_dataset(std::span<const InkRecord> records, const fs::path& root) {
    for (const auto& r : records) {
        write_file(record_path(root, r), write_ink(r));
    }
}

/// Loads every <subject>/<phase>/<task>.ink below root. Other entries are
/// ignored. A file whose header disagrees with its path is an error.
inline Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw Error(ErrorCode::Io, "dataset root " + root.string() + " is not a directory");
    }
    std::vector<fs::path> subject_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) subject_dirs.push_back(e.path());
    }
    std::sort(subject_dirs.begin(), subject_dirs.end());
    Dataset ds;
    for (const auto& dir : subject_dirs) {
        for (Phase p : kAllPhases) {
            for (TaskId t : kAllTasks) {
                const fs::path path = dir / std::string(to_string(p)) / (std::string(to_string(t)) + ".ink");
                if (!fs::is_regular_file(path)) continue;
                InkRecord rec;
                try {
                    rec = parse_ink(read_file(path));
                } catch (const Error& e) {
                    throw Error(e.code(), path.string() + ": " + e.what());
                }
                if (rec.subject_id != dir.filename().string() || rec.phase.phase != p || rec.task_id != t) {
                    throw Error(ErrorCode::MalformedLine, path.string() + ": header does not match file location");
                }
                ds.records.push_back(std::move(rec));
            }
        }
    }
    if (ds.records.empty()) {
        throw Error(ErrorCode::EmptyRecord, "no ink files below " + root.string());
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Protocol configuration

enum class Method : std::uint8_t { Dtw, Msvq, Atdr };

constexpr std::string_view to_string(Method m) {
    switch (m) {
    case Method::Dtw: return "dtw";
    case Method::Msvq: return "msvq";
    case Method::Atdr: return "atdr";
    }
    return "?";
}

struct ProtocolConfig {
    Method method = Method::Dtw;
    Phase enrol_phase = Phase::Base;
    std::vector<Phase> test_phases{Phase::Meif, Phase::Seif, Phase::PostSeif};
    FeatureConfig features;
    DtwConfig dtw;
    AggregateMode agg = AggregateMode::Min;
    std::size_t sections = 3;
    int bits = 3;
    LbgParams lbg;  // seed is replaced per user from `seed`
    SomParams som;  // seed is replaced per catalogue from `seed`
    double w_air = 0.5;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

// Seed-stream tags for components fed from ProtocolConfig::seed.
enum ProtocolStream : std::uint64_t { kLbgStream = 101, kSomStream = 102 };

/// One score matrix with its reports. `view` names the scoring variant, for
/// example "dtw-min", "msvq-3bit" or "W2-both".
struct ViewResult {
    std::string view;
    ScoreMatrix matrix;
    IdentificationReport identification;
    VerificationReport verification;
};

struct PhaseResult {
    Phase phase = Phase::Meif;
    std::vector<ViewResult> views;
};

inline ViewResult make_view(std::string name, ScoreMatrix m) {
    ViewResult v{std::move(name), std::move(m), {}, {}};
    v.identification = identify(v.matrix);
    v.verification = verify_eer(v.matrix);
    return v;
}

inline void check_phases(const Dataset& ds, const ProtocolConfig& cfg) {
    if (!ds.has_phase(cfg.enrol_phase)) {
        throw Error(ErrorCode::MissingPhase, "enrolment phase " + std::string(to_string(cfg.enrol_phase)) +
                                                 " not present in dataset");
    }
    for (Phase p : cfg.test_phases) {
        if (!ds.has_phase(p)) {
            throw Error(ErrorCode::MissingPhase, "phase " + std::string(to_string(p)) + " not present in dataset");
        }
    }
}

// ---------------------------------------------------------------------------
// Signatures: DTW and MSVQ

struct SignatureProbe {
    ProbeInfo info;
    FeatureSequence features;
};

struct SignatureModel {
    std::string subject;
    std::vector<FeatureSequence> refs;
    MsvqModel msvq;
};

inline std::string signature_view(const ProtocolConfig& cfg) {
    if (cfg.method == Method::Msvq) {
        return "msvq-" + std::to_string(cfg.bits) + "bit";
    }
    return cfg.agg == AggregateMode::Min ? "dtw-min" : "dtw-mean";
}

/// Enrols every subject from the two signatures of the enrolment phase.
inline std::vector<SignatureModel> enrol_signatures(const Dataset& ds, const ProtocolConfig& cfg) {
    const auto subjects = ds.subjects();
    std::vector<SignatureModel> models(subjects.size());
    parallel_for(subjects.size(), cfg.threads, [&](std::size_t i) {
        SignatureModel& m = models[i];
        m.subject = subjects[i];
        for (TaskId t : kSignatureTasks) {
            m.refs.push_back(extract_features(ds.require(m.subject, cfg.enrol_phase, t), cfg.features));
        }
        if (cfg.method == Method::Msvq) {
            LbgParams lbg = cfg.lbg;
            lbg.seed = derive_seed(cfg.seed, {kLbgStream, i});
            m.msvq = build_msvq_model(m.refs, cfg.sections, cfg.bits, lbg, m.subject);
        }
    });
    return models;
}

inline std::vector<SignatureProbe> signature_probes(const Dataset& ds, Phase phase, const ProtocolConfig& cfg) {
    std::vector<const InkRecord*> recs;
    for (const auto& s : ds.subjects()) {
        for (TaskId t : kSignatureTasks) {
            if (const InkRecord* r = ds.find(s, phase, t)) recs.push_back(r);
        }
    }
    std::vector<SignatureProbe> probes(recs.size());
    parallel_for(recs.size(), cfg.threads, [&](std::size_t i) {
        const InkRecord& r = *recs[i];
        probes[i].info = {r.subject_id + "/" + std::string(to_string(r.task_id)), r.subject_id, phase, r.task_id};
        probes[i].features = extract_features(r, cfg.features);
    });
    return probes;
}

inline ScoreMatrix score_signatures(std::span<const SignatureProbe> probes, std::span<const SignatureModel> models,
                                    const ProtocolConfig& cfg) {
    if (cfg.method == Method::Msvq) {
        return build_score_matrix(
            probes, models,
            [](const SignatureProbe& p, const SignatureModel& m) { return msvq_distortion(p.features, m.msvq); },
            cfg.threads);
    }
    return build_score_matrix(
        probes, models,
        [&](const SignatureProbe& p, const SignatureModel& m) {
            return aggregate_reference(p.features, m.refs, cfg.agg, cfg.dtw);
        },
        cfg.threads);
}

/// Signature protocol: BASE models, one view per requested phase.
inline std::vector<PhaseResult> evaluate_signatures(const Dataset& ds, const ProtocolConfig& cfg) {
    if (cfg.method == Method::Atdr) {
        throw Error(ErrorCode::InvalidParams, "ATDR evaluates words, not signatures");
    }
    check_phases(ds, cfg);
    const auto models = enrol_signatures(ds, cfg);
    std::vector<PhaseResult> out;
    for (Phase p : cfg.test_phases) {
        const auto probes = signature_probes(ds, p, cfg);
        out.push_back({p, {make_view(signature_view(cfg), score_signatures(probes, models, cfg))}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Words: ATDR

using CatalogueKey = std::pair<TaskId, PenState>;
using CatalogueSet = std::map<CatalogueKey, SomCatalogue>;

inline constexpr std::array<PenState, 2> kChannels{PenState::InAir, PenState::OnSurface};

/// Trains the 4 words x 2 channels catalogues on the stroke pool of every
/// subject's enrolment-phase word records.
inline CatalogueSet train_catalogues(const Dataset& ds, const ProtocolConfig& cfg) {
    std::vector<CatalogueKey> keys;
    for (TaskId w : kWordTasks) {
        for (PenState c : kChannels) keys.emplace_back(w, c);
    }
    std::vector<SomCatalogue> cats(keys.size());
    parallel_for(keys.size(), cfg.threads, [&](std::size_t k) {
        const auto [word, channel] = keys[k];
        std::vector<double> flat;
        for (const auto& s : ds.subjects()) {
            if (const InkRecord* r = ds.find(s, cfg.enrol_phase, word)) {
                for (auto& v : channel_strokes(*r, channel, cfg.som.resample)) {
                    flat.insert(flat.end(), v.begin(), v.end());
                }
            }
        }
        SomParams sp = cfg.som;
        sp.seed = derive_seed(cfg.seed, {kSomStream, static_cast<std::uint64_t>(word), static_cast<std::uint64_t>(channel)});
        cats[k] = train_catalogue(FeatureSequence(2 * sp.resample, std::move(flat)), sp, std::string(to_string(word)),
                                  channel);
    });
    CatalogueSet out;
    for (std::size_t k = 0; k < keys.size(); ++k) out.emplace(keys[k], std::move(cats[k]));
    return out;
}

inline std::string catalogue_filename(TaskId word, PenState channel) {
    return std::string(to_string(word)) + "_" + std::string(channel_token(channel)) + ".cat";
}

inline void save_catalogues(const CatalogueSet& cats, const fs::path& dir) {
    for (const auto& [key, cat] : cats) {
        write_file(dir / catalogue_filename(key.first, key.second), write_catalogue(cat));
    }
}

inline CatalogueSet load_catalogues(const fs::path& dir) {
    CatalogueSet out;
    for (TaskId w : kWordTasks) {
        for (PenState c : kChannels) {
            const fs::path path = dir / catalogue_filename(w, c);
            SomCatalogue cat;
            try {
                cat = parse_catalogue(read_file(path));
            } catch (const Error& e) {
                throw Error(e.code(), path.string() + ": " + e.what());
            }
            if (cat.word_id != to_string(w) || cat.channel != c) {
                throw Error(ErrorCode::CatalogueMismatch, path.string() + ": header does not match file name");
            }
            out.emplace(CatalogueKey{w, c}, std::move(cat));
        }
    }
    return out;
}

inline EncodedWord encode_with(const InkRecord& r, const CatalogueSet& cats) {
    return encode_word(r, cats.at({r.task_id, PenState::InAir}), cats.at({r.task_id, PenState::OnSurface}));
}

/// One subject's four encoded words, in W1..W4 order.
struct WordSet {
    ProbeInfo info;
    std::string subject;
    std::array<EncodedWord, 4> words;
};

inline std::vector<WordSet> encode_word_sets(const Dataset& ds, Phase phase, const CatalogueSet& cats,
                                             const ProtocolConfig& cfg) {
    const auto subjects = ds.subjects();
    std::vector<WordSet> out(subjects.size());
    parallel_for(subjects.size(), cfg.threads, [&](std::size_t i) {
        WordSet& ws = out[i];
        ws.subject = subjects[i];
        ws.info = {subjects[i], subjects[i], phase, std::nullopt};
        for (std::size_t k = 0; k < kWordTasks.size(); ++k) {
            ws.words[k] = encode_with(ds.require(subjects[i], phase, kWordTasks[k]), cats);
        }
    });
    return out;
}

enum class ChannelView : std::uint8_t { Air, Surface, Both };

inline constexpr std::array<ChannelView, 3> kChannelViews{ChannelView::Air, ChannelView::Surface, ChannelView::Both};

constexpr std::string_view to_string(ChannelView c) {
    return c == ChannelView::Air ? "air" : c == ChannelView::Surface ? "surface" : "both";
}

inline double word_score(const EncodedWord& probe, const EncodedWord& model, ChannelView c, double w_air) {
    switch (c) {
    case ChannelView::Air: return encoded_dtw(probe, model, PenState::InAir);
    case ChannelView::Surface: return encoded_dtw(probe, model, PenState::OnSurface);
    case ChannelView::Both:
        return fuse_channels(encoded_dtw(probe, model, PenState::InAir),
                             encoded_dtw(probe, model, PenState::OnSurface), w_air);
    }
    return 0.0;
}

/// Text protocol: for each requested phase, 15 views: each word W1..W4 and
/// all four fused ("ALL"), crossed with air, surface and both channels.
/// Probe ids carry the word, e.g. "S003/W2" or "S003/ALL".
inline std::vector<PhaseResult> evaluate_text(const Dataset& ds, const CatalogueSet& cats, const ProtocolConfig& cfg) {
    check_phases(ds, cfg);
    const auto models = encode_word_sets(ds, cfg.enrol_phase, cats, cfg);
    std::vector<PhaseResult> out;
    for (Phase p : cfg.test_phases) {
        const auto probes = encode_word_sets(ds, p, cats, cfg);
        PhaseResult pr{p, {}};
        for (std::size_t k = 0; k <= kWordTasks.size(); ++k) {
            const bool all = k == kWordTasks.size();
            const std::string word = all ? "ALL" : std::string(to_string(kWordTasks[k]));
            for (ChannelView c : kChannelViews) {
                std::vector<WordSet> named = probes;
                for (auto& ws : named) {
                    ws.info.id = ws.subject + "/" + word;
                    ws.info.task = all ? std::nullopt : std::optional<TaskId>(kWordTasks[k]);
                }
                auto m = build_score_matrix(
                    std::span<const WordSet>(named), std::span<const WordSet>(models),
                    [&](const WordSet& a, const WordSet& b) {
                        if (!all) return word_score(a.words[k], b.words[k], c, cfg.w_air);
                        std::array<double, 4> per{};
                        for (std::size_t j = 0; j < per.size(); ++j) {
                            per[j] = word_score(a.words[j], b.words[j], c, cfg.w_air);
                        }
                        return fuse_words(per);
                    },
                    cfg.threads);
                pr.views.push_back(make_view(word + "-" + std::string(to_string(c)), std::move(m)));
            }
        }
        out.push_back(std::move(pr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::ordered_json eval_report(const ProtocolConfig& cfg, std::span<const PhaseResult> results) {
    nlohmann::ordered_json j;
    j["method"] = std::string(to_string(cfg.method));
    j["enrol_phase"] = std::string(to_string(cfg.enrol_phase));
    nlohmann::ordered_json c;
    c["seed"] = cfg.seed;
    if (cfg.method == Method::Dtw) {
        c["agg"] = cfg.agg == AggregateMode::Min ? "min" : "mean";
    } else if (cfg.method == Method::Msvq) {
        c["sections"] = cfg.sections;
        c["bits"] = cfg.bits;
    } else {
        c["grid"] = cfg.som.grid;
        c["resample"] = cfg.som.resample;
        c["w_air"] = cfg.w_air;
    }
    j["config"] = std::move(c);
    auto phases = nlohmann::ordered_json::array();
    for (const auto& pr : results) {
        nlohmann::ordered_json p;
        p["phase"] = std::string(to_string(pr.phase));
        auto views = nlohmann::ordered_json::array();
        for (const auto& v : pr.views) {
            nlohmann::ordered_json vj;
            vj["view"] = v.view;
            const auto body = report_json(v.matrix, v.identification, v.verification);
            for (const auto& [key, val] : body.items()) {
                vj[key] = val;
            }
            views.push_back(std::move(vj));
        }
        p["views"] = std::move(views);
        phases.push_back(std::move(p));
    }
    j["phases"] = std::move(phases);
    return j;
}

// ---------------------------------------------------------------------------
// Intra-user distance files, input of the statistical tests:
//   #distances v1 phase=<PHASE> view=<view>
//   <key> <value>       one genuine score per probe, key = probe id

struct DistanceSet {
    Phase phase = Phase::Meif;
    std::string view;
    std::vector<std::pair<std::string, double>> entries;

    std::vector<double> values() const {
        std::vector<double> out;
        for (const auto& e : entries) out.push_back(e.second);
        return out;
    }
};

inline DistanceSet genuine_distances(Phase phase, const ViewResult& v) {
    DistanceSet d{phase, v.view, {}};
    for (std::size_t i = 0; i < v.matrix.rows(); ++i) {
        d.entries.emplace_back(v.matrix.probes[i].id, v.matrix.genuine(i));
    }
    return d;
}

inline std::string write_distances(const DistanceSet& d) {
    std::string out = "#distances v1 phase=" + std::string(to_string(d.phase)) + " view=" + d.view + "\n";
    for (const auto& [key, value] : d.entries) {
        out += key + " " + detail::format_double(value) + "\n";
    }
    return out;
}

inline DistanceSet parse_distances(std::string_view content) {
    std::size_t line_no = 0;
    const auto tok = detail::split_ws(detail::take_line(content, line_no));
    if (tok.size() != 4 || tok[0] != "#distances" || tok[1] != "v1") {
        throw detail::line_error(ErrorCode::MalformedLine, line_no, "expected '#distances v1 phase=.. view=..'");
    }
    const auto phase = parse_phase(detail::value_of(tok[2], "phase"));
    const auto view = detail::value_of(tok[3], "view");
    if (!phase || view.empty()) {
        throw detail::line_error(ErrorCode::MalformedLine, line_no, "bad phase or view");
    }
    DistanceSet d{*phase, std::string(view), {}};
    while (!content.empty()) {
        const auto row = detail::split_ws(detail::take_line(content, line_no));
        if (row.empty()) continue;
        double v = 0.0;
        if (row.size() != 2 || !detail::parse_double(row[1], v) || !std::isfinite(v)) {
            throw detail::line_error(ErrorCode::MalformedLine, line_no, "expected '<key> <value>'");
        }
        d.entries.emplace_back(std::string(row[0]), v);
    }
    return d;
}

/// Values of a and b aligned by key. Both sets must hold the same keys.
inline std::pair<std::vector<double>, std::vector<double>> pair_by_key(const DistanceSet& a, const DistanceSet& b) {
    if (a.entries.size() != b.entries.size()) {
        throw Error(ErrorCode::LengthMismatch, "distance sets hold " + std::to_string(a.entries.size()) + " and " +
                                                   std::to_string(b.entries.size()) + " entries");
    }
    std::map<std::string, double> lookup(b.entries.begin(), b.entries.end());
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& [key, value] : a.entries) {
        const auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw Error(ErrorCode::LengthMismatch, "key " + key + " missing from the " +
                                                       std::string(to_string(b.phase)) + " distances");
        }
        out.first.push_back(value);
        out.second.push_back(it->second);
    }
    return out;
}

namespace detail {

inline nlohmann::ordered_json error_json(const Error& e) {
    nlohmann::ordered_json j;
    j["code"] = std::string(to_string(e.code()));
    j["message"] = e.what();
    return j;
}

}  // namespace detail

/// Lilliefors per set and Wilcoxon per pair of sets (input order), grouped
/// by view in order of first appearance. Sets of one view that cannot be
/// paired raise LengthMismatch; a test that cannot run on its data (too few
/// samples, zero variance, all-zero differences) is reported as an error
/// entry in place of its result.
inline nlohmann::ordered_json stats_report(std::span<const DistanceSet> sets, const LillieforsOptions& opts = {}) {
    std::vector<std::string> views;
    for (const auto& s : sets) {
        if (std::find(views.begin(), views.end(), s.view) == views.end()) views.push_back(s.view);
    }
    nlohmann::ordered_json j;
    auto out = nlohmann::ordered_json::array();
    for (const auto& view : views) {
        std::vector<const DistanceSet*> group;
        for (const auto& s : sets) {
            if (s.view == view) group.push_back(&s);
        }
        nlohmann::ordered_json vj;
        vj["view"] = view;
        auto normality = nlohmann::ordered_json::array();
        for (const auto* s : group) {
            nlohmann::ordered_json e;
            e["phase"] = std::string(to_string(s->phase));
            try {
                e["result"] = to_json(lilliefors_test(s->values(), opts));
            } catch (const Error& err) {
                e["error"] = detail::error_json(err);
            }
            normality.push_back(std::move(e));
        }
        vj["normality"] = std::move(normality);
        auto comparisons = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < group.size(); ++a) {
            for (std::size_t b = a + 1; b < group.size(); ++b) {
                nlohmann::ordered_json e;
                e["a"] = std::string(to_string(group[a]->phase));
                e["b"] = std::string(to_string(group[b]->phase));
                const auto [x, y] = pair_by_key(*group[a], *group[b]);
                try {
                    e["result"] = to_json(wilcoxon_signed_rank(x, y));
                } catch (const Error& err) {
                    e["error"] = detail::error_json(err);
                }
                comparisons.push_back(std::move(e));
            }
        }
        vj["comparisons"] = std::move(comparisons);
        out.push_back(std::move(vj));
    }
    j["views"] = std::move(out);
    return j;
}

}  // namespace inkrec
