#include <gtest/gtest.h>

#include <unistd.h>

#include "inkrec/protocol.hpp"
#include "inkrec/synth.hpp"

using namespace inkrec;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                ("inkrec_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" + std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

const Dataset& small_corpus() {
    static const Dataset ds = [] {
        SynthParams p;
        p.n_writers = 4;
        p.seed = 3;
        return Dataset{synth_dataset(p)};
    }();
    return ds;
}

ProtocolConfig small_som(Method m) {
    ProtocolConfig cfg;
    cfg.method = m;
    cfg.som.grid = 4;
    cfg.som.epochs = 10;
    return cfg;
}

}  // namespace

TEST(DatasetIo, RoundTrip) {
    TempDir dir;
    const auto& ds = small_corpus();
    save_dataset(ds.records, dir.path());
    EXPECT_TRUE(fs::is_regular_file(dir.path() / "S002" / "SEIF" / "W3.ink"));
    const auto back = load_dataset(dir.path());
    ASSERT_EQ(back.records.size(), ds.records.size());
    for (const auto& r : ds.records) {
        const InkRecord* q = back.find(r.subject_id, r.phase.phase, r.task_id);
        ASSERT_NE(q, nullptr);
        EXPECT_EQ(*q, r);
    }
    EXPECT_EQ(back.subjects(), (std::vector<std::string>{"S001", "S002", "S003", "S004"}));
}

TEST(DatasetIo, HeaderMustMatchLocation) {
    TempDir dir;
    const auto& ds = small_corpus();
    save_dataset(ds.records, dir.path());
    fs::copy_file(dir.path() / "S001" / "BASE" / "SIG1.ink", dir.path() / "S002" / "BASE" / "SIG1.ink",
                  fs::copy_options::overwrite_existing);
    EXPECT_EQ(code_of([&] { load_dataset(dir.path()); }), ErrorCode::MalformedLine);
}

TEST(DatasetIo, MissingOrEmptyRoot) {
    TempDir dir;
    EXPECT_EQ(code_of([&] { load_dataset(dir.path() / "nope"); }), ErrorCode::Io);
    EXPECT_EQ(code_of([&] { load_dataset(dir.path()); }), ErrorCode::EmptyRecord);
}

TEST(DatasetIo, RequireNamesMissingRecord) {
    EXPECT_EQ(code_of([] { small_corpus().require("S009", Phase::Base, TaskId::Sig1); }), ErrorCode::MissingRecord);
}

TEST(Protocol, MissingPhase) {
    Dataset ds = small_corpus();
    std::erase_if(ds.records, [](const InkRecord& r) { return r.phase.phase == Phase::Seif; });
    EXPECT_EQ(code_of([&] { evaluate_signatures(ds, ProtocolConfig{}); }), ErrorCode::MissingPhase);
    ProtocolConfig cfg;
    cfg.test_phases = {Phase::Meif};
    EXPECT_NO_THROW(evaluate_signatures(ds, cfg));
}

TEST(Protocol, SignatureShape) {
    const auto res = evaluate_signatures(small_corpus(), ProtocolConfig{});
    ASSERT_EQ(res.size(), 3u);
    EXPECT_EQ(res[0].phase, Phase::Meif);
    EXPECT_EQ(res[2].phase, Phase::PostSeif);
    ASSERT_EQ(res[1].views.size(), 1u);
    EXPECT_EQ(res[1].views[0].view, "dtw-min");
    const auto& m = res[1].views[0].matrix;
    EXPECT_EQ(m.rows(), 8u);
    EXPECT_EQ(m.models.size(), 4u);
    EXPECT_EQ(m.probes[3].id, "S002/SIG2");
}

TEST(Protocol, EnrolmentProbesScoreZeroAgainstOwnModel) {
    ProtocolConfig cfg;
    cfg.test_phases = {Phase::Base};
    for (Method m : {Method::Dtw, Method::Msvq}) {
        cfg.method = m;
        cfg.bits = 7;
        const auto res = evaluate_signatures(small_corpus(), cfg);
        const auto& v = res[0].views[0];
        if (m == Method::Dtw) {
            for (std::size_t i = 0; i < v.matrix.rows(); ++i) EXPECT_EQ(v.matrix.genuine(i), 0.0);
        }
        EXPECT_EQ(v.identification.idr, 100.0);
    }
}

TEST(Protocol, ThreadsDoNotChangeReport) {
    ProtocolConfig a;
    a.method = Method::Msvq;
    ProtocolConfig b = a;
    b.threads = 3;
    EXPECT_EQ(eval_report(a, evaluate_signatures(small_corpus(), a)).dump(),
              eval_report(b, evaluate_signatures(small_corpus(), b)).dump());
}

TEST(Protocol, TextViews) {
    const auto cfg = small_som(Method::Atdr);
    const auto cats = train_catalogues(small_corpus(), cfg);
    EXPECT_EQ(cats.size(), 8u);
    const auto res = evaluate_text(small_corpus(), cats, cfg);
    ASSERT_EQ(res.size(), 3u);
    ASSERT_EQ(res[0].views.size(), 15u);
    EXPECT_EQ(res[0].views[0].view, "W1-air");
    EXPECT_EQ(res[0].views[5].view, "W2-both");
    EXPECT_EQ(res[0].views[14].view, "ALL-both");
    EXPECT_EQ(res[0].views[14].matrix.probes[1].id, "S002/ALL");
    EXPECT_EQ(res[0].views[4].matrix.probes[0].id, "S001/W2");

    ProtocolConfig self = cfg;
    self.test_phases = {Phase::Base};
    const auto own = evaluate_text(small_corpus(), cats, self);
    for (const auto& v : own[0].views) {
        for (std::size_t i = 0; i < v.matrix.rows(); ++i) EXPECT_EQ(v.matrix.genuine(i), 0.0) << v.view;
    }
}

TEST(Protocol, CatalogueFilesRoundTrip) {
    TempDir dir;
    const auto cfg = small_som(Method::Atdr);
    const auto cats = train_catalogues(small_corpus(), cfg);
    save_catalogues(cats, dir.path());
    EXPECT_TRUE(fs::is_regular_file(dir.path() / catalogue_filename(TaskId::W4, PenState::OnSurface)));
    const auto back = load_catalogues(dir.path());
    ASSERT_EQ(back.size(), cats.size());
    for (const auto& [key, cat] : cats) EXPECT_EQ(write_catalogue(back.at(key)), write_catalogue(cat));
}

TEST(Report, Layout) {
    ProtocolConfig cfg;
    cfg.test_phases = {Phase::Seif};
    const auto j = eval_report(cfg, evaluate_signatures(small_corpus(), cfg));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"method", "enrol_phase", "config", "phases"}));
    EXPECT_EQ(j["method"], "dtw");
    EXPECT_EQ(j["phases"][0]["phase"], "SEIF");
    EXPECT_EQ(j["phases"][0]["views"][0]["view"], "dtw-min");
    EXPECT_TRUE(j["phases"][0]["views"][0].contains("eer"));
}

TEST(Distances, RoundTrip) {
    const DistanceSet d{Phase::PostSeif, "dtw-min", {{"S001/SIG1", 0.125}, {"S002/SIG2", 3.0000000000000004}}};
    const auto text = write_distances(d);
    EXPECT_EQ(text.substr(0, text.find('\n')), "#distances v1 phase=POST_SEIF view=dtw-min");
    const auto back = parse_distances(text);
    EXPECT_EQ(back.phase, d.phase);
    EXPECT_EQ(back.view, d.view);
    EXPECT_EQ(back.entries, d.entries);
}

TEST(Distances, Malformed) {
    EXPECT_EQ(code_of([] { parse_distances("#distances v2 phase=MEIF view=x\n"); }), ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] { parse_distances("#distances v1 phase=NOPE view=x\n"); }), ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] { parse_distances("#distances v1 phase=MEIF view=x\na 1 2\n"); }), ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] { parse_distances("#distances v1 phase=MEIF view=x\na nan\n"); }), ErrorCode::MalformedLine);
}

TEST(Distances, PairByKeyAlignsOrder) {
    const DistanceSet a{Phase::Meif, "v", {{"x", 1}, {"y", 2}}};
    const DistanceSet b{Phase::Seif, "v", {{"y", 20}, {"x", 10}}};
    const auto [p, q] = pair_by_key(a, b);
    EXPECT_EQ(q, (std::vector<double>{10, 20}));
    const DistanceSet c{Phase::Seif, "v", {{"x", 1}, {"z", 2}}};
    EXPECT_EQ(code_of([&] { pair_by_key(a, c); }), ErrorCode::LengthMismatch);
}

TEST(StatsReport, ThreePhasesGiveThreeComparisons) {
    std::vector<DistanceSet> sets;
    for (Phase p : {Phase::Meif, Phase::Seif, Phase::PostSeif}) {
        DistanceSet d{p, "dtw-min", {}};
        for (int i = 0; i < 12; ++i) {
            d.entries.emplace_back("k" + std::to_string(i), std::sin(i * 1.3) + static_cast<int>(p) * 0.5 + i * 0.01);
        }
        sets.push_back(d);
    }
    const auto j = stats_report(sets, {.replicates = 200, .seed = 1});
    ASSERT_EQ(j["views"].size(), 1u);
    const auto& v = j["views"][0];
    EXPECT_EQ(v["view"], "dtw-min");
    EXPECT_EQ(v["normality"].size(), 3u);
    ASSERT_EQ(v["comparisons"].size(), 3u);
    EXPECT_EQ(v["comparisons"][0]["a"], "MEIF");
    EXPECT_EQ(v["comparisons"][0]["b"], "SEIF");
    EXPECT_EQ(v["comparisons"][2]["a"], "SEIF");
    EXPECT_EQ(v["comparisons"][2]["result"]["method"], "WilcoxonSignedRank");
}

TEST(StatsReport, UntestableDataBecomesErrorEntry) {
    const DistanceSet a{Phase::Meif, "v", {{"x", 1}, {"y", 2}, {"z", 3}}};
    DistanceSet b = a;
    b.phase = Phase::Seif;
    const std::vector<DistanceSet> sets{a, b};
    const auto j = stats_report(sets, {.replicates = 50, .seed = 1});
    EXPECT_EQ(j["views"][0]["normality"][0]["error"]["code"], "TooFewSamples");
    EXPECT_EQ(j["views"][0]["comparisons"][0]["error"]["code"], "AllZeroDifferences");
}
