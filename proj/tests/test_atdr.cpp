#include <gtest/gtest.h>

#include <random>

#include "inkrec/atdr.hpp"
#include "inkrec/synth.hpp"
#include "oracles.hpp"

using namespace inkrec;

namespace {

Stroke stroke_of(std::initializer_list<std::pair<double, double>> pts, PenState kind = PenState::OnSurface) {
    Stroke s;
    s.kind = kind;
    double t = 0;
    for (auto [x, y] : pts) s.samples.push_back({t++, x, y, kind == PenState::OnSurface ? 1.0 : 0.0, kind});
    return s;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

FeatureSequence random_strokes(std::uint64_t seed, std::size_t n, std::size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> d(n * dim);
    for (auto& v : d) v = g(rng);
    return FeatureSequence(dim, d);
}

SomParams small_som(std::uint64_t seed = 1) {
    SomParams p;
    p.grid = 4;
    p.resample = 4;
    p.epochs = 20;
    p.seed = seed;
    return p;
}

EncodedWord word_with(std::vector<GridCoord> air, std::vector<GridCoord> surface) {
    return {"W1", std::move(air), std::move(surface)};
}

}  // namespace

TEST(PreprocessStroke, StraightSegment) {
    const auto s = stroke_of({{0, 0}, {10, 0}});
    const auto pts = resample_by_arc_length(s.samples, 5);
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_NEAR(pts[k][0], 2.5 * static_cast<double>(k), 1e-12);
        EXPECT_EQ(pts[k][1], 0.0);
    }
    const auto v = preprocess_stroke(s, 5);
    ASSERT_EQ(v.size(), 10u);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(v[2 * k + 1], 0.0);
}

TEST(PreprocessStroke, EquallySpacedIsFixedPoint) {
    const auto s = stroke_of({{0, 0}, {3, 4}, {6, 8}, {9, 12}});
    const auto pts = resample_by_arc_length(s.samples, 4);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(pts[k][0], s.samples[k].x, 1e-9);
        EXPECT_NEAR(pts[k][1], s.samples[k].y, 1e-9);
    }
}

TEST(PreprocessStroke, NormalizedCentroidAndScale) {
    const auto v = preprocess_stroke(stroke_of({{0, 0}, {4, 1}, {5, 7}, {1, 9}}), 16);
    double mx = 0, my = 0, vx = 0, vy = 0;
    for (std::size_t k = 0; k < 16; ++k) {
        mx += v[2 * k] / 16;
        my += v[2 * k + 1] / 16;
    }
    for (std::size_t k = 0; k < 16; ++k) {
        vx += (v[2 * k] - mx) * (v[2 * k] - mx) / 16;
        vy += (v[2 * k + 1] - my) * (v[2 * k + 1] - my) / 16;
    }
    EXPECT_NEAR(mx, 0.0, 1e-12);
    EXPECT_NEAR(my, 0.0, 1e-12);
    EXPECT_NEAR(std::max(vx, vy), 1.0, 1e-12);
}

TEST(PreprocessStroke, Degenerate) {
    EXPECT_EQ(code_of([] { preprocess_stroke(stroke_of({{1, 1}}), 8); }), ErrorCode::DegenerateStroke);
    EXPECT_EQ(code_of([] { preprocess_stroke(stroke_of({{1, 1}, {1, 1}, {1, 1}}), 8); }),
              ErrorCode::DegenerateStroke);
}

TEST(Som, SingleVectorAttractsAllPrototypes) {
    std::vector<double> v(8);
    for (std::size_t k = 0; k < 8; ++k) v[k] = 0.25 * static_cast<double>(k) - 1.0;
    const FeatureSequence one(8, v);
    auto p = small_som();
    p.epochs = 200;
    p.lr_final = 0.5;
    p.radius_final = 4.0;
    SomTrace trace;
    const auto cat = train_catalogue(one, p, "W1", PenState::OnSurface, &trace);
    EXPECT_LT(trace.final_error, 1e-3);
    EXPECT_LT(som_quantization_error(one, cat), 1e-3);
}

TEST(Som, Deterministic) {
    const auto data = random_strokes(4, 60, 8);
    EXPECT_EQ(train_catalogue(data, small_som(9)), train_catalogue(data, small_som(9)));
    EXPECT_NE(train_catalogue(data, small_som(9)), train_catalogue(data, small_som(10)));
}

TEST(Som, TrainingReducesQuantizationError) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto data = random_strokes(100 + seed, 80, 8);
        SomTrace trace;
        train_catalogue(data, small_som(seed), "W1", PenState::InAir, &trace);
        EXPECT_LE(trace.final_error, trace.initial_error) << "seed " << seed;
    }
}

TEST(Som, Errors) {
    EXPECT_EQ(code_of([] { train_catalogue(FeatureSequence{}, small_som()); }), ErrorCode::EmptyTrainingSet);
    EXPECT_EQ(code_of([] { train_catalogue(random_strokes(1, 4, 6), small_som()); }), ErrorCode::DimensionMismatch);
    auto bad = small_som();
    bad.grid = 1;
    EXPECT_EQ(code_of([&] { train_catalogue(random_strokes(1, 4, 8), bad); }), ErrorCode::InvalidParams);
    bad = small_som();
    bad.lr_final = 0.9;
    EXPECT_EQ(code_of([&] { validate(bad); }), ErrorCode::InvalidParams);
}

TEST(Som, WinnerTieGoesToSmallestCoordinate) {
    SomCatalogue cat{"W1", PenState::OnSurface, 2, 1, {0, 0, 1, 1, 1, 1, 0, 0}};
    const std::vector<double> v{1, 1};
    EXPECT_EQ(cat.winner(v).first, 1u);
    EXPECT_EQ(cat.coord(cat.winner(std::vector<double>{0, 0}).first), (GridCoord{0, 0}));
}

TEST(CataloguePersistence, RoundTripIsExact) {
    const auto cat = train_catalogue(random_strokes(2, 30, 8), small_som(), "W4", PenState::InAir);
    const auto text = write_catalogue(cat);
    EXPECT_EQ(parse_catalogue(text), cat);
    EXPECT_EQ(write_catalogue(parse_catalogue(text)), text);
    EXPECT_EQ(code_of([] { parse_catalogue("#catalogue v1 word=W1 channel=ink grid=2 resample=1\n"); }),
              ErrorCode::MalformedLine);
}

class EncodeWord : public ::testing::Test {
protected:
    void SetUp() override {
        SynthParams p;
        p.n_writers = 3;
        const SynthCorpus c(p);
        for (std::size_t w = 0; w < 3; ++w) words.push_back(c.record(w, Phase::Base, TaskId::W1));
        for (PenState ch : {PenState::InAir, PenState::OnSurface}) {
            std::vector<double> flat;
            for (const auto& r : words) {
                for (const auto& v : channel_strokes(r, ch, 8)) flat.insert(flat.end(), v.begin(), v.end());
            }
            SomParams sp;
            sp.grid = 4;
            sp.resample = 8;
            sp.epochs = 10;
            (ch == PenState::InAir ? air : surf) = train_catalogue(FeatureSequence(16, flat), sp, "W1", ch);
        }
    }
    std::vector<InkRecord> words;
    SomCatalogue air, surf;
};

TEST_F(EncodeWord, StrokeEqualToPrototypeMapsToIt) {
    // A record whose only stroke is shaped exactly like prototype 5 once
    // preprocessed: build it from the prototype's own points.
    const auto proto = surf.prototype(5);
    InkRecord r;
    r.task_id = TaskId::W1;
    for (std::size_t k = 0; k < 8; ++k) {
        r.samples.push_back({double(k), proto[2 * k], proto[2 * k + 1], 1.0, PenState::OnSurface});
    }
    // Resampling and renormalizing a trained prototype moves it slightly, so
    // compare against the nearest prototype of the preprocessed stroke.
    const auto enc = encode_word(r, air, surf);
    ASSERT_EQ(enc.surface_seq.size(), 1u);
    EXPECT_TRUE(enc.air_seq.empty());
    const auto v = preprocess_stroke(segment_strokes(r)[0], 8);
    EXPECT_EQ(enc.surface_seq[0], surf.coord(surf.winner(v).first));

    SomCatalogue exact = surf;
    std::copy(v.begin(), v.end(), exact.prototypes.begin() + 5 * 16);
    EXPECT_EQ(encode_word(r, air, exact).surface_seq[0], exact.coord(5));
}

TEST_F(EncodeWord, Deterministic) {
    EXPECT_EQ(encode_word(words[0], air, surf), encode_word(words[0], air, surf));
    const auto e = encode_word(words[1], air, surf);
    EXPECT_FALSE(e.air_seq.empty());
    EXPECT_FALSE(e.surface_seq.empty());
    EXPECT_EQ(e.word_id, "W1");
}

TEST_F(EncodeWord, Mismatches) {
    auto sig = words[0];
    sig.task_id = TaskId::Sig1;
    EXPECT_EQ(code_of([&] { encode_word(sig, air, surf); }), ErrorCode::CatalogueMismatch);
    EXPECT_EQ(code_of([&] { encode_word(words[0], surf, air); }), ErrorCode::CatalogueMismatch);
    auto other = words[0];
    other.task_id = TaskId::W2;
    EXPECT_EQ(code_of([&] { encode_word(other, air, surf); }), ErrorCode::CatalogueMismatch);
}

TEST_F(EncodeWord, NoUsableStrokes) {
    InkRecord r;
    r.task_id = TaskId::W1;
    r.samples = {{0, 5, 5, 1, PenState::OnSurface}, {1, 5, 5, 1, PenState::OnSurface}};
    EXPECT_EQ(code_of([&] { encode_word(r, air, surf); }), ErrorCode::NoUsableStrokes);
}

TEST_F(EncodeWord, IdentityChain) {
    const auto e = encode_word(words[2], air, surf);
    const double d = fuse_channels(encoded_dtw(e, e, PenState::InAir), encoded_dtw(e, e, PenState::OnSurface));
    const std::array<double, 1> per{d};
    EXPECT_EQ(fuse_words(per), 0.0);
    EXPECT_EQ(encoded_dtw(e, e, PenState::OnSurface, surf), 0.0);
}

TEST(EncodedDtw, IdenticalEncodings) {
    const auto a = word_with({{1, 2}, {3, 3}}, {{0, 0}, {7, 7}, {2, 5}});
    EXPECT_EQ(encoded_dtw(a, a, PenState::InAir), 0.0);
    EXPECT_EQ(encoded_dtw(a, a, PenState::OnSurface), 0.0);
}

TEST(EncodedDtw, SingleSymbols) {
    const auto a = word_with({}, {{0, 0}});
    const auto b = word_with({}, {{3, 4}});
    EXPECT_DOUBLE_EQ(encoded_dtw(a, b, PenState::OnSurface), 2.5);
}

TEST(EncodedDtw, MatchesPathEnumeration) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> cell(0, 7);
    std::uniform_int_distribution<std::size_t> len(1, 5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<GridCoord> s(len(rng)), t(len(rng));
        for (auto& c : s) c = {cell(rng), cell(rng)};
        for (auto& c : t) c = {cell(rng), cell(rng)};
        const double brute = oracle::warping_path_min(s.size(), t.size(), [&](std::size_t i, std::size_t j) {
            const double dr = s[i].row - t[j].row, dc = s[i].col - t[j].col;
            return std::sqrt(dr * dr + dc * dc);
        });
        const double got = encoded_dtw(word_with(s, {}), word_with(t, {}), PenState::InAir);
        EXPECT_NEAR(got * static_cast<double>(s.size() + t.size()), brute, 1e-9);
        EXPECT_DOUBLE_EQ(got, encoded_dtw(word_with(t, {}), word_with(s, {}), PenState::InAir));
    }
}

TEST(EncodedDtw, Errors) {
    auto a = word_with({{0, 0}}, {});
    auto b = word_with({{0, 0}}, {{1, 1}});
    EXPECT_EQ(code_of([&] { encoded_dtw(a, b, PenState::OnSurface); }), ErrorCode::EmptyChannel);
    b.word_id = "W2";
    EXPECT_EQ(code_of([&] { encoded_dtw(a, b, PenState::InAir); }), ErrorCode::WordMismatch);
}

TEST(Fusion, Channels) {
    EXPECT_EQ(fuse_channels(1.75, 1.75, 0.3), 1.75);
    EXPECT_EQ(fuse_channels(0.1, 0.7, 1.0), 0.1);
    EXPECT_EQ(fuse_channels(0.1, 0.7, 0.0), 0.7);
    EXPECT_DOUBLE_EQ(fuse_channels(2.0, 4.0, 0.25), 3.5);
    EXPECT_DOUBLE_EQ(fuse_channels(2.0, 4.0), 3.0);
    EXPECT_EQ(code_of([] { fuse_channels(1, 1, 1.5); }), ErrorCode::InvalidParams);
}

TEST(Fusion, Words) {
    const std::vector<double> one{0.75}, four{1, 2, 3, 4}, zeros{0, 0, 0};
    EXPECT_EQ(fuse_words(one), 0.75);
    EXPECT_DOUBLE_EQ(fuse_words(four), 2.5);
    EXPECT_EQ(fuse_words(zeros), 0.0);
    EXPECT_EQ(code_of([] { fuse_words({}); }), ErrorCode::EmptyList);
}
