#include <gtest/gtest.h>

#include <random>

#include "inkrec/dtw.hpp"
#include "oracles.hpp"

using namespace inkrec;

namespace {

FeatureSequence seq(std::initializer_list<std::vector<double>> rows) { return FeatureSequence::from_rows(rows); }

FeatureSequence random_seq(std::mt19937_64& rng, std::size_t len, std::size_t dim) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> data(len * dim);
    for (auto& v : data) v = u(rng);
    return FeatureSequence(dim, std::move(data));
}

const DtwConfig kRaw{LocalMetric::Euclidean, false};

}  // namespace

TEST(Dtw, SelfDistanceIsZero) {
    std::mt19937_64 rng(3);
    const auto a = random_seq(rng, 17, 4);
    EXPECT_EQ(dtw_distance(a, a), 0.0);
    EXPECT_EQ(dtw_distance(a, a, {LocalMetric::Manhattan, false}), 0.0);
}

TEST(Dtw, SingleCell) {
    const auto p = seq({{0, 0}});
    const auto q = seq({{3, 4}});
    EXPECT_DOUBLE_EQ(dtw_distance(p, q, kRaw), 5.0);
    EXPECT_DOUBLE_EQ(dtw_distance(p, q), 2.5);
}

TEST(Dtw, ManhattanCraftedCase) {
    const auto a = seq({{0}, {1}, {2}});
    const auto b = seq({{0}, {2}});
    EXPECT_DOUBLE_EQ(dtw_distance(a, b, {LocalMetric::Manhattan, false}), 1.0);
    const double brute = oracle::warping_path_min(3, 2, [&](std::size_t i, std::size_t j) {
        return std::abs(a.row(i)[0] - b.row(j)[0]);
    });
    EXPECT_DOUBLE_EQ(brute, 1.0);
}

TEST(Dtw, MatchesPathEnumeration) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> len(1, 6), dim(1, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = dim(rng);
        const auto a = random_seq(rng, len(rng), d);
        const auto b = random_seq(rng, len(rng), d);
        for (auto metric : {LocalMetric::Euclidean, LocalMetric::Manhattan}) {
            const double brute = oracle::warping_path_min(a.size(), b.size(), [&](std::size_t i, std::size_t j) {
                return local_distance(a.row(i), b.row(j), metric);
            });
            EXPECT_NEAR(dtw_distance(a, b, {metric, false}), brute, 1e-9);
        }
    }
}

TEST(Dtw, SymmetricAndNonNegative) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_seq(rng, 1 + trial % 13, 2);
        const auto b = random_seq(rng, 1 + trial % 7, 2);
        EXPECT_DOUBLE_EQ(dtw_distance(a, b), dtw_distance(b, a));
        EXPECT_GE(dtw_distance(a, b), 0.0);
    }
}

TEST(Dtw, NormalizationDividesByTotalLength) {
    std::mt19937_64 rng(9);
    const auto a = random_seq(rng, 5, 2);
    const auto b = random_seq(rng, 8, 2);
    EXPECT_DOUBLE_EQ(dtw_distance(a, b), dtw_distance(a, b, kRaw) / 13.0);
}

TEST(Dtw, DimensionMismatch) {
    try {
        dtw_distance(seq({{1, 2}}), seq({{1}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(AggregateReference, MinAndMean) {
    const auto probe = seq({{0}});
    const std::vector<FeatureSequence> refs{seq({{2}}), seq({{4}})};
    EXPECT_DOUBLE_EQ(aggregate_reference(probe, refs, AggregateMode::Min, kRaw), 2.0);
    EXPECT_DOUBLE_EQ(aggregate_reference(probe, refs, AggregateMode::Mean, kRaw), 3.0);
}

TEST(AggregateReference, SingleReference) {
    std::mt19937_64 rng(1);
    const auto probe = random_seq(rng, 6, 2);
    const std::vector<FeatureSequence> refs{random_seq(rng, 4, 2)};
    const double d = dtw_distance(probe, refs[0]);
    EXPECT_EQ(aggregate_reference(probe, refs, AggregateMode::Min), d);
    EXPECT_EQ(aggregate_reference(probe, refs, AggregateMode::Mean), d);
}

TEST(AggregateReference, ProbeAmongReferences) {
    std::mt19937_64 rng(2);
    const auto probe = random_seq(rng, 6, 2);
    const std::vector<FeatureSequence> refs{random_seq(rng, 4, 2), probe};
    EXPECT_EQ(aggregate_reference(probe, refs, AggregateMode::Min), 0.0);
}

TEST(AggregateReference, Errors) {
    const auto probe = seq({{0, 0}});
    try {
        aggregate_reference(probe, {}, AggregateMode::Min);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyReferenceSet);
    }
    const std::vector<FeatureSequence> refs{seq({{0}})};
    try {
        aggregate_reference(probe, refs, AggregateMode::Mean);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}
