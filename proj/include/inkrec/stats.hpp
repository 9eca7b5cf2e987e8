#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "inkrec/error.hpp"
#include "inkrec/random.hpp"

namespace inkrec {

enum class TestMethod : std::uint8_t { WilcoxonSignedRank, Lilliefors };
enum class TestMode : std::uint8_t { Exact, Approximate, MonteCarlo };

constexpr std::string_view to_string(TestMethod m) {
    return m == TestMethod::WilcoxonSignedRank ? "WilcoxonSignedRank" : "Lilliefors";
}

constexpr std::string_view to_string(TestMode m) {
    switch (m) {
    case TestMode::Exact: return "Exact";
    case TestMode::Approximate: return "Approximate";
    case TestMode::MonteCarlo: return "MonteCarlo";
    }
    return "?";
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    TestMethod method = TestMethod::WilcoxonSignedRank;
    TestMode mode = TestMode::Exact;
    std::string null_hypothesis;
};

inline nlohmann::ordered_json to_json(const TestResult& r) {
    nlohmann::ordered_json j;
    j["method"] = std::string(to_string(r.method));
    j["mode"] = std::string(to_string(r.mode));
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["n_effective"] = r.n_effective;
    j["null_hypothesis"] = r.null_hypothesis;
    return j;
}

/// Largest n_effective for which the signed-rank p-value is exact.
inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Average ranks (1-based) of `values`; tied values share the mean of the
/// positions they occupy.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped. The statistic is W+, the rank sum of positive differences.
/// Up to kWilcoxonExactLimit non-zero pairs the p-value comes from the exact
/// distribution of W+ over all 2^n sign assignments (with tied ranks);
/// beyond that, a normal approximation with tie and continuity corrections.
inline TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "paired samples of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    if (diffs.empty()) {
        throw Error(ErrorCode::AllZeroDifferences, "every paired difference is zero");
    }
    std::vector<double> mags(diffs.size());
    std::transform(diffs.begin(), diffs.end(), mags.begin(), [](double d) { return std::abs(d); });
    const auto ranks = average_ranks(mags);
    const std::size_t n = diffs.size();

    TestResult res;
    res.method = TestMethod::WilcoxonSignedRank;
    res.n_effective = n;
    res.null_hypothesis = "paired differences are symmetric about zero (no location shift between phases)";

    // Doubled ranks are integers even with ties.
    std::vector<std::size_t> twice(n);
    std::size_t w2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        twice[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
        if (diffs[i] > 0.0) {
            w2 += twice[i];
        }
    }
    res.statistic = 0.5 * static_cast<double>(w2);

    if (n <= kWilcoxonExactLimit) {
        const std::size_t total = std::accumulate(twice.begin(), twice.end(), std::size_t{0});
        std::vector<double> counts(total + 1, 0.0);
        counts[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t r : twice) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (counts[s] != 0.0) {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        // 4 * |W+ - E[W+]|, kept integral.
        const auto dev = [&](std::size_t s) {
            const long long d = 2 * static_cast<long long>(s) - static_cast<long long>(total);
            return d < 0 ? -d : d;
        };
        const long long observed = dev(w2);
        double tail = 0.0;
        for (std::size_t s = 0; s <= total; ++s) {
            if (counts[s] != 0.0 && dev(s) >= observed) {
                tail += counts[s];
            }
        }
        res.mode = TestMode::Exact;
        res.p_value = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
        return res;
    }

    const double nn = static_cast<double>(n);
    double tie_term = 0.0;
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(res.statistic - mean) - 0.5) / std::sqrt(var);
    res.mode = TestMode::Approximate;
    res.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
    return res;
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Kolmogorov-Smirnov distance between the sample's empirical CDF and a
/// normal with the sample mean and (n - 1) standard deviation.
inline double lilliefors_statistic(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 4) {
        throw Error(ErrorCode::TooFewSamples, "Lilliefors needs at least 4 observations, got " + std::to_string(n));
    }
    const double nn = static_cast<double>(n);
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / nn;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (nn - 1.0));
    if (!(sd > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "sample has zero variance");
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = standard_normal_cdf((sorted[i] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
    }
    return d;
}

struct LillieforsOptions {
    std::size_t replicates = 10000;
    std::uint64_t seed = 20240917;
};

/// Monte Carlo null distribution of the Lilliefors statistic for one sample
/// size. The statistic is location/scale invariant, so standard-normal
/// replicates suffice. Replicate r draws from its own stream derived from
/// (seed, n, r).
class LillieforsNull {
public:
    LillieforsNull(std::size_t n, const LillieforsOptions& opts = {}) : n_(n) {
        if (n < 4) {
            throw Error(ErrorCode::TooFewSamples, "Lilliefors needs at least 4 observations, got " + std::to_string(n));
        }
        if (opts.replicates < 1) {
            throw Error(ErrorCode::InvalidParams, "replicates must be >= 1");
        }
        stats_.reserve(opts.replicates);
        std::vector<double> draw(n);
        for (std::size_t r = 0; r < opts.replicates; ++r) {
            Rng rng(derive_seed(opts.seed, {n, r}));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (auto& v : draw) v = normal(rng);
            stats_.push_back(lilliefors_statistic(draw));
        }
        std::sort(stats_.begin(), stats_.end());
    }

    std::size_t sample_size() const noexcept { return n_; }
    std::size_t replicates() const noexcept { return stats_.size(); }

    /// Fraction of replicate statistics >= `observed`.
    double p_value(double observed) const {
        const auto it = std::lower_bound(stats_.begin(), stats_.end(), observed);
        return static_cast<double>(stats_.end() - it) / static_cast<double>(stats_.size());
    }

    TestResult test(std::span<const double> sample) const {
        if (sample.size() != n_) {
            throw Error(ErrorCode::LengthMismatch, "sample size differs from the reference distribution");
        }
        TestResult res;
        res.method = TestMethod::Lilliefors;
        res.mode = TestMode::MonteCarlo;
        res.n_effective = n_;
        res.statistic = lilliefors_statistic(sample);
        res.p_value = p_value(res.statistic);
        res.null_hypothesis = "sample drawn from a normal distribution with unspecified mean and variance";
        return res;
    }

private:
    std::size_t n_;
    std::vector<double> stats_;
};

inline TestResult lilliefors_test(std::span<const double> sample, const LillieforsOptions& opts = {}) {
    if (sample.size() < 4) {
        throw Error(ErrorCode::TooFewSamples,
                    "Lilliefors needs at least 4 observations, got " + std::to_string(sample.size()));
    }
    lilliefors_statistic(sample);  // surfaces ZeroVariance before the simulation
    return LillieforsNull(sample.size(), opts).test(sample);
}

}  // namespace inkrec
