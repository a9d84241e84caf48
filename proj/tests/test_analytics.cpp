#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "medalcast/analytics.hpp"

#include "test_support.hpp"

using namespace medalcast;
using namespace medalcast::analytics;

TEST_CASE("binarize_by_mean uses strict inequality", "[analytics]") {
    REQUIRE(binarize_by_mean({1, 2, 3}) == std::vector<int>{0, 0, 1});
    REQUIRE(binarize_by_mean({7, 7, 7}) == std::vector<int>{0, 0, 0});
    REQUIRE(binarize_by_mean({10, 20, 10, 20}) == std::vector<int>{0, 1, 0, 1});
    REQUIRE_THROWS_AS(binarize_by_mean({}), Error);
}

TEST_CASE("binarize_by_mean depends only on the sign pattern", "[analytics]") {
    SplitMix64 rng = named_stream(42, "test/binarize");
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = testsupport::random_vec(rng, 15, -10.0, 10.0);
        double a = rng.uniform(0.1, 5.0);
        double shift = rng.uniform(-3.0, 3.0);
        Vec scaled(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = a * x[i] + shift;
        REQUIRE(binarize_by_mean(scaled) == binarize_by_mean(x));
    }
}

TEST_CASE("runs test reproduces the published statistics", "[analytics]") {
    // Nine 1s and nine 0s arranged into six runs.
    std::vector<int> seq;
    for (int block = 0; block < 6; ++block)
        for (int i = 0; i < 3; ++i) seq.push_back(block % 2 == 0 ? 1 : 0);
    RunsTestResult r = runs_test(seq);
    REQUIRE(r.n1 == 9);
    REQUIRE(r.n2 == 9);
    REQUIRE(r.runs == 6);
    REQUIRE(r.expected_runs == 10.0);
    REQUIRE_THAT(r.variance_runs, Catch::Matchers::WithinAbs(4.2353, 1e-4));
    REQUIRE_THAT(r.z, Catch::Matchers::WithinAbs(-1.9437, 1e-4));
    REQUIRE_THAT(r.p_value, Catch::Matchers::WithinAbs(0.0519, 1e-3));
}

TEST_CASE("alternating sequence maximizes runs", "[analytics]") {
    std::vector<int> seq = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    RunsTestResult r = runs_test(seq);
    REQUIRE(r.runs == 10);
    REQUIRE(r.expected_runs == 6.0);
    REQUIRE(r.z > 0.0);
}

TEST_CASE("runs test needs both symbols", "[analytics]") {
    REQUIRE_THROWS_AS(runs_test({1, 1, 1, 1}), Error);
    REQUIRE_THROWS_AS(runs_test({0}), Error);
    REQUIRE_THROWS_AS(runs_test({0, 1, 2}), Error);
}

TEST_CASE("runs moments match a Monte-Carlo estimate", "[analytics]") {
    const std::size_t n1 = 5, n2 = 4;
    std::vector<int> pool;
    for (std::size_t i = 0; i < n1; ++i) pool.push_back(1);
    for (std::size_t i = 0; i < n2; ++i) pool.push_back(0);

    SplitMix64 rng = named_stream(42, "test/runs-mc");
    const int trials = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[rng.below(i)]);
        int runs = 1;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (pool[i] != pool[i - 1]) ++runs;
        sum += runs;
        sumsq += static_cast<double>(runs) * runs;
    }
    double mc_mean = sum / trials;
    double mc_var = sumsq / trials - mc_mean * mc_mean;

    double n1d = n1, n2d = n2, n = n1d + n2d;
    double expected = 2.0 * n1d * n2d / n + 1.0;
    double variance = 2.0 * n1d * n2d * (2.0 * n1d * n2d - n1d - n2d) / (n * n * (n - 1.0));

    double se_mean = std::sqrt(variance / trials);
    REQUIRE(std::abs(mc_mean - expected) <= 3.0 * se_mean);
    // Variance of the sample variance is approximated loosely; 5% slack
    // is far beyond three standard errors for 100k draws.
    REQUIRE(std::abs(mc_var - variance) <= 0.05 * variance);
}

TEST_CASE("chi-square on a perfectly independent table", "[analytics]") {
    ChiSquareResult r = chi_square_2x2({10, 10, 10, 10});
    REQUIRE(r.statistic == 0.0);
    REQUIRE_THAT(r.p_value, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("chi-square matches the hand computation", "[analytics]") {
    ChiSquareResult r = chi_square_2x2({20, 10, 10, 20});
    REQUIRE_THAT(r.statistic, Catch::Matchers::WithinAbs(20.0 / 3.0, 1e-10));
    REQUIRE_THAT(r.p_value, Catch::Matchers::WithinAbs(0.0098, 5e-4));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) REQUIRE(r.expected[i][j] == 15.0);
    REQUIRE_FALSE(r.low_expected_warning);

    // The paper-style statistic of 3.6: both tail readings are emitted.
    ChiSquareResult t = chi_square_2x2({15, 5, 8, 12});
    REQUIRE_THAT(t.p_value_one_sided, Catch::Matchers::WithinAbs(0.5 * t.p_value, 1e-15));
}

TEST_CASE("chi-square is transpose invariant", "[analytics]") {
    SplitMix64 rng = named_stream(42, "test/chi2");
    for (int trial = 0; trial < 20; ++trial) {
        ContingencyTable2x2 t{static_cast<double>(1 + rng.below(40)),
                              static_cast<double>(1 + rng.below(40)),
                              static_cast<double>(1 + rng.below(40)),
                              static_cast<double>(1 + rng.below(40))};
        ContingencyTable2x2 tt{t.n11, t.n21, t.n12, t.n22};
        REQUIRE_THAT(chi_square_2x2(t).statistic,
                     Catch::Matchers::WithinAbs(chi_square_2x2(tt).statistic, 1e-10));
    }
}

TEST_CASE("chi-square degenerate and warning paths", "[analytics]") {
    REQUIRE_THROWS_AS(chi_square_2x2({5, 0, 7, 0}), Error);
    ChiSquareResult r = chi_square_2x2({3, 4, 5, 2});
    REQUIRE(r.low_expected_warning);
}

TEST_CASE("spearman closed forms", "[analytics]") {
    REQUIRE_THAT(spearman({1, 2, 3, 4}, {1, 2, 3, 4}),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(spearman({1, 2, 3, 4}, {4, 3, 2, 1}),
                 Catch::Matchers::WithinAbs(-1.0, 1e-12));
    // d = (1,1,-1? ...): sum d^2 = 4 -> rho = 1 - 24/120 = 0.8.
    REQUIRE_THAT(spearman({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}),
                 Catch::Matchers::WithinAbs(0.8, 1e-12));
    REQUIRE_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
    REQUIRE_THROWS_AS(spearman({2, 2, 2}, {1, 2, 3}), Error);
}

TEST_CASE("spearman is invariant under monotone transforms", "[analytics]") {
    SplitMix64 rng = named_stream(42, "test/spearman");
    for (int trial = 0; trial < 10; ++trial) {
        Vec x = testsupport::random_vec(rng, 12, 0.1, 9.0);
        Vec y = testsupport::random_vec(rng, 12, 0.1, 9.0);
        double base = spearman(x, y);
        Vec ex(x.size()), logy(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            ex[i] = std::exp(x[i]);
            logy[i] = std::log(y[i]);
        }
        REQUIRE_THAT(spearman(ex, logy), Catch::Matchers::WithinAbs(base, 1e-12));
    }
}

TEST_CASE("spearman handles ties through average ranks", "[analytics]") {
    double rho = spearman({1, 1, 2, 3}, {4, 4, 5, 9});
    REQUIRE(rho > 0.99);
}

namespace {

/// Permutation-average Shapley oracle: the mean marginal contribution over
/// every ordering of the features.
std::vector<double> shapley_permutation_oracle(
    std::size_t n, const std::function<double(const std::vector<bool>&)>& value) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::vector<double> phi(n, 0.0);
    std::size_t count = 0;
    do {
        std::vector<bool> mask(n, false);
        double prev = value(mask);
        for (std::size_t pos = 0; pos < n; ++pos) {
            mask[perm[pos]] = true;
            double cur = value(mask);
            phi[perm[pos]] += cur - prev;
            prev = cur;
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& v : phi) v /= static_cast<double>(count);
    return phi;
}

} // namespace

TEST_CASE("shapley of an additive game returns the weights", "[analytics]") {
    Vec weights = {2.0, -1.0, 0.5, 3.25};
    ShapleyConfig cfg;
    cfg.feature_names = {"a", "b", "c", "d"};
    cfg.value = [&weights](const std::vector<bool>& mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) s += weights[i];
        return s;
    };
    auto phi = shapley_exact(cfg);
    for (std::size_t i = 0; i < weights.size(); ++i)
        REQUIRE_THAT(phi[i], Catch::Matchers::WithinAbs(weights[i], 1e-12));
}

TEST_CASE("symmetric features get equal shapley values", "[analytics]") {
    ShapleyConfig cfg;
    cfg.feature_names = {"x", "y", "z"};
    cfg.value = [](const std::vector<bool>& mask) {
        // x and y are interchangeable; z is different.
        int xy = (mask[0] ? 1 : 0) + (mask[1] ? 1 : 0);
        return static_cast<double>(xy * xy) + (mask[2] ? 0.5 : 0.0);
    };
    auto phi = shapley_exact(cfg);
    REQUIRE_THAT(phi[0], Catch::Matchers::WithinAbs(phi[1], 1e-12));
    REQUIRE_THAT(phi[2], Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("three-feature game agrees with the permutation oracle", "[analytics]") {
    // Table of coalition values from the worked example.
    auto value = [](const std::vector<bool>& mask) {
        int key = (mask[0] ? 1 : 0) | (mask[1] ? 2 : 0) | (mask[2] ? 4 : 0);
        switch (key) {
            case 0: return 0.0;
            case 1: return 1.0; // {1}
            case 2: return 2.0; // {2}
            case 3: return 4.0; // {1,2}
            case 4: return 0.0; // {3}
            case 5: return 1.0; // {1,3}
            case 6: return 2.0; // {2,3}
            default: return 5.0; // {1,2,3}
        }
    };
    ShapleyConfig cfg;
    cfg.feature_names = {"f1", "f2", "f3"};
    cfg.value = value;
    auto phi = shapley_exact(cfg);
    auto oracle = shapley_permutation_oracle(3, value);
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE_THAT(phi[i], Catch::Matchers::WithinAbs(oracle[i], 1e-12));
    // Frozen values computed by the permutation oracle by hand: the six
    // orderings contribute marginals summing to 11, 17, and 2 thirds of 6.
    REQUIRE_THAT(phi[0], Catch::Matchers::WithinAbs(11.0 / 6.0, 1e-12));
    REQUIRE_THAT(phi[1], Catch::Matchers::WithinAbs(17.0 / 6.0, 1e-12));
    REQUIRE_THAT(phi[2], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    // Efficiency: the values sum to f(F) - f(empty) = 5.
    REQUIRE_THAT(phi[0] + phi[1] + phi[2], Catch::Matchers::WithinAbs(5.0, 1e-12));
}

TEST_CASE("shapley axioms on random games", "[analytics]") {
    SplitMix64 rng = named_stream(42, "test/shapley");
    for (std::size_t n : {2, 4, 6}) {
        Vec table(std::size_t{1} << n);
        for (double& v : table) v = rng.uniform(-3.0, 3.0);
        table[0] = rng.uniform(-1.0, 1.0);
        auto value = [&table](const std::vector<bool>& mask) {
            std::size_t key = 0;
            for (std::size_t i = 0; i < mask.size(); ++i)
                if (mask[i]) key |= std::size_t{1} << i;
            return table[key];
        };
        ShapleyConfig cfg;
        for (std::size_t i = 0; i < n; ++i) cfg.feature_names.push_back("f" + std::to_string(i));
        cfg.value = value;
        auto phi = shapley_exact(cfg);

        // Efficiency.
        double sum = 0.0;
        for (double v : phi) sum += v;
        double full = table[(std::size_t{1} << n) - 1] - table[0];
        REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(full, 1e-9));

        // Against the permutation oracle.
        auto oracle = shapley_permutation_oracle(n, value);
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE_THAT(phi[i], Catch::Matchers::WithinAbs(oracle[i], 1e-9));
    }
}

TEST_CASE("dummy features get zero attribution", "[analytics]") {
    ShapleyConfig cfg;
    cfg.feature_names = {"real", "dummy"};
    cfg.value = [](const std::vector<bool>& mask) { return mask[0] ? 2.0 : 0.0; };
    auto phi = shapley_exact(cfg);
    REQUIRE_THAT(phi[0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(phi[1], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("shapley guards", "[analytics]") {
    ShapleyConfig cfg;
    for (int i = 0; i < 21; ++i) cfg.feature_names.push_back("f" + std::to_string(i));
    cfg.value = [](const std::vector<bool>&) { return 0.0; };
    REQUIRE_THROWS_AS(shapley_exact(cfg), Error);

    ShapleyConfig failing;
    failing.feature_names = {"a", "b"};
    failing.value = [](const std::vector<bool>& mask) -> double {
        if (mask[0] && mask[1]) throw std::runtime_error("model exploded");
        return 0.0;
    };
    try {
        shapley_exact(failing);
        FAIL("expected an attribution error");
    } catch (const Error& e) {
        REQUIRE(std::string(e.what()).find("a,b") != std::string::npos);
    }
}

TEST_CASE("coach effect rmse difference", "[analytics]") {
    // Perfect predictions: effect is zero.
    Vec preds = {3, 4, 5, 6};
    std::vector<int> years = {1984, 1988, 1992, 1996};
    CoachEffectResult zero = coach_effect_rmse(preds, preds, years, {1984, 1988});
    REQUIRE(zero.effect == 0.0);

    // Engineered single-year periods: RMSE reduces to |error|.
    Vec actual = {3, 4};
    Vec off = {3 + 2.86, 4 + 0.82};
    CoachEffectResult r = coach_effect_rmse(off, actual, {1984, 1988}, {1984});
    REQUIRE_THAT(r.rmse_coach, Catch::Matchers::WithinAbs(2.86, 1e-12));
    REQUIRE_THAT(r.rmse_base, Catch::Matchers::WithinAbs(0.82, 1e-12));
    REQUIRE_THAT(r.effect, Catch::Matchers::WithinAbs(2.04, 1e-12));
    REQUIRE(r.effect == r.rmse_coach - r.rmse_base);

    REQUIRE_THROWS_AS(coach_effect_rmse(preds, preds, years, {}), Error);
    REQUIRE_THROWS_AS(coach_effect_rmse(preds, preds, years, {1984, 1988, 1992, 1996}),
                      Error);
}

TEST_CASE("coach effect coefficient hand examples", "[analytics]") {
    REQUIRE(coach_effect_coefficient({5, 5, 5, 5, 5, 5}) == 0.0);
    REQUIRE_THAT(coach_effect_coefficient({10, 10, 10, 10, 20, 20, 20, 20}),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(coach_effect_coefficient({10, 10, 10, 10, 5}),
                 Catch::Matchers::WithinAbs(0.125, 1e-12));
    REQUIRE_THROWS_AS(coach_effect_coefficient({1, 2, 3, 4}), Error);
    REQUIRE_THROWS_AS(coach_effect_coefficient({0, 0, 0, 0, 0, 0}), Error);
}

TEST_CASE("coach impact index formula", "[analytics]") {
    REQUIRE(coach_impact_index(0.0, 3.0) == 0.0);
    REQUIRE(coach_impact_index(1.5, 0.0) == 1.5);
    REQUIRE(coach_impact_index(2.0, 1.0) == 4.0);
    REQUIRE_THROWS_AS(coach_impact_index(-1.0, 0.0), Error);
}

TEST_CASE("gender trend counts medal-winning entries by sex", "[analytics]") {
    using ingest::AthleteRecord;
    using ingest::Medal;
    using ingest::Sex;
    std::vector<AthleteRecord> records;
    auto add = [&records](int year, Sex sex, Medal medal) {
        AthleteRecord r;
        r.name = "x";
        r.noc = "USA";
        r.sex = sex;
        r.edition = 1;
        r.year = year;
        r.sport = "Swimming";
        r.medal = medal;
        records.push_back(r);
    };
    add(1996, Sex::M, Medal::Gold);
    add(1996, Sex::M, Medal::Silver);
    add(1996, Sex::M, Medal::Bronze);
    add(1996, Sex::F, Medal::Gold);
    add(1996, Sex::F, Medal::NoMedal); // not a medalist
    add(2000, Sex::M, Medal::NoMedal); // year with no medalists at all
    add(2004, Sex::M, Medal::Gold);

    GenderTrend trend = gender_trend(records);
    REQUIRE(trend.rows.size() == 2);
    REQUIRE(trend.rows[0].year == 1996);
    REQUIRE(trend.rows[0].male == 3);
    REQUIRE(trend.rows[0].female == 1);
    REQUIRE(trend.rows[0].ratio == 3.0);
    REQUIRE(trend.rows[0].ratio_defined);
    REQUIRE(trend.rows[1].year == 2004);
    REQUIRE_FALSE(trend.rows[1].ratio_defined);
    REQUIRE(trend.total_male == 4);
    REQUIRE(trend.total_female == 1);

    long sum_male = 0;
    for (const auto& row : trend.rows) sum_male += row.male;
    REQUIRE(sum_male == trend.total_male);
}
