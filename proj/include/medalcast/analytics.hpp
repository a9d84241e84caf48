#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "medalcast/error.hpp"
#include "medalcast/hybrid.hpp"
#include "medalcast/ingest.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/rng.hpp"

namespace medalcast::analytics {

/// Two-sided tail probability of a standard normal statistic.
inline double normal_p_two_sided(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Upper tail of the chi-square distribution with one degree of freedom.
inline double chi_square_p_df1(double x) {
    if (x < 0.0) throw range_error("chi-square statistic must be non-negative");
    return std::erfc(std::sqrt(x / 2.0));
}

// ---------------------------------------------------------------------------
// Runs test
// ---------------------------------------------------------------------------

/// 1 where the value is strictly above the series mean, else 0.
inline std::vector<int> binarize_by_mean(const Vec& series) {
    if (series.empty()) throw insufficient_data("binarize_by_mean: empty series");
    double m = mean(series);
    std::vector<int> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i] > m ? 1 : 0;
    return out;
}

struct RunsTestResult {
    std::size_t n1 = 0, n2 = 0; // counts of 1s and 0s
    std::size_t runs = 0;
    double expected_runs = 0.0;
    double variance_runs = 0.0;
    double z = 0.0;
    double p_value = 0.0; // two-sided normal
};

/// Wald-Wolfowitz runs test. E(r) = 2 n1 n2 / (n1 + n2) + 1 and
/// V(r) = 2 n1 n2 (2 n1 n2 - n1 - n2) / ((n1+n2)^2 (n1+n2-1)).
inline RunsTestResult runs_test(const std::vector<int>& sequence) {
    RunsTestResult r;
    for (int v : sequence) {
        if (v == 1) ++r.n1;
        else if (v == 0) ++r.n2;
        else throw range_error("runs_test: sequence must be binary");
    }
    if (r.n1 == 0 || r.n2 == 0)
        throw numeric_error("runs_test: both symbols must be present");

    r.runs = 1;
    for (std::size_t i = 1; i < sequence.size(); ++i)
        if (sequence[i] != sequence[i - 1]) ++r.runs;

    double n1 = static_cast<double>(r.n1), n2 = static_cast<double>(r.n2);
    double n = n1 + n2;
    r.expected_runs = 2.0 * n1 * n2 / n + 1.0;
    r.variance_runs = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2) / (n * n * (n - 1.0));
    if (r.variance_runs <= 0.0)
        throw numeric_error("runs_test: variance is not positive");
    r.z = (static_cast<double>(r.runs) - r.expected_runs) / std::sqrt(r.variance_runs);
    r.p_value = normal_p_two_sided(r.z);
    return r;
}

// ---------------------------------------------------------------------------
// Chi-square contingency (2x2)
// ---------------------------------------------------------------------------

struct ContingencyTable2x2 {
    double n11 = 0, n12 = 0, n21 = 0, n22 = 0;
};

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 0.0;           // upper-tail chi-square, df = 1
    double p_value_one_sided = 0.0; // half, for a directional reading
    double expected[2][2] = {{0, 0}, {0, 0}};
    bool low_expected_warning = false; // some expected frequency <= 5
};

/// Pearson chi-square without continuity correction. Expected frequencies
/// at or below 5 set a warning flag rather than refusing the test.
inline ChiSquareResult chi_square_2x2(const ContingencyTable2x2& t) {
    double row1 = t.n11 + t.n12, row2 = t.n21 + t.n22;
    double col1 = t.n11 + t.n21, col2 = t.n12 + t.n22;
    double total = row1 + row2;
    if (row1 <= 0 || row2 <= 0 || col1 <= 0 || col2 <= 0)
        throw numeric_error("chi_square_2x2: a marginal total is zero");

    ChiSquareResult r;
    double rows[2] = {row1, row2}, cols[2] = {col1, col2};
    double obs[2][2] = {{t.n11, t.n12}, {t.n21, t.n22}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            r.expected[i][j] = rows[i] * cols[j] / total;
            if (r.expected[i][j] <= 5.0) r.low_expected_warning = true;
            double d = obs[i][j] - r.expected[i][j];
            r.statistic += d * d / r.expected[i][j];
        }
    r.p_value = chi_square_p_df1(r.statistic);
    r.p_value_one_sided = 0.5 * r.p_value;
    return r;
}

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

inline Vec average_ranks(const Vec& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    Vec ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

/// Pearson correlation of average ranks; identical to the 1 - 6 sum(d^2)
/// formula whenever there are no ties.
inline double spearman(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw shape_error("spearman: length mismatch");
    if (x.size() < 2) throw insufficient_data("spearman: needs at least 2 pairs");
    Vec rx = average_ranks(x), ry = average_ranks(y);
    double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw numeric_error("spearman: correlation undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Exact Shapley attribution
// ---------------------------------------------------------------------------

struct ShapleyConfig {
    std::vector<std::string> feature_names;
    // Value of the coalition S; mask[i] says whether feature i is present.
    std::function<double(const std::vector<bool>&)> value;
};

inline double binomial(std::size_t n, std::size_t k) {
    double v = 1.0;
    for (std::size_t i = 1; i <= k; ++i)
        v = v * static_cast<double>(n - k + i) / static_cast<double>(i);
    return v;
}

/// Exact enumeration of every coalition with the factorial weights
/// |S|! (|F|-|S|-1)! / |F|!, written as 1 / (|F| * C(|F|-1, |S|)) to stay
/// exact in double precision.
inline std::vector<double> shapley_exact(const ShapleyConfig& cfg) {
    const std::size_t n = cfg.feature_names.size();
    if (n == 0) throw insufficient_data("shapley_exact: no features");
    if (n > 20) throw range_error("shapley_exact: exact enumeration is bounded at 20 features");

    const std::size_t total = std::size_t{1} << n;
    Vec cache(total);
    std::vector<bool> mask(n);
    for (std::size_t s = 0; s < total; ++s) {
        for (std::size_t i = 0; i < n; ++i) mask[i] = (s >> i) & 1U;
        try {
            cache[s] = cfg.value(mask);
        } catch (const std::exception& e) {
            std::string members;
            for (std::size_t i = 0; i < n; ++i)
                if (mask[i]) members += (members.empty() ? "" : ",") + cfg.feature_names[i];
            throw numeric_error("shapley_exact: evaluation failed on subset {" + members +
                                "}: " + e.what());
        }
    }

    std::vector<double> phi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t s = 0; s < total; ++s) {
            if (s & bit) continue;
            std::size_t size_s = static_cast<std::size_t>(__builtin_popcountll(s));
            double w = 1.0 / (static_cast<double>(n) * binomial(n - 1, size_s));
            phi[i] += w * (cache[s | bit] - cache[s]);
        }
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Coach effect
// ---------------------------------------------------------------------------

struct CoachEffectResult {
    double rmse_coach = 0.0;
    double rmse_base = 0.0;
    double effect = 0.0; // rmse_coach - rmse_base
};

inline CoachEffectResult coach_effect_rmse(const Vec& predictions, const Vec& actuals,
                                           const std::vector<int>& years,
                                           const std::set<int>& coach_years) {
    if (predictions.size() != actuals.size() || predictions.size() != years.size())
        throw shape_error("coach_effect_rmse: inputs are not aligned");
    double sse_coach = 0.0, sse_base = 0.0;
    std::size_t n_coach = 0, n_base = 0;
    for (std::size_t i = 0; i < years.size(); ++i) {
        double d = predictions[i] - actuals[i];
        if (coach_years.count(years[i])) {
            sse_coach += d * d;
            ++n_coach;
        } else {
            sse_base += d * d;
            ++n_base;
        }
    }
    if (n_coach == 0 || n_base == 0)
        throw numeric_error("coach_effect_rmse: both coach and base periods must be non-empty");
    CoachEffectResult r;
    r.rmse_coach = std::sqrt(sse_coach / static_cast<double>(n_coach));
    r.rmse_base = std::sqrt(sse_base / static_cast<double>(n_base));
    r.effect = r.rmse_coach - r.rmse_base;
    return r;
}

/// Coach effect coefficient: the largest sustained relative jump or drop
/// against the trailing four-Games mean. The forward window t..t+3 is
/// clipped at the series end while the /4 denominator stays fixed.
inline double coach_effect_coefficient(const Vec& medals) {
    if (medals.size() < 5)
        throw insufficient_data("coach_effect_coefficient: needs at least 5 observations");
    double best = 0.0;
    bool any = false;
    for (std::size_t t = 4; t < medals.size(); ++t) {
        double avg = (medals[t - 4] + medals[t - 3] + medals[t - 2] + medals[t - 1]) / 4.0;
        if (avg == 0.0) continue;
        double rel = (medals[t] - avg) / avg;
        std::size_t count = 0;
        for (std::size_t s = t; s < std::min(t + 4, medals.size()); ++s) {
            if (rel > 0.0 && medals[s] > avg) ++count;
            if (rel < 0.0 && medals[s] < avg) ++count;
        }
        double contribution = std::abs(rel * static_cast<double>(count) / 4.0);
        best = std::max(best, contribution);
        any = true;
    }
    if (!any)
        throw numeric_error("coach_effect_coefficient: every window had a zero trailing mean");
    return best;
}

/// Index_coach = V_p * (1 + E_coach).
inline double coach_impact_index(double v_p, double e_coach) {
    if (v_p < 0.0) throw range_error("coach_impact_index: V_p must be non-negative");
    return v_p * (1.0 + e_coach);
}

// ---------------------------------------------------------------------------
// Gender trend
// ---------------------------------------------------------------------------

struct GenderYearRow {
    int year = 0;
    long male = 0, female = 0; // medal-winning entries
    double ratio = 0.0;        // male / female
    bool ratio_defined = false;
};

struct GenderTrend {
    std::vector<GenderYearRow> rows; // ascending by year
    long total_male = 0, total_female = 0;
};

inline GenderTrend gender_trend(const std::vector<ingest::AthleteRecord>& athletes) {
    std::map<int, std::pair<long, long>> by_year;
    for (const auto& a : athletes) {
        if (a.medal == ingest::Medal::NoMedal) continue;
        auto& [male, female] = by_year[a.year];
        if (a.sex == ingest::Sex::M) ++male;
        else ++female;
    }
    GenderTrend out;
    for (const auto& [year, counts] : by_year) {
        GenderYearRow row;
        row.year = year;
        row.male = counts.first;
        row.female = counts.second;
        row.ratio_defined = counts.second > 0;
        row.ratio = row.ratio_defined
                        ? static_cast<double>(counts.first) / static_cast<double>(counts.second)
                        : 0.0;
        out.total_male += row.male;
        out.total_female += row.female;
        out.rows.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

struct AblationResult {
    double hybrid_rmse = 0.0, hybrid_mae = 0.0;
    double lstm_only_rmse = 0.0, lstm_only_mae = 0.0;
};

/// Trains once (both wirings share the teacher-forced training pass) and
/// evaluates the hybrid and the ARIMA-less inference paths on the final
/// step of every country.
inline AblationResult ablation_run(const hybrid::Prepared& prepared,
                                   const hybrid::PipelineConfig& cfg) {
    lstm::TrainResult trained = hybrid::fit_lstm(prepared, cfg);

    hybrid::PipelineConfig with = cfg, without = cfg;
    with.use_arima = true;
    without.use_arima = false;
    hybrid::Evaluation ev_hybrid = hybrid::evaluate_last_step(prepared, trained.params, with);
    hybrid::Evaluation ev_plain = hybrid::evaluate_last_step(prepared, trained.params, without);

    AblationResult r;
    r.hybrid_rmse = ev_hybrid.rmse;
    r.hybrid_mae = ev_hybrid.mae;
    r.lstm_only_rmse = ev_plain.rmse;
    r.lstm_only_mae = ev_plain.mae;
    return r;
}

// ---------------------------------------------------------------------------
// Sensitivity harness
// ---------------------------------------------------------------------------

struct SensitivityInputs {
    std::vector<ingest::AthleteRecord> athletes;
    std::vector<ingest::MedalTally> tallies;
    std::vector<ingest::GamesRecord> hosts;
    std::vector<std::string> sport_names;
};

struct SensitivityCell {
    double athlete_fraction = 1.0;
    double history_fraction = 1.0;
    double accuracy = 0.0;
    bool ok = false;
    std::string note;
};

using SensitivityGrid = std::vector<std::vector<SensitivityCell>>;

/// Seeded reduction: keep ceil(f*N) athlete records, and the tallies of
/// ceil(f*T) held years (the final year always survives, because it is the
/// evaluation target). Fraction 1.0 is the identity, bit for bit.
inline SensitivityInputs reduce_inputs(const SensitivityInputs& full, double athlete_fraction,
                                       double history_fraction, SplitMix64& rng) {
    if (athlete_fraction <= 0.0 || athlete_fraction > 1.0 || history_fraction <= 0.0 ||
        history_fraction > 1.0)
        throw range_error("sensitivity fractions must lie in (0, 1]");
    SensitivityInputs out;
    out.hosts = full.hosts;
    out.sport_names = full.sport_names;

    if (athlete_fraction >= 1.0) {
        out.athletes = full.athletes;
    } else {
        std::vector<std::size_t> order(full.athletes.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        std::size_t keep = static_cast<std::size_t>(
            std::ceil(athlete_fraction * static_cast<double>(full.athletes.size())));
        order.resize(std::max<std::size_t>(keep, 1));
        std::sort(order.begin(), order.end());
        for (std::size_t idx : order) out.athletes.push_back(full.athletes[idx]);
    }

    if (history_fraction >= 1.0) {
        out.tallies = full.tallies;
    } else {
        std::vector<int> held;
        for (const auto& g : full.hosts)
            if (g.held) held.push_back(g.year);
        std::sort(held.begin(), held.end());
        int last = held.back();
        held.pop_back();
        for (std::size_t i = held.size(); i > 1; --i)
            std::swap(held[i - 1], held[rng.below(i)]);
        std::size_t keep = static_cast<std::size_t>(
            std::ceil(history_fraction * static_cast<double>(held.size() + 1)));
        keep = keep > 0 ? keep - 1 : 0; // the last year occupies one slot
        held.resize(std::min(keep, held.size()));
        std::set<int> chosen(held.begin(), held.end());
        chosen.insert(last);
        for (const auto& t : full.tallies)
            if (chosen.count(t.year)) out.tallies.push_back(t);
    }
    return out;
}

/// Interval hit accuracy of one fully retrained pipeline on the reduced data.
inline double sensitivity_cell_accuracy(const SensitivityInputs& inputs,
                                        const hybrid::PipelineConfig& cfg) {
    ingest::Panel panel = ingest::build_panel(inputs.athletes, inputs.tallies, inputs.hosts);
    hybrid::Prepared prepared = hybrid::prepare(panel, inputs.athletes, inputs.sport_names, cfg);
    lstm::TrainResult trained = hybrid::fit_lstm(prepared, cfg);
    return hybrid::evaluate_last_step(prepared, trained.params, cfg).interval_accuracy;
}

/// The 3x3 grid of §-style reduced datasets: every (athlete fraction,
/// history fraction) pair is subsampled with a cell-derived stream,
/// retrained with the run seed, and scored by interval hit accuracy.
inline SensitivityGrid sensitivity_grid(const SensitivityInputs& inputs,
                                        const hybrid::PipelineConfig& cfg,
                                        const Vec& fractions = {1.0, 0.75, 0.5}) {
    SensitivityGrid grid(fractions.size(), std::vector<SensitivityCell>(fractions.size()));
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        for (std::size_t j = 0; j < fractions.size(); ++j) {
            SensitivityCell& cell = grid[i][j];
            cell.athlete_fraction = fractions[i];
            cell.history_fraction = fractions[j];
            SplitMix64 rng = named_stream(cfg.seed, "sensitivity/cell",
                                          i * fractions.size() + j);
            try {
                SensitivityInputs reduced =
                    reduce_inputs(inputs, fractions[i], fractions[j], rng);
                cell.accuracy = sensitivity_cell_accuracy(reduced, cfg);
                cell.ok = true;
            } catch (const Error& e) {
                cell.ok = false;
                cell.note = e.what();
            }
        }
    }
    return grid;
}

} // namespace medalcast::analytics
