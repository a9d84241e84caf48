#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "medalcast/embed.hpp"
#include "medalcast/error.hpp"
#include "medalcast/lstm.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/statematrix.hpp"

namespace medalcast::predict {

inline double euclidean(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw shape_error("euclidean: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct PredictionInterval {
    int lo = 0, hi = 0;
    std::array<double, 2> nn_distances{0.0, 0.0};
};

/// Two nearest codewords (k = 2) give the prediction interval. Distance
/// ties resolve toward the smaller count so reruns are stable.
inline PredictionInterval knn_interval(const Vec& v, const std::vector<Vec>& codewords,
                                       std::size_t k = 2) {
    if (codewords.empty()) throw range_error("knn_interval: empty codebook");
    if (k < 1 || k > codewords.size())
        throw range_error("knn_interval: k=" + std::to_string(k) +
                          " exceeds codebook size " + std::to_string(codewords.size()));

    std::vector<std::pair<double, int>> scored;
    scored.reserve(codewords.size());
    for (std::size_t count = 0; count < codewords.size(); ++count)
        scored.emplace_back(euclidean(v, codewords[count]), static_cast<int>(count));
    std::sort(scored.begin(), scored.end()); // pair order = distance, then count

    PredictionInterval out;
    int a = scored[0].second;
    int b = (k >= 2) ? scored[1].second : scored[0].second;
    out.lo = std::min(a, b);
    out.hi = std::max(a, b);
    out.nn_distances = {scored[0].first, (k >= 2) ? scored[1].first : scored[0].first};
    return out;
}

inline double interval_midpoint(const PredictionInterval& iv) {
    return 0.5 * (iv.lo + iv.hi);
}

struct FirstMedalResult {
    std::string noc;
    double probability = 0.0;
    bool predicted_first_medal = false; // probability > 0.5
};

/// Distance-ratio feature u = (d0 - d1) / (d0 + d1) against the codewords
/// for counts 0 and 1, squashed through a fixed-slope logistic. u = +-1 at
/// the codewords themselves, so slope 5 maps those to ~0.993 / ~0.007.
inline FirstMedalResult first_medal_probability(const Vec& v,
                                                const std::vector<Vec>& codewords,
                                                double slope = 5.0) {
    if (codewords.size() < 2)
        throw range_error("first_medal_probability: codebook must contain counts 0 and 1");
    double d0 = euclidean(v, codewords[0]);
    double d1 = euclidean(v, codewords[1]);
    if (d0 + d1 <= 0.0)
        throw numeric_error("first_medal_probability: degenerate codebook");
    double u = (d0 - d1) / (d0 + d1);
    FirstMedalResult out;
    out.probability = 1.0 / (1.0 + std::exp(-slope * u));
    out.predicted_first_medal = out.probability > 0.5;
    return out;
}

/// Decoded medal intervals for one predicted 10x5 team embedding.
struct DecodedTeam {
    PredictionInterval gold, silver, bronze, athletes, events;

    double medal_total_mid() const {
        return interval_midpoint(gold) + interval_midpoint(silver) +
               interval_midpoint(bronze);
    }
};

inline DecodedTeam decode_team(const Vec& embedding, const embed::EmbeddingCodebook& cb,
                               std::size_t k = 2) {
    if (embedding.size() != 50)
        throw shape_error("decode_team: expected a 50-entry embedding");
    Matrix m = reshape(embedding, 10, 5);
    const auto& names = embed::team_feature_names();
    DecodedTeam out;
    PredictionInterval* slots[5] = {&out.gold, &out.silver, &out.bronze, &out.athletes,
                                    &out.events};
    for (std::size_t j = 0; j < 5; ++j)
        *slots[j] = knn_interval(m.col(j), cb.scalar_entries(names[j]), k);
    return out;
}

/// Per-sport share of a country's predicted medals, from the L2 norms of
/// the sport rows of its current state.
struct SportImportance {
    std::string sport;
    double value = 0.0; // V_p: L2 norm of the sport's 5-dim state row
};

inline std::vector<SportImportance> sport_importance(const Matrix& state,
                                                     const statematrix::SportIndex& index) {
    if (state.cols() != statematrix::kStateCols || state.rows() < index.size())
        throw shape_error("sport_importance: state shape mismatch");
    std::vector<SportImportance> out;
    out.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < statematrix::kStateCols; ++c)
            s += state.at(r, c) * state.at(r, c);
        out.push_back({index.names()[r], std::sqrt(s)});
    }
    // Descending by value; ties keep sport-index order.
    std::stable_sort(out.begin(), out.end(),
                     [](const SportImportance& a, const SportImportance& b) {
                         return a.value > b.value;
                     });
    return out;
}

struct HostEffect {
    struct PerSport {
        std::string sport;
        double baseline = 0.0;  // predicted medals apportioned to the sport, host row 0
        double hosting = 0.0;   // same with host row 1
        double delta_pct = 0.0; // percentage change, 0 when baseline is 0
    };
    std::vector<PerSport> sports;
    double baseline_total = 0.0;
    double hosting_total = 0.0;
    double aggregate_delta_pct = 0.0; // mean of per-sport deltas weighted by counts
};

/// Runs the model twice on the same history with the final host row at
/// all-zeros and all-ones, decodes both through the interval midpoints, and
/// apportions the totals over sports by their importance share.
inline HostEffect host_effect(const lstm::LstmParams& params,
                              const std::vector<Matrix>& states,
                              const embed::EmbeddingCodebook& cb,
                              const statematrix::SportIndex& index) {
    if (states.empty()) throw insufficient_data("host_effect: empty state history");

    auto run = [&](bool hosting) {
        std::vector<Matrix> copy = states;
        statematrix::set_host_row(copy.back(), hosting);
        Vec embedding = lstm::predict_next(params, copy);
        return decode_team(embedding, cb).medal_total_mid();
    };
    double base_total = run(false);
    double host_total = run(true);

    // Sport shares come from the final state's athlete block; flipping the
    // host row does not touch it, so both runs share the weights.
    auto importance = sport_importance(states.back(), index);
    double weight_sum = 0.0;
    for (const auto& s : importance) weight_sum += s.value;

    HostEffect out;
    out.baseline_total = base_total;
    out.hosting_total = host_total;
    for (const auto& s : importance) {
        HostEffect::PerSport row;
        row.sport = s.sport;
        double share = (weight_sum > 0.0) ? s.value / weight_sum
                                          : 1.0 / static_cast<double>(importance.size());
        row.baseline = base_total * share;
        row.hosting = host_total * share;
        row.delta_pct = (row.baseline != 0.0)
                            ? 100.0 * (row.hosting - row.baseline) / row.baseline
                            : 0.0;
        out.sports.push_back(std::move(row));
    }

    double weighted = 0.0, count_sum = 0.0;
    for (const auto& row : out.sports) {
        weighted += row.delta_pct * row.baseline;
        count_sum += row.baseline;
    }
    out.aggregate_delta_pct = (count_sum != 0.0) ? weighted / count_sum : 0.0;
    return out;
}

} // namespace medalcast::predict
