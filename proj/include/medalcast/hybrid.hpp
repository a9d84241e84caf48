#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "medalcast/arima.hpp"
#include "medalcast/embed.hpp"
#include "medalcast/error.hpp"
#include "medalcast/ingest.hpp"
#include "medalcast/lstm.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/pca.hpp"
#include "medalcast/predict.hpp"
#include "medalcast/statematrix.hpp"

namespace medalcast::hybrid {

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::size_t pca_k = 5;
    statematrix::SlidingWindowConfig window;
    int arima_d = 1;
    int arima_max_p = 3;
    int arima_max_q = 3;
    bool arima_use_bic = true;
    lstm::TrainConfig lstm_cfg;
    std::size_t knn_k = 2;
    double logistic_slope = 5.0;
    bool use_arima = true;        // false = the ablated (LSTM-only) variant
    std::string next_host;        // canonical code of the next Games host, optional
    int jobs = 1;

    // Scalar embedding domains; defaults follow the documented data ranges.
    int max_gold = 83, max_silver = 78, max_bronze = 77;
    int max_athletes = 1109, max_events = 47;
};

/// One country's assembled history: states X_1..X_T aligned with the held
/// Games, the flattened true team embeddings, and the raw tallies.
struct CountrySeries {
    std::string noc;
    std::vector<Matrix> states;   // X_t, each 82x5, teacher-forced team block
    Matrix team_history;          // T x 50, row t = flatten(true N_{t+1} block)
    std::vector<int> years;
    std::vector<ingest::MedalTally> tallies;
    int total_medals = 0;         // career total across the panel
};

struct Prepared {
    embed::EmbeddingCodebook codebook;
    statematrix::SportIndex sports;
    pca::ProjectionMatrix projection;
    double explained_variance = 0.0;
    std::vector<CountrySeries> countries; // sorted by noc
    std::vector<int> held_years;
};

inline void run_indexed(std::size_t n, int jobs,
                        const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

/// Builds the codebook, the PCA projection, and every country's state
/// sequence from the cleaned panel.
inline Prepared prepare(const ingest::Panel& panel,
                        const std::vector<ingest::AthleteRecord>& athletes,
                        const std::vector<std::string>& sport_names,
                        const PipelineConfig& cfg) {
    Prepared out;
    out.sports = statematrix::SportIndex::from_names(sport_names);
    out.held_years = panel.held_years;
    const std::size_t T = panel.held_years.size();
    if (T < 2) throw insufficient_data("pipeline needs at least 2 held Games");

    // Register vocabularies: every value the athlete vector can draw on.
    std::map<std::string, std::vector<std::string>> vocab;
    vocab[embed::kCategoryNoc] = panel.countries;
    for (std::size_t e = 1; e <= T; ++e)
        vocab[embed::kCategoryEdition].push_back(std::to_string(e));
    for (std::size_t g = 0; g <= T; ++g)
        vocab[embed::kCategoryGames].push_back(std::to_string(g));
    vocab[embed::kCategoryAwards] = {"Gold", "Silver", "Bronze", "No medal"};
    vocab[embed::kCategorySport] = sport_names;
    std::map<std::string, int> scalar_max = {{"gold", cfg.max_gold},
                                             {"silver", cfg.max_silver},
                                             {"bronze", cfg.max_bronze},
                                             {"athletes", cfg.max_athletes},
                                             {"events", cfg.max_events}};
    out.codebook = embed::EmbeddingCodebook::build(cfg.seed, vocab, scalar_max);

    // PCA over the full-history athlete vectors.
    std::vector<Vec> vectors;
    for (const auto& summary : embed::summarize_athletes(athletes))
        vectors.push_back(embed::athlete_vector(out.codebook, summary));
    if (vectors.size() < 2)
        throw insufficient_data("pipeline needs at least 2 athletes for PCA");
    pca::Covariance cov = pca::covariance(vectors);
    pca::EigenDecomposition eig = pca::eigen_sym(cov.c);
    out.projection = pca::projection(eig, cov.mean, cfg.pca_k);
    out.explained_variance = pca::explained_variance(eig, cfg.pca_k);

    out.countries.resize(panel.countries.size());
    run_indexed(panel.countries.size(), cfg.jobs, [&](std::size_t ci) {
        CountrySeries series;
        series.noc = panel.countries[ci];
        series.team_history = Matrix(T, 50);
        for (std::size_t yi = 0; yi < T; ++yi) {
            const ingest::PanelEntry& entry = panel.entry(ci, yi);
            int t = entry.games_index;
            Matrix athlete_block = statematrix::accumulate_athletes(
                series.noc, t, athletes, out.codebook, out.projection, out.sports,
                cfg.window);
            Matrix team_block = embed::team_matrix(out.codebook, entry.tally);
            bool hosts_next = false;
            if (yi + 1 < T) hosts_next = panel.games[yi + 1].host_noc == series.noc;
            else if (!cfg.next_host.empty()) hosts_next = cfg.next_host == series.noc;
            series.states.push_back(statematrix::assemble(
                athlete_block, team_block, statematrix::host_row(hosts_next)));
            series.team_history.set_row(yi, flatten(team_block));
            series.years.push_back(entry.year);
            series.tallies.push_back(entry.tally);
            series.total_medals += entry.tally.gold + entry.tally.silver + entry.tally.bronze;
        }
        out.countries[ci] = std::move(series);
    });
    return out;
}

/// Training sequences: input X_t, target the true team embedding of t+1.
inline std::vector<lstm::Sequence> training_sequences(const Prepared& prepared) {
    std::vector<lstm::Sequence> out;
    for (const auto& series : prepared.countries) {
        const std::size_t T = series.states.size();
        if (T < 2) continue;
        lstm::Sequence seq;
        seq.tag = series.noc;
        for (std::size_t t = 0; t + 1 < T; ++t) {
            seq.inputs.push_back(flatten(series.states[t]));
            seq.targets.push_back(series.team_history.row(t + 1));
        }
        out.push_back(std::move(seq));
    }
    if (out.empty()) throw insufficient_data("no country has enough history to train");
    return out;
}

inline lstm::TrainResult fit_lstm(const Prepared& prepared, const PipelineConfig& cfg) {
    lstm::TrainConfig tc = cfg.lstm_cfg;
    tc.seed = cfg.seed;
    return lstm::train(training_sequences(prepared), tc,
                       statematrix::kStateRows * statematrix::kStateCols, 50);
}

/// ARIMA one-step forecast of team-history row `target` (0-based) from the
/// rows before it, reshaped to the 10x5 block. Returns nothing when the
/// available history is too short to fit.
inline std::optional<Matrix> arima_team_forecast(const CountrySeries& series,
                                                 std::size_t target,
                                                 const PipelineConfig& cfg) {
    if (target < 8) return std::nullopt;
    Matrix history(target, 50);
    for (std::size_t r = 0; r < target; ++r)
        history.set_row(r, series.team_history.row(r));
    try {
        return arima::fit_channelwise(history, cfg.arima_d, cfg.arima_max_p,
                                      cfg.arima_max_q, cfg.arima_use_bic).predicted;
    } catch (const Error&) {
        return std::nullopt;
    }
}

/// Predicted team embedding for step prefix_len + 1, from inputs
/// X_1..X_{prefix_len}. In the hybrid wiring the team block of the final
/// input is replaced by the ARIMA forecast of that block's own step (fitted
/// on the rows before it); the ablated variant keeps the last known block.
/// Pass prefix_len = states.size() to forecast the next, unseen Games.
inline Vec predict_embedding(const CountrySeries& series, const lstm::LstmParams& params,
                             std::size_t prefix_len, const PipelineConfig& cfg) {
    if (prefix_len < 2 || prefix_len > series.states.size())
        throw range_error("predict_embedding: prefix length out of range");
    std::vector<Matrix> inputs(
        series.states.begin(),
        series.states.begin() + static_cast<std::ptrdiff_t>(prefix_len));
    if (cfg.use_arima) {
        if (auto block = arima_team_forecast(series, prefix_len - 1, cfg))
            statematrix::replace_team_block(inputs.back(), *block);
    }
    return lstm::predict_next(params, inputs);
}

struct Evaluation {
    double rmse = 0.0, mae = 0.0;    // embedding space, stacked over countries
    double interval_accuracy = 0.0;  // true medal counts inside decoded intervals
    std::size_t countries = 0;
    std::size_t hits = 0, checks = 0;
};

/// Leave-last-out evaluation: predict the final Games' team embedding for
/// every country with enough history, score against the truth in embedding
/// space, and count medal-interval hits after the KNN decode. The final
/// state never enters the inputs, so its true team block cannot leak in.
inline Evaluation evaluate_last_step(const Prepared& prepared,
                                     const lstm::LstmParams& params,
                                     const PipelineConfig& cfg) {
    std::vector<Vec> predictions_store(prepared.countries.size());
    std::vector<char> usable(prepared.countries.size(), 0);
    run_indexed(prepared.countries.size(), cfg.jobs, [&](std::size_t ci) {
        const CountrySeries& series = prepared.countries[ci];
        if (series.states.size() < 3) return;
        predictions_store[ci] =
            predict_embedding(series, params, series.states.size() - 1, cfg);
        usable[ci] = 1;
    });

    std::vector<Vec> predictions, truths;
    Evaluation eval;
    for (std::size_t ci = 0; ci < prepared.countries.size(); ++ci) {
        if (!usable[ci]) continue;
        const CountrySeries& series = prepared.countries[ci];
        const std::size_t last = series.states.size() - 1;
        predictions.push_back(predictions_store[ci]);
        truths.push_back(series.team_history.row(last));

        predict::DecodedTeam decoded =
            predict::decode_team(predictions_store[ci], prepared.codebook, cfg.knn_k);
        const ingest::MedalTally& truth = series.tallies[last];
        const std::pair<const predict::PredictionInterval*, int> checks[3] = {
            {&decoded.gold, truth.gold},
            {&decoded.silver, truth.silver},
            {&decoded.bronze, truth.bronze}};
        for (const auto& [interval, actual] : checks) {
            ++eval.checks;
            if (actual >= interval->lo && actual <= interval->hi) ++eval.hits;
        }
        ++eval.countries;
    }
    if (predictions.empty())
        throw insufficient_data("evaluate_last_step: no country has enough history");

    Matrix pred_m(predictions.size(), 50), truth_m(predictions.size(), 50);
    for (std::size_t r = 0; r < predictions.size(); ++r) {
        pred_m.set_row(r, predictions[r]);
        truth_m.set_row(r, truths[r]);
    }
    eval.rmse = lstm::loss_rmse(pred_m, truth_m);
    eval.mae = lstm::loss_mae(pred_m, truth_m);
    eval.interval_accuracy =
        eval.checks ? static_cast<double>(eval.hits) / static_cast<double>(eval.checks) : 0.0;
    return eval;
}

/// Note: the prediction target here is one step past the data, so the
/// team block of the last input is ARIMA-forecast in hybrid mode.
struct CountryForecast {
    std::string noc;
    int year = 0;
    Vec embedding;
    predict::DecodedTeam decoded;
};

inline std::vector<CountryForecast> forecast_next_games(const Prepared& prepared,
                                                        const lstm::LstmParams& params,
                                                        const PipelineConfig& cfg) {
    int next_year = prepared.held_years.back() +
                    (prepared.held_years.size() > 1
                         ? prepared.held_years.back() - prepared.held_years[prepared.held_years.size() - 2]
                         : 4);
    std::vector<CountryForecast> out(prepared.countries.size());
    run_indexed(prepared.countries.size(), cfg.jobs, [&](std::size_t ci) {
        const CountrySeries& series = prepared.countries[ci];
        CountryForecast fc;
        fc.noc = series.noc;
        fc.year = next_year;
        if (series.states.size() >= 2) {
            fc.embedding = predict_embedding(series, params, series.states.size(), cfg);
            fc.decoded = predict::decode_team(fc.embedding, prepared.codebook, cfg.knn_k);
        }
        out[ci] = std::move(fc);
    });
    std::vector<CountryForecast> filtered;
    for (auto& fc : out)
        if (!fc.embedding.empty()) filtered.push_back(std::move(fc));
    return filtered;
}

/// First-medal candidates: countries with zero career medals in the panel.
/// The probability is the best of the three medal columns, each scored by
/// the 0-vs-1 distance-ratio logistic.
inline std::vector<predict::FirstMedalResult> first_medal_report(
    const Prepared& prepared, const std::vector<CountryForecast>& forecasts,
    const PipelineConfig& cfg) {
    std::map<std::string, const CountrySeries*> by_noc;
    for (const auto& series : prepared.countries) by_noc[series.noc] = &series;

    std::vector<predict::FirstMedalResult> out;
    for (const auto& fc : forecasts) {
        const CountrySeries* series = by_noc.at(fc.noc);
        if (series->total_medals > 0) continue;
        Matrix m = reshape(fc.embedding, 10, 5);
        double best = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            auto r = predict::first_medal_probability(
                m.col(j),
                prepared.codebook.scalar_entries(embed::team_feature_names()[j]),
                cfg.logistic_slope);
            best = std::max(best, r.probability);
        }
        predict::FirstMedalResult res;
        res.noc = fc.noc;
        res.probability = best;
        res.predicted_first_medal = best > 0.5;
        out.push_back(res);
    }
    return out;
}

} // namespace medalcast::hybrid
