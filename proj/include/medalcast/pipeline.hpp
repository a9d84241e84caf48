#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medalcast/analytics.hpp"
#include "medalcast/csv.hpp"
#include "medalcast/error.hpp"
#include "medalcast/hybrid.hpp"
#include "medalcast/ingest.hpp"

#include "json.hpp"

namespace medalcast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// Flat run configuration; a JSON config file mirrors these keys and CLI
/// flags override file values.
struct RunConfig {
    std::string athletes_path;
    std::string tallies_path;
    std::string hosts_path;
    std::string registry_path;
    std::string sports_path;
    std::string out_dir = "out";

    std::uint64_t seed = 42;
    std::size_t pca_k = 5;
    int window = 5;
    int arima_d = 1;
    int arima_max_p = 3;
    int arima_max_q = 3;
    bool use_bic = true;
    int lstm_epochs = 500;
    std::size_t lstm_hidden = 32;
    double lstm_learning_rate = 1e-3;
    double lstm_grad_clip = 5.0;
    double lstm_init_scale = 0.08;
    bool no_forget_bias = false;
    std::size_t knn_k = 2;
    double logistic_slope = 5.0;
    bool use_arima = true;
    std::string next_host;
    int jobs = 1;
    std::string emit_clean;  // optional extra cleaned-panel dump path
    std::string dump_states; // optional per-(country, t) state matrix dump dir

    static RunConfig from_json(const json& j) {
        RunConfig c;
        auto get = [&j](const char* key, auto& slot) {
            if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
        };
        get("athletes", c.athletes_path);
        get("tallies", c.tallies_path);
        get("hosts", c.hosts_path);
        get("registry", c.registry_path);
        get("sports", c.sports_path);
        get("out", c.out_dir);
        get("seed", c.seed);
        get("pca_k", c.pca_k);
        get("window", c.window);
        get("arima_d", c.arima_d);
        get("arima_max_p", c.arima_max_p);
        get("arima_max_q", c.arima_max_q);
        get("use_bic", c.use_bic);
        get("lstm_epochs", c.lstm_epochs);
        get("lstm_hidden", c.lstm_hidden);
        get("lstm_learning_rate", c.lstm_learning_rate);
        get("lstm_grad_clip", c.lstm_grad_clip);
        get("lstm_init_scale", c.lstm_init_scale);
        get("no_forget_bias", c.no_forget_bias);
        get("knn_k", c.knn_k);
        get("logistic_slope", c.logistic_slope);
        get("use_arima", c.use_arima);
        get("next_host", c.next_host);
        get("jobs", c.jobs);
        get("emit_clean", c.emit_clean);
        get("dump_states", c.dump_states);
        return c;
    }

    json to_json() const {
        return json{{"athletes", athletes_path},
                    {"tallies", tallies_path},
                    {"hosts", hosts_path},
                    {"registry", registry_path},
                    {"sports", sports_path},
                    {"out", out_dir},
                    {"seed", seed},
                    {"pca_k", pca_k},
                    {"window", window},
                    {"arima_d", arima_d},
                    {"arima_max_p", arima_max_p},
                    {"arima_max_q", arima_max_q},
                    {"use_bic", use_bic},
                    {"lstm_epochs", lstm_epochs},
                    {"lstm_hidden", lstm_hidden},
                    {"lstm_learning_rate", lstm_learning_rate},
                    {"lstm_grad_clip", lstm_grad_clip},
                    {"lstm_init_scale", lstm_init_scale},
                    {"no_forget_bias", no_forget_bias},
                    {"knn_k", knn_k},
                    {"logistic_slope", logistic_slope},
                    {"use_arima", use_arima},
                    {"next_host", next_host},
                    {"jobs", jobs},
                    {"emit_clean", emit_clean},
                    {"dump_states", dump_states}};
    }

    hybrid::PipelineConfig to_pipeline() const {
        hybrid::PipelineConfig p;
        p.seed = seed;
        p.pca_k = pca_k;
        p.window.window = window;
        p.arima_d = arima_d;
        p.arima_max_p = arima_max_p;
        p.arima_max_q = arima_max_q;
        p.arima_use_bic = use_bic;
        p.lstm_cfg.epochs = lstm_epochs;
        p.lstm_cfg.hidden_dim = lstm_hidden;
        p.lstm_cfg.learning_rate = lstm_learning_rate;
        p.lstm_cfg.grad_clip = lstm_grad_clip;
        p.lstm_cfg.init_scale = lstm_init_scale;
        p.lstm_cfg.forget_bias = !no_forget_bias;
        p.lstm_cfg.seed = seed;
        p.knn_k = knn_k;
        p.logistic_slope = logistic_slope;
        p.use_arima = use_arima;
        p.next_host = next_host;
        p.jobs = jobs;
        return p;
    }
};

// ---------------------------------------------------------------------------
// Artifact bookkeeping
// ---------------------------------------------------------------------------

inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot hash '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw io_error("failed writing '" + path + "'");
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw state_error("missing artifact '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw schema_error("cannot parse JSON '" + path + "': " + e.what());
    }
    return j;
}

/// Rewrites the manifest after a command: every known artifact with its
/// content hash, keys sorted, so identical runs produce identical bytes.
inline void update_manifest(const std::string& out_dir,
                            const std::vector<std::string>& new_files) {
    fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    json artifacts = json::object();
    if (fs::exists(manifest_path)) {
        json old = read_json(manifest_path.string());
        if (old.contains("artifacts")) artifacts = old.at("artifacts");
    }
    for (const auto& f : new_files) {
        std::string rel = fs::relative(f, out_dir).string();
        artifacts[rel] = file_hash(f);
    }
    write_json(manifest_path.string(), json{{"artifacts", artifacts}});
}

// ---------------------------------------------------------------------------
// Shared loading
// ---------------------------------------------------------------------------

struct LoadedInputs {
    ingest::NocRegistry registry;
    ingest::AthleteLoad athletes;
    ingest::TallyLoad tallies;
    std::vector<ingest::GamesRecord> hosts;
    std::vector<std::string> sport_names;
};

inline std::vector<std::string> load_sport_names(const std::string& path) {
    CsvTable t = read_csv(path);
    std::size_t col = t.column("sport");
    std::vector<std::string> names;
    for (const auto& row : t.rows) names.push_back(row[col]);
    if (names.size() != statematrix::kSportRows)
        throw schema_error("sport vocabulary must list " +
                           std::to_string(statematrix::kSportRows) + " sports, found " +
                           std::to_string(names.size()));
    return names;
}

inline LoadedInputs load_inputs(const RunConfig& cfg) {
    LoadedInputs in;
    in.registry = ingest::NocRegistry::load(cfg.registry_path);
    in.athletes = ingest::load_athletes(cfg.athletes_path, in.registry);
    in.tallies = ingest::load_tallies(cfg.tallies_path, in.registry);
    in.hosts = ingest::load_hosts(cfg.hosts_path, in.registry);
    in.sport_names = load_sport_names(cfg.sports_path);
    return in;
}

// ---------------------------------------------------------------------------
// ingest command
// ---------------------------------------------------------------------------

inline std::vector<std::vector<std::string>> panel_rows(const ingest::Panel& panel) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t ci = 0; ci < panel.countries.size(); ++ci)
        for (std::size_t yi = 0; yi < panel.held_years.size(); ++yi) {
            const ingest::PanelEntry& e = panel.entry(ci, yi);
            rows.push_back({e.noc, std::to_string(e.year), std::to_string(e.games_index),
                            std::to_string(e.tally.gold), std::to_string(e.tally.silver),
                            std::to_string(e.tally.bronze), std::to_string(e.tally.athletes),
                            std::to_string(e.tally.events), e.has_tally ? "1" : "0",
                            std::to_string(e.athlete_rows.size())});
        }
    return rows;
}

inline const std::vector<std::string>& panel_header() {
    static const std::vector<std::string> h = {"noc",      "year",   "games_index", "gold",
                                               "silver",   "bronze", "athletes",    "events",
                                               "has_tally", "athlete_count"};
    return h;
}

inline int cmd_ingest(const RunConfig& cfg) {
    LoadedInputs in = load_inputs(cfg);
    ingest::Panel panel =
        ingest::build_panel(in.athletes.records, in.tallies.tallies, in.hosts);

    fs::create_directories(cfg.out_dir);
    fs::path out(cfg.out_dir);

    std::vector<std::vector<std::string>> athlete_rows;
    for (const auto& a : in.athletes.records)
        athlete_rows.push_back({a.name, a.noc, a.sex == ingest::Sex::F ? "F" : "M",
                                std::to_string(a.edition), std::to_string(a.year), a.sport,
                                a.event, ingest::medal_name(a.medal)});
    write_csv((out / "cleaned_athletes.csv").string(),
              {"name", "noc", "sex", "edition", "year", "sport", "event", "medal"},
              athlete_rows);

    std::vector<std::vector<std::string>> tally_rows;
    for (const auto& t : in.tallies.tallies)
        tally_rows.push_back({t.noc, std::to_string(t.year), std::to_string(t.gold),
                              std::to_string(t.silver), std::to_string(t.bronze),
                              std::to_string(t.athletes), std::to_string(t.events)});
    write_csv((out / "cleaned_tallies.csv").string(),
              {"noc", "year", "gold", "silver", "bronze", "athletes", "events"}, tally_rows);

    std::vector<std::vector<std::string>> host_rows;
    for (const auto& g : in.hosts)
        host_rows.push_back({std::to_string(g.year), g.host_noc, g.held ? "1" : "0"});
    write_csv((out / "cleaned_hosts.csv").string(), {"year", "host_noc", "held"}, host_rows);

    write_csv((out / "panel.csv").string(), panel_header(), panel_rows(panel));
    if (!cfg.emit_clean.empty())
        write_csv(cfg.emit_clean, panel_header(), panel_rows(panel));

    json report;
    report["athletes_loaded"] = in.athletes.records.size();
    report["athletes_dropped"] = in.athletes.dropped;
    report["tally_rows"] = in.tallies.tallies.size();
    report["tally_range_warnings"] = in.tallies.range_warnings;
    std::size_t held = 0;
    for (const auto& g : in.hosts)
        if (g.held) ++held;
    report["games_total"] = in.hosts.size();
    report["games_held"] = held;
    report["countries"] = panel.countries;
    write_json((out / "ingest_report.json").string(), report);

    update_manifest(cfg.out_dir,
                    {(out / "cleaned_athletes.csv").string(),
                     (out / "cleaned_tallies.csv").string(),
                     (out / "cleaned_hosts.csv").string(), (out / "panel.csv").string(),
                     (out / "ingest_report.json").string()});
    return 0;
}

// ---------------------------------------------------------------------------
// train command
// ---------------------------------------------------------------------------

struct CleanedData {
    std::vector<ingest::AthleteRecord> athletes;
    std::vector<ingest::MedalTally> tallies;
    std::vector<ingest::GamesRecord> hosts;
    std::vector<std::string> sport_names;
    ingest::Panel panel;
};

inline CleanedData load_cleaned(const RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    for (const char* f : {"cleaned_athletes.csv", "cleaned_tallies.csv", "cleaned_hosts.csv"})
        if (!fs::exists(out / f))
            throw state_error("missing ingest artifact '" + (out / f).string() +
                              "'; run `medalcast ingest` first");
    ingest::NocRegistry registry = ingest::NocRegistry::load(cfg.registry_path);
    CleanedData data;
    data.athletes = ingest::load_athletes((out / "cleaned_athletes.csv").string(), registry)
                        .records;
    data.tallies = ingest::load_tallies((out / "cleaned_tallies.csv").string(), registry)
                       .tallies;
    data.hosts = ingest::load_hosts((out / "cleaned_hosts.csv").string(), registry);
    data.sport_names = load_sport_names(cfg.sports_path);
    data.panel = ingest::build_panel(data.athletes, data.tallies, data.hosts);
    return data;
}

inline void dump_state_matrices(const hybrid::Prepared& prepared, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& series : prepared.countries)
        for (std::size_t t = 0; t < series.states.size(); ++t) {
            std::vector<std::vector<std::string>> rows;
            const Matrix& state = series.states[t];
            for (std::size_t r = 0; r < state.rows(); ++r) {
                std::vector<std::string> row;
                for (std::size_t c = 0; c < state.cols(); ++c)
                    row.push_back(format_double(state.at(r, c), 12));
                rows.push_back(std::move(row));
            }
            write_csv((fs::path(dir) /
                       (series.noc + "_t" + std::to_string(t + 1) + ".csv")).string(),
                      {"c0", "c1", "c2", "c3", "c4"}, rows);
        }
}

inline int cmd_train(const RunConfig& cfg) {
    CleanedData data = load_cleaned(cfg);
    hybrid::PipelineConfig pcfg = cfg.to_pipeline();
    hybrid::Prepared prepared =
        hybrid::prepare(data.panel, data.athletes, data.sport_names, pcfg);
    lstm::TrainResult trained = hybrid::fit_lstm(prepared, pcfg);

    fs::path out(cfg.out_dir);
    write_json((out / "codebook.json").string(), prepared.codebook.to_json());

    json proj = pca::projection_to_json(prepared.projection);
    proj["explained_variance"] = prepared.explained_variance;
    write_json((out / "projection.json").string(), proj);

    json lstm_ckpt = lstm::params_to_json(trained.params);
    lstm_ckpt["use_arima"] = cfg.use_arima;
    write_json((out / "lstm.json").string(), lstm_ckpt);

    std::vector<std::vector<std::string>> trace_rows;
    for (std::size_t e = 0; e < trained.loss_trace.size(); ++e)
        trace_rows.push_back({std::to_string(e), format_double(trained.loss_trace[e], 12)});
    write_csv((out / "loss_trace.csv").string(), {"epoch", "mse"}, trace_rows);

    // Channelwise ARIMA models fitted on each country's full team history,
    // ready to forecast the next Games; plus per-channel diagnostics.
    json arima_models = json::object();
    std::vector<std::vector<std::string>> diag_rows;
    for (const auto& series : prepared.countries) {
        if (series.team_history.rows() < 8) continue;
        json country_models = json::array();
        try {
            arima::ChannelwiseForecast fc = arima::fit_channelwise(
                series.team_history, cfg.arima_d, cfg.arima_max_p, cfg.arima_max_q,
                cfg.use_bic);
            for (const auto& diag : fc.channels) {
                diag_rows.push_back({series.noc, std::to_string(diag.channel),
                                     std::to_string(diag.order.p),
                                     std::to_string(diag.order.d),
                                     std::to_string(diag.order.q),
                                     format_double(diag.aic, 12),
                                     diag.fallback ? "1" : "0"});
                Vec col = series.team_history.col(diag.channel);
                if (!diag.fallback) {
                    arima::ArimaModel m = arima::fit_css(col, diag.order);
                    country_models.push_back(arima::model_to_json(m));
                } else {
                    country_models.push_back(json{{"fallback", true},
                                                  {"last_value", col.back()}});
                }
            }
        } catch (const Error& e) {
            country_models = json{{"error", e.what()}};
        }
        arima_models[series.noc] = std::move(country_models);
    }
    write_json((out / "arima_models.json").string(), arima_models);
    write_csv((out / "arima_diagnostics.csv").string(),
              {"noc", "channel", "p", "d", "q", "aic", "fallback"}, diag_rows);

    if (!cfg.dump_states.empty()) dump_state_matrices(prepared, cfg.dump_states);

    update_manifest(cfg.out_dir,
                    {(out / "codebook.json").string(), (out / "projection.json").string(),
                     (out / "lstm.json").string(), (out / "loss_trace.csv").string(),
                     (out / "arima_models.json").string(),
                     (out / "arima_diagnostics.csv").string()});
    return 0;
}

// ---------------------------------------------------------------------------
// predict command
// ---------------------------------------------------------------------------

struct Checkpoints {
    embed::EmbeddingCodebook codebook;
    pca::ProjectionMatrix projection;
    lstm::LstmParams params;
    bool use_arima = true;
};

inline Checkpoints load_checkpoints(const RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    Checkpoints ck;
    ck.codebook = embed::EmbeddingCodebook::from_json(read_json((out / "codebook.json").string()));
    ck.projection = pca::projection_from_json(read_json((out / "projection.json").string()));
    json lstm_ckpt = read_json((out / "lstm.json").string());
    ck.params = lstm::params_from_json(lstm_ckpt);
    if (lstm_ckpt.contains("use_arima")) ck.use_arima = lstm_ckpt.at("use_arima").get<bool>();
    return ck;
}

/// Rebuilds the per-country state sequences against checkpointed codebook
/// and projection (nothing is refit here).
inline hybrid::Prepared prepare_from_checkpoints(const CleanedData& data,
                                                 const Checkpoints& ck,
                                                 const hybrid::PipelineConfig& cfg) {
    hybrid::Prepared out;
    out.codebook = ck.codebook;
    out.projection = ck.projection;
    out.sports = statematrix::SportIndex::from_names(data.sport_names);
    out.held_years = data.panel.held_years;
    const std::size_t T = data.panel.held_years.size();
    out.countries.resize(data.panel.countries.size());
    hybrid::run_indexed(data.panel.countries.size(), cfg.jobs, [&](std::size_t ci) {
        hybrid::CountrySeries series;
        series.noc = data.panel.countries[ci];
        series.team_history = Matrix(T, 50);
        for (std::size_t yi = 0; yi < T; ++yi) {
            const ingest::PanelEntry& entry = data.panel.entry(ci, yi);
            Matrix athlete_block = statematrix::accumulate_athletes(
                series.noc, entry.games_index, data.athletes, out.codebook, out.projection,
                out.sports, cfg.window);
            Matrix team_block = embed::team_matrix(out.codebook, entry.tally);
            bool hosts_next = false;
            if (yi + 1 < T) hosts_next = data.panel.games[yi + 1].host_noc == series.noc;
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

inline int cmd_predict(const RunConfig& cfg) {
    CleanedData data = load_cleaned(cfg);
    Checkpoints ck = load_checkpoints(cfg);
    hybrid::PipelineConfig pcfg = cfg.to_pipeline();
    pcfg.use_arima = ck.use_arima && cfg.use_arima;
    hybrid::Prepared prepared = prepare_from_checkpoints(data, ck, pcfg);

    std::vector<hybrid::CountryForecast> forecasts =
        hybrid::forecast_next_games(prepared, ck.params, pcfg);

    fs::path out(cfg.out_dir);
    std::vector<std::vector<std::string>> pred_rows;
    for (const auto& fc : forecasts)
        pred_rows.push_back({fc.noc, std::to_string(fc.year),
                             std::to_string(fc.decoded.gold.lo),
                             std::to_string(fc.decoded.gold.hi),
                             std::to_string(fc.decoded.silver.lo),
                             std::to_string(fc.decoded.silver.hi),
                             std::to_string(fc.decoded.bronze.lo),
                             std::to_string(fc.decoded.bronze.hi),
                             format_double(fc.decoded.medal_total_mid(), 12)});
    write_csv((out / "predictions.csv").string(),
              {"noc", "year", "gold_lo", "gold_hi", "silver_lo", "silver_hi", "bronze_lo",
               "bronze_hi", "total_mid"},
              pred_rows);

    std::vector<std::vector<std::string>> fm_rows;
    for (const auto& r : hybrid::first_medal_report(prepared, forecasts, pcfg))
        fm_rows.push_back({r.noc, format_double(r.probability, 12),
                           r.predicted_first_medal ? "1" : "0"});
    write_csv((out / "first_medal.csv").string(), {"noc", "probability", "first_medal"},
              fm_rows);

    std::vector<std::vector<std::string>> host_rows;
    std::vector<std::vector<std::string>> importance_rows;
    for (const auto& series : prepared.countries) {
        if (series.states.size() < 2) continue;
        predict::HostEffect he =
            predict::host_effect(ck.params, series.states, prepared.codebook, prepared.sports);
        host_rows.push_back({series.noc, "__aggregate__",
                             format_double(he.baseline_total, 12),
                             format_double(he.hosting_total, 12),
                             format_double(he.aggregate_delta_pct, 12)});
        for (std::size_t i = 0; i < std::min<std::size_t>(he.sports.size(), 5); ++i)
            host_rows.push_back({series.noc, he.sports[i].sport,
                                 format_double(he.sports[i].baseline, 12),
                                 format_double(he.sports[i].hosting, 12),
                                 format_double(he.sports[i].delta_pct, 12)});

        auto ranked = predict::sport_importance(series.states.back(), prepared.sports);
        for (std::size_t i = 0; i < ranked.size(); ++i)
            importance_rows.push_back({series.noc, std::to_string(i + 1), ranked[i].sport,
                                       format_double(ranked[i].value, 12)});
    }
    write_csv((out / "host_effect.csv").string(),
              {"noc", "sport", "baseline", "hosting", "delta_pct"}, host_rows);
    write_csv((out / "sport_importance.csv").string(), {"noc", "rank", "sport", "vp"},
              importance_rows);

    update_manifest(cfg.out_dir,
                    {(out / "predictions.csv").string(), (out / "first_medal.csv").string(),
                     (out / "host_effect.csv").string(),
                     (out / "sport_importance.csv").string()});
    return 0;
}

// ---------------------------------------------------------------------------
// analyze subcommands
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
    std::string input;       // input CSV for runs/spearman/coach/gender
    std::string game;        // JSON game description for shapley
    std::string coach_years; // "1984-1996,2001" ranges
    std::string medal_series;
    double vp = -1.0;
    double n11 = -1, n12 = -1, n21 = -1, n22 = -1;
};

inline std::set<int> parse_year_ranges(const std::string& spec) {
    std::set<int> years;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        std::string token = spec.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
        std::size_t dash = token.find('-');
        if (dash == std::string::npos) {
            years.insert(ingest::parse_int(token, "year"));
        } else {
            int from = ingest::parse_int(token.substr(0, dash), "year range start");
            int to = ingest::parse_int(token.substr(dash + 1), "year range end");
            for (int y = from; y <= to; ++y) years.insert(y);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return years;
}

inline Vec read_column(const CsvTable& t, const std::string& name) {
    std::size_t col = t.column(name);
    Vec out;
    for (const auto& row : t.rows) out.push_back(std::stod(row[col]));
    return out;
}

inline int cmd_analyze_runs(const RunConfig& cfg, const AnalyzeOptions& opt) {
    if (opt.input.empty()) throw range_error("analyze runs requires --input");
    CsvTable t = read_csv(opt.input);
    Vec values = read_column(t, "value");
    bool already_binary = true;
    for (double v : values)
        if (v != 0.0 && v != 1.0) already_binary = false;
    std::vector<int> seq;
    if (already_binary) {
        for (double v : values) seq.push_back(static_cast<int>(v));
    } else {
        seq = analytics::binarize_by_mean(values);
    }
    analytics::RunsTestResult r = analytics::runs_test(seq);
    json report;
    report["input"] = opt.input;
    report["binarized"] = !already_binary;
    report["n1"] = r.n1;
    report["n2"] = r.n2;
    report["runs"] = r.runs;
    report["expected_runs"] = r.expected_runs;
    report["variance_runs"] = r.variance_runs;
    report["z"] = r.z;
    report["p_value"] = r.p_value;
    report["non_random_at_10pct"] = r.p_value < 0.10;
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_json((out / "analysis_runs.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_runs.json").string()});
    return 0;
}

inline int cmd_analyze_chi2(const RunConfig& cfg, const AnalyzeOptions& opt) {
    if (opt.n11 < 0 || opt.n12 < 0 || opt.n21 < 0 || opt.n22 < 0)
        throw range_error("analyze chi2 requires --n11 --n12 --n21 --n22");
    analytics::ChiSquareResult r =
        analytics::chi_square_2x2({opt.n11, opt.n12, opt.n21, opt.n22});
    json report;
    report["observed"] = {{opt.n11, opt.n12}, {opt.n21, opt.n22}};
    report["expected"] = {{r.expected[0][0], r.expected[0][1]},
                          {r.expected[1][0], r.expected[1][1]}};
    report["statistic"] = r.statistic;
    report["p_value_two_sided"] = r.p_value;
    report["p_value_one_sided"] = r.p_value_one_sided;
    report["low_expected_warning"] = r.low_expected_warning;
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_json((out / "analysis_chi2.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_chi2.json").string()});
    return 0;
}

inline int cmd_analyze_spearman(const RunConfig& cfg, const AnalyzeOptions& opt) {
    if (opt.input.empty()) throw range_error("analyze spearman requires --input");
    CsvTable t = read_csv(opt.input);
    Vec x = read_column(t, "x"), y = read_column(t, "y");
    double rho = analytics::spearman(x, y);
    json report;
    report["input"] = opt.input;
    report["n"] = x.size();
    report["rho"] = rho;
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_json((out / "analysis_spearman.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_spearman.json").string()});
    return 0;
}

inline int cmd_analyze_shapley(const RunConfig& cfg, const AnalyzeOptions& opt) {
    if (opt.game.empty()) throw range_error("analyze shapley requires --game");
    json game = read_json(opt.game);
    std::vector<std::string> features = game.at("features").get<std::vector<std::string>>();
    const json& values = game.at("values");

    analytics::ShapleyConfig scfg;
    scfg.feature_names = features;
    scfg.value = [&features, &values](const std::vector<bool>& mask) {
        std::string key;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) key += (key.empty() ? "" : ",") + features[i];
        if (!values.contains(key))
            throw std::runtime_error("game table has no value for subset {" + key + "}");
        return values.at(key).get<double>();
    };
    std::vector<double> phi = analytics::shapley_exact(scfg);

    double sum = 0.0;
    for (double v : phi) sum += v;
    std::string full_key;
    for (const auto& f : features) full_key += (full_key.empty() ? "" : ",") + f;

    json report;
    report["features"] = features;
    report["shapley_values"] = phi;
    report["efficiency_sum"] = sum;
    report["grand_minus_empty"] =
        values.at(full_key).get<double>() - values.at("").get<double>();
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_json((out / "analysis_shapley.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_shapley.json").string()});
    return 0;
}

inline int cmd_analyze_coach(const RunConfig& cfg, const AnalyzeOptions& opt) {
    json report;
    if (!opt.input.empty()) {
        if (opt.coach_years.empty())
            throw range_error("analyze coach with --input also needs --coach-years");
        CsvTable t = read_csv(opt.input);
        Vec pred = read_column(t, "predicted"), actual = read_column(t, "actual");
        std::vector<int> years;
        std::size_t ycol = t.column("year");
        for (const auto& row : t.rows) years.push_back(ingest::parse_int(row[ycol], "year"));
        analytics::CoachEffectResult r = analytics::coach_effect_rmse(
            pred, actual, years, parse_year_ranges(opt.coach_years));
        report["rmse_coach"] = r.rmse_coach;
        report["rmse_base"] = r.rmse_base;
        report["effect"] = r.effect;
    }
    if (!opt.medal_series.empty()) {
        CsvTable t = read_csv(opt.medal_series);
        Vec medals = read_column(t, "medals");
        double e_coach = analytics::coach_effect_coefficient(medals);
        report["e_coach"] = e_coach;
        if (opt.vp >= 0.0)
            report["index_coach"] = analytics::coach_impact_index(opt.vp, e_coach);
    }
    if (report.empty())
        throw range_error("analyze coach needs --input and/or --medal-series");
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_json((out / "analysis_coach.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_coach.json").string()});
    return 0;
}

inline int cmd_analyze_gender(const RunConfig& cfg, const AnalyzeOptions& opt) {
    std::string path = opt.input;
    ingest::NocRegistry registry = ingest::NocRegistry::load(cfg.registry_path);
    if (path.empty()) {
        path = (fs::path(cfg.out_dir) / "cleaned_athletes.csv").string();
        if (!fs::exists(path))
            throw state_error("missing '" + path + "'; run `medalcast ingest` or pass --input");
    }
    auto athletes = ingest::load_athletes(path, registry).records;
    analytics::GenderTrend trend = analytics::gender_trend(athletes);

    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : trend.rows)
        rows.push_back({std::to_string(r.year), std::to_string(r.male),
                        std::to_string(r.female),
                        r.ratio_defined ? format_double(r.ratio, 12) : "undefined"});
    write_csv((out / "analysis_gender.csv").string(), {"year", "male", "female", "ratio"},
              rows);
    json report;
    report["total_male"] = trend.total_male;
    report["total_female"] = trend.total_female;
    report["years"] = trend.rows.size();
    write_json((out / "analysis_gender.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_gender.csv").string(),
                                  (out / "analysis_gender.json").string()});
    return 0;
}

inline int cmd_analyze_ablate(const RunConfig& cfg) {
    CleanedData data = load_cleaned(cfg);
    hybrid::PipelineConfig pcfg = cfg.to_pipeline();
    hybrid::Prepared prepared =
        hybrid::prepare(data.panel, data.athletes, data.sport_names, pcfg);
    analytics::AblationResult r = analytics::ablation_run(prepared, pcfg);

    fs::path out(cfg.out_dir);
    write_csv((out / "analysis_ablation.csv").string(), {"variant", "rmse", "mae"},
              {{"hybrid", format_double(r.hybrid_rmse, 12), format_double(r.hybrid_mae, 12)},
               {"lstm_only", format_double(r.lstm_only_rmse, 12),
                format_double(r.lstm_only_mae, 12)}});
    json report;
    report["hybrid"] = {{"rmse", r.hybrid_rmse}, {"mae", r.hybrid_mae}};
    report["lstm_only"] = {{"rmse", r.lstm_only_rmse}, {"mae", r.lstm_only_mae}};
    write_json((out / "analysis_ablation.json").string(), report);
    update_manifest(cfg.out_dir, {(out / "analysis_ablation.csv").string(),
                                  (out / "analysis_ablation.json").string()});
    return 0;
}

inline int cmd_analyze_sensitivity(const RunConfig& cfg) {
    CleanedData data = load_cleaned(cfg);
    analytics::SensitivityInputs inputs{data.athletes, data.tallies, data.hosts,
                                        data.sport_names};
    hybrid::PipelineConfig pcfg = cfg.to_pipeline();
    analytics::SensitivityGrid grid = analytics::sensitivity_grid(inputs, pcfg);

    fs::path out(cfg.out_dir);
    std::vector<std::vector<std::string>> rows;
    json cells = json::array();
    for (const auto& row : grid)
        for (const auto& cell : row) {
            rows.push_back({format_double(cell.athlete_fraction, 4),
                            format_double(cell.history_fraction, 4),
                            cell.ok ? format_double(cell.accuracy, 12) : "error",
                            cell.note});
            cells.push_back(json{{"athlete_fraction", cell.athlete_fraction},
                                 {"history_fraction", cell.history_fraction},
                                 {"accuracy", cell.accuracy},
                                 {"ok", cell.ok},
                                 {"note", cell.note}});
        }
    write_csv((out / "analysis_sensitivity.csv").string(),
              {"athlete_fraction", "history_fraction", "accuracy", "note"}, rows);
    write_json((out / "analysis_sensitivity.json").string(), json{{"cells", cells}});
    update_manifest(cfg.out_dir, {(out / "analysis_sensitivity.csv").string(),
                                  (out / "analysis_sensitivity.json").string()});
    return 0;
}

} // namespace medalcast::pipeline
