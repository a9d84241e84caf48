// medalcast: hybrid forecasting pipeline for national medal counts.
//
//   medalcast ingest  --config run.json [--emit-clean panel.csv]
//   medalcast train   --config run.json [--no-arima]
//   medalcast predict --config run.json
//   medalcast analyze <runs|chi2|spearman|shapley|coach|gender|ablate|sensitivity> ...
//
// Exit codes: 0 success, 2 usage or I/O problem, 3 missing artifact,
// 4 numeric failure.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "medalcast/pipeline.hpp"

using medalcast::Error;
using medalcast::ErrorKind;
namespace pipeline = medalcast::pipeline;

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::State: return 3;
        case ErrorKind::Numeric:
        case ErrorKind::InsufficientData: return 4;
        default: return 2;
    }
}

struct CliFlags {
    std::string config_path;
    // Optional overrides; only applied when the flag was passed.
    std::string athletes, tallies, hosts, registry, sports, out, next_host, emit_clean,
        dump_states;
    std::int64_t seed = -1;
    int window = -1, epochs = -1, jobs = -1;
    double learning_rate = -1.0, logistic_slope = -1.0;
    std::size_t hidden = 0;
    bool no_arima = false;
    bool no_forget_bias = false;
    bool use_aic = false;
};

pipeline::RunConfig resolve_config(const CliFlags& flags) {
    pipeline::RunConfig cfg;
    if (!flags.config_path.empty())
        cfg = pipeline::RunConfig::from_json(pipeline::read_json(flags.config_path));
    if (!flags.athletes.empty()) cfg.athletes_path = flags.athletes;
    if (!flags.tallies.empty()) cfg.tallies_path = flags.tallies;
    if (!flags.hosts.empty()) cfg.hosts_path = flags.hosts;
    if (!flags.registry.empty()) cfg.registry_path = flags.registry;
    if (!flags.sports.empty()) cfg.sports_path = flags.sports;
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (!flags.next_host.empty()) cfg.next_host = flags.next_host;
    if (!flags.emit_clean.empty()) cfg.emit_clean = flags.emit_clean;
    if (!flags.dump_states.empty()) cfg.dump_states = flags.dump_states;
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.window > 0) cfg.window = flags.window;
    if (flags.epochs > 0) cfg.lstm_epochs = flags.epochs;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (flags.learning_rate > 0.0) cfg.lstm_learning_rate = flags.learning_rate;
    if (flags.logistic_slope > 0.0) cfg.logistic_slope = flags.logistic_slope;
    if (flags.hidden > 0) cfg.lstm_hidden = flags.hidden;
    if (flags.no_arima) cfg.use_arima = false;
    if (flags.no_forget_bias) cfg.no_forget_bias = true;
    if (flags.use_aic) cfg.use_bic = false;

    // Environment override wins over file and flags alike.
    if (const char* env_seed = std::getenv("MEDALCAST_SEED"))
        cfg.seed = static_cast<std::uint64_t>(std::stoull(env_seed));
    return cfg;
}

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--athletes", flags.athletes, "athletes CSV path");
    cmd->add_option("--tallies", flags.tallies, "medal tallies CSV path");
    cmd->add_option("--hosts", flags.hosts, "hosts CSV path");
    cmd->add_option("--registry", flags.registry, "NOC alias registry CSV path");
    cmd->add_option("--sports", flags.sports, "sport vocabulary CSV path");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--seed", flags.seed, "run seed (default 42)");
    cmd->add_option("--jobs", flags.jobs, "per-country parallelism (default 1)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid ARIMA-LSTM medal forecasting toolkit"};
    app.require_subcommand(1);

    CliFlags flags;
    pipeline::AnalyzeOptions analyze_opt;

    CLI::App* ingest = app.add_subcommand("ingest", "load and clean the input CSVs");
    add_common_flags(ingest, flags);
    ingest->add_option("--emit-clean", flags.emit_clean, "extra cleaned-panel CSV path");

    CLI::App* train = app.add_subcommand("train", "fit codebook, PCA, ARIMA and LSTM");
    add_common_flags(train, flags);
    train->add_option("--epochs", flags.epochs, "LSTM training epochs (default 500)");
    train->add_option("--hidden", flags.hidden, "LSTM hidden size (default 32)");
    train->add_option("--learning-rate", flags.learning_rate, "LSTM learning rate");
    train->add_option("--window", flags.window, "sliding window in Games (default 5)");
    train->add_option("--dump-states", flags.dump_states,
                      "dump per-(country, Games) state matrices to this directory");
    train->add_flag("--no-arima", flags.no_arima, "train the ablated (LSTM-only) variant");
    train->add_flag("--no-forget-bias", flags.no_forget_bias,
                    "initialize the forget-gate bias at 0 instead of 1");
    train->add_flag("--aic", flags.use_aic, "select ARIMA orders by AIC instead of BIC");

    CLI::App* predict = app.add_subcommand("predict", "decode forecasts from checkpoints");
    add_common_flags(predict, flags);
    predict->add_option("--next-host", flags.next_host,
                        "canonical NOC hosting the next Games");
    predict->add_option("--logistic-slope", flags.logistic_slope,
                        "first-medal logistic slope (default 5)");
    predict->add_flag("--no-arima", flags.no_arima,
                      "skip the ARIMA replacement at inference");

    CLI::App* analyze = app.add_subcommand("analyze", "statistical analysis suite");
    analyze->require_subcommand(1);

    CLI::App* a_runs = analyze->add_subcommand("runs", "Wald-Wolfowitz runs test");
    add_common_flags(a_runs, flags);
    a_runs->add_option("--input", analyze_opt.input, "CSV with a 'value' column");

    CLI::App* a_chi2 = analyze->add_subcommand("chi2", "2x2 chi-square test");
    add_common_flags(a_chi2, flags);
    a_chi2->add_option("--n11", analyze_opt.n11, "row 1, column 1 count");
    a_chi2->add_option("--n12", analyze_opt.n12, "row 1, column 2 count");
    a_chi2->add_option("--n21", analyze_opt.n21, "row 2, column 1 count");
    a_chi2->add_option("--n22", analyze_opt.n22, "row 2, column 2 count");

    CLI::App* a_spear = analyze->add_subcommand("spearman", "Spearman rank correlation");
    add_common_flags(a_spear, flags);
    a_spear->add_option("--input", analyze_opt.input, "CSV with 'x' and 'y' columns");

    CLI::App* a_shap = analyze->add_subcommand("shapley", "exact Shapley attribution");
    add_common_flags(a_shap, flags);
    a_shap->add_option("--game", analyze_opt.game,
                       "JSON game: {features: [...], values: {subset-key: value}}");

    CLI::App* a_coach = analyze->add_subcommand("coach", "coach effect metrics");
    add_common_flags(a_coach, flags);
    a_coach->add_option("--input", analyze_opt.input,
                        "CSV with 'year', 'predicted', 'actual' columns");
    a_coach->add_option("--coach-years", analyze_opt.coach_years,
                        "coach-period years, e.g. 1984-1996,2001-2016");
    a_coach->add_option("--medal-series", analyze_opt.medal_series,
                        "CSV with a 'medals' column for the effect coefficient");
    a_coach->add_option("--vp", analyze_opt.vp, "performance feature value V_p");

    CLI::App* a_gender = analyze->add_subcommand("gender", "medalist gender trend");
    add_common_flags(a_gender, flags);
    a_gender->add_option("--input", analyze_opt.input, "athletes CSV (default: cleaned)");

    CLI::App* a_ablate = analyze->add_subcommand("ablate", "hybrid vs LSTM-only comparison");
    add_common_flags(a_ablate, flags);
    a_ablate->add_option("--epochs", flags.epochs, "LSTM training epochs");
    a_ablate->add_option("--hidden", flags.hidden, "LSTM hidden size");
    a_ablate->add_option("--learning-rate", flags.learning_rate, "LSTM learning rate");

    CLI::App* a_sens = analyze->add_subcommand("sensitivity", "3x3 reduced-data grid");
    add_common_flags(a_sens, flags);
    a_sens->add_option("--epochs", flags.epochs, "LSTM training epochs");
    a_sens->add_option("--hidden", flags.hidden, "LSTM hidden size");
    a_sens->add_option("--learning-rate", flags.learning_rate, "LSTM learning rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        pipeline::RunConfig cfg = resolve_config(flags);
        if (ingest->parsed()) return pipeline::cmd_ingest(cfg);
        if (train->parsed()) return pipeline::cmd_train(cfg);
        if (predict->parsed()) return pipeline::cmd_predict(cfg);
        if (analyze->parsed()) {
            if (a_runs->parsed()) return pipeline::cmd_analyze_runs(cfg, analyze_opt);
            if (a_chi2->parsed()) return pipeline::cmd_analyze_chi2(cfg, analyze_opt);
            if (a_spear->parsed()) return pipeline::cmd_analyze_spearman(cfg, analyze_opt);
            if (a_shap->parsed()) return pipeline::cmd_analyze_shapley(cfg, analyze_opt);
            if (a_coach->parsed()) return pipeline::cmd_analyze_coach(cfg, analyze_opt);
            if (a_gender->parsed()) return pipeline::cmd_analyze_gender(cfg, analyze_opt);
            if (a_ablate->parsed()) return pipeline::cmd_analyze_ablate(cfg);
            if (a_sens->parsed()) return pipeline::cmd_analyze_sensitivity(cfg);
        }
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "medalcast: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "medalcast: " << e.what() << "\n";
        return 2;
    }
}
