// Acceptance suite: every release gate in one binary. Each criterion prints
// a single PASS/FAIL line; the process exits nonzero if any gate fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "medalcast/analytics.hpp"
#include "medalcast/pipeline.hpp"

#include "test_support.hpp"

using namespace medalcast;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void run_criterion(int index, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [ok, detail] = body();
        report(index, name, ok, detail);
    } catch (const std::exception& e) {
        report(index, name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --- shared synthetic panel for the ablation gate ---------------------------

struct SyntheticPanel {
    std::vector<ingest::AthleteRecord> athletes;
    std::vector<ingest::MedalTally> tallies;
    std::vector<ingest::GamesRecord> hosts;
    std::vector<std::string> sport_names;
};

std::vector<std::string> sports71() {
    static std::vector<std::string> names;
    if (names.empty()) {
        CsvTable t = read_csv(testsupport::data_path("sports.csv"));
        std::size_t col = t.column("sport");
        for (const auto& row : t.rows) names.push_back(row[col]);
    }
    return names;
}

/// Team-feature channels follow trend + AR(1) noise; the athlete block is a
/// nonlinear function of the medal path (medals only when the count jumps
/// above its own recent level).
SyntheticPanel make_synthetic_panel(std::uint64_t seed, std::size_t games = 14,
                                    std::size_t n_countries = 6) {
    SyntheticPanel panel;
    panel.sport_names = sports71();
    SplitMix64 rng = named_stream(seed, "acceptance/panel");

    for (std::size_t g = 0; g < games; ++g)
        panel.hosts.push_back({1968 + 4 * static_cast<int>(g),
                               "C" + std::to_string(g % n_countries), true});

    for (std::size_t ci = 0; ci < n_countries; ++ci) {
        std::string noc = "C" + std::to_string(ci);
        double base = 4.0 + 2.0 * static_cast<double>(ci);
        double slope = 0.5 + 0.1 * static_cast<double>(ci % 3);
        double dev = 0.0;
        double prev_count = base;
        for (std::size_t g = 0; g < games; ++g) {
            dev = 0.3 * dev + rng.normal() * 2.0;
            double level = base + slope * static_cast<double>(g) + dev;
            int count = std::max(0, static_cast<int>(std::lround(level)));

            ingest::MedalTally t;
            t.noc = noc;
            t.year = panel.hosts[g].year;
            t.gold = count;
            t.silver = std::max(0, count - 1);
            t.bronze = std::max(0, count - 2);
            t.athletes = 10 + count;
            t.events = std::min(12 + (count % 5), 47);
            panel.tallies.push_back(t);

            // Roster of six; medals appear only on upward jumps.
            bool jumped = count > prev_count;
            for (int a = 0; a < 6; ++a) {
                ingest::AthleteRecord r;
                r.name = noc + " athlete " + std::to_string(a);
                r.noc = noc;
                r.sex = (a % 2 == 0) ? ingest::Sex::M : ingest::Sex::F;
                r.edition = static_cast<int>(g) + 1;
                r.year = t.year;
                r.sport = panel.sport_names[(ci * 6 + static_cast<std::size_t>(a)) % 12];
                r.event = r.sport + " open";
                r.medal = (jumped && a < 2) ? ingest::Medal::Gold : ingest::Medal::NoMedal;
                panel.athletes.push_back(r);
            }
            prev_count = count;
        }
    }
    return panel;
}

hybrid::PipelineConfig harness_config(std::uint64_t seed, int epochs) {
    hybrid::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.lstm_cfg.seed = seed;
    cfg.lstm_cfg.epochs = epochs;
    cfg.lstm_cfg.learning_rate = 0.05;
    cfg.lstm_cfg.hidden_dim = 32;
    return cfg;
}

pipeline::RunConfig fixture_run_config(const std::string& out_dir, int epochs) {
    pipeline::RunConfig cfg;
    cfg.athletes_path = testsupport::fixture_path("athletes.csv");
    cfg.tallies_path = testsupport::fixture_path("medal_tallies.csv");
    cfg.hosts_path = testsupport::fixture_path("hosts.csv");
    cfg.registry_path = testsupport::data_path("noc_registry.csv");
    cfg.sports_path = testsupport::data_path("sports.csv");
    cfg.out_dir = out_dir;
    cfg.lstm_epochs = epochs;
    cfg.lstm_learning_rate = 0.05;
    cfg.next_host = "USA";
    return cfg;
}

// --- simulators shared by the ARIMA gate ------------------------------------

Vec sim_ar1(double phi, std::size_t n, std::uint64_t seed) {
    SplitMix64 rng = named_stream(seed, "acceptance/ar1");
    Vec x(n);
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        prev = phi * prev + rng.normal();
        x[t] = prev;
    }
    return x;
}

Vec sim_white(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng = named_stream(seed, "acceptance/white");
    Vec x(n);
    for (double& v : x) v = rng.normal();
    return x;
}

} // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();

    run_criterion(1, "runs test reproduction", [] {
        std::vector<int> seq;
        for (int block = 0; block < 6; ++block)
            for (int i = 0; i < 3; ++i) seq.push_back(block % 2 == 0 ? 1 : 0);
        analytics::RunsTestResult r = analytics::runs_test(seq);
        bool ok = r.expected_runs == 10.0 && std::abs(r.variance_runs - 4.2353) <= 1e-4 &&
                  std::abs(r.z - (-1.9437)) <= 1e-4 && std::abs(r.p_value - 0.0519) <= 1e-3;
        return std::make_pair(ok, "E=" + fmt(r.expected_runs) + " V=" + fmt(r.variance_runs) +
                                      " Z=" + fmt(r.z) + " p=" + fmt(r.p_value));
    });

    run_criterion(2, "coach effect reproduction", [] {
        analytics::CoachEffectResult r = analytics::coach_effect_rmse(
            {3.0 + 2.86, 4.0 + 0.82}, {3.0, 4.0}, {1984, 1988}, {1984});
        bool ok = std::abs(r.rmse_coach - 2.86) <= 1e-12 &&
                  std::abs(r.rmse_base - 0.82) <= 1e-12 &&
                  std::abs(r.effect - 2.04) <= 1e-12 &&
                  r.effect == r.rmse_coach - r.rmse_base;
        return std::make_pair(ok, "effect=" + fmt(r.effect));
    });

    run_criterion(3, "shapley axioms and oracle agreement", [] {
        SplitMix64 rng = named_stream(42, "acceptance/shapley");
        double worst_eff = 0.0, worst_oracle = 0.0, worst_dummy = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            std::size_t n = 2 + rng.below(5); // up to 6 features
            std::size_t total = std::size_t{1} << n;
            Vec table(total);
            for (double& v : table) v = rng.uniform(-4.0, 4.0);
            // Make the last feature a dummy: value ignores its bit.
            std::size_t dummy_bit = std::size_t{1} << (n - 1);
            for (std::size_t s = 0; s < total; ++s)
                if (s & dummy_bit) table[s] = table[s & ~dummy_bit];

            auto value = [&table](const std::vector<bool>& mask) {
                std::size_t key = 0;
                for (std::size_t i = 0; i < mask.size(); ++i)
                    if (mask[i]) key |= std::size_t{1} << i;
                return table[key];
            };
            analytics::ShapleyConfig cfg;
            for (std::size_t i = 0; i < n; ++i)
                cfg.feature_names.push_back("f" + std::to_string(i));
            cfg.value = value;
            std::vector<double> phi = analytics::shapley_exact(cfg);

            double sum = 0.0;
            for (double v : phi) sum += v;
            worst_eff = std::max(worst_eff, std::abs(sum - (table[total - 1] - table[0])));
            worst_dummy = std::max(worst_dummy, std::abs(phi[n - 1]));

            // Permutation-average oracle.
            std::vector<std::size_t> perm(n);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            std::vector<double> oracle(n, 0.0);
            std::size_t count = 0;
            do {
                std::vector<bool> mask(n, false);
                double prev = value(mask);
                for (std::size_t pos = 0; pos < n; ++pos) {
                    mask[perm[pos]] = true;
                    double cur = value(mask);
                    oracle[perm[pos]] += cur - prev;
                    prev = cur;
                }
                ++count;
            } while (std::next_permutation(perm.begin(), perm.end()));
            for (std::size_t i = 0; i < n; ++i)
                worst_oracle =
                    std::max(worst_oracle,
                             std::abs(phi[i] - oracle[i] / static_cast<double>(count)));
        }
        bool ok = worst_eff <= 1e-9 && worst_oracle <= 1e-9 && worst_dummy <= 1e-12;
        return std::make_pair(ok, "efficiency err=" + fmt(worst_eff) +
                                      " oracle err=" + fmt(worst_oracle) +
                                      " dummy err=" + fmt(worst_dummy));
    });

    run_criterion(4, "pca correctness", [] {
        // Rank-3 model in 50 dims, 200 seeded samples.
        SplitMix64 rng = named_stream(42, "acceptance/pca");
        std::vector<Vec> basis;
        for (int b = 0; b < 3; ++b) basis.push_back(testsupport::random_vec(rng, 50));
        std::vector<Vec> samples;
        for (int i = 0; i < 200; ++i) {
            Vec v(50, 0.0);
            for (int b = 0; b < 3; ++b) {
                double w = rng.normal();
                for (std::size_t k = 0; k < 50; ++k) v[k] += w * basis[b][k];
            }
            samples.push_back(std::move(v));
        }
        pca::Covariance cov = pca::covariance(samples);
        pca::EigenDecomposition d = pca::eigen_sym(cov.c);
        double explained = pca::explained_variance(d, 3);

        double recon_err = 0.0;
        double scale = 1.0 + max_abs(cov.c);
        for (std::size_t i = 0; i < 50; ++i) {
            Vec vi = d.vectors.col(i);
            Vec cv = matvec(cov.c, vi);
            for (std::size_t k = 0; k < 50; ++k) cv[k] -= d.values[i] * vi[k];
            recon_err = std::max(recon_err, norm2(cv) / scale);
        }

        Matrix hand(3, 3);
        hand.data() = {2, 1, 0, 1, 2, 0, 0, 0, 5};
        pca::EigenDecomposition hd = pca::eigen_sym(hand);
        double hand_err = std::max({std::abs(hd.values[0] - 5.0),
                                    std::abs(hd.values[1] - 3.0),
                                    std::abs(hd.values[2] - 1.0)});
        bool ok = explained >= 0.99 && recon_err <= 1e-8 && hand_err <= 1e-10;
        return std::make_pair(ok, "explained=" + fmt(explained) +
                                      " recon=" + fmt(recon_err) +
                                      " spectrum err=" + fmt(hand_err));
    });

    run_criterion(5, "arima recovery", [] {
        Vec ar = sim_ar1(0.8, 500, 1);
        arima::ArimaModel m = arima::fit_css(ar, {1, 0, 0});
        bool phi_ok = m.phi[0] >= 0.7 && m.phi[0] <= 0.9;

        int ar_hits = 0, white_hits = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            arima::ArimaOrder got = arima::select_order(sim_ar1(0.8, 300, seed), 0);
            if (got.p == 1 && got.q == 0) ++ar_hits;
            arima::ArimaOrder flat = arima::select_order(sim_white(300, seed), 0);
            if (flat.p == 0 && flat.q == 0) ++white_hits;
        }
        bool ok = phi_ok && ar_hits >= 9 && white_hits >= 9;
        return std::make_pair(ok, "phi=" + fmt(m.phi[0]) + " ar " + std::to_string(ar_hits) +
                                      "/10, white " + std::to_string(white_hits) + "/10");
    });

    run_criterion(6, "lstm gradient check", [] {
        const double eps = 1e-5;
        double worst = 0.0;
        for (std::uint64_t seed : {101, 102, 103}) {
            SplitMix64 init = named_stream(seed, "acceptance/grad-init");
            lstm::LstmParams p = lstm::LstmParams::init(4, 5, 3, init, 0.6, false);
            SplitMix64 rng = named_stream(seed, "acceptance/grad-data");
            std::vector<Vec> inputs, targets;
            for (int t = 0; t < 3; ++t) {
                inputs.push_back(testsupport::random_vec(rng, 4));
                targets.push_back(testsupport::random_vec(rng, 3));
            }
            lstm::BackwardResult res = lstm::backward(p, inputs, targets);

            auto loss_at = [&inputs, &targets](const lstm::LstmParams& params) {
                std::vector<Vec> out = lstm::forward_sequence(params, inputs);
                double loss = 0.0;
                for (std::size_t t = 0; t < out.size(); ++t)
                    for (std::size_t k = 0; k < out[t].size(); ++k) {
                        double d = out[t][k] - targets[t][k];
                        loss += d * d;
                    }
                return loss / static_cast<double>(out.size() * targets[0].size());
            };

            std::vector<std::pair<Vec*, Vec*>> groups = {
                {&p.wf.data(), &res.grads.wf.data()}, {&p.wi.data(), &res.grads.wi.data()},
                {&p.wc.data(), &res.grads.wc.data()}, {&p.wo.data(), &res.grads.wo.data()},
                {&p.wy.data(), &res.grads.wy.data()}, {&p.bf, &res.grads.bf},
                {&p.bi, &res.grads.bi},               {&p.bc, &res.grads.bc},
                {&p.bo, &res.grads.bo},               {&p.by, &res.grads.by},
            };
            for (auto& [flat, grad] : groups) {
                for (std::size_t i = 0; i < flat->size(); ++i) {
                    double saved = (*flat)[i];
                    (*flat)[i] = saved + eps;
                    double up = loss_at(p);
                    (*flat)[i] = saved - eps;
                    double down = loss_at(p);
                    (*flat)[i] = saved;
                    double numeric = (up - down) / (2.0 * eps);
                    double rel = std::abs((*grad)[i] - numeric) /
                                 (std::abs((*grad)[i]) + 1e-8);
                    worst = std::max(worst, rel);
                }
            }
        }
        return std::make_pair(worst < 1e-4, "max rel err=" + fmt(worst));
    });

    run_criterion(7, "lstm capacity", [] {
        SplitMix64 rng = named_stream(31, "acceptance/capacity");
        lstm::Sequence seq;
        for (int t = 0; t < 4; ++t) {
            seq.inputs.push_back(testsupport::random_vec(rng, 6));
            seq.targets.push_back(testsupport::random_vec(rng, 3, -0.5, 0.5));
        }
        lstm::TrainConfig cfg;
        cfg.epochs = 500;
        cfg.learning_rate = 0.5;
        cfg.hidden_dim = 16;
        cfg.init_scale = 0.3;
        lstm::TrainResult result = lstm::train({seq}, cfg, 6, 3);
        double final_mse = result.loss_trace.back();
        return std::make_pair(final_mse < 1e-3,
                              "final mse=" + fmt(final_mse) + " after 500 epochs");
    });

    run_criterion(8, "ablation: hybrid at or below lstm-only", [] {
        int wins = 0;
        std::string detail;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SyntheticPanel sp = make_synthetic_panel(seed);
            ingest::Panel panel = ingest::build_panel(sp.athletes, sp.tallies, sp.hosts);
            hybrid::PipelineConfig cfg = harness_config(seed, 100);
            hybrid::Prepared prepared =
                hybrid::prepare(panel, sp.athletes, sp.sport_names, cfg);
            analytics::AblationResult r = analytics::ablation_run(prepared, cfg);
            if (r.hybrid_rmse <= r.lstm_only_rmse) ++wins;
            detail += (detail.empty() ? "" : " ") + fmt(r.hybrid_rmse) + "<=" +
                      fmt(r.lstm_only_rmse) + (r.hybrid_rmse <= r.lstm_only_rmse ? "Y" : "N");
        }
        return std::make_pair(wins >= 8, std::to_string(wins) + "/10 seeds [" + detail + "]");
    });

    run_criterion(9, "metric identities", [] {
        Matrix a(2, 2), b(2, 2);
        a.data() = {1, 2, 3, 4};
        b.data() = {1, 3, 3, 6};
        bool hand = std::abs(lstm::loss_mae(a, b) - 0.75) <= 1e-6 &&
                    std::abs(lstm::loss_mse(a, b) - 1.25) <= 1e-6 &&
                    std::abs(lstm::loss_rmse(a, b) - 1.118034) <= 1e-6;
        SplitMix64 rng = named_stream(42, "acceptance/metrics");
        bool identities = true;
        for (int trial = 0; trial < 1000; ++trial) {
            Matrix x(2, 5), y(2, 5);
            for (double& v : x.data()) v = rng.uniform(-9.0, 9.0);
            for (double& v : y.data()) v = rng.uniform(-9.0, 9.0);
            double mse = lstm::loss_mse(x, y), rmse = lstm::loss_rmse(x, y),
                   mae = lstm::loss_mae(x, y);
            if (std::abs(rmse * rmse - mse) > 1e-12 || mae > rmse + 1e-12)
                identities = false;
        }
        return std::make_pair(hand && identities,
                              std::string("hand example ") + (hand ? "ok" : "off") +
                                  ", identities " + (identities ? "ok" : "violated"));
    });

    run_criterion(10, "spearman closed forms", [] {
        double perfect = analytics::spearman({1, 2, 3, 4}, {1, 2, 3, 4});
        double reversed = analytics::spearman({1, 2, 3, 4}, {4, 3, 2, 1});
        double hand = analytics::spearman({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5});
        bool ok = perfect == 1.0 && reversed == -1.0 && std::abs(hand - 0.8) <= 1e-12;
        return std::make_pair(ok, "rho=" + fmt(perfect) + "/" + fmt(reversed) + "/" +
                                      fmt(hand));
    });

    run_criterion(11, "end-to-end determinism", [] {
        testsupport::TempDir a("accept_det_a"), b("accept_det_b");
        for (const std::string& dir : {a.str(), b.str()}) {
            pipeline::RunConfig cfg = fixture_run_config(dir, 150);
            pipeline::cmd_ingest(cfg);
            pipeline::cmd_train(cfg);
            pipeline::cmd_predict(cfg);
        }
        std::string ma = testsupport::read_file(a.file("manifest.json"));
        std::string mb = testsupport::read_file(b.file("manifest.json"));
        bool ok = !ma.empty() && ma == mb;
        return std::make_pair(ok, ok ? "manifests byte-identical"
                                     : "manifests differ between runs");
    });

    run_criterion(12, "sensitivity grid shape and degradation", [] {
        pipeline::RunConfig rcfg = fixture_run_config("", 60);
        pipeline::LoadedInputs in = pipeline::load_inputs(rcfg);
        analytics::SensitivityInputs inputs{in.athletes.records, in.tallies.tallies,
                                            in.hosts, in.sport_names};

        // Full 3x3 grid at the run seed: all cells populated, identity cell
        // exactly equal to the unreduced run.
        hybrid::PipelineConfig cfg = harness_config(42, 60);
        analytics::SensitivityGrid grid = analytics::sensitivity_grid(inputs, cfg);
        bool all_ok = true;
        for (const auto& row : grid)
            for (const auto& cell : row) all_ok = all_ok && cell.ok;

        ingest::Panel panel = ingest::build_panel(inputs.athletes, inputs.tallies, in.hosts);
        hybrid::Prepared prepared = hybrid::prepare(panel, inputs.athletes,
                                                    inputs.sport_names, cfg);
        lstm::TrainResult trained = hybrid::fit_lstm(prepared, cfg);
        double unreduced =
            hybrid::evaluate_last_step(prepared, trained.params, cfg).interval_accuracy;
        bool identity_exact = grid[0][0].accuracy == unreduced;

        int monotone = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            hybrid::PipelineConfig scfg = harness_config(seed, 60);
            analytics::SensitivityGrid g = analytics::sensitivity_grid(inputs, scfg);
            if (g[0][0].ok && g[1][1].ok && g[2][2].ok &&
                g[0][0].accuracy >= g[1][1].accuracy - 1e-12 &&
                g[1][1].accuracy >= g[2][2].accuracy - 1e-12)
                ++monotone;
        }
        bool ok = all_ok && identity_exact && monotone >= 8;
        return std::make_pair(
            ok, std::string(all_ok ? "grid full" : "grid has errors") + ", identity " +
                    (identity_exact ? "exact" : "differs") + ", diagonal monotone " +
                    std::to_string(monotone) + "/10");
    });

    auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    std::printf("%s: %d/12 criteria passed in %llds\n", g_failures == 0 ? "OK" : "FAILED",
                12 - g_failures, static_cast<long long>(elapsed));
    return g_failures == 0 ? 0 : 1;
}
