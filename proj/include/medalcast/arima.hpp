#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "medalcast/error.hpp"
#include "medalcast/matrix.hpp"

#include "json.hpp"

namespace medalcast::arima {

struct ArimaOrder {
    int p = 0;
    int d = 1;
    int q = 0;
};

struct ArimaModel {
    ArimaOrder order;
    double c = 0.0;
    Vec phi;         // p autoregressive coefficients
    Vec theta;       // q moving-average coefficients
    Vec residuals;   // one per usable training observation (differenced scale)
    Vec diff_tail;   // last max(p, q) differenced observations
    Vec level_tails; // last value of the series at each differencing level 0..d-1
    double sse = 0.0;
    std::size_t n_diff = 0; // length of the differenced training series
};

/// d-fold first differences; output length = input length - d.
inline Vec difference(const Vec& series, int d) {
    if (d < 0) throw range_error("differencing order must be >= 0");
    if (static_cast<int>(series.size()) <= d)
        throw insufficient_data("series of length " + std::to_string(series.size()) +
                                " cannot be differenced " + std::to_string(d) + " times");
    Vec x = series;
    for (int round = 0; round < d; ++round) {
        Vec next(x.size() - 1);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) next[i] = x[i + 1] - x[i];
        x = std::move(next);
    }
    return x;
}

struct StationarityReport {
    double adf_statistic = 0.0;
    double crit_1 = 0.0, crit_5 = 0.0, crit_10 = 0.0;
    bool stationary = false; // at the 5% level
};

/// Augmented Dickey-Fuller test with a constant and one lagged difference:
/// dx_t = alpha + gamma * x_{t-1} + beta * dx_{t-1} + e_t. The t-statistic
/// of gamma is compared against constant-only critical values, interpolated
/// linearly in 1/n between the small-sample (n=25) and asymptotic tables.
inline StationarityReport adf_test(const Vec& series) {
    const std::size_t n = series.size();
    if (n < 10) throw insufficient_data("ADF test needs at least 10 observations");
    if (variance(series) < 1e-14)
        throw numeric_error("ADF regression is degenerate on a constant series");

    Vec dx(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) dx[i] = series[i + 1] - series[i];

    // Rows t = 2..n-1: response dx[t-1], regressors (1, x[t-1], dx[t-2]).
    const std::size_t m = n - 2;
    Matrix xtx(3, 3);
    Vec xty(3, 0.0);
    auto reg = [&](std::size_t t, int j) -> double {
        if (j == 0) return 1.0;
        if (j == 1) return series[t - 1];
        return dx[t - 2];
    };
    for (std::size_t t = 2; t < n; ++t) {
        for (int a = 0; a < 3; ++a) {
            xty[a] += reg(t, a) * dx[t - 1];
            for (int b = 0; b < 3; ++b) xtx.at(a, b) += reg(t, a) * reg(t, b);
        }
    }
    Vec beta = solve_linear(xtx, xty);

    double rss = 0.0;
    for (std::size_t t = 2; t < n; ++t) {
        double fit = 0.0;
        for (int a = 0; a < 3; ++a) fit += beta[a] * reg(t, a);
        double e = dx[t - 1] - fit;
        rss += e * e;
    }
    if (m <= 3) throw insufficient_data("ADF regression has no residual degrees of freedom");
    double s2 = rss / static_cast<double>(m - 3);

    // [(X'X)^-1]_{gamma,gamma} via one solve against the unit vector.
    Vec unit = {0.0, 1.0, 0.0};
    double gamma_var = solve_linear(xtx, unit)[1] * s2;
    if (gamma_var <= 0.0) throw numeric_error("ADF variance estimate is not positive");

    StationarityReport report;
    report.adf_statistic = beta[1] / std::sqrt(gamma_var);

    auto interp = [&](double cv25, double cvinf) {
        return cvinf + (cv25 - cvinf) * (25.0 / static_cast<double>(n));
    };
    report.crit_1 = interp(-3.75, -3.43);
    report.crit_5 = interp(-3.00, -2.86);
    report.crit_10 = interp(-2.63, -2.57);
    report.stationary = report.adf_statistic < report.crit_5;
    return report;
}

struct AcfPacf {
    Vec acf;  // lags 0..L, acf[0] = 1
    Vec pacf; // lags 1..L
};

inline AcfPacf acf_pacf(const Vec& series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (max_lag >= n / 2)
        throw range_error("max_lag must be below half the series length");
    double m = mean(series);
    double c0 = 0.0;
    for (double v : series) c0 += (v - m) * (v - m);
    if (c0 < 1e-14) throw numeric_error("ACF is undefined for a zero-variance series");

    AcfPacf out;
    out.acf.resize(max_lag + 1);
    out.acf[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t) ck += (series[t] - m) * (series[t - k] - m);
        out.acf[k] = ck / c0;
    }

    // Durbin-Levinson recursion.
    out.pacf.resize(max_lag);
    if (max_lag == 0) return out;
    std::vector<Vec> phi(max_lag + 1, Vec(max_lag + 1, 0.0));
    phi[1][1] = out.acf[1];
    out.pacf[0] = phi[1][1];
    for (std::size_t k = 2; k <= max_lag; ++k) {
        double num = out.acf[k], den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= phi[k - 1][j] * out.acf[k - j];
            den -= phi[k - 1][j] * out.acf[j];
        }
        if (std::abs(den) < 1e-14)
            throw numeric_error("PACF recursion is degenerate at lag " + std::to_string(k));
        phi[k][k] = num / den;
        for (std::size_t j = 1; j < k; ++j)
            phi[k][j] = phi[k - 1][j] - phi[k][k] * phi[k - 1][k - j];
        out.pacf[k - 1] = phi[k][k];
    }
    return out;
}

/// Roots of the monic polynomial w^p - a1 w^(p-1) - ... - ap by
/// Durand-Kerner. Degree here is at most 3, so a short fixed iteration
/// converges far past double precision.
inline std::vector<std::complex<double>> inverse_ar_roots(const Vec& phi) {
    const std::size_t p = phi.size();
    std::vector<std::complex<double>> roots(p);
    if (p == 0) return roots;
    std::complex<double> seed(0.4, 0.9);
    for (std::size_t i = 0; i < p; ++i) roots[i] = std::pow(seed, static_cast<double>(i + 1));
    auto poly = [&](std::complex<double> w) {
        std::complex<double> v = 1.0;
        for (std::size_t i = 0; i < p; ++i) v = v * w - phi[i];
        return v;
    };
    for (int iter = 0; iter < 200; ++iter) {
        double moved = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            std::complex<double> denom = 1.0;
            for (std::size_t j = 0; j < p; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            std::complex<double> delta = poly(roots[i]) / denom;
            roots[i] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-13) break;
    }
    return roots;
}

/// True when every AR characteristic root lies outside |z| = margin, i.e.
/// all inverse roots are inside 1/margin.
inline bool ar_stationary(const Vec& phi, double margin = 1.001) {
    for (const auto& w : inverse_ar_roots(phi))
        if (std::abs(w) >= 1.0 / margin) return false;
    return true;
}

/// Invertibility of the MA polynomial 1 + theta_1 z + ... + theta_q z^q:
/// same root condition after flipping signs. Non-invertible fits let the
/// residual recursion resonate and swallow in-sample noise, so they are
/// barred from the CSS search.
inline bool ma_invertible(const Vec& theta, double margin = 1.001) {
    Vec negated(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) negated[i] = -theta[i];
    return ar_stationary(negated, margin);
}

/// Conditional sum of squares of an ARMA(p,q) candidate on the differenced
/// series. Residuals start at `start` (default: t = p) with pre-sample
/// errors fixed at zero; order selection passes a common start so that
/// every candidate is scored on the same observations.
inline double css_objective(const Vec& x, int p, int q, const Vec& params,
                            Vec* residuals_out = nullptr, int start = -1) {
    const std::size_t n = x.size();
    if (start < p) start = p;
    double c = params[0];
    Vec eps(n, 0.0);
    double sse = 0.0;
    for (std::size_t t = static_cast<std::size_t>(start); t < n; ++t) {
        double pred = c;
        for (int i = 1; i <= p; ++i) pred += params[static_cast<std::size_t>(i)] * x[t - static_cast<std::size_t>(i)];
        for (int j = 1; j <= q; ++j) {
            std::size_t lag = t - static_cast<std::size_t>(j);
            if (static_cast<int>(lag) >= p) pred += params[static_cast<std::size_t>(p + j)] * eps[lag];
        }
        eps[t] = x[t] - pred;
        sse += eps[t] * eps[t];
    }
    if (residuals_out)
        residuals_out->assign(eps.begin() + start, eps.end());
    return sse;
}

/// Standard Nelder-Mead simplex. Returns the best vertex after the step
/// criterion or the iteration budget is reached.
inline Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec x0,
                       double step = 0.1, double tol = 1e-8, int max_iter = 500) {
    const std::size_t dim = x0.size();
    std::vector<Vec> simplex(dim + 1, x0);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    std::vector<double> value(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) value[i] = f(simplex[i]);

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(dim + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&value](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        std::vector<Vec> sorted(dim + 1);
        std::vector<double> sorted_val(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            sorted[i] = simplex[order[i]];
            sorted_val[i] = value[order[i]];
        }
        simplex = std::move(sorted);
        value = std::move(sorted_val);

        double spread = 0.0;
        for (std::size_t i = 1; i <= dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                spread = std::max(spread, std::abs(simplex[i][j] - simplex[0][j]));
        if (spread < tol) break;

        Vec centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
        for (double& v : centroid) v /= static_cast<double>(dim);

        auto blend = [&](double coef) {
            Vec x(dim);
            for (std::size_t j = 0; j < dim; ++j)
                x[j] = centroid[j] + coef * (simplex[dim][j] - centroid[j]);
            return x;
        };

        Vec reflected = blend(-1.0);
        double fr = f(reflected);
        if (fr < value[0]) {
            Vec expanded = blend(-2.0);
            double fe = f(expanded);
            if (fe < fr) {
                simplex[dim] = expanded;
                value[dim] = fe;
            } else {
                simplex[dim] = reflected;
                value[dim] = fr;
            }
        } else if (fr < value[dim - 1]) {
            simplex[dim] = reflected;
            value[dim] = fr;
        } else {
            Vec contracted = blend(fr < value[dim] ? -0.5 : 0.5);
            double fc = f(contracted);
            if (fc < std::min(fr, value[dim])) {
                simplex[dim] = contracted;
                value[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j)
                        simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
                    value[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (value[i] < value[best]) best = i;
    return simplex[best];
}

/// Fits (c, phi, theta) by minimizing the conditional sum of squares with
/// pre-sample residuals at zero. Explosive AR fits are rejected.
inline ArimaModel fit_css(const Vec& series, const ArimaOrder& order) {
    if (order.p < 0 || order.q < 0 || order.d < 0)
        throw range_error("ARIMA orders must be non-negative");
    Vec x = difference(series, order.d);
    const std::size_t n = x.size();
    if (static_cast<int>(n) <= order.p + order.q + 1)
        throw insufficient_data("differenced series too short for ARMA(" +
                                std::to_string(order.p) + "," + std::to_string(order.q) + ")");

    const int p = order.p, q = order.q;
    auto objective = [&x, p, q](const Vec& params) {
        Vec phi(params.begin() + 1, params.begin() + 1 + p);
        Vec theta(params.begin() + 1 + p, params.end());
        if (!ar_stationary(phi)) return 1e12 * (1.0 + norm2(phi));
        if (!ma_invertible(theta)) return 1e12 * (1.0 + norm2(theta));
        double sse = css_objective(x, p, q, params);
        return std::isfinite(sse) ? sse : 1e12;
    };

    Vec x0(1 + static_cast<std::size_t>(p + q), 0.0);
    x0[0] = mean(x);
    Vec best = x0;
    if (p + q > 0) best = nelder_mead(objective, x0, 0.1, 1e-8, 500);

    ArimaModel model;
    model.order = order;
    model.c = best[0];
    model.phi.assign(best.begin() + 1, best.begin() + 1 + p);
    model.theta.assign(best.begin() + 1 + p, best.end());
    if (!ar_stationary(model.phi))
        throw numeric_error("fit_css: explosive autoregressive fit rejected");
    if (!ma_invertible(model.theta))
        throw numeric_error("fit_css: non-invertible moving-average fit rejected");
    model.sse = css_objective(x, p, q, best, &model.residuals);
    if (!std::isfinite(model.sse))
        throw numeric_error("fit_css: non-finite residual sum of squares");
    model.n_diff = n;

    const std::size_t tail = static_cast<std::size_t>(std::max(p, q));
    model.diff_tail.assign(x.end() - static_cast<std::ptrdiff_t>(std::min(tail, n)), x.end());

    Vec level = series;
    for (int d = 0; d < order.d; ++d) {
        model.level_tails.push_back(level.back());
        level = difference(level, 1);
    }
    return model;
}

/// One-step forecast on the original scale: the ARMA recursion on the
/// differenced series, then integration through the stored level tails.
inline double forecast_one(const ArimaModel& model) {
    const int p = model.order.p, q = model.order.q;
    if (static_cast<int>(model.diff_tail.size()) < p)
        throw state_error("forecast_one: model is missing its training tail");
    if (static_cast<int>(model.residuals.size()) < q)
        throw state_error("forecast_one: model is missing its residual tail");
    double f = model.c;
    for (int i = 1; i <= p; ++i)
        f += model.phi[static_cast<std::size_t>(i - 1)] *
             model.diff_tail[model.diff_tail.size() - static_cast<std::size_t>(i)];
    for (int j = 1; j <= q; ++j)
        f += model.theta[static_cast<std::size_t>(j - 1)] *
             model.residuals[model.residuals.size() - static_cast<std::size_t>(j)];
    for (double last : model.level_tails) f += last;
    return f;
}

inline double aic(std::size_t n_obs, double sse, int p, int q) {
    double msr = std::max(sse / static_cast<double>(n_obs), 1e-300);
    return static_cast<double>(n_obs) * std::log(msr) + 2.0 * (p + q + 1);
}

inline double bic(std::size_t n_obs, double sse, int p, int q) {
    double msr = std::max(sse / static_cast<double>(n_obs), 1e-300);
    return static_cast<double>(n_obs) * std::log(msr) +
           std::log(static_cast<double>(n_obs)) * (p + q + 1);
}

/// Grid search over p, q in [0, 3]. Every candidate is fitted and scored on
/// a common conditioning window (residuals from t = max_p) so the criterion
/// compares like with like. BIC is the default criterion; the weaker AIC
/// penalty sits behind the flag. Ties break toward smaller p+q, then
/// smaller p, so reruns are stable.
inline ArimaOrder select_order(const Vec& series, int d, int max_p = 3, int max_q = 3,
                               bool use_bic = true) {
    Vec x = difference(series, d);
    const std::size_t n = x.size();
    if (static_cast<int>(n) <= max_p + max_q + 1)
        throw insufficient_data("select_order: series too short for the candidate grid");
    const std::size_t n_common = n - static_cast<std::size_t>(max_p);

    ArimaOrder best_order;
    double best_score = std::numeric_limits<double>::infinity();
    bool any = false;
    std::vector<std::string> failures;
    for (int p = 0; p <= max_p; ++p) {
        for (int q = 0; q <= max_q; ++q) {
            ArimaOrder candidate{p, d, q};
            try {
                auto objective = [&x, p, q, max_p](const Vec& params) {
                    Vec phi(params.begin() + 1, params.begin() + 1 + p);
                    Vec theta(params.begin() + 1 + p, params.end());
                    if (!ar_stationary(phi)) return 1e12 * (1.0 + norm2(phi));
                    if (!ma_invertible(theta)) return 1e12 * (1.0 + norm2(theta));
                    double sse = css_objective(x, p, q, params, nullptr, max_p);
                    return std::isfinite(sse) ? sse : 1e12;
                };
                Vec x0(1 + static_cast<std::size_t>(p + q), 0.0);
                x0[0] = mean(x);
                Vec best = x0;
                if (p + q > 0) best = nelder_mead(objective, x0, 0.1, 1e-8, 500);
                double sse = css_objective(x, p, q, best, nullptr, max_p);
                if (!std::isfinite(sse))
                    throw numeric_error("non-finite sum of squares");
                double score =
                    use_bic ? bic(n_common, sse, p, q) : aic(n_common, sse, p, q);
                bool better = score < best_score - 1e-12;
                bool tie = std::abs(score - best_score) <= 1e-12;
                if (!any || better ||
                    (tie && (p + q < best_order.p + best_order.q ||
                             (p + q == best_order.p + best_order.q && p < best_order.p)))) {
                    best_score = score;
                    best_order = candidate;
                    any = true;
                }
            } catch (const Error& e) {
                failures.push_back("(" + std::to_string(p) + "," + std::to_string(q) +
                                   "): " + e.what());
            }
        }
    }
    if (!any) {
        std::string detail;
        for (const auto& f : failures) detail += "\n  " + f;
        throw numeric_error("select_order: every candidate failed" + detail);
    }
    return best_order;
}

struct ChannelDiagnostic {
    std::size_t channel = 0;
    ArimaOrder order;
    double aic = 0.0;
    bool fallback = false; // last-value carry-forward used
    std::string note;
};

struct ChannelwiseForecast {
    Matrix predicted;                        // 10x5, codebook layout
    std::vector<ChannelDiagnostic> channels; // one per scalar channel
};

/// Fits the 50 scalar channels of the team-feature history independently
/// (order selected with the d=1 default) and forecasts each one step ahead.
/// A channel that cannot be fitted falls back to carrying its last value
/// forward, and the diagnostics record it.
inline ChannelwiseForecast fit_channelwise(const Matrix& history, int d = 1,
                                           int max_p = 3, int max_q = 3,
                                           bool use_bic = true) {
    if (history.cols() != 50)
        throw shape_error("fit_channelwise: expected 50 feature channels");
    if (history.rows() < 8)
        throw insufficient_data("fit_channelwise: needs at least 8 history rows");

    ChannelwiseForecast out;
    Vec forecasts(history.cols(), 0.0);
    for (std::size_t ch = 0; ch < history.cols(); ++ch) {
        Vec series = history.col(ch);
        ChannelDiagnostic diag;
        diag.channel = ch;
        try {
            ArimaOrder order = select_order(series, d, max_p, max_q, use_bic);
            ArimaModel model = fit_css(series, order);
            forecasts[ch] = forecast_one(model);
            diag.order = order;
            diag.aic = aic(model.residuals.size(), model.sse, order.p, order.q);
        } catch (const Error& e) {
            forecasts[ch] = series.back();
            diag.fallback = true;
            diag.note = e.what();
        }
        out.channels.push_back(std::move(diag));
    }
    out.predicted = reshape(forecasts, 10, 5);
    return out;
}

inline nlohmann::json model_to_json(const ArimaModel& m) {
    nlohmann::json j;
    j["p"] = m.order.p;
    j["d"] = m.order.d;
    j["q"] = m.order.q;
    j["c"] = m.c;
    j["phi"] = m.phi;
    j["theta"] = m.theta;
    j["diff_tail"] = m.diff_tail;
    j["level_tails"] = m.level_tails;
    // Only the last q residuals feed forecasts; keep a short tail.
    std::size_t keep = std::min<std::size_t>(m.residuals.size(), 8);
    j["residual_tail"] = Vec(m.residuals.end() - static_cast<std::ptrdiff_t>(keep),
                             m.residuals.end());
    j["sse"] = m.sse;
    j["n_diff"] = m.n_diff;
    return j;
}

inline ArimaModel model_from_json(const nlohmann::json& j) {
    ArimaModel m;
    m.order = {j.at("p").get<int>(), j.at("d").get<int>(), j.at("q").get<int>()};
    m.c = j.at("c").get<double>();
    m.phi = j.at("phi").get<Vec>();
    m.theta = j.at("theta").get<Vec>();
    m.diff_tail = j.at("diff_tail").get<Vec>();
    m.level_tails = j.at("level_tails").get<Vec>();
    m.residuals = j.at("residual_tail").get<Vec>();
    m.sse = j.at("sse").get<double>();
    m.n_diff = j.at("n_diff").get<std::size_t>();
    return m;
}

} // namespace medalcast::arima
