#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "medalcast/error.hpp"
#include "medalcast/matrix.hpp"
#include "medalcast/rng.hpp"

#include "json.hpp"

namespace medalcast::lstm {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Single-layer LSTM parameters. Each gate weight acts on the concatenation
/// [h_{t-1}, x_t]; a linear readout maps the hidden state to the output.
struct LstmParams {
    std::size_t input_dim = 0, hidden_dim = 0, output_dim = 0;
    Matrix wf, wi, wc, wo; // hidden_dim x (hidden_dim + input_dim)
    Vec bf, bi, bc, bo;    // hidden_dim
    Matrix wy;             // output_dim x hidden_dim
    Vec by;                // output_dim
    bool trained = false;

    static LstmParams init(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim, SplitMix64& rng,
                           double init_scale = 0.08, bool forget_bias = true) {
        LstmParams p;
        p.input_dim = input_dim;
        p.hidden_dim = hidden_dim;
        p.output_dim = output_dim;
        auto fill = [&rng, init_scale](Matrix& m, std::size_t r, std::size_t c) {
            m = Matrix(r, c);
            for (double& v : m.data()) v = init_scale * rng.uniform_sym();
        };
        const std::size_t z = hidden_dim + input_dim;
        fill(p.wf, hidden_dim, z);
        fill(p.wi, hidden_dim, z);
        fill(p.wc, hidden_dim, z);
        fill(p.wo, hidden_dim, z);
        p.bf.assign(hidden_dim, forget_bias ? 1.0 : 0.0);
        p.bi.assign(hidden_dim, 0.0);
        p.bc.assign(hidden_dim, 0.0);
        p.bo.assign(hidden_dim, 0.0);
        fill(p.wy, output_dim, hidden_dim);
        p.by.assign(output_dim, 0.0);
        return p;
    }
};

struct LstmState {
    Vec h, c;

    static LstmState zeros(std::size_t hidden_dim) {
        return {Vec(hidden_dim, 0.0), Vec(hidden_dim, 0.0)};
    }
};

/// Everything the backward pass needs about one forward step.
struct StepCache {
    Vec z;           // [h_prev, x]
    Vec f, i, cbar, o;
    Vec c, tanh_c;
    Vec h, y;
    Vec c_prev;
};

inline StepCache forward_step_cached(const LstmParams& p, const LstmState& state,
                                     const Vec& x) {
    if (x.size() != p.input_dim)
        throw shape_error("forward_step: input has " + std::to_string(x.size()) +
                          " entries, expected " + std::to_string(p.input_dim));
    if (state.h.size() != p.hidden_dim || state.c.size() != p.hidden_dim)
        throw shape_error("forward_step: state does not match hidden_dim");
    for (double v : x)
        if (!std::isfinite(v)) throw numeric_error("forward_step: non-finite input");

    StepCache s;
    s.c_prev = state.c;
    s.z.reserve(p.hidden_dim + p.input_dim);
    s.z.insert(s.z.end(), state.h.begin(), state.h.end());
    s.z.insert(s.z.end(), x.begin(), x.end());

    const std::size_t H = p.hidden_dim;
    s.f.resize(H); s.i.resize(H); s.cbar.resize(H); s.o.resize(H);
    s.c.resize(H); s.tanh_c.resize(H); s.h.resize(H);
    for (std::size_t k = 0; k < H; ++k) {
        double af = p.bf[k], ai = p.bi[k], ac = p.bc[k], ao = p.bo[k];
        const double* wf = p.wf.row_ptr(k);
        const double* wi = p.wi.row_ptr(k);
        const double* wc = p.wc.row_ptr(k);
        const double* wo = p.wo.row_ptr(k);
        for (std::size_t j = 0; j < s.z.size(); ++j) {
            double zj = s.z[j];
            af += wf[j] * zj;
            ai += wi[j] * zj;
            ac += wc[j] * zj;
            ao += wo[j] * zj;
        }
        s.f[k] = sigmoid(af);
        s.i[k] = sigmoid(ai);
        s.cbar[k] = std::tanh(ac);
        s.o[k] = sigmoid(ao);
        s.c[k] = s.f[k] * state.c[k] + s.i[k] * s.cbar[k];
        s.tanh_c[k] = std::tanh(s.c[k]);
        s.h[k] = s.o[k] * s.tanh_c[k];
    }
    s.y = matvec(p.wy, s.h);
    for (std::size_t k = 0; k < p.output_dim; ++k) s.y[k] += p.by[k];
    return s;
}

/// One gate update: f_t = sigma(Wf.[h,x]+bf) and friends, then
/// c_t = f (.) c_{t-1} + i (.) cbar, h_t = o (.) tanh(c_t), y = Wy h + by.
inline std::pair<LstmState, Vec> forward_step(const LstmParams& p, const LstmState& state,
                                              const Vec& x) {
    StepCache s = forward_step_cached(p, state, x);
    return {{s.h, s.c}, s.y};
}

inline std::vector<Vec> forward_sequence(const LstmParams& p, const std::vector<Vec>& inputs) {
    if (inputs.empty()) throw insufficient_data("forward_sequence: empty input");
    LstmState state = LstmState::zeros(p.hidden_dim);
    std::vector<Vec> outputs;
    outputs.reserve(inputs.size());
    for (const auto& x : inputs) {
        auto [next, y] = forward_step(p, state, x);
        state = std::move(next);
        outputs.push_back(std::move(y));
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// Metrics (elementwise over equal-shaped matrices)
// ---------------------------------------------------------------------------

inline void check_metric_shapes(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw shape_error("metric: shape mismatch");
    if (a.rows() == 0 || a.cols() == 0) throw insufficient_data("metric: empty matrices");
}

inline double loss_mae(const Matrix& a, const Matrix& b) {
    check_metric_shapes(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        s += std::abs(a.data()[i] - b.data()[i]);
    return s / static_cast<double>(a.data().size());
}

inline double loss_mse(const Matrix& a, const Matrix& b) {
    check_metric_shapes(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data().size());
}

inline double loss_rmse(const Matrix& a, const Matrix& b) { return std::sqrt(loss_mse(a, b)); }

// ---------------------------------------------------------------------------
// Backpropagation through time
// ---------------------------------------------------------------------------

struct LstmGradients {
    Matrix wf, wi, wc, wo, wy;
    Vec bf, bi, bc, bo, by;

    static LstmGradients zeros(const LstmParams& p) {
        LstmGradients g;
        const std::size_t z = p.hidden_dim + p.input_dim;
        g.wf = Matrix(p.hidden_dim, z);
        g.wi = Matrix(p.hidden_dim, z);
        g.wc = Matrix(p.hidden_dim, z);
        g.wo = Matrix(p.hidden_dim, z);
        g.wy = Matrix(p.output_dim, p.hidden_dim);
        g.bf.assign(p.hidden_dim, 0.0);
        g.bi.assign(p.hidden_dim, 0.0);
        g.bc.assign(p.hidden_dim, 0.0);
        g.bo.assign(p.hidden_dim, 0.0);
        g.by.assign(p.output_dim, 0.0);
        return g;
    }

    void add_scaled(const LstmGradients& o, double scale) {
        auto addm = [scale](Matrix& a, const Matrix& b) {
            for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += scale * b.data()[i];
        };
        auto addv = [scale](Vec& a, const Vec& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
        };
        addm(wf, o.wf); addm(wi, o.wi); addm(wc, o.wc); addm(wo, o.wo); addm(wy, o.wy);
        addv(bf, o.bf); addv(bi, o.bi); addv(bc, o.bc); addv(bo, o.bo); addv(by, o.by);
    }

    double squared_norm() const {
        double s = 0.0;
        for (const Matrix* m : {&wf, &wi, &wc, &wo, &wy})
            for (double v : m->data()) s += v * v;
        for (const Vec* v : {&bf, &bi, &bc, &bo, &by})
            for (double x : *v) s += x * x;
        return s;
    }

    void scale(double factor) {
        for (Matrix* m : {&wf, &wi, &wc, &wo, &wy})
            for (double& v : m->data()) v *= factor;
        for (Vec* v : {&bf, &bi, &bc, &bo, &by})
            for (double& x : *v) x *= factor;
    }
};

struct BackwardResult {
    LstmGradients grads;
    double loss = 0.0; // mean over steps of the per-step elementwise MSE
};

/// Exact reverse-mode gradients of the sequence loss
/// L = (1/T) sum_t MSE(y_t, target_t) with respect to every parameter.
inline BackwardResult backward(const LstmParams& p, const std::vector<Vec>& inputs,
                               const std::vector<Vec>& targets) {
    if (inputs.empty()) throw insufficient_data("backward: empty sequence");
    if (inputs.size() != targets.size())
        throw shape_error("backward: inputs and targets are not aligned");

    const std::size_t T = inputs.size(), H = p.hidden_dim, O = p.output_dim;
    std::vector<StepCache> cache;
    cache.reserve(T);
    LstmState state = LstmState::zeros(H);
    double loss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        cache.push_back(forward_step_cached(p, state, inputs[t]));
        state = {cache.back().h, cache.back().c};
        if (targets[t].size() != O)
            throw shape_error("backward: target size mismatch at step " + std::to_string(t));
        for (std::size_t k = 0; k < O; ++k) {
            double d = cache.back().y[k] - targets[t][k];
            loss += d * d;
        }
    }
    loss /= static_cast<double>(T * O);
    if (!std::isfinite(loss)) throw numeric_error("backward: loss is not finite");

    BackwardResult out;
    out.loss = loss;
    out.grads = LstmGradients::zeros(p);
    LstmGradients& g = out.grads;

    Vec dh_next(H, 0.0), dc_next(H, 0.0);
    const double loss_scale = 2.0 / static_cast<double>(T * O);
    for (std::size_t t = T; t-- > 0;) {
        const StepCache& s = cache[t];
        Vec dy(O);
        for (std::size_t k = 0; k < O; ++k) dy[k] = loss_scale * (s.y[k] - targets[t][k]);

        Vec dh = dh_next;
        for (std::size_t k = 0; k < O; ++k) {
            if (dy[k] == 0.0) continue;
            for (std::size_t j = 0; j < H; ++j) {
                g.wy.at(k, j) += dy[k] * s.h[j];
                dh[j] += p.wy.at(k, j) * dy[k];
            }
            g.by[k] += dy[k];
        }

        Vec da_f(H), da_i(H), da_c(H), da_o(H), dc(H);
        for (std::size_t k = 0; k < H; ++k) {
            double do_k = dh[k] * s.tanh_c[k];
            dc[k] = dc_next[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
            double df = dc[k] * s.c_prev[k];
            double di = dc[k] * s.cbar[k];
            double dcbar = dc[k] * s.i[k];
            da_f[k] = df * s.f[k] * (1.0 - s.f[k]);
            da_i[k] = di * s.i[k] * (1.0 - s.i[k]);
            da_c[k] = dcbar * (1.0 - s.cbar[k] * s.cbar[k]);
            da_o[k] = do_k * s.o[k] * (1.0 - s.o[k]);
        }

        Vec dz(s.z.size(), 0.0);
        for (std::size_t k = 0; k < H; ++k) {
            const double af = da_f[k], ai = da_i[k], ac = da_c[k], ao = da_o[k];
            double* gwf = g.wf.row_ptr(k);
            double* gwi = g.wi.row_ptr(k);
            double* gwc = g.wc.row_ptr(k);
            double* gwo = g.wo.row_ptr(k);
            const double* wf = p.wf.row_ptr(k);
            const double* wi = p.wi.row_ptr(k);
            const double* wc = p.wc.row_ptr(k);
            const double* wo = p.wo.row_ptr(k);
            for (std::size_t j = 0; j < s.z.size(); ++j) {
                double zj = s.z[j];
                gwf[j] += af * zj;
                gwi[j] += ai * zj;
                gwc[j] += ac * zj;
                gwo[j] += ao * zj;
                dz[j] += wf[j] * af + wi[j] * ai + wc[j] * ac + wo[j] * ao;
            }
            g.bf[k] += af;
            g.bi[k] += ai;
            g.bc[k] += ac;
            g.bo[k] += ao;
        }

        for (std::size_t k = 0; k < H; ++k) {
            dh_next[k] = dz[k];
            dc_next[k] = dc[k] * s.f[k];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 500;
    double learning_rate = 1e-3;
    double grad_clip = 5.0; // global norm
    std::uint64_t seed = 42;
    double init_scale = 0.08;
    std::size_t hidden_dim = 32;
    bool forget_bias = true;
};

struct Sequence {
    std::string tag; // country code in the pipeline; free-form in tests
    std::vector<Vec> inputs;
    std::vector<Vec> targets;
};

struct TrainResult {
    LstmParams params;
    Vec loss_trace; // mean loss per epoch, before each update
};

/// Full-batch gradient descent with global-norm clipping. Sequences are
/// processed in their given order every epoch, so the result is a pure
/// function of (seed, data, config).
inline TrainResult train(const std::vector<Sequence>& dataset, const TrainConfig& cfg,
                         std::size_t input_dim, std::size_t output_dim) {
    if (dataset.empty()) throw insufficient_data("train: empty dataset");
    if (cfg.epochs < 1) throw range_error("train: epochs must be >= 1");
    if (cfg.learning_rate <= 0.0) throw range_error("train: learning rate must be > 0");

    SplitMix64 rng = named_stream(cfg.seed, "lstm/init");
    TrainResult result;
    result.params = LstmParams::init(input_dim, cfg.hidden_dim, output_dim, rng,
                                     cfg.init_scale, cfg.forget_bias);
    const double per_seq = 1.0 / static_cast<double>(dataset.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        LstmGradients total = LstmGradients::zeros(result.params);
        double epoch_loss = 0.0;
        for (const auto& seq : dataset) {
            BackwardResult b = backward(result.params, seq.inputs, seq.targets);
            total.add_scaled(b.grads, per_seq);
            epoch_loss += b.loss * per_seq;
        }
        if (!std::isfinite(epoch_loss))
            throw numeric_error("train: loss diverged at epoch " + std::to_string(epoch));
        double norm = std::sqrt(total.squared_norm());
        if (norm > cfg.grad_clip && norm > 0.0) total.scale(cfg.grad_clip / norm);

        auto step_m = [&](Matrix& w, const Matrix& gw) {
            for (std::size_t i = 0; i < w.data().size(); ++i)
                w.data()[i] -= cfg.learning_rate * gw.data()[i];
        };
        auto step_v = [&](Vec& b, const Vec& gb) {
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.learning_rate * gb[i];
        };
        step_m(result.params.wf, total.wf);
        step_m(result.params.wi, total.wi);
        step_m(result.params.wc, total.wc);
        step_m(result.params.wo, total.wo);
        step_m(result.params.wy, total.wy);
        step_v(result.params.bf, total.bf);
        step_v(result.params.bi, total.bi);
        step_v(result.params.bc, total.bc);
        step_v(result.params.bo, total.bo);
        step_v(result.params.by, total.by);
        result.loss_trace.push_back(epoch_loss);
    }
    result.params.trained = true;
    return result;
}

/// Flattens each state matrix row-major, runs the sequence, and returns the
/// final output (the predicted team-feature embedding).
inline Vec predict_next(const LstmParams& params, const std::vector<Matrix>& states) {
    if (!params.trained) throw state_error("predict_next: parameters are not trained");
    if (states.empty()) throw insufficient_data("predict_next: empty history");
    std::vector<Vec> inputs;
    inputs.reserve(states.size());
    for (const auto& s : states) inputs.push_back(flatten(s));
    return forward_sequence(params, inputs).back();
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

inline nlohmann::json params_to_json(const LstmParams& p) {
    nlohmann::json j;
    j["input_dim"] = p.input_dim;
    j["hidden_dim"] = p.hidden_dim;
    j["output_dim"] = p.output_dim;
    j["trained"] = p.trained;
    j["wf"] = p.wf.data();
    j["wi"] = p.wi.data();
    j["wc"] = p.wc.data();
    j["wo"] = p.wo.data();
    j["wy"] = p.wy.data();
    j["bf"] = p.bf;
    j["bi"] = p.bi;
    j["bc"] = p.bc;
    j["bo"] = p.bo;
    j["by"] = p.by;
    return j;
}

inline LstmParams params_from_json(const nlohmann::json& j) {
    LstmParams p;
    p.input_dim = j.at("input_dim").get<std::size_t>();
    p.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    p.output_dim = j.at("output_dim").get<std::size_t>();
    p.trained = j.at("trained").get<bool>();
    const std::size_t z = p.hidden_dim + p.input_dim;
    p.wf = reshape(j.at("wf").get<Vec>(), p.hidden_dim, z);
    p.wi = reshape(j.at("wi").get<Vec>(), p.hidden_dim, z);
    p.wc = reshape(j.at("wc").get<Vec>(), p.hidden_dim, z);
    p.wo = reshape(j.at("wo").get<Vec>(), p.hidden_dim, z);
    p.wy = reshape(j.at("wy").get<Vec>(), p.output_dim, p.hidden_dim);
    p.bf = j.at("bf").get<Vec>();
    p.bi = j.at("bi").get<Vec>();
    p.bc = j.at("bc").get<Vec>();
    p.bo = j.at("bo").get<Vec>();
    p.by = j.at("by").get<Vec>();
    return p;
}

} // namespace medalcast::lstm
