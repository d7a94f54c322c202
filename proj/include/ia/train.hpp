#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/align.hpp"
#include "ia/grid.hpp"

namespace ia {

/// One alignment instance: align `reference` toward `current` under `flow`,
/// supervised by `target`.
struct AlignInstance {
    Grid current;
    Grid reference;
    FlowField flow;
    Grid target;
};

/// Gradients of the loss with respect to every AlignModel parameter tensor.
/// Accumulated in float64.
struct GradientSet {
    std::vector<double> w_q, b_q, w_k, b_k, w_v, b_v;

    explicit GradientSet(int channels = 0) { resize(channels); }

    void resize(int channels) {
        size_t n = static_cast<size_t>(channels) * channels;
        w_q.assign(n, 0.0);
        w_k.assign(n, 0.0);
        w_v.assign(n, 0.0);
        b_q.assign(channels, 0.0);
        b_k.assign(channels, 0.0);
        b_v.assign(channels, 0.0);
    }

    void add_scaled(const GradientSet& other, double scale) {
        auto axpy = [scale](std::vector<double>& dst, const std::vector<double>& src) {
            for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
        };
        axpy(w_q, other.w_q);
        axpy(b_q, other.b_q);
        axpy(w_k, other.w_k);
        axpy(b_k, other.b_k);
        axpy(w_v, other.w_v);
        axpy(b_v, other.b_v);
    }

    void check_finite() const {
        auto check = [](const std::vector<double>& a, const char* name) {
            for (double v : a)
                if (!std::isfinite(v))
                    throw std::runtime_error(std::string("backward: non-finite gradient in ") + name);
        };
        check(w_q, "W_q");
        check(b_q, "b_q");
        check(w_k, "W_k");
        check(b_k, "b_k");
        check(w_v, "W_v");
        check(b_v, "b_v");
    }
};

/// Mean over all H*W*C elements of the squared difference.
inline double l2_loss(const Grid& aligned, const Grid& target) {
    if (!aligned.same_shape(target)) throw std::invalid_argument("l2_loss: shape mismatch");
    double acc = 0.0;
    const auto& a = aligned.data();
    const auto& t = target.data();
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(t[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

namespace detail {

inline void validate_instance(const AlignInstance& inst, const AlignModel& model) {
    if (!inst.current.same_shape(inst.reference) || !inst.current.same_shape(inst.target))
        throw std::invalid_argument("train: instance grids must share shape");
    if (!inst.flow.matches(inst.current))
        throw std::invalid_argument("train: flow shape mismatch");
    if (inst.current.channels() != model.channels)
        throw std::invalid_argument("train: channels != model C");
}

// Loss of one instance under explicit float64 parameters. This is the
// forward path finite differences probe, so it has to stay in float64
// end to end.
inline double forward_loss(const AlignInstance& inst, const AlignModel& model, const Params64& p) {
    int C = model.channels;
    int H = inst.current.height();
    int W = inst.current.width();

    std::vector<double> out(C);
    double acc = 0.0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            OffsetParts off = decompose_offset(inst.flow.u(y, x), inst.flow.v(y, x));
            WindowSample win = extract_window(inst.reference, x, y, off.zx, off.zy, model);
            QuerySample query = make_query(inst.current, x, y, off.dx, off.dy, model);
            forward_pixel(query, win, model, p, out.data());
            const float* tgt = inst.target.pixel(y, x);
            for (int c = 0; c < C; ++c) {
                double d = out[c] - static_cast<double>(tgt[c]);
                acc += d * d;
            }
        }
    }
    return acc / (static_cast<double>(H) * W * C);
}

}  // namespace detail

/// Loss plus exact analytic gradients, by reverse-mode differentiation
/// through the linear encoders, the additive PE fusion (the encodings are
/// constants), the per-head softmax attention, and the pixel loop.
inline double backward(const AlignInstance& inst, const AlignModel& model, GradientSet& grads) {
    model.validate();
    detail::validate_instance(inst, model);

    int C = model.channels;
    int H = inst.current.height();
    int W = inst.current.width();
    int w2 = model.window * model.window;
    int h = model.heads;
    int dh = C / h;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    double inv_n = 1.0 / (static_cast<double>(H) * W * C);

    detail::Params64 p = detail::widen(model);
    grads.resize(C);

    std::vector<double> out(C), g_out(C), dq(C);
    std::vector<double> dk(static_cast<size_t>(w2) * C), dv(static_cast<size_t>(w2) * C);
    detail::PixelTape tape;
    double loss = 0.0;

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            OffsetParts off = decompose_offset(inst.flow.u(y, x), inst.flow.v(y, x));
            WindowSample win = extract_window(inst.reference, x, y, off.zx, off.zy, model);
            QuerySample query = make_query(inst.current, x, y, off.dx, off.dy, model);
            detail::forward_pixel(query, win, model, p, out.data(), &tape);

            const float* tgt = inst.target.pixel(y, x);
            for (int c = 0; c < C; ++c) {
                double d = out[c] - static_cast<double>(tgt[c]);
                loss += d * d * inv_n;
                g_out[c] = 2.0 * d * inv_n;
            }

            std::fill(dq.begin(), dq.end(), 0.0);
            std::fill(dk.begin(), dk.end(), 0.0);
            std::fill(dv.begin(), dv.end(), 0.0);

            for (int hh = 0; hh < h; ++hh) {
                int base = hh * dh;
                const double* a = tape.alpha.data() + static_cast<size_t>(hh) * w2;

                // d alpha_r = g . v_r (head dims); dv_r = alpha_r * g
                double dot = 0.0;
                std::vector<double> dalpha(w2);
                for (int r = 0; r < w2; ++r) {
                    const double* vr = tape.v.data() + static_cast<size_t>(r) * C + base;
                    double* dvr = dv.data() + static_cast<size_t>(r) * C + base;
                    double da = 0.0;
                    for (int d = 0; d < dh; ++d) {
                        da += g_out[base + d] * vr[d];
                        dvr[d] += a[r] * g_out[base + d];
                    }
                    dalpha[r] = da;
                    dot += a[r] * da;
                }
                // softmax backward: dl_r = alpha_r (dalpha_r - sum_s alpha_s dalpha_s)
                for (int r = 0; r < w2; ++r) {
                    double dl = a[r] * (dalpha[r] - dot) * scale;
                    const double* kr = tape.k.data() + static_cast<size_t>(r) * C + base;
                    double* dkr = dk.data() + static_cast<size_t>(r) * C + base;
                    for (int d = 0; d < dh; ++d) {
                        dq[base + d] += dl * kr[d];
                        dkr[d] += dl * tape.q[base + d];
                    }
                }
            }

            // Linear encoders: dW += dout (x) input, db += dout.
            for (int r = 0; r < C; ++r) {
                double g = dq[r];
                if (g != 0.0) {
                    double* wrow = grads.w_q.data() + static_cast<size_t>(r) * C;
                    for (int c = 0; c < C; ++c) wrow[c] += g * tape.e_q[c];
                }
                grads.b_q[r] += g;
            }
            for (int rr = 0; rr < w2; ++rr) {
                const double* srow = tape.s.data() + static_cast<size_t>(rr) * C;
                const double* dkr = dk.data() + static_cast<size_t>(rr) * C;
                const double* dvr = dv.data() + static_cast<size_t>(rr) * C;
                for (int r = 0; r < C; ++r) {
                    double gk = dkr[r];
                    double gv = dvr[r];
                    double* wkrow = grads.w_k.data() + static_cast<size_t>(r) * C;
                    double* wvrow = grads.w_v.data() + static_cast<size_t>(r) * C;
                    if (gk != 0.0)
                        for (int c = 0; c < C; ++c) wkrow[c] += gk * srow[c];
                    if (gv != 0.0)
                        for (int c = 0; c < C; ++c) wvrow[c] += gv * srow[c];
                    grads.b_k[r] += gk;
                    grads.b_v[r] += gv;
                }
            }
        }
    }

    grads.check_finite();
    return loss;
}

/// Central-difference check of `backward` on a deterministic subsample of
/// parameter coordinates (at least 200, evenly spaced). Returns the maximum
/// relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
inline double grad_check(const AlignModel& model, const AlignInstance& inst, double eps = 1e-4) {
    if (eps < 1e-6 || eps > 1e-2)
        throw std::invalid_argument("grad_check: eps must lie in [1e-6, 1e-2]");
    model.validate();
    detail::validate_instance(inst, model);

    GradientSet grads;
    backward(inst, model, grads);

    detail::Params64 p = detail::widen(model);
    std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> tensors = {
        {&p.w_q, &grads.w_q}, {&p.b_q, &grads.b_q}, {&p.w_k, &grads.w_k},
        {&p.b_k, &grads.b_k}, {&p.w_v, &grads.w_v}, {&p.b_v, &grads.b_v}};

    size_t total = 0;
    for (auto& [params, g] : tensors) total += params->size();
    size_t want = std::min<size_t>(total, 256);  // all coords for small models

    double max_rel = 0.0;
    size_t flat = 0;
    size_t picked = 0;
    for (auto& [params, g] : tensors) {
        for (size_t i = 0; i < params->size(); ++i, ++flat) {
            // Evenly spaced selection over the flattened parameter vector.
            if (picked >= want || flat * want < picked * total) continue;
            ++picked;

            double saved = (*params)[i];
            (*params)[i] = saved + eps;
            double lp = detail::forward_loss(inst, model, p);
            (*params)[i] = saved - eps;
            double lm = detail::forward_loss(inst, model, p);
            (*params)[i] = saved;

            double g_n = (lp - lm) / (2.0 * eps);
            double g_a = (*g)[i];
            double rel = std::abs(g_a - g_n) / std::max({std::abs(g_a), std::abs(g_n), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

/// Adam optimizer state. Moments are per-parameter float64 arrays.
struct AdamState {
    int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    GradientSet m, v;

    explicit AdamState(int channels = 0, double learning_rate = 1e-3)
        : lr(learning_rate), m(channels), v(channels) {}
};

namespace detail {

inline void adam_update(std::vector<double>& param, const std::vector<double>& grad,
                        std::vector<double>& m, std::vector<double>& v, const AdamState& st,
                        double lr) {
    double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < param.size(); ++i) {
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * grad[i];
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        double mhat = m[i] / c1;
        double vhat = v[i] / c2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

}  // namespace detail

/// Standard bias-corrected Adam update, applied in float64 and stored back
/// to the model's float32 tensors. `lr_override` < 0 means use state.lr.
inline void adam_step(AlignModel& model, const GradientSet& grads, AdamState& state,
                      double lr_override = -1.0) {
    detail::Params64 p = detail::widen(model);
    state.step += 1;
    double lr = lr_override >= 0.0 ? lr_override : state.lr;
    detail::adam_update(p.w_q, grads.w_q, state.m.w_q, state.v.w_q, state, lr);
    detail::adam_update(p.b_q, grads.b_q, state.m.b_q, state.v.b_q, state, lr);
    detail::adam_update(p.w_k, grads.w_k, state.m.w_k, state.v.w_k, state, lr);
    detail::adam_update(p.b_k, grads.b_k, state.m.b_k, state.v.b_k, state, lr);
    detail::adam_update(p.w_v, grads.w_v, state.m.w_v, state.v.w_v, state, lr);
    detail::adam_update(p.b_v, grads.b_v, state.m.b_v, state.v.b_v, state, lr);
    detail::store(p, model);
}

enum class LrSchedule { Constant, CosineTo1em7 };

struct FitOptions {
    int iterations = 500;
    double lr = 1e-3;
    uint64_t seed = 0;  // reserved for minibatch ordering; full batch is used
    LrSchedule schedule = LrSchedule::Constant;
};

struct FitResult {
    AlignModel model;
    std::vector<double> trace;  // pre-step loss per iteration
    bool diverged = false;
};

/// Full-batch Adam on the mean L2 loss over all instances. Deterministic
/// given config and seed; instances are visited in dataset order. Divergence
/// (non-finite loss) aborts and returns the trace so far.
inline FitResult fit(const AlignModel& model, const std::vector<AlignInstance>& dataset,
                     const FitOptions& opts) {
    if (dataset.empty()) throw std::invalid_argument("fit: dataset must not be empty");
    if (opts.iterations < 0) throw std::invalid_argument("fit: iterations must be >= 0");
    model.validate();
    for (const auto& inst : dataset) detail::validate_instance(inst, model);

    FitResult result;
    result.model = model;
    AdamState state(model.channels, opts.lr);
    GradientSet total(model.channels), per_instance(model.channels);
    double inv_count = 1.0 / static_cast<double>(dataset.size());

    for (int it = 0; it < opts.iterations; ++it) {
        total.resize(model.channels);
        double loss = 0.0;
        try {
            for (const auto& inst : dataset) {
                loss += backward(inst, result.model, per_instance) * inv_count;
                total.add_scaled(per_instance, inv_count);
            }
        } catch (const std::runtime_error&) {
            // numeric blow-up inside the forward/backward pass
            loss = std::numeric_limits<double>::quiet_NaN();
        }
        result.trace.push_back(loss);
        if (!std::isfinite(loss)) {
            result.diverged = true;
            return result;
        }
        double lr = opts.lr;
        if (opts.schedule == LrSchedule::CosineTo1em7 && opts.iterations > 1) {
            double t = static_cast<double>(it) / (opts.iterations - 1);
            lr = 1e-7 + 0.5 * (opts.lr - 1e-7) * (1.0 + std::cos(M_PI * t));
        }
        adam_step(result.model, total, state, lr);
    }
    return result;
}

}  // namespace ia
