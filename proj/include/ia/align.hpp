#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/encoding.hpp"
#include "ia/grid.hpp"
#include "ia/resample.hpp"
#include "ia/rng.hpp"

namespace ia {

/// Parameters of the implicit alignment operator: three single-layer
/// fully-connected encoders (query/key/value), multi-head window
/// cross-attention, and the positional-encoding configuration.
/// C must be divisible by the head count and by 4 (feature and encoding
/// dimensions coincide for additive fusion).
struct AlignModel {
    int channels = 0;  // C
    int heads = 1;     // h
    int window = 2;    // w
    EncodingConfig encoding{1};

    // Ablation switches: query PE on decimal offsets, window-index PE.
    bool pe_decimal = true;
    bool pe_window = true;

    std::vector<float> w_q, w_k, w_v;  // C x C, row-major
    std::vector<float> b_q, b_k, b_v;  // C

    void validate() const {
        if (channels < 4 || channels % 4 != 0)
            throw std::invalid_argument("AlignModel: C must be a positive multiple of 4");
        if (heads < 1 || channels % heads != 0)
            throw std::invalid_argument("AlignModel: C must be divisible by head count");
        if (window < 1) throw std::invalid_argument("AlignModel: window must be >= 1");
        if (encoding.dim() != channels)
            throw std::invalid_argument("AlignModel: encoding dim 4D must equal C");
        size_t n = static_cast<size_t>(channels) * channels;
        if (w_q.size() != n || w_k.size() != n || w_v.size() != n ||
            b_q.size() != static_cast<size_t>(channels) ||
            b_k.size() != static_cast<size_t>(channels) ||
            b_v.size() != static_cast<size_t>(channels))
            throw std::invalid_argument("AlignModel: parameter shapes do not match C");
    }
};

/// Fresh model with weights uniform in [-1/sqrt(C), 1/sqrt(C)] and zero
/// biases, deterministic in the seed.
inline AlignModel init_align_model(int channels, int window, int heads, uint64_t seed) {
    AlignModel m;
    m.channels = channels;
    m.heads = heads;
    m.window = window;
    m.encoding = EncodingConfig(channels / 4);

    size_t n = static_cast<size_t>(channels) * channels;
    m.w_q.resize(n);
    m.w_k.resize(n);
    m.w_v.resize(n);
    m.b_q.assign(channels, 0.0f);
    m.b_k.assign(channels, 0.0f);
    m.b_v.assign(channels, 0.0f);

    Rng rng(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(channels));
    for (auto* w : {&m.w_q, &m.w_k, &m.w_v})
        for (float& v : *w) v = static_cast<float>(rng.uniform(-bound, bound));

    m.validate();
    return m;
}

/// w x w reference window anchored at (x + z_x, y + z_y), with the relative
/// positional encodings gamma([i,j]/w). Rows are flattened j-major, i-minor,
/// offsets running from -floor(w/2) to w - floor(w/2) - 1.
struct WindowSample {
    int window = 0;
    int channels = 0;
    int enc_dim = 0;
    int anchor_x = 0;
    int anchor_y = 0;
    std::vector<double> values;     // (w*w) x C
    std::vector<double> encodings;  // (w*w) x 4D

    const double* value_row(int r) const { return values.data() + static_cast<size_t>(r) * channels; }
    const double* encoding_row(int r) const { return encodings.data() + static_cast<size_t>(r) * enc_dim; }
};

/// Query pixel value X_t plus its decimal-offset encoding gamma([dx,dy]/2w).
struct QuerySample {
    std::vector<double> value;     // C
    std::vector<double> encoding;  // 4D
};

struct EvalStats {
    uint64_t score_evals = 0;  // attention score evaluations, w^2 per pixel
};

inline WindowSample extract_window(const Grid& reference, int x, int y, int zx, int zy,
                                   const AlignModel& model) {
    int w = model.window;
    int C = reference.channels();
    int lo = w / 2;

    WindowSample win;
    win.window = w;
    win.channels = C;
    win.enc_dim = model.encoding.dim();
    win.anchor_x = x + zx;
    win.anchor_y = y + zy;
    win.values.resize(static_cast<size_t>(w) * w * C);
    win.encodings.resize(static_cast<size_t>(w) * w * win.enc_dim);

    for (int j = -lo; j < w - lo; ++j) {
        for (int i = -lo; i < w - lo; ++i) {
            int r = (j + lo) * w + (i + lo);
            int sy = detail::clamp_index(y + zy + j, reference.height());
            int sx = detail::clamp_index(x + zx + i, reference.width());
            const float* src = reference.pixel(sy, sx);
            double* dst = win.values.data() + static_cast<size_t>(r) * C;
            for (int c = 0; c < C; ++c) dst[c] = src[c];
            positional_encoding(static_cast<double>(i) / w, static_cast<double>(j) / w,
                                model.encoding,
                                win.encodings.data() + static_cast<size_t>(r) * win.enc_dim);
        }
    }
    return win;
}

inline QuerySample make_query(const Grid& current, int x, int y, float dx, float dy,
                              const AlignModel& model) {
    QuerySample q;
    int C = current.channels();
    q.value.resize(C);
    const float* src = current.pixel(y, x);
    for (int c = 0; c < C; ++c) q.value[c] = src[c];
    double denom = 2.0 * model.window;
    q.encoding = positional_encoding(dx / denom, dy / denom, model.encoding);
    return q;
}

namespace detail {

// Double-precision copies of the model parameters. All attention math runs
// in float64; float32 is a storage format only.
struct Params64 {
    std::vector<double> w_q, b_q, w_k, b_k, w_v, b_v;
};

inline Params64 widen(const AlignModel& m) {
    Params64 p;
    auto copy = [](const std::vector<float>& src, std::vector<double>& dst) {
        dst.assign(src.begin(), src.end());
    };
    copy(m.w_q, p.w_q);
    copy(m.b_q, p.b_q);
    copy(m.w_k, p.w_k);
    copy(m.b_k, p.b_k);
    copy(m.w_v, p.w_v);
    copy(m.b_v, p.b_v);
    return p;
}

inline void store(const Params64& p, AlignModel& m) {
    auto copy = [](const std::vector<double>& src, std::vector<float>& dst) {
        dst.assign(src.begin(), src.end());
    };
    copy(p.w_q, m.w_q);
    copy(p.b_q, m.b_q);
    copy(p.w_k, m.w_k);
    copy(p.b_k, m.b_k);
    copy(p.w_v, m.w_v);
    copy(p.b_v, m.b_v);
}

inline void matvec(const std::vector<double>& w, const double* x, const std::vector<double>& b,
                   int C, double* out) {
    for (int r = 0; r < C; ++r) {
        double acc = b[r];
        const double* row = w.data() + static_cast<size_t>(r) * C;
        for (int c = 0; c < C; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

// Per-pixel forward intermediates, kept for the manual backward pass.
struct PixelTape {
    std::vector<double> e_q;    // C, encoder input for Q
    std::vector<double> q;      // C
    std::vector<double> s;      // (w*w) x C, encoder inputs for K/V
    std::vector<double> k;      // (w*w) x C
    std::vector<double> v;      // (w*w) x C
    std::vector<double> alpha;  // heads x (w*w)
};

// One attention evaluation: Q from the query, K/V from the window rows,
// per-head scaled-dot-product softmax, convex combination of V rows.
inline void forward_pixel(const QuerySample& query, const WindowSample& win,
                          const AlignModel& model, const Params64& p, double* out,
                          PixelTape* tape = nullptr) {
    int C = model.channels;
    int w2 = win.window * win.window;
    int h = model.heads;
    int dh = C / h;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<double> e_q(query.value);
    if (model.pe_decimal)
        for (int c = 0; c < C; ++c) e_q[c] += query.encoding[c];

    std::vector<double> q(C);
    matvec(p.w_q, e_q.data(), p.b_q, C, q.data());

    std::vector<double> s(static_cast<size_t>(w2) * C);
    std::vector<double> k(static_cast<size_t>(w2) * C);
    std::vector<double> v(static_cast<size_t>(w2) * C);
    for (int r = 0; r < w2; ++r) {
        double* sr = s.data() + static_cast<size_t>(r) * C;
        const double* val = win.value_row(r);
        const double* pe = win.encoding_row(r);
        for (int c = 0; c < C; ++c) sr[c] = val[c] + (model.pe_window ? pe[c] : 0.0);
        matvec(p.w_k, sr, p.b_k, C, k.data() + static_cast<size_t>(r) * C);
        matvec(p.w_v, sr, p.b_v, C, v.data() + static_cast<size_t>(r) * C);
    }

    std::vector<double> alpha(static_cast<size_t>(h) * w2);
    std::vector<double> logits(w2);
    for (int hh = 0; hh < h; ++hh) {
        int base = hh * dh;
        double maxlogit = -std::numeric_limits<double>::infinity();
        for (int r = 0; r < w2; ++r) {
            double acc = 0.0;
            const double* kr = k.data() + static_cast<size_t>(r) * C + base;
            for (int d = 0; d < dh; ++d) acc += q[base + d] * kr[d];
            logits[r] = acc * scale;
            maxlogit = std::max(maxlogit, logits[r]);
        }
        double denom = 0.0;
        double* a = alpha.data() + static_cast<size_t>(hh) * w2;
        for (int r = 0; r < w2; ++r) {
            a[r] = std::exp(logits[r] - maxlogit);
            denom += a[r];
        }
        for (int r = 0; r < w2; ++r) a[r] /= denom;

        for (int d = 0; d < dh; ++d) {
            double acc = 0.0;
            for (int r = 0; r < w2; ++r) acc += a[r] * v[static_cast<size_t>(r) * C + base + d];
            out[base + d] = acc;
        }
    }

    for (int c = 0; c < C; ++c)
        if (!std::isfinite(out[c]))
            throw std::runtime_error("attend: non-finite attention output");

    if (tape) {
        tape->e_q = std::move(e_q);
        tape->q = std::move(q);
        tape->s = std::move(s);
        tape->k = std::move(k);
        tape->v = std::move(v);
        tape->alpha = std::move(alpha);
    }
}

}  // namespace detail

/// Single attention evaluation at one pixel. Output per head is a convex
/// combination of that head's V rows.
inline std::vector<double> attend(const QuerySample& query, const WindowSample& window,
                                  const AlignModel& model) {
    model.validate();
    if (static_cast<int>(query.value.size()) != model.channels ||
        window.channels != model.channels || window.window != model.window)
        throw std::invalid_argument("attend: query/window shapes do not match model");
    detail::Params64 p = detail::widen(model);
    std::vector<double> out(model.channels);
    detail::forward_pixel(query, window, model, p, out.data());
    return out;
}

/// Implicit resampling-based alignment: for every pixel the flow offset is
/// split into integral anchor and decimal residue, the anchor selects a
/// reference window, the residue is encoded into the query, and the aligned
/// value is produced by window cross-attention.
inline Grid align(const Grid& current, const Grid& reference, const FlowField& flow,
                  const AlignModel& model, EvalStats* stats = nullptr) {
    model.validate();
    if (!current.same_shape(reference))
        throw std::invalid_argument("align: current and reference shapes differ");
    if (!flow.matches(current)) throw std::invalid_argument("align: flow shape mismatch");
    if (current.channels() != model.channels)
        throw std::invalid_argument("align: grid channels != model C");

    detail::Params64 p = detail::widen(model);
    Grid aligned(current.height(), current.width(), current.channels());
    std::vector<double> out(model.channels);
    uint64_t evals = 0;

    for (int y = 0; y < current.height(); ++y) {
        for (int x = 0; x < current.width(); ++x) {
            OffsetParts off = decompose_offset(flow.u(y, x), flow.v(y, x));
            WindowSample win = extract_window(reference, x, y, off.zx, off.zy, model);
            QuerySample query = make_query(current, x, y, off.dx, off.dy, model);
            detail::forward_pixel(query, win, model, p, out.data());
            float* dst = aligned.pixel(y, x);
            for (int c = 0; c < model.channels; ++c) dst[c] = static_cast<float>(out[c]);
            evals += static_cast<uint64_t>(model.window) * model.window;
        }
    }
    if (stats) stats->score_evals = evals;
    return aligned;
}

// ---------------------------------------------------------------------------
// Model serialization: "IAV1", int32 C, D, w, h, then W_q,b_q,W_k,b_k,W_v,b_v
// as little-endian float32 row-major.

namespace detail {

inline void put_i32(std::ofstream& out, int32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff),
                    static_cast<uint8_t>((v >> 16) & 0xff), static_cast<uint8_t>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline int32_t get_i32(std::ifstream& in, const std::string& path) {
    uint8_t b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("model: " + path + ": truncated header");
    return static_cast<int32_t>(static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                                (static_cast<uint32_t>(b[2]) << 16) |
                                (static_cast<uint32_t>(b[3]) << 24));
}

inline void put_f32_array(std::ofstream& out, const std::vector<float>& a) {
    for (float v : a) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        uint8_t b[4] = {static_cast<uint8_t>(bits & 0xff), static_cast<uint8_t>((bits >> 8) & 0xff),
                        static_cast<uint8_t>((bits >> 16) & 0xff),
                        static_cast<uint8_t>((bits >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

inline void get_f32_array(std::ifstream& in, std::vector<float>& a, const std::string& path) {
    for (float& v : a) {
        uint8_t b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4))
            throw std::runtime_error("model: " + path + ": truncated payload");
        uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        std::memcpy(&v, &bits, 4);
    }
}

}  // namespace detail

inline void save_model(const AlignModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write("IAV1", 4);
    detail::put_i32(out, model.channels);
    detail::put_i32(out, model.encoding.bands);
    detail::put_i32(out, model.window);
    detail::put_i32(out, model.heads);
    detail::put_f32_array(out, model.w_q);
    detail::put_f32_array(out, model.b_q);
    detail::put_f32_array(out, model.w_k);
    detail::put_f32_array(out, model.b_k);
    detail::put_f32_array(out, model.w_v);
    detail::put_f32_array(out, model.b_v);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline AlignModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "IAV1", 4) != 0)
        throw std::runtime_error("model: " + path + ": bad magic (expected IAV1)");

    AlignModel m;
    m.channels = detail::get_i32(in, path);
    int bands = detail::get_i32(in, path);
    m.window = detail::get_i32(in, path);
    m.heads = detail::get_i32(in, path);
    if (m.channels < 4 || bands < 1 || 4 * bands != m.channels)
        throw std::runtime_error("model: " + path + ": inconsistent C/D header fields");
    m.encoding = EncodingConfig(bands);

    size_t n = static_cast<size_t>(m.channels) * m.channels;
    m.w_q.resize(n);
    m.b_q.resize(m.channels);
    m.w_k.resize(n);
    m.b_k.resize(m.channels);
    m.w_v.resize(n);
    m.b_v.resize(m.channels);
    detail::get_f32_array(in, m.w_q, path);
    detail::get_f32_array(in, m.b_q, path);
    detail::get_f32_array(in, m.w_k, path);
    detail::get_f32_array(in, m.b_k, path);
    detail::get_f32_array(in, m.w_v, path);
    detail::get_f32_array(in, m.b_v, path);
    m.validate();
    return m;
}

}  // namespace ia
