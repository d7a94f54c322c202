#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/align.hpp"
#include "ia/config.hpp"
#include "ia/metrics.hpp"
#include "ia/resample.hpp"
#include "ia/synth.hpp"
#include "ia/train.hpp"

namespace ia {

/// Driver settings for the alignment study and its ablations.
struct ExperimentConfig {
    AnalyticImage scene;
    int height = 16;
    int width = 16;
    std::vector<double> shifts;            // applied as (shift, 0)
    std::vector<std::string> methods;      // nearest | bilinear | bicubic | implicit
    double peak = 1.0;

    // implicit-alignment settings
    int window = 2;
    int heads = 2;
    int iterations = 500;
    double lr = 1e-2;
    uint64_t seed = 11;
    bool pe_decimal = true;
    bool pe_window = true;
    LrSchedule schedule = LrSchedule::Constant;

    std::vector<int> ablation_windows = {1, 2, 3, 4};
    std::string out_dir;  // optional; loss traces are written here when set

    void validate() const {
        scene.validate();
        if (methods.empty()) throw std::invalid_argument("config: methods must not be empty");
        if (shifts.empty()) throw std::invalid_argument("config: shifts must not be empty");
        for (const auto& m : methods) {
            if (m != "nearest" && m != "bilinear" && m != "bicubic" && m != "implicit")
                throw std::invalid_argument("config: unknown method '" + m + "'");
            if (m == "implicit" && scene.channels % 4 != 0)
                throw std::invalid_argument("config: implicit method needs channels divisible by 4");
        }
    }
};

struct ReportRow {
    std::string method;
    double shift = 0.0;
    double psnr_db = 0.0;
    double ssim_val = 0.0;
    double attenuation = 1.0;
    uint64_t score_evals = 0;
    int train_iterations = 0;
    bool diverged = false;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
};

inline constexpr const char* kReportCsvHeader =
    "method,shift,psnr_db,ssim,attenuation,score_evals,train_iterations,status";
inline constexpr const char* kReportVersion = "ia-report v1";

namespace detail {

// Amplitude of the least-squares sin/cos fit at frequency (fx, fy) over the
// interior (margin pixels excluded per side), averaged over channels.
inline double fit_amplitude(const Grid& g, double fx, double fy, int margin) {
    int y0 = std::min(margin, std::max(0, g.height() / 2 - 1));
    int x0 = std::min(margin, std::max(0, g.width() / 2 - 1));
    double total = 0.0;
    for (int c = 0; c < g.channels(); ++c) {
        double sss = 0.0, scc = 0.0, ssc = 0.0, ssy = 0.0, scy = 0.0;
        for (int y = y0; y < g.height() - y0; ++y) {
            for (int x = x0; x < g.width() - x0; ++x) {
                double arg = 2.0 * M_PI * (fx * x + fy * y);
                double s = std::sin(arg), co = std::cos(arg);
                double v = g.at(y, x, c);
                sss += s * s;
                scc += co * co;
                ssc += s * co;
                ssy += s * v;
                scy += co * v;
            }
        }
        double det = sss * scc - ssc * ssc;
        if (std::abs(det) < 1e-9) return -1.0;  // degenerate basis
        double A = (scc * ssy - ssc * scy) / det;
        double B = (sss * scy - ssc * ssy) / det;
        total += std::hypot(A, B);
    }
    return total / g.channels();
}

inline double rms(const Grid& g, int margin) {
    int y0 = std::min(margin, std::max(0, g.height() / 2 - 1));
    int x0 = std::min(margin, std::max(0, g.width() / 2 - 1));
    double acc = 0.0;
    long n = 0;
    for (int c = 0; c < g.channels(); ++c)
        for (int y = y0; y < g.height() - y0; ++y)
            for (int x = x0; x < g.width() - x0; ++x, ++n) acc += g.at(y, x, c) * g.at(y, x, c);
    return n > 0 ? std::sqrt(acc / n) : 0.0;
}

}  // namespace detail

/// Amplitude ratio of `out` against `target` at the scene's primary
/// frequency (component 0 of channel 0). Falls back to an interior RMS
/// ratio when the scene carries no clean primary sinusoid.
inline double attenuation_ratio(const Grid& out, const Grid& target, const AnalyticImage& scene,
                                int margin = 4) {
    if (!scene.components.empty() && !scene.components[0].empty()) {
        const auto& comp = scene.components[0][0];
        double at = detail::fit_amplitude(target, comp.freq_x, comp.freq_y, margin);
        double ao = detail::fit_amplitude(out, comp.freq_x, comp.freq_y, margin);
        if (at > 1e-9 && ao >= 0.0) return ao / at;
    }
    double rt = detail::rms(target, margin);
    if (rt == 0.0) return 1.0;
    return detail::rms(out, margin) / rt;
}

namespace detail {

inline ReportRow classical_row(const std::string& method, ResampleMethod m, double shift,
                               const AlignInstance& inst, const ExperimentConfig& cfg) {
    Grid aligned = backward_warp(inst.reference, inst.flow, m);
    ReportRow row;
    row.method = method;
    row.shift = shift;
    row.psnr_db = psnr(aligned, inst.target, cfg.peak);
    row.ssim_val = ssim(aligned, inst.target, cfg.peak);
    row.attenuation = attenuation_ratio(aligned, inst.target, cfg.scene);
    return row;
}

inline void write_trace(const std::string& out_dir, const std::string& tag,
                        const std::vector<double>& trace) {
    if (out_dir.empty()) return;
    std::ofstream out(out_dir + "/loss_" + tag + ".csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write loss trace in " + out_dir);
    out << "iteration,loss\n";
    char buf[64];
    for (size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9e\n", i, trace[i]);
        out << buf;
    }
}

inline ReportRow implicit_row(const std::string& method, double shift, const AlignInstance& inst,
                              const ExperimentConfig& cfg, int window, bool pe_decimal,
                              bool pe_window, const std::string& trace_tag) {
    AlignModel model = init_align_model(inst.current.channels(), window, cfg.heads, cfg.seed);
    model.pe_decimal = pe_decimal;
    model.pe_window = pe_window;

    FitOptions opts;
    opts.iterations = cfg.iterations;
    opts.lr = cfg.lr;
    opts.seed = cfg.seed;
    opts.schedule = cfg.schedule;
    FitResult fitres = fit(model, {inst}, opts);
    write_trace(cfg.out_dir, trace_tag, fitres.trace);

    EvalStats stats;
    Grid aligned = align(inst.current, inst.reference, inst.flow, fitres.model, &stats);

    ReportRow row;
    row.method = method;
    row.shift = shift;
    row.psnr_db = psnr(aligned, inst.target, cfg.peak);
    row.ssim_val = ssim(aligned, inst.target, cfg.peak);
    row.attenuation = attenuation_ratio(aligned, inst.target, cfg.scene);
    row.score_evals = stats.score_evals;
    row.train_iterations = static_cast<int>(fitres.trace.size());
    row.diverged = fitres.diverged;
    return row;
}

}  // namespace detail

/// Runs every configured method on every shift of the synthetic scene.
/// Classical methods warp the reference by the ground-truth flow; the
/// implicit method is trained on the instance first. Fully deterministic.
inline ExperimentReport run_study(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    for (size_t si = 0; si < cfg.shifts.size(); ++si) {
        double shift = cfg.shifts[si];
        AlignInstance inst =
            make_pair(cfg.scene, cfg.height, cfg.width, shift, 0.0, cfg.scene.seed);
        for (const auto& method : cfg.methods) {
            if (method == "nearest")
                report.rows.push_back(
                    detail::classical_row(method, ResampleMethod::Nearest, shift, inst, cfg));
            else if (method == "bilinear")
                report.rows.push_back(
                    detail::classical_row(method, ResampleMethod::Bilinear, shift, inst, cfg));
            else if (method == "bicubic")
                report.rows.push_back(
                    detail::classical_row(method, ResampleMethod::Bicubic, shift, inst, cfg));
            else
                report.rows.push_back(detail::implicit_row(
                    method, shift, inst, cfg, cfg.window, cfg.pe_decimal, cfg.pe_window,
                    "implicit_shift" + std::to_string(si)));
        }
    }
    return report;
}

/// Positional-encoding grid {decimal off/on} x {window off/on} plus a window
/// size sweep, every cell trained independently with the shared seed.
inline ExperimentReport run_ablation(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    struct PeCell {
        const char* tag;
        bool pe_decimal, pe_window;
    };
    const PeCell pe_grid[] = {{"implicit_pe_none", false, false},
                              {"implicit_pe_decimal", true, false},
                              {"implicit_pe_window", false, true},
                              {"implicit_pe_both", true, true}};
    for (size_t si = 0; si < cfg.shifts.size(); ++si) {
        double shift = cfg.shifts[si];
        AlignInstance inst =
            make_pair(cfg.scene, cfg.height, cfg.width, shift, 0.0, cfg.scene.seed);
        for (const auto& cell : pe_grid)
            report.rows.push_back(detail::implicit_row(
                cell.tag, shift, inst, cfg, cfg.window, cell.pe_decimal, cell.pe_window,
                std::string(cell.tag) + "_shift" + std::to_string(si)));
        for (int w : cfg.ablation_windows)
            report.rows.push_back(detail::implicit_row(
                "implicit_w" + std::to_string(w), shift, inst, cfg, w, true, true,
                "implicit_w" + std::to_string(w) + "_shift" + std::to_string(si)));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization. CSV for consumption, .dat for gnuplot.

namespace detail {

inline std::string format_metric(double v, const char* fmt = "%.6f") {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

inline std::string row_fields(const ReportRow& r, char sep) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s%c%s%c%s%c%s%c%s%c%llu%c%d%c%s", r.method.c_str(), sep,
                  format_metric(r.shift, "%.4f").c_str(), sep, format_metric(r.psnr_db).c_str(),
                  sep, format_metric(r.ssim_val).c_str(), sep,
                  format_metric(r.attenuation).c_str(), sep,
                  static_cast<unsigned long long>(r.score_evals), sep, r.train_iterations, sep,
                  r.diverged ? "diverged" : "ok");
    return buf;
}

}  // namespace detail

inline std::string report_to_csv(const ExperimentReport& report) {
    std::string out = std::string("# ") + kReportVersion + "\n" + kReportCsvHeader + "\n";
    for (const auto& row : report.rows) out += detail::row_fields(row, ',') + "\n";
    return out;
}

/// Gnuplot-friendly layout: whitespace-separated columns, '#' header.
inline std::string report_to_dat(const ExperimentReport& report) {
    std::string header = kReportCsvHeader;
    for (char& c : header)
        if (c == ',') c = ' ';
    std::string out = std::string("# ") + kReportVersion + "\n# " + header + "\n";
    for (const auto& row : report.rows) out += detail::row_fields(row, ' ') + "\n";
    return out;
}

inline void write_report(const ExperimentReport& report, const std::string& out_dir) {
    auto dump = [&](const std::string& name, const std::string& text) {
        std::ofstream out(out_dir + "/" + name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + name + " in " + out_dir);
        out << text;
    };
    dump("report.csv", report_to_csv(report));
    dump("report.dat", report_to_dat(report));
}

// ---------------------------------------------------------------------------
// Experiment config file: [study] + [implicit] sections; the scene comes
// from `scene = <path>` or an inline [scene] section.

inline AnalyticImage scene_from_config(const Config& cfg) {
    AnalyticImage img;
    img.channels = cfg.get_int_or("scene", "channels", 1);
    img.seed = static_cast<uint64_t>(cfg.get_int_or("scene", "seed", 0));
    img.noise_components = cfg.get_int_or("scene", "noise_components", 0);
    img.noise_cutoff = cfg.get_double_or("scene", "noise_cutoff", 0.4);
    img.noise_amplitude = cfg.get_double_or("scene", "noise_amplitude", 0.0);
    img.components.resize(img.channels);
    for (const auto& line : cfg.get_all("scene", "component")) {
        auto toks = Config::split_list(line);
        if (toks.size() != 5)
            throw std::runtime_error("config: component wants 'channel, amplitude, freq_x, freq_y, phase'");
        int channel = static_cast<int>(std::stol(toks[0]));
        if (channel < 0 || channel >= img.channels)
            throw std::runtime_error("config: component channel out of range");
        img.components[channel].push_back(
            {std::stod(toks[1]), std::stod(toks[2]), std::stod(toks[3]), std::stod(toks[4])});
    }
    img.validate();
    return img;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    Config cfg = Config::parse_file(path);
    ExperimentConfig ec;
    if (cfg.has("study", "scene"))
        ec.scene = load_scene(cfg.get("study", "scene"));
    else
        ec.scene = scene_from_config(cfg);

    ec.height = cfg.get_int("study", "height");
    ec.width = cfg.get_int("study", "width");
    ec.shifts = cfg.get_double_list("study", "shifts");
    for (const auto& m : Config::split_list(cfg.get("study", "methods"))) ec.methods.push_back(m);
    ec.peak = cfg.get_double_or("study", "peak", 1.0);

    ec.window = cfg.get_int_or("implicit", "window", 2);
    ec.heads = cfg.get_int_or("implicit", "heads", 2);
    ec.iterations = cfg.get_int_or("implicit", "iterations", 500);
    ec.lr = cfg.get_double_or("implicit", "lr", 1e-2);
    ec.seed = static_cast<uint64_t>(cfg.get_int_or("implicit", "seed", 11));
    ec.pe_decimal = cfg.get_bool_or("implicit", "pe_decimal", true);
    ec.pe_window = cfg.get_bool_or("implicit", "pe_window", true);
    std::string sched = cfg.get_or("implicit", "schedule", "constant");
    if (sched == "constant")
        ec.schedule = LrSchedule::Constant;
    else if (sched == "cosine")
        ec.schedule = LrSchedule::CosineTo1em7;
    else
        throw std::runtime_error("config: unknown schedule '" + sched + "'");
    if (cfg.has("ablation", "window_sizes")) {
        ec.ablation_windows.clear();
        for (double w : cfg.get_double_list("ablation", "window_sizes"))
            ec.ablation_windows.push_back(static_cast<int>(w));
    }
    ec.validate();
    return ec;
}

}  // namespace ia
