// SPDX-License-Identifier: Apache-2.0
//
// csirange - CSI calibration and super-resolution ranging toolkit
// Copyright (C) 2026 The csirange authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// csirange command-line front end: simulate, calibrate, estimate, pipeline, stats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csirange/calibration.hpp"
#include "csirange/errors.hpp"
#include "csirange/estimator.hpp"
#include "csirange/pipeline.hpp"
#include "csirange/simulator.hpp"
#include "csirange/trace_io.hpp"

using namespace csirange;
using io::Json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;

struct Common {
    std::string config;
    std::string in;
    std::string out;
    std::string truth;
    std::optional<std::uint64_t> seed;
    std::optional<int> sub_len;
    std::optional<double> grid_step_ns;
    bool fb = false;
    bool no_fb = false;
    std::string order;
    std::string window_mode;
    std::optional<double> mask_ratio;
    int verbose = 0;
};

Json load_config(const Common& c)
{
    if (c.config.empty())
        return Json::object();
    auto j = io::read_json_file(c.config);
    if (!j.is_object())
        throw ConfigError(c.config + ": expected a JSON object");
    return j;
}

void check_distinct(const std::vector<std::string>& paths)
{
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = i + 1; j < paths.size(); ++j)
            if (!paths[i].empty() && paths[i] == paths[j])
                throw ConfigError("input and output paths must differ ('" + paths[i] + "')");
}

Scenario scenario_from(const Json& cfg)
{
    Scenario sc;
    if (cfg.contains("scenario"))
        io::from_json(cfg.at("scenario"), sc, "scenario");
    return sc;
}

PipelineOptions options_from(const Json& cfg, const Common& c, const Json& trace_scenario)
{
    PipelineOptions opt;
    // the path-loss table defaults to the one that generated the trace
    if (trace_scenario.is_object() && trace_scenario.contains("path_loss"))
        io::from_json(Json{{"path_loss", trace_scenario.at("path_loss")}}, opt, "trace.scenario");
    io::from_json(cfg, opt, "");
    if (c.sub_len)
        opt.smoothing.sub_len = *c.sub_len;
    if (c.grid_step_ns)
        opt.smoothing.grid_step_s = *c.grid_step_ns * 1e-9;
    if (c.fb && c.no_fb)
        throw ConfigError("--fb and --no-fb are mutually exclusive");
    if (c.fb)
        opt.smoothing.use_fb = true;
    if (c.no_fb)
        opt.smoothing.use_fb = false;
    if (!c.order.empty()) {
        if (c.order == "auto") {
            opt.smoothing.model_order = 0;
        } else {
            try {
                std::size_t pos = 0;
                opt.smoothing.model_order = std::stoi(c.order, &pos);
                if (pos != c.order.size() || opt.smoothing.model_order < 1)
                    throw std::invalid_argument("order");
            } catch (const std::exception&) {
                throw ConfigError("--order: expected a positive integer or 'auto'");
            }
        }
    }
    if (!c.window_mode.empty())
        opt.calibration.window.mode = window_mode_from_string(c.window_mode);
    if (c.mask_ratio)
        opt.calibration.mask_ratio = *c.mask_ratio;
    if (trace_scenario.is_object() && trace_scenario.contains("baseband") &&
        trace_scenario.at("baseband").contains("window_alpha") && !cfg.contains("calibration"))
        opt.calibration.window.window_alpha = trace_scenario.at("baseband").at("window_alpha").get<double>();
    return opt;
}

std::string default_truth_path(const std::string& trace) { return trace + ".truth.json"; }

Json report_json(const PipelineResult& res, const std::optional<GroundTruth>& truth)
{
    Json rep{{"estimate", io::to_json(res.estimate)}, {"calibration", io::to_json(res.calibration.report)}};
    rep["calibration"].erase("psi1_hat");
    if (truth) {
        rep["truth"] = Json{{"distance_m", truth->distance_m},
                            {"error_m", res.estimate.d_hat_m - truth->distance_m},
                            {"abs_error_m", std::abs(res.estimate.d_hat_m - truth->distance_m)}};
    }
    return rep;
}

int cmd_simulate(const Common& c, double distance, double snr, int packets)
{
    if (!c.seed)
        throw ConfigError("simulate: --seed is required");
    if (c.out.empty())
        throw ConfigError("simulate: --out is required");
    const auto cfg = load_config(c);
    Scenario sc = scenario_from(cfg);
    sc.rng_seed = *c.seed;
    if (!std::isnan(distance))
        sc.distance_m = distance;
    if (!std::isnan(snr))
        sc.snr_db = snr;
    if (packets > 0)
        sc.n_packets = packets;
    const std::string truth = c.truth.empty() ? default_truth_path(c.out) : c.truth;
    check_distinct({c.config, c.out, truth});

    const auto trace = simulate_trace(sc);
    io::TraceFile tf;
    tf.ofdm = sc.ofdm;
    tf.mimo = sc.mimo;
    tf.scenario = io::to_json(sc);
    tf.records = trace.records;
    io::write_trace(c.out, tf);
    io::write_json_file(truth, io::truth_to_json(trace.truth));
    if (c.verbose)
        std::cerr << "wrote " << trace.records.size() << " packets to " << c.out << "\n";
    return 0;
}

int cmd_calibrate(const Common& c, const std::string& report_path)
{
    if (c.in.empty() || c.out.empty())
        throw ConfigError("calibrate: --in and --out are required");
    check_distinct({c.in, c.out, report_path, c.config});
    const auto cfg = load_config(c);
    auto tf = io::read_trace(c.in);
    if (tf.calibrated)
        throw ConfigError("calibrate: '" + c.in + "' is already calibrated");
    const auto opt = options_from(cfg, c, tf.scenario);
    auto res = calibrate(tf.records, tf.ofdm, opt.calibration);

    io::TraceFile outf;
    outf.ofdm = tf.ofdm;
    outf.mimo = tf.mimo;
    outf.scenario = tf.scenario;
    outf.calibrated = true;
    outf.cleaned = res.cleaned;
    outf.report = res.report;
    outf.records = std::move(res.aligned);
    io::write_trace(c.out, outf);
    if (!report_path.empty())
        io::write_json_file(report_path, io::to_json(res.report));
    return 0;
}

int cmd_estimate(const Common& c, const std::string& spectrum_path)
{
    if (c.in.empty() || c.out.empty())
        throw ConfigError("estimate: --in and --out are required");
    check_distinct({c.in, c.out, spectrum_path, c.config});
    const auto cfg = load_config(c);
    auto tf = io::read_trace(c.in);
    const auto opt = options_from(cfg, c, tf.scenario);
    if (tf.records.empty())
        throw InsufficientDataError("estimate: trace has no packets");

    CleanedCsi cleaned;
    std::vector<CsiRecord> aligned;
    if (tf.calibrated && tf.cleaned) {
        cleaned = *tf.cleaned;
        aligned = tf.records;
    } else {
        auto res = calibrate(tf.records, tf.ofdm, opt.calibration);
        cleaned = std::move(res.cleaned);
        aligned = std::move(res.aligned);
    }
    double rssi = 0.0;
    for (const auto& r : tf.records)
        rssi += r.rssi_db;
    rssi /= double(tf.records.size());
    const auto est = estimate_cleaned(cleaned, aligned, rssi, tf.ofdm, opt);
    Json out = io::to_json(est);
    out["smoothing"] = io::to_json(opt.smoothing);
    io::write_json_file(c.out, out);

    if (!spectrum_path.empty()) {
        std::ofstream os(spectrum_path);
        if (!os)
            throw ConfigError("cannot open '" + spectrum_path + "' for writing");
        os << "rx,ss,tau_s,distance_m,ps_value\n" << std::setprecision(10);
        for (int rx = 0; rx < cleaned.csi.n_rx(); ++rx)
            for (int ss = 0; ss < cleaned.csi.n_ss(); ++ss) {
                if (cleaned.is_masked(rx, ss))
                    continue;
                const auto ps = music_from_covariance(
                    smoothed_covariance(cleaned.csi.stream(rx, ss), tf.ofdm, opt.smoothing), tf.ofdm, opt.smoothing);
                for (std::size_t g = 0; g < ps.taus.size(); ++g)
                    os << rx << ',' << ss << ',' << ps.taus[g] << ',' << ps.taus[g] * kSpeedOfLight << ','
                       << ps.values[g] << '\n';
            }
    }
    return 0;
}

int cmd_pipeline(const Common& c, int batch, const std::string& ecdf_path)
{
    if (c.out.empty())
        throw ConfigError("pipeline: --out is required");
    const auto cfg = load_config(c);

    if (batch > 0) {
        if (!c.seed)
            throw ConfigError("pipeline: --batch needs --seed");
        check_distinct({c.config, c.out, ecdf_path});
        Scenario base = scenario_from(cfg);
        const auto opt = options_from(cfg, c, io::to_json(base));
        struct Row {
            std::uint64_t seed;
            double truth, est, err;
        };
        std::vector<Row> rows;
        for (int i = 0; i < batch; ++i) {
            Scenario sc = base;
            sc.rng_seed = *c.seed + static_cast<std::uint64_t>(i);
            const auto trace = simulate_trace(sc);
            const auto res = run_pipeline(trace.records, sc.ofdm, opt);
            rows.push_back({sc.rng_seed, sc.distance_m, res.estimate.d_hat_m,
                            std::abs(res.estimate.d_hat_m - sc.distance_m)});
        }
        std::vector<double> errs;
        for (const auto& r : rows)
            errs.push_back(r.err);
        std::sort(errs.begin(), errs.end());
        const double med = errs.size() % 2 ? errs[errs.size() / 2]
                                           : 0.5 * (errs[errs.size() / 2 - 1] + errs[errs.size() / 2]);
        Json rep{{"n_traces", batch}, {"median_abs_error_m", med}, {"max_abs_error_m", errs.back()}};
        io::write_json_file(c.out, rep);
        if (!ecdf_path.empty()) {
            std::ofstream os(ecdf_path);
            if (!os)
                throw ConfigError("cannot open '" + ecdf_path + "' for writing");
            std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.err < b.err; });
            os << "seed,distance_true_m,d_hat_m,abs_error_m,ecdf\n" << std::setprecision(10);
            for (std::size_t i = 0; i < rows.size(); ++i)
                os << rows[i].seed << ',' << rows[i].truth << ',' << rows[i].est << ',' << rows[i].err << ','
                   << double(i + 1) / rows.size() << '\n';
        }
        return 0;
    }

    if (c.in.empty())
        throw ConfigError("pipeline: --in (or --batch) is required");
    check_distinct({c.in, c.out, c.config, ecdf_path});
    auto tf = io::read_trace(c.in);
    if (tf.calibrated)
        throw ConfigError("pipeline: expects a raw trace, '" + c.in + "' is calibrated");
    const auto opt = options_from(cfg, c, tf.scenario);

    std::optional<GroundTruth> truth;
    const std::string truth_path = c.truth.empty() ? default_truth_path(c.in) : c.truth;
    if (std::ifstream(truth_path).good())
        truth = io::truth_from_json(io::read_json_file(truth_path));
    else if (!c.truth.empty())
        throw ConfigError("pipeline: cannot open truth file '" + c.truth + "'");

    const auto res = run_pipeline(tf.records, tf.ofdm, opt);
    io::write_json_file(c.out, report_json(res, truth));
    if (!ecdf_path.empty() && truth) {
        std::ofstream os(ecdf_path);
        os << "seed,distance_true_m,d_hat_m,abs_error_m,ecdf\n" << std::setprecision(10);
        const double err = std::abs(res.estimate.d_hat_m - truth->distance_m);
        os << "," << truth->distance_m << ',' << res.estimate.d_hat_m << ',' << err << ",1\n";
    }
    if (c.verbose)
        std::cerr << "d_hat = " << res.estimate.d_hat_m << " m\n";
    return 0;
}

int cmd_stats(const Common& c, int rx, int ss, int bins, const std::string& hist_path, const std::string& summary)
{
    if (c.in.empty() || c.out.empty())
        throw ConfigError("stats: --in and --out are required");
    if (bins < 1)
        throw ConfigError("stats: --bins must be >= 1");
    check_distinct({c.in, c.out, hist_path, summary});
    const auto tf = io::read_trace(c.in);
    if (rx < 0 || rx >= tf.mimo.n_rx || ss < 0 || ss >= tf.mimo.n_ss)
        throw ConfigError("stats: --rx/--ss outside the trace dimensions");
    const auto st = phase_diff_stats(tf.records, tf.ofdm, rx, ss);

    std::ofstream os(c.out);
    if (!os)
        throw ConfigError("cannot open '" + c.out + "' for writing");
    os << "pair,delta_psi1,delta_psi2\n" << std::setprecision(12);
    for (std::size_t i = 0; i < st.delta_psi1.size(); ++i)
        os << i << ',' << st.delta_psi1[i] << ',' << st.delta_psi2[i] << '\n';

    const double n = double(st.delta_psi1.size());
    Json sum{{"pairs", st.delta_psi1.size()},
             {"delta_psi1", {{"mean", st.mean_psi1}, {"var", st.var_psi1}, {"stderr", std::sqrt(st.var_psi1 / n)}}},
             {"delta_psi2", {{"mean", st.mean_psi2}, {"var", st.var_psi2}, {"stderr", std::sqrt(st.var_psi2 / n)}}}};
    if (!summary.empty())
        io::write_json_file(summary, sum);
    else
        std::cout << sum.dump(2) << '\n';

    if (!hist_path.empty()) {
        std::ofstream hs(hist_path);
        if (!hs)
            throw ConfigError("cannot open '" + hist_path + "' for writing");
        hs << "variable,bin_lo,bin_hi,count\n" << std::setprecision(12);
        auto emit = [&](const char* name, const std::vector<double>& x) {
            double lo = *std::min_element(x.begin(), x.end());
            double hi = *std::max_element(x.begin(), x.end());
            if (hi <= lo) {
                lo -= 0.5;
                hi += 0.5;
            }
            std::vector<int> count(static_cast<std::size_t>(bins), 0);
            for (double v : x)
                ++count[std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins))];
            for (int b = 0; b < bins; ++b)
                hs << name << ',' << lo + (hi - lo) * b / bins << ',' << lo + (hi - lo) * (b + 1) / bins << ','
                   << count[b] << '\n';
        };
        emit("delta_psi1", st.delta_psi1);
        emit("delta_psi2", st.delta_psi2);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"CSI calibration and super-resolution ranging"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON config (scenario, smoothing, calibration, estimator, path_loss)");
        sub->add_option("--out", c.out, "output path");
        sub->add_flag("-v,--verbose", c.verbose, "progress on stderr");
    };
    auto add_estimation = [&](CLI::App* sub) {
        sub->add_option("--sub-len", c.sub_len, "subarray length");
        sub->add_option("--grid-step-ns", c.grid_step_ns, "pseudo-spectrum scan step in ns");
        sub->add_flag("--fb", c.fb, "forward-backward smoothing on");
        sub->add_flag("--no-fb", c.no_fb, "forward-backward smoothing off");
        sub->add_option("--order", c.order, "model order: positive integer or auto");
    };
    auto add_calibration = [&](CLI::App* sub) {
        sub->add_option("--window-mode", c.window_mode, "poly, known or none");
        sub->add_option("--mask-ratio", c.mask_ratio, "weak-stream mask ratio");
    };

    double distance = std::nan(""), snr = std::nan("");
    int packets = 0;
    auto* sim = app.add_subcommand("simulate", "synthesize a CSI trace and its ground-truth sidecar");
    add_common(sim);
    sim->add_option("--seed", c.seed, "RNG seed (required)");
    sim->add_option("--truth", c.truth, "sidecar path (default <out>.truth.json)");
    sim->add_option("--distance", distance, "override scenario.distance_m");
    sim->add_option("--snr", snr, "override scenario.snr_db");
    sim->add_option("--packets", packets, "override scenario.n_packets");

    std::string report_path;
    auto* cal = app.add_subcommand("calibrate", "window compensation, SFO, STO and CFO removal");
    add_common(cal);
    add_calibration(cal);
    cal->add_option("--in", c.in, "raw trace");
    cal->add_option("--report", report_path, "calibration report JSON");

    std::string spectrum_path;
    auto* est = app.add_subcommand("estimate", "MUSIC ranging, fusion and hypothesis resolution");
    add_common(est);
    add_estimation(est);
    add_calibration(est);
    est->add_option("--in", c.in, "calibrated or raw trace");
    est->add_option("--spectrum", spectrum_path, "pseudo-spectrum CSV");

    int batch = 0;
    std::string ecdf_path;
    auto* pipe = app.add_subcommand("pipeline", "calibrate and estimate, with error against the sidecar");
    add_common(pipe);
    add_estimation(pipe);
    add_calibration(pipe);
    pipe->add_option("--in", c.in, "raw trace");
    pipe->add_option("--truth", c.truth, "ground-truth sidecar (default <in>.truth.json if present)");
    pipe->add_option("--seed", c.seed, "first seed for --batch");
    pipe->add_option("--batch", batch, "simulate and process this many seeded traces");
    pipe->add_option("--ecdf", ecdf_path, "ECDF CSV of absolute errors");

    int rx = 0, ss = 0, bins = 32;
    std::string hist_path, summary_path;
    auto* stats = app.add_subcommand("stats", "consecutive-packet phase statistics");
    add_common(stats);
    stats->add_option("--in", c.in, "trace");
    stats->add_option("--rx", rx, "receive antenna");
    stats->add_option("--ss", ss, "spatial stream");
    stats->add_option("--bins", bins, "histogram bins");
    stats->add_option("--hist", hist_path, "histogram CSV");
    stats->add_option("--summary", summary_path, "summary JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim)
            return cmd_simulate(c, distance, snr, packets);
        if (*cal)
            return cmd_calibrate(c, report_path);
        if (*est)
            return cmd_estimate(c, spectrum_path);
        if (*pipe)
            return cmd_pipeline(c, batch, ecdf_path);
        if (*stats)
            return cmd_stats(c, rx, ss, bins, hist_path, summary_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FusionError& e) {
        std::cerr << "fusion error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEstimation;
    }
    return 0;
}
