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

#include "csirange/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "csirange/errors.hpp"
#include "csirange/simulator.hpp"

namespace csirange {

namespace {

void check_shapes(const std::vector<CsiRecord>& records, const OfdmConfig& cfg)
{
    for (const auto& r : records) {
        if (r.csi.n_k() != cfg.n_data())
            throw DomainError("record " + std::to_string(r.n) + " does not match the subcarrier grid");
        if (r.csi.n_rx() != records.front().csi.n_rx() || r.csi.n_ss() != records.front().csi.n_ss())
            throw DomainError("record " + std::to_string(r.n) + " has a different tensor shape");
    }
}

// Sum of csi(k) conj(csi(k-1)) over physically adjacent subcarriers.
Complex adjacent_sum(std::span<const Complex> s, const OfdmConfig& cfg)
{
    Complex acc(0.0, 0.0);
    for (std::size_t i = 1; i < s.size(); ++i)
        if (cfg.data_indices[i] - cfg.data_indices[i - 1] == 1)
            acc += s[i] * std::conj(s[i - 1]);
    return acc;
}

double slope_of(Complex acc)
{
    if (!(std::abs(acc) > 1e-300))
        throw EstimationError("phase slope undefined: stream has no energy");
    return -std::arg(acc);
}

void rotate_stream(std::span<Complex> s, const OfdmConfig& cfg, double slope)
{
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] *= std::polar(1.0, slope * cfg.data_indices[i]);
}

} // namespace

std::vector<CsiRecord> compensate_window(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                         const WindowCompensation& wc)
{
    check_shapes(records, cfg);
    std::vector<CsiRecord> out = records;
    if (wc.mode == WindowMode::None)
        return out;

    std::vector<Complex> factor(static_cast<std::size_t>(cfg.n_data()));
    if (wc.mode == WindowMode::Polynomial) {
        for (std::size_t i = 0; i < factor.size(); ++i) {
            const double k = cfg.data_indices[i];
            factor[i] = std::polar(1.0, -(wc.poly[0] * k * k * k + wc.poly[1] * k * k + wc.poly[2] * k));
        }
    } else {
        const auto w = wc.wtilde.empty() ? window_distortion(cfg, wc.window_alpha) : wc.wtilde;
        if (w.size() != factor.size())
            throw ConfigError("window compensation: wtilde length does not match the grid");
        for (std::size_t i = 0; i < factor.size(); ++i) {
            if (std::abs(w[i]) < 1e-12)
                throw DomainError("window compensation: |W(k)| below 1e-12 at k=" +
                                  std::to_string(cfg.data_indices[i]));
            factor[i] = 1.0 / w[i];
        }
    }
    for (auto& r : out)
        for (int rx = 0; rx < r.csi.n_rx(); ++rx)
            for (int ss = 0; ss < r.csi.n_ss(); ++ss) {
                auto s = r.csi.stream(rx, ss);
                for (std::size_t i = 0; i < s.size(); ++i)
                    s[i] *= factor[i];
            }
    return out;
}

double estimate_psi1_adjacent(const CsiRecord& rec, const OfdmConfig& cfg, int rx, int ss)
{
    return slope_of(adjacent_sum(rec.csi.stream(rx, ss), cfg));
}

double estimate_psi1_averaged(const CsiRecord& rec, const OfdmConfig& cfg)
{
    Complex acc(0.0, 0.0);
    for (int rx = 0; rx < rec.csi.n_rx(); ++rx)
        for (int ss = 0; ss < rec.csi.n_ss(); ++ss)
            acc += adjacent_sum(rec.csi.stream(rx, ss), cfg);
    return slope_of(acc);
}

CsiRecord derotate(const CsiRecord& rec, const OfdmConfig& cfg, double slope)
{
    CsiRecord out = rec;
    for (int rx = 0; rx < out.csi.n_rx(); ++rx)
        for (int ss = 0; ss < out.csi.n_ss(); ++ss)
            rotate_stream(out.csi.stream(rx, ss), cfg, slope);
    return out;
}

std::vector<CsiRecord> remove_linearity(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                        CalibrationReport& report, const LinearityOptions& opt)
{
    if (records.size() < 2)
        throw InsufficientDataError("linearity removal needs at least 2 packets");
    check_shapes(records, cfg);
    const int n_rx = records.front().csi.n_rx();
    const int n_ss = records.front().csi.n_ss();
    const double np = static_cast<double>(records.size());
    std::vector<CsiRecord> out = records;
    report.psi1_hat.assign(records.size(), 0.0);
    report.eps_ch_streams.clear();

    if (!opt.per_stream) {
        double sum = 0.0;
        for (std::size_t n = 0; n < records.size(); ++n) {
            report.psi1_hat[n] = estimate_psi1_averaged(records[n], cfg);
            sum += report.psi1_hat[n];
        }
        report.eps_ch = sum / np;
        for (std::size_t n = 0; n < records.size(); ++n)
            out[n] = derotate(records[n], cfg, report.psi1_hat[n] - report.eps_ch);
        return out;
    }

    const int n_streams = n_rx * n_ss;
    std::vector<double> psi(records.size() * n_streams);
    report.eps_ch_streams.assign(static_cast<std::size_t>(n_streams), 0.0);
    for (std::size_t n = 0; n < records.size(); ++n)
        for (int rx = 0; rx < n_rx; ++rx)
            for (int ss = 0; ss < n_ss; ++ss) {
                const int s = rx * n_ss + ss;
                const double v = estimate_psi1_adjacent(records[n], cfg, rx, ss);
                psi[n * n_streams + s] = v;
                report.eps_ch_streams[s] += v / np;
                report.psi1_hat[n] += v / n_streams;
            }
    report.eps_ch = 0.0;
    for (double e : report.eps_ch_streams)
        report.eps_ch += e / n_streams;
    for (std::size_t n = 0; n < records.size(); ++n)
        for (int rx = 0; rx < n_rx; ++rx)
            for (int ss = 0; ss < n_ss; ++ss) {
                const int s = rx * n_ss + ss;
                rotate_stream(out[n].csi.stream(rx, ss), cfg, psi[n * n_streams + s] - report.eps_ch_streams[s]);
            }
    return out;
}

int first_strong_peak(std::span<const double> pdp, double ratio)
{
    const int n = static_cast<int>(pdp.size());
    if (n == 0)
        throw DetectionError("empty power delay profile");
    const double mx = *std::max_element(pdp.begin(), pdp.end());
    if (!(mx > 0.0))
        throw DetectionError("power delay profile carries no energy");
    for (int m = 0; m < n; ++m) {
        const double v = pdp[m];
        if (v >= ratio * mx && v >= pdp[(m + n - 1) % n] && v >= pdp[(m + 1) % n])
            return m > n / 2 ? m - n : m;
    }
    // unreachable: the global maximum is itself a local maximum
    throw DetectionError("no peak found");
}

std::vector<CsiRecord> detect_sto(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                  CalibrationReport& report)
{
    check_shapes(records, cfg);
    std::map<int, int> votes;
    for (const auto& r : records)
        for (int rx = 0; rx < r.csi.n_rx(); ++rx)
            for (int ss = 0; ss < r.csi.n_ss(); ++ss) {
                const auto pdp = power_delay_profile(cfg, r.csi.stream(rx, ss));
                if (*std::max_element(pdp.begin(), pdp.end()) > 0.0)
                    ++votes[first_strong_peak(pdp)];
            }
    if (votes.empty())
        throw DetectionError("STO detection found no peaks");

    // std::map iterates ascending, so the first maximum is the smallest shift
    int best = votes.begin()->first, best_count = 0;
    for (const auto& [shift, count] : votes)
        if (count > best_count) {
            best = shift;
            best_count = count;
        }
    report.n_sto_hat = best;

    const double slope = kTwoPi * best / cfg.n_sc;
    std::vector<CsiRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(derotate(r, cfg, slope));
    return out;
}

int CleanedCsi::n_active() const
{
    return static_cast<int>(std::count(masked.begin(), masked.end(), std::uint8_t{0}));
}

CleanedCsi remove_cfo_weak_streams(const std::vector<CsiRecord>& records, CalibrationReport& report,
                                   double mask_ratio)
{
    if (records.empty())
        throw InsufficientDataError("CFO removal needs at least one packet");
    const auto& first = records.front().csi;
    for (const auto& r : records)
        if (r.csi.n_rx() != first.n_rx() || r.csi.n_ss() != first.n_ss() || r.csi.n_k() != first.n_k())
            throw DomainError("record " + std::to_string(r.n) + " has a different tensor shape");

    const std::size_t n_el = first.values().size();
    const double np = static_cast<double>(records.size());

    // Coarse phase offset of every packet against the first one. Per-element
    // phase differences are unwrapped around it, which pins the root to the
    // branch that keeps the product consistent across elements.
    std::vector<double> offset(records.size(), 0.0);
    for (std::size_t n = 1; n < records.size(); ++n) {
        Complex acc(0.0, 0.0);
        const auto a = records[n].csi.values();
        for (std::size_t i = 0; i < n_el; ++i)
            acc += a[i] * std::conj(first.values()[i]);
        offset[n] = std::arg(acc);
    }

    CleanedCsi out;
    out.csi = CsiTensor(first.n_rx(), first.n_ss(), first.n_k());
    auto dst = out.csi.values();
    for (std::size_t i = 0; i < n_el; ++i) {
        const double ref_phase = std::arg(first.values()[i]);
        double log_mag = 0.0, phase = 0.0;
        for (std::size_t n = 0; n < records.size(); ++n) {
            const Complex v = records[n].csi.values()[i];
            log_mag += std::log(std::max(std::abs(v), 1e-15));
            if (n > 0)
                phase += offset[n] + dsp::wrap_to_pi(std::arg(v) - ref_phase - offset[n]);
        }
        dst[i] = std::polar(std::exp(log_mag / np), ref_phase + phase / np);
    }

    const double total = out.csi.frobenius_norm();
    out.masked.assign(static_cast<std::size_t>(out.csi.n_streams()), 0);
    report.masked_streams.clear();
    for (int rx = 0; rx < out.csi.n_rx(); ++rx)
        for (int ss = 0; ss < out.csi.n_ss(); ++ss) {
            double e = 0.0;
            for (const auto& v : out.csi.stream(rx, ss))
                e += std::norm(v);
            if (!(total > 0.0) || std::sqrt(e) / total < mask_ratio) {
                out.masked[static_cast<std::size_t>(rx * out.csi.n_ss() + ss)] = 1;
                report.masked_streams.emplace_back(rx, ss);
            }
        }
    report.n_eff = static_cast<int>(records.size());
    return out;
}

dsp::LineFit phase_line(std::span<const Complex> stream, const OfdmConfig& cfg)
{
    std::vector<double> ph(stream.size()), k(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        ph[i] = std::arg(stream[i]);
        k[i] = cfg.data_indices[i];
    }
    return dsp::fit_line(k, dsp::unwrap(ph));
}

PhaseDiffStats phase_diff_stats(const std::vector<CsiRecord>& records, const OfdmConfig& cfg, int rx, int ss)
{
    if (records.size() < 2)
        throw InsufficientDataError("phase statistics need at least 2 packets");
    check_shapes(records, cfg);
    PhaseDiffStats st;
    std::vector<Complex> d(static_cast<std::size_t>(cfg.n_data()));
    for (std::size_t n = 1; n < records.size(); ++n) {
        const auto a = records[n].csi.stream(rx, ss);
        const auto b = records[n - 1].csi.stream(rx, ss);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = a[i] * std::conj(b[i]);
        const auto fit = phase_line(d, cfg);
        st.delta_psi1.push_back(-fit.slope);
        st.delta_psi2.push_back(dsp::wrap_to_pi(-fit.intercept));
    }
    auto moments = [](const std::vector<double>& x, double& mean, double& var) {
        mean = 0.0;
        for (double v : x)
            mean += v;
        mean /= x.size();
        var = 0.0;
        for (double v : x)
            var += (v - mean) * (v - mean);
        var = x.size() > 1 ? var / (x.size() - 1) : 0.0;
    };
    moments(st.delta_psi1, st.mean_psi1, st.var_psi1);
    moments(st.delta_psi2, st.mean_psi2, st.var_psi2);
    return st;
}

CalibrationResult calibrate(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                            const CalibrationOptions& opt)
{
    CalibrationResult res;
    const auto windowed = compensate_window(records, cfg, opt.window);
    const auto linear = remove_linearity(windowed, cfg, res.report, opt.linearity);
    res.aligned = detect_sto(linear, cfg, res.report);
    res.cleaned = remove_cfo_weak_streams(res.aligned, res.report, opt.mask_ratio);
    return res;
}

std::string to_string(WindowMode m)
{
    switch (m) {
    case WindowMode::None:
        return "none";
    case WindowMode::Polynomial:
        return "poly";
    default:
        return "known";
    }
}

WindowMode window_mode_from_string(const std::string& s)
{
    if (s == "none")
        return WindowMode::None;
    if (s == "poly" || s == "polynomial")
        return WindowMode::Polynomial;
    if (s == "known" || s == "known_window")
        return WindowMode::KnownWindow;
    throw ConfigError("window mode: expected poly, known or none, got '" + s + "'");
}

} // namespace csirange
