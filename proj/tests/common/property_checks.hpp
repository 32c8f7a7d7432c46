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

#pragma once

// Randomized property checks shared by the unit tests and the acceptance run.
// Each returns the number of failing instances out of `n`.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "csirange/calibration.hpp"
#include "csirange/estimator.hpp"
#include "csirange/pipeline.hpp"
#include "csirange/simulator.hpp"

namespace csirange::props {

inline std::vector<Complex> random_stream(const OfdmConfig& cfg, Rng& rng)
{
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> taps(1, 5);
    std::uniform_real_distribution<double> delay(0.0, 200e-9);
    MultipathChannel ch(1, 1);
    const int n = taps(rng);
    for (int i = 0; i < n; ++i)
        ch.taps(0, 0).push_back({delay(rng), Complex(g(rng), g(rng))});
    std::sort(ch.taps(0, 0).begin(), ch.taps(0, 0).end(), [](const Tap& a, const Tap& b) { return a.tau < b.tau; });
    auto h = channel_cfr(cfg, ch, 0, 0);
    for (auto& v : h)
        v += 0.05 * Complex(g(rng), g(rng));
    return h;
}

inline SmoothingConfig random_smoothing(Rng& rng)
{
    SmoothingConfig sm;
    sm.sub_len = std::uniform_int_distribution<int>(4, 28)(rng);
    sm.use_fb = std::bernoulli_distribution(0.5)(rng);
    return sm;
}

/// Hermitian, persymmetric (with FB on) and positive semidefinite.
inline int covariance_failures(int n, std::uint64_t seed)
{
    const OfdmConfig cfg;
    Rng rng(seed);
    int bad = 0;
    for (int t = 0; t < n; ++t) {
        auto sm = random_smoothing(rng);
        const int snaps = std::uniform_int_distribution<int>(1, 20)(rng);
        std::vector<std::vector<Complex>> data;
        for (int s = 0; s < snaps; ++s)
            data.push_back(random_stream(cfg, rng));
        std::vector<std::span<const Complex>> views(data.begin(), data.end());
        const auto r = smoothed_covariance(views, cfg, sm);
        const double scale = r.norm();
        bool ok = (r - r.adjoint()).norm() <= 1e-12 * scale;
        if (sm.use_fb)
            ok = ok && (r - r.conjugate().reverse()).norm() <= 1e-12 * scale;
        ok = ok && hermitian_eig(r).values.minCoeff() >= -1e-10 * scale;
        bad += !ok;
    }
    return bad;
}

/// A global phase on every snapshot changes neither the pseudo-spectrum nor
/// the subchannel distance.
inline int spectrum_phase_failures(int n, std::uint64_t seed)
{
    const OfdmConfig cfg;
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    int bad = 0;
    for (int t = 0; t < n; ++t) {
        SmoothingConfig sm = random_smoothing(rng);
        sm.sub_len = std::max(sm.sub_len, 8);
        sm.grid_step_s = 2e-9;
        const auto a = random_stream(cfg, rng);
        auto b = a;
        const Complex rot = std::polar(1.0, u(rng));
        for (auto& v : b)
            v *= rot;
        PseudoSpectrum pa, pb;
        const double da = subchannel_distance({a}, cfg, sm, {}, &pa);
        const double db = subchannel_distance({b}, cfg, sm, {}, &pb);
        bool ok = pa.values.size() == pb.values.size() && std::abs(da - db) <= 1e-6;
        for (std::size_t i = 0; ok && i < pa.values.size(); ++i)
            ok = std::abs(pa.values[i] - pb.values[i]) <= 1e-6 * std::max(pa.values[i], 1.0);
        bad += !ok;
    }
    return bad;
}

/// RangeEstimate is unchanged when the cleaned tensor and every aligned packet
/// carry an extra global phase.
inline int range_phase_failures(int n, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    std::uniform_real_distribution<double> dist(2.0, 45.0);
    int bad = 0;
    for (int t = 0; t < n; ++t) {
        Scenario sc;
        sc.mimo = {2, 2, 2, 2};
        sc.distance_m = dist(rng);
        sc.nlos.n_taps = 2;
        sc.snr_db = 25.0;
        sc.n_packets = 20;
        sc.rng_seed = rng();
        const auto tr = simulate_trace(sc);
        PipelineOptions opt;
        opt.smoothing.grid_step_s = 2e-9;
        const auto cal = calibrate(tr.records, sc.ofdm, opt.calibration);
        auto cleaned = cal.cleaned;
        auto aligned = cal.aligned;
        const Complex rot = std::polar(1.0, u(rng));
        for (auto& v : cleaned.csi.values())
            v *= rot;
        for (auto& r : aligned)
            for (auto& v : r.csi.values())
                v *= rot;
        const double rssi = 40.0;
        const auto a = estimate_cleaned(cal.cleaned, cal.aligned, rssi, sc.ofdm, opt);
        const auto b = estimate_cleaned(cleaned, aligned, rssi, sc.ofdm, opt);
        bool ok = std::abs(a.d_hat_m - b.d_hat_m) <= 1e-6 && std::abs(a.d_base_m - b.d_base_m) <= 1e-6 &&
                  a.per_subchannel.size() == b.per_subchannel.size();
        for (std::size_t i = 0; ok && i < a.per_subchannel.size(); ++i)
            ok = std::abs(a.per_subchannel[i].weight - b.per_subchannel[i].weight) <= 1e-12;
        bad += !ok;
    }
    return bad;
}

/// derotate by s then by -s returns the record.
inline int derotate_failures(int n, std::uint64_t seed)
{
    const OfdmConfig cfg;
    Rng rng(seed);
    std::uniform_real_distribution<double> slope(-1.0, 1.0);
    int bad = 0;
    for (int t = 0; t < n; ++t) {
        CsiRecord r;
        r.csi = CsiTensor(2, 3, cfg.n_data());
        for (int rx = 0; rx < 2; ++rx)
            for (int ss = 0; ss < 3; ++ss) {
                const auto s = random_stream(cfg, rng);
                std::copy(s.begin(), s.end(), r.csi.stream(rx, ss).begin());
            }
        const double s = slope(rng);
        const auto back = derotate(derotate(r, cfg, s), cfg, -s);
        double err = 0.0;
        for (std::size_t i = 0; i < r.csi.values().size(); ++i)
            err = std::max(err, std::abs(back.csi.values()[i] - r.csi.values()[i]));
        bad += !(err <= 1e-12 * std::max(1.0, r.csi.frobenius_norm()));
    }
    return bad;
}

/// Fusion weights are non-negative and sum to one over retained subchannels.
inline int weight_failures(int n, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> gain(1e-3, 10.0), d(0.0, 60.0), jitter(-2.0, 2.0);
    int bad = 0;
    for (int t = 0; t < n; ++t) {
        const int n_rx = dim(rng), n_ss = dim(rng);
        CleanedCsi c;
        c.csi = CsiTensor(n_rx, n_ss, 56);
        c.masked.assign(static_cast<std::size_t>(n_rx * n_ss), 0);
        std::vector<SubchannelObservation> obs;
        for (int rx = 0; rx < n_rx; ++rx)
            for (int ss = 0; ss < n_ss; ++ss) {
                const double g = gain(rng);
                for (auto& v : c.csi.stream(rx, ss))
                    v = std::polar(g, d(rng));
                SubchannelObservation o{rx, ss, d(rng), {}};
                for (int b = 0; b < 5; ++b)
                    o.block_d_m.push_back(o.d_m + jitter(rng) * (rx + 1));
                obs.push_back(o);
            }
        if (n_rx * n_ss > 1)
            c.masked[0] = 1;
        const auto e = fuse(obs, c);
        double sum = 0.0;
        bool ok = true;
        for (const auto& r : e.per_subchannel) {
            ok = ok && r.weight >= 0.0 && (!r.rejected || r.weight == 0.0);
            sum += r.weight;
        }
        bad += !(ok && std::abs(sum - 1.0) <= 1e-12);
    }
    return bad;
}

} // namespace csirange::props
