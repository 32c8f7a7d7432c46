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

#include "csirange/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "csirange/errors.hpp"

namespace csirange {

namespace {

int wrap_bin(int k, int n) { return ((k % n) + n) % n; }

// exp(-2 pi i k x / n) with the exponent reduced before the trig call.
Complex ramp(int k, double x, int n) { return std::polar(1.0, -kTwoPi * std::remainder(k * x / n, 1.0)); }

double draw_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Number of packets until the next recalibration, geometric with the given mean.
int draw_interval(Rng& rng, double mean)
{
    if (mean <= 1.0)
        return 1;
    std::geometric_distribution<int> g(1.0 / mean);
    return 1 + g(rng);
}

struct Accumulator {
    double sigma = 0.0;
    double mean_interval = 1.0;
    double zeta = 0.0;
    int g = 0;
    int left = 0;

    double next(Rng& rng)
    {
        if (left <= 0) {
            zeta = std::normal_distribution<double>(0.0, sigma)(rng);
            g = 0;
            left = draw_interval(rng, mean_interval);
        }
        ++g;
        --left;
        return zeta * g;
    }
};

} // namespace

void BasebandOps::validate(const OfdmConfig& cfg, const MimoConfig& mimo) const
{
    if (static_cast<int>(delta_a.size()) != mimo.n_tx)
        throw ConfigError("baseband: delta_a needs one entry per tx chain");
    if (static_cast<int>(delta_b.size()) != mimo.n_ss)
        throw ConfigError("baseband: delta_b needs one entry per spatial stream");
    if (static_cast<int>(q.size()) != cfg.n_data())
        throw ConfigError("baseband: q needs one matrix per data subcarrier");
    if (!(window_alpha >= 0.0 && window_alpha <= 1.0))
        throw ConfigError("baseband: window_alpha must lie in [0, 1]");
    for (const auto& m : q) {
        if (static_cast<int>(m.size()) != mimo.n_tx * mimo.n_ss)
            throw ConfigError("baseband: q matrix has the wrong shape");
        for (int a = 0; a < mimo.n_ss; ++a)
            for (int b = 0; b < mimo.n_ss; ++b) {
                Complex dot(0.0, 0.0);
                for (int t = 0; t < mimo.n_tx; ++t)
                    dot += std::conj(m[t * mimo.n_ss + a]) * m[t * mimo.n_ss + b];
                if (std::abs(dot - Complex(a == b ? 1.0 : 0.0, 0.0)) > 1e-9)
                    throw ConfigError("baseband: q columns must be orthonormal");
            }
    }
}

BasebandOps make_baseband_ops(const OfdmConfig& cfg, const MimoConfig& mimo, const BasebandConfig& bb)
{
    BasebandOps ops;
    ops.delta_a = bb.delta_a.empty() ? std::vector<int>(mimo.n_tx, 0) : bb.delta_a;
    ops.delta_b = bb.delta_b.empty() ? std::vector<int>(mimo.n_ss, 0) : bb.delta_b;
    ops.window_alpha = bb.window_alpha;

    SpatialMapping mode = bb.mapping;
    if (mode == SpatialMapping::Auto)
        mode = mimo.n_ss == mimo.n_tx ? SpatialMapping::Identity : SpatialMapping::Dft;

    std::vector<Complex> q(static_cast<std::size_t>(mimo.n_tx) * mimo.n_ss, Complex(0.0, 0.0));
    for (int t = 0; t < mimo.n_tx; ++t)
        for (int s = 0; s < mimo.n_ss; ++s) {
            if (mode == SpatialMapping::Identity)
                q[t * mimo.n_ss + s] = t == s ? 1.0 : 0.0;
            else
                q[t * mimo.n_ss + s] = std::polar(1.0 / std::sqrt(double(mimo.n_tx)), -kTwoPi * t * s / mimo.n_tx);
        }
    ops.q.assign(static_cast<std::size_t>(cfg.n_data()), q);
    ops.validate(cfg, mimo);
    return ops;
}

void ImpairmentModel::validate() const
{
    if (!(sfo_sigma >= 0.0) || !(cfo_sigma >= 0.0) || !(agc_sigma_db >= 0.0))
        throw ConfigError("impairments: sigmas must be non-negative");
    if (!(sfo_mean_interval >= 1.0) || !(cfo_mean_interval >= 1.0))
        throw ConfigError("impairments: mean recalibration intervals must be >= 1 packet");
    if (sto_max < 0 || pre_max < 0)
        throw ConfigError("impairments: sto_max and pre_max must be >= 0");
}

void Scenario::validate() const
{
    ofdm.validate();
    mimo.validate();
    impairments.validate();
    if (!(distance_m > 0.0) || !std::isfinite(distance_m))
        throw ConfigError("scenario: distance_m must be positive");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw ConfigError("scenario: snr_db must be a number (+inf allowed)");
    if (!std::isfinite(noise_floor_db))
        throw ConfigError("scenario: noise_floor_db must be finite");
    if (n_packets < 1)
        throw ConfigError("scenario: n_packets must be >= 1");
    if (!(packet_interval_s > 0.0) || !(coherence_time_s > 0.0))
        throw ConfigError("scenario: packet_interval_s and coherence_time_s must be positive");
    if (nlos.n_taps < 0 || !(nlos.decay_db_per_ns >= 0.0) || !(nlos.mean_excess_s > 0.0) ||
        !(nlos.min_excess_s >= 0.0) || !(nlos.max_excess_s > nlos.min_excess_s))
        throw ConfigError("scenario: invalid nlos profile");
    if (!(path_loss.exponent > 0.0) || !(path_loss.shadowing_db >= 0.0))
        throw ConfigError("scenario: invalid path loss model");
    if (!baseband.delta_a.empty() && static_cast<int>(baseband.delta_a.size()) != mimo.n_tx)
        throw ConfigError("scenario: baseband.delta_a needs n_tx entries");
    if (!baseband.delta_b.empty() && static_cast<int>(baseband.delta_b.size()) != mimo.n_ss)
        throw ConfigError("scenario: baseband.delta_b needs n_ss entries");
    if (!(baseband.window_alpha >= 0.0 && baseband.window_alpha <= 1.0))
        throw ConfigError("scenario: baseband.window_alpha must lie in [0, 1]");
}

int Scenario::coherence_packets() const
{
    const double n = std::floor(coherence_time_s / packet_interval_s);
    if (n >= static_cast<double>(n_packets))
        return n_packets;
    return std::max(1, static_cast<int>(n));
}

double Scenario::effective_snr_db() const
{
    if (snr_mode == SnrMode::PathLoss)
        return path_loss.predict(distance_m) - noise_floor_db;
    return snr_db;
}

MultipathChannel gen_channel(const Scenario& sc, Rng& rng)
{
    const double tau0 = sc.distance_m / kSpeedOfLight;
    struct Shared {
        double tau, mag;
    };
    std::vector<Shared> shared{{tau0, 1.0}};
    std::exponential_distribution<double> excess(1.0 / sc.nlos.mean_excess_s);
    for (int i = 0; i < sc.nlos.n_taps; ++i) {
        double e;
        do
            e = sc.nlos.min_excess_s + excess(rng);
        while (e > sc.nlos.max_excess_s);
        const double db = sc.nlos.decay_db_per_ns * e * 1e9 - sc.nlos.rel_power_db;
        double mag = std::pow(10.0, -db / 20.0);
        if (sc.nlos.spreading_loss && tau0 > 0.0)
            mag *= std::pow(tau0 / (tau0 + e), 0.5 * sc.path_loss.exponent);
        shared.push_back({tau0 + e, mag});
    }
    std::sort(shared.begin() + 1, shared.end(), [](const Shared& a, const Shared& b) { return a.tau < b.tau; });

    MultipathChannel ch(sc.mimo.n_rx, sc.mimo.n_tx);
    for (int rx = 0; rx < sc.mimo.n_rx; ++rx)
        for (int tx = 0; tx < sc.mimo.n_tx; ++tx) {
            auto& taps = ch.taps(rx, tx);
            for (const auto& s : shared)
                taps.push_back({s.tau, std::polar(s.mag, kTwoPi * draw_uniform(rng))});
        }
    return ch;
}

CsiTensor channel_tensor(const OfdmConfig& cfg, const MultipathChannel& ch)
{
    CsiTensor t(ch.n_rx(), ch.n_tx(), cfg.n_data());
    for (int rx = 0; rx < ch.n_rx(); ++rx)
        for (int tx = 0; tx < ch.n_tx(); ++tx) {
            const auto h = channel_cfr(cfg, ch, rx, tx);
            std::copy(h.begin(), h.end(), t.stream(rx, tx).begin());
        }
    return t;
}

CsiTensor apply_baseband(const CsiTensor& cfr, const BasebandOps& ops, const OfdmConfig& cfg)
{
    const int n_tx = cfr.n_ss();
    const int n_ss = static_cast<int>(ops.delta_b.size());
    if (static_cast<int>(ops.delta_a.size()) != n_tx || cfr.n_k() != cfg.n_data() ||
        static_cast<int>(ops.q.size()) != cfg.n_data())
        throw DomainError("apply_baseband: dimension mismatch");
    for (const auto& m : ops.q)
        if (static_cast<int>(m.size()) != n_tx * n_ss)
            throw DomainError("apply_baseband: q has the wrong shape");

    CsiTensor out(cfr.n_rx(), n_ss, cfr.n_k());
    for (int ki = 0; ki < cfr.n_k(); ++ki) {
        const int k = cfg.data_indices[static_cast<std::size_t>(ki)];
        const auto& q = ops.q[static_cast<std::size_t>(ki)];
        for (int rx = 0; rx < cfr.n_rx(); ++rx)
            for (int ss = 0; ss < n_ss; ++ss) {
                Complex acc(0.0, 0.0);
                for (int tx = 0; tx < n_tx; ++tx)
                    acc += cfr(rx, tx, ki) * ramp(k, ops.delta_a[tx], cfg.n_sc) * q[tx * n_ss + ss];
                out(rx, ss, ki) = acc * ramp(k, ops.delta_b[ss], cfg.n_sc);
            }
    }
    return out;
}

std::vector<double> tukey_window(int length, double alpha)
{
    std::vector<double> w(static_cast<std::size_t>(length), 1.0);
    if (length < 2 || alpha <= 0.0)
        return w;
    for (int n = 0; n < length; ++n) {
        const double x = double(n) / (length - 1);
        if (x < alpha / 2)
            w[n] = 0.5 * (1 + std::cos(kPi * (2 * x / alpha - 1)));
        else if (x > 1 - alpha / 2)
            w[n] = 0.5 * (1 + std::cos(kPi * (2 * x / alpha - 2 / alpha + 1)));
    }
    return w;
}

std::vector<Complex> window_distortion(const OfdmConfig& cfg, double alpha_w)
{
    if (!(alpha_w >= 0.0 && alpha_w <= 1.0))
        throw DomainError("window_distortion: alpha_w must lie in [0, 1]");
    const int n = cfg.n_sc;
    const auto w = tukey_window(n + cfg.n_cp, alpha_w);
    // CP removal keeps the last n samples of the window
    std::vector<Complex> w_fft(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m)
        w_fft[m] = w[static_cast<std::size_t>(cfg.n_cp + m)];
    const auto W = dsp::dft(w_fft);

    std::vector<Complex> out(cfg.data_indices.size(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int k = cfg.data_indices[i];
        for (int kp : cfg.data_indices)
            out[i] += W[static_cast<std::size_t>(wrap_bin(k - kp, n))];
        out[i] /= double(n);
    }
    return out;
}

CsiTensor apply_impairments(const CsiTensor& csi, const ImpairmentState& st, const OfdmConfig& cfg)
{
    if (csi.n_k() != cfg.n_data())
        throw DomainError("apply_impairments: tensor does not match the grid");
    const double common_cycles = st.phi_c + st.cfo_phase;
    const Complex common = st.alpha_agc * std::polar(1.0, -kTwoPi * std::remainder(common_cycles, 1.0));
    const double shift = st.sfo_phase_slope + st.n_sto + st.eps_pre;
    std::vector<Complex> factor(static_cast<std::size_t>(csi.n_k()));
    for (int ki = 0; ki < csi.n_k(); ++ki)
        factor[ki] = common * ramp(cfg.data_indices[static_cast<std::size_t>(ki)], shift, cfg.n_sc);

    CsiTensor out = csi;
    for (int rx = 0; rx < csi.n_rx(); ++rx)
        for (int ss = 0; ss < csi.n_ss(); ++ss) {
            auto s = out.stream(rx, ss);
            for (int ki = 0; ki < csi.n_k(); ++ki)
                s[ki] *= factor[ki];
        }
    return out;
}

double gen_rssi(const Scenario& sc, Rng& rng)
{
    double rssi = sc.path_loss.predict(sc.distance_m);
    if (sc.path_loss.shadowing_db > 0.0)
        rssi += std::normal_distribution<double>(0.0, sc.path_loss.shadowing_db)(rng);
    return std::max(rssi, 0.0);
}

void add_noise(CsiTensor& csi, double snr_db, Rng& rng)
{
    if (snr_db == std::numeric_limits<double>::infinity())
        return;
    double p = 0.0;
    for (const auto& v : csi.values())
        p += std::norm(v);
    p /= std::max<std::size_t>(csi.values().size(), 1);
    const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0) / 2.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : csi.values())
        v += Complex(sigma * nd(rng), sigma * nd(rng));
}

Trace simulate_trace(const Scenario& sc)
{
    sc.validate();
    Rng rng(sc.rng_seed);
    const auto ops = make_baseband_ops(sc.ofdm, sc.mimo, sc.baseband);
    std::vector<Complex> wtilde;
    if (sc.baseband.apply_window)
        wtilde = window_distortion(sc.ofdm, sc.baseband.window_alpha);
    const double snr_db = sc.effective_snr_db();
    const int coh = sc.coherence_packets();
    const auto& imp = sc.impairments;

    Accumulator sfo{imp.sfo_sigma, imp.sfo_mean_interval};
    Accumulator cfo{imp.cfo_sigma, imp.cfo_mean_interval};

    Trace trace;
    trace.truth.distance_m = sc.distance_m;
    trace.records.reserve(static_cast<std::size_t>(sc.n_packets));
    CsiTensor clean;
    int n_sto = 0, eps_pre = 0;

    for (int n = 0; n < sc.n_packets; ++n) {
        if (n % coh == 0) {
            ChannelSegment seg{n, gen_channel(sc, rng)};
            clean = apply_baseband(channel_tensor(sc.ofdm, seg.channel), ops, sc.ofdm);
            if (!wtilde.empty())
                for (int rx = 0; rx < clean.n_rx(); ++rx)
                    for (int ss = 0; ss < clean.n_ss(); ++ss) {
                        auto s = clean.stream(rx, ss);
                        for (std::size_t i = 0; i < s.size(); ++i)
                            s[i] *= wtilde[i];
                    }
            trace.truth.segments.push_back(std::move(seg));
            if (imp.enabled) {
                if (imp.fixed_shift >= 0) {
                    n_sto = imp.fixed_shift;
                    eps_pre = 0;
                } else {
                    n_sto = std::uniform_int_distribution<int>(0, imp.sto_max)(rng);
                    eps_pre = std::uniform_int_distribution<int>(0, imp.pre_max)(rng);
                }
            }
        }

        ImpairmentState st;
        if (imp.enabled) {
            st.n_sto = n_sto;
            st.eps_pre = eps_pre;
            st.sfo_phase_slope = sfo.next(rng);
            st.cfo_phase = cfo.next(rng);
            st.phi_c = imp.random_cpo ? draw_uniform(rng) : 0.0;
            if (imp.agc_sigma_db > 0.0)
                st.alpha_agc = std::pow(10.0, std::normal_distribution<double>(0.0, imp.agc_sigma_db)(rng) / 20.0);
        }

        CsiRecord rec;
        rec.n = n;
        rec.t = n * sc.packet_interval_s;
        rec.csi = apply_impairments(clean, st, sc.ofdm);
        add_noise(rec.csi, snr_db, rng);
        rec.rssi_db = gen_rssi(sc, rng);
        trace.records.push_back(std::move(rec));
        trace.truth.impairments.push_back(st);
    }
    return trace;
}

std::string to_string(SpatialMapping m)
{
    switch (m) {
    case SpatialMapping::Identity:
        return "identity";
    case SpatialMapping::Dft:
        return "dft";
    default:
        return "auto";
    }
}

SpatialMapping spatial_mapping_from_string(const std::string& s)
{
    if (s == "auto")
        return SpatialMapping::Auto;
    if (s == "identity")
        return SpatialMapping::Identity;
    if (s == "dft")
        return SpatialMapping::Dft;
    throw ConfigError("baseband.mapping: expected auto, identity or dft, got '" + s + "'");
}

} // namespace csirange
