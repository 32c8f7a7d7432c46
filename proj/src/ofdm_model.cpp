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

#include "csirange/ofdm_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csirange/errors.hpp"

namespace csirange {

std::vector<int> symmetric_indices(int n_nz)
{
    std::vector<int> idx;
    for (int k = -n_nz / 2; k <= n_nz / 2; ++k)
        if (k != 0)
            idx.push_back(k);
    return idx;
}

OfdmConfig OfdmConfig::ht20(double carrier_hz)
{
    OfdmConfig cfg;
    cfg.f0 = carrier_hz;
    return cfg;
}

void OfdmConfig::validate() const
{
    if (n_sc <= 0 || n_nz <= 0 || n_g < 0 || n_cp < 0)
        throw ConfigError("ofdm: counts must be positive");
    if (n_nz + n_g != n_sc)
        throw ConfigError("ofdm: n_nz + n_g must equal n_sc");
    if (n_nz % 2 != 0)
        throw ConfigError("ofdm: n_nz must be even");
    if (!(delta_f > 0.0) || !(t_s > 0.0))
        throw ConfigError("ofdm: delta_f and t_s must be positive");
    if (std::abs(t_s * n_sc * delta_f - 1.0) > 1e-9)
        throw ConfigError("ofdm: t_s must equal 1 / (n_sc * delta_f)");
    if (static_cast<int>(data_indices.size()) != n_nz)
        throw ConfigError("ofdm: data_indices must hold n_nz entries");
    if (!std::is_sorted(data_indices.begin(), data_indices.end()) ||
        std::adjacent_find(data_indices.begin(), data_indices.end()) != data_indices.end())
        throw ConfigError("ofdm: data_indices must be strictly ascending");
    for (std::size_t i = 0; i < data_indices.size(); ++i) {
        const int k = data_indices[i];
        if (k == 0)
            throw ConfigError("ofdm: data_indices must not contain DC");
        if (data_indices[data_indices.size() - 1 - i] != -k)
            throw ConfigError("ofdm: data_indices must be symmetric about 0");
        if (std::abs(k) >= n_sc / 2 + 1)
            throw ConfigError("ofdm: data index outside the FFT grid");
    }
}

int OfdmConfig::position_of(int k) const
{
    const auto it = std::lower_bound(data_indices.begin(), data_indices.end(), k);
    if (it == data_indices.end() || *it != k)
        return -1;
    return static_cast<int>(it - data_indices.begin());
}

void MimoConfig::validate() const
{
    if (n_tx < 1 || n_rx < 1 || n_ss < 1)
        throw ConfigError("mimo: antenna and stream counts must be >= 1");
    if (n_ss > std::min(n_tx, n_rx))
        throw ConfigError("mimo: n_ss must not exceed min(n_tx, n_rx)");
    if (n_ltf < n_ss)
        throw ConfigError("mimo: n_ltf must be >= n_ss");
}

MultipathChannel::MultipathChannel(int n_rx, int n_tx)
    : n_rx_(n_rx), n_tx_(n_tx), taps_(static_cast<std::size_t>(n_rx) * n_tx)
{
    if (n_rx < 1 || n_tx < 1)
        throw ConfigError("channel: antenna counts must be >= 1");
}

std::vector<Tap>& MultipathChannel::taps(int rx, int tx)
{
    if (rx < 0 || rx >= n_rx_ || tx < 0 || tx >= n_tx_)
        throw DomainError("channel: antenna index out of range");
    return taps_[static_cast<std::size_t>(rx) * n_tx_ + tx];
}

const std::vector<Tap>& MultipathChannel::taps(int rx, int tx) const
{
    if (rx < 0 || rx >= n_rx_ || tx < 0 || tx >= n_tx_)
        throw DomainError("channel: antenna index out of range");
    return taps_[static_cast<std::size_t>(rx) * n_tx_ + tx];
}

std::size_t MultipathChannel::n_mp() const
{
    std::size_t n = 0;
    for (const auto& t : taps_)
        n = std::max(n, t.size());
    return n;
}

void MultipathChannel::validate() const
{
    for (const auto& list : taps_) {
        if (list.empty())
            throw ConfigError("channel: every antenna pair needs at least one tap");
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (!(list[i].tau >= 0.0))
                throw ConfigError("channel: tap delays must be non-negative");
            if (i > 0 && list[i].tau < list[i - 1].tau)
                throw ConfigError("channel: tap delays must be sorted ascending");
        }
    }
}

CsiTensor::CsiTensor(int n_rx, int n_ss, int n_k)
    : n_rx_(n_rx), n_ss_(n_ss), n_k_(n_k),
      data_(static_cast<std::size_t>(n_rx) * n_ss * n_k, Complex(0.0, 0.0))
{
    if (n_rx < 0 || n_ss < 0 || n_k < 0)
        throw ConfigError("csi tensor: negative dimension");
}

bool CsiTensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(),
                       [](const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double CsiTensor::frobenius_norm() const
{
    double s = 0.0;
    for (const auto& v : data_)
        s += std::norm(v);
    return std::sqrt(s);
}

double PathLossModel::predict(double distance_m) const
{
    const double d = std::max(distance_m, 1.0);
    return ref_rssi_db - 10.0 * exponent * std::log10(d);
}

double subcarrier_frequency(const OfdmConfig& cfg, int k)
{
    if (k != 0 && cfg.position_of(k) < 0)
        throw DomainError("subcarrier index " + std::to_string(k) + " is not on the grid");
    return cfg.f0 + k * cfg.delta_f;
}

std::vector<Complex> channel_cfr(const OfdmConfig& cfg, const MultipathChannel& ch, int rx, int tx)
{
    const auto& taps = ch.taps(rx, tx);
    std::vector<Complex> h(cfg.data_indices.size(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < cfg.data_indices.size(); ++i) {
        const double fk = subcarrier_frequency(cfg, cfg.data_indices[i]);
        for (const auto& tap : taps)
            h[i] += tap.beta * std::polar(1.0, -kTwoPi * std::fmod(fk * tap.tau, 1.0));
    }
    return h;
}

namespace {

// sum_{k=-K}^{K} exp(-2 pi i k x / N) = sin(pi (2K+1) x / N) / sin(pi x / N).
double dirichlet(double x, int half_width, int n)
{
    const double den = std::sin(kPi * x / n);
    const double width = 2.0 * half_width + 1.0;
    if (std::abs(den) < 1e-12) {
        // x sits on a multiple of N; the kernel attains its full width there.
        return width;
    }
    return std::sin(kPi * width * x / n) / den;
}

} // namespace

std::vector<Complex> cir_closed_form(const OfdmConfig& cfg, const MultipathChannel& ch, int rx, int tx)
{
    const auto& taps = ch.taps(rx, tx);
    const int n = cfg.n_sc;
    const int half = cfg.half_band();
    if (cfg.data_indices.empty() || cfg.data_indices.front() != -half || cfg.n_data() != 2 * half)
        throw DomainError("cir_closed_form: needs the contiguous grid -n_nz/2..n_nz/2 without DC");
    std::vector<Complex> h(static_cast<std::size_t>(n), Complex(0.0, 0.0));
    for (const auto& tap : taps) {
        // gain is beta e^{-2 pi i f0 tau} / N; kappa is the delay in samples
        const Complex gain = tap.beta * std::polar(1.0, -kTwoPi * std::fmod(cfg.f0 * tap.tau, 1.0)) / double(n);
        const double kappa = n * cfg.delta_f * tap.tau;
        for (int m = 0; m < n; ++m)
            h[static_cast<std::size_t>(m)] += gain * (dirichlet(kappa - m, half, n) - 1.0);
    }
    return h;
}

std::vector<Complex> guard_stuff(const OfdmConfig& cfg, std::span<const Complex> data)
{
    if (data.size() != cfg.data_indices.size())
        throw DomainError("guard_stuff: vector length does not match data_indices");
    std::vector<Complex> buf(static_cast<std::size_t>(cfg.n_sc), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int k = cfg.data_indices[i];
        buf[static_cast<std::size_t>(((k % cfg.n_sc) + cfg.n_sc) % cfg.n_sc)] = data[i];
    }
    return buf;
}

std::vector<double> power_delay_profile(const OfdmConfig& cfg, std::span<const Complex> csi)
{
    const auto h = dsp::idft(guard_stuff(cfg, csi));
    std::vector<double> p(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
        p[i] = std::norm(h[i]);
    return p;
}

} // namespace csirange
