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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csirange/dsp.hpp"

namespace csirange {

inline constexpr double kSpeedOfLight = 299792458.0;

/// {-n/2..-1, 1..n/2}
std::vector<int> symmetric_indices(int n_nz);

/// Subcarrier grid of one OFDM symbol.
///
/// `data_indices` lists the signed subcarrier indices that carry CSI in
/// ascending order; DC (k = 0) is never part of it. Every CSI vector in this
/// library is laid out in that order.
struct OfdmConfig {
    int n_sc = 64;            // FFT size
    int n_nz = 56;            // data subcarriers
    int n_g = 8;              // guard subcarriers
    int n_cp = 16;            // cyclic prefix, samples
    double delta_f = 312.5e3; // subcarrier spacing, Hz
    double f0 = 2.412e9;      // carrier, Hz
    double t_s = 50e-9;       // sample period, s
    std::vector<int> data_indices = symmetric_indices(56);

    /// 802.11n HT20 occupancy: k in {-28..-1, 1..28}.
    static OfdmConfig ht20(double carrier_hz = 2.412e9);

    /// Throws ConfigError when any structural invariant is broken.
    void validate() const;

    int n_data() const { return static_cast<int>(data_indices.size()); }
    int half_band() const { return n_nz / 2; }

    /// Position of k inside data_indices, or -1.
    int position_of(int k) const;

    /// Propagation distance covered in one sample period (c * T_s).
    double sample_distance_m() const { return kSpeedOfLight * t_s; }
};

/// Antenna and stream counts of the link.
struct MimoConfig {
    int n_tx = 3;
    int n_rx = 3;
    int n_ss = 3;
    int n_ltf = 4;

    void validate() const;
};

struct Tap {
    double tau = 0.0; // seconds
    Complex beta{1.0, 0.0};
};

/// Tapped-delay-line channel for every (rx, tx) antenna pair.
class MultipathChannel {
public:
    MultipathChannel() = default;
    MultipathChannel(int n_rx, int n_tx);

    int n_rx() const { return n_rx_; }
    int n_tx() const { return n_tx_; }

    std::vector<Tap>& taps(int rx, int tx);
    const std::vector<Tap>& taps(int rx, int tx) const;

    /// Largest tap count over all antenna pairs.
    std::size_t n_mp() const;

    /// Sorted, non-negative delays and at least one tap per pair.
    void validate() const;

private:
    int n_rx_ = 0;
    int n_tx_ = 0;
    std::vector<std::vector<Tap>> taps_;
};

/// Dense complex tensor indexed [rx][stream][subcarrier position].
class CsiTensor {
public:
    CsiTensor() = default;
    CsiTensor(int n_rx, int n_ss, int n_k);

    int n_rx() const { return n_rx_; }
    int n_ss() const { return n_ss_; }
    int n_k() const { return n_k_; }
    int n_streams() const { return n_rx_ * n_ss_; }

    Complex& operator()(int rx, int ss, int ki) { return data_[offset(rx, ss) + ki]; }
    const Complex& operator()(int rx, int ss, int ki) const { return data_[offset(rx, ss) + ki]; }

    std::span<Complex> stream(int rx, int ss) { return {data_.data() + offset(rx, ss), static_cast<std::size_t>(n_k_)}; }
    std::span<const Complex> stream(int rx, int ss) const
    {
        return {data_.data() + offset(rx, ss), static_cast<std::size_t>(n_k_)};
    }

    std::span<Complex> values() { return data_; }
    std::span<const Complex> values() const { return data_; }

    bool all_finite() const;
    double frobenius_norm() const;

private:
    std::size_t offset(int rx, int ss) const
    {
        return (static_cast<std::size_t>(rx) * n_ss_ + ss) * static_cast<std::size_t>(n_k_);
    }

    int n_rx_ = 0;
    int n_ss_ = 0;
    int n_k_ = 0;
    std::vector<Complex> data_;
};

/// One captured packet.
struct CsiRecord {
    std::int64_t n = 0;  // packet index
    double t = 0.0;      // capture time, s
    double rssi_db = 0.0;
    CsiTensor csi;
};

/// Log-distance path loss on the receiver's RSSI scale.
struct PathLossModel {
    double ref_rssi_db = 65.0; // at 1 m
    double exponent = 2.5;
    double shadowing_db = 3.0;

    /// Mean RSSI at distance d (distances below 1 m are clamped to 1 m).
    double predict(double distance_m) const;
};

/// f0 + k * delta_f. Throws DomainError for k outside data_indices and DC.
double subcarrier_frequency(const OfdmConfig& cfg, int k);

/// Channel frequency response of one antenna pair over data_indices.
std::vector<Complex> channel_cfr(const OfdmConfig& cfg, const MultipathChannel& ch, int rx, int tx);

/// Discrete CIR h[m], m = 0..n_sc-1, evaluated as a sum of Dirichlet kernels,
/// one per tap. Agrees with the inverse DFT of the guard-stuffed CFR.
std::vector<Complex> cir_closed_form(const OfdmConfig& cfg, const MultipathChannel& ch, int rx, int tx);

/// Place a data-subcarrier vector into an n_sc FFT buffer (bin = k mod n_sc),
/// zeros at DC and guards.
std::vector<Complex> guard_stuff(const OfdmConfig& cfg, std::span<const Complex> data);

/// |IDFT(guard_stuff(csi))|^2.
std::vector<double> power_delay_profile(const OfdmConfig& cfg, std::span<const Complex> csi);

} // namespace csirange
