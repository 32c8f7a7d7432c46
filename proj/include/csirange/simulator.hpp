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

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "csirange/ofdm_model.hpp"

namespace csirange {

using Rng = std::mt19937_64;

/// Delay/power profile of the non-line-of-sight taps.
struct NlosProfile {
    int n_taps = 0;
    double decay_db_per_ns = 0.1;     // tap power falls by this much per ns of excess delay
    double mean_excess_s = 40e-9;     // exponential excess-delay mean
    double min_excess_s = 0.0;
    double max_excess_s = 300e-9;     // truncation of the excess-delay draw
    double rel_power_db = 0.0;        // extra offset applied to every NLoS tap
    // Scale each NLoS tap by the extra path-loss of its longer path,
    // (d / (d + c*excess))^(exponent/2), so reflections weaken relative to LoS at short range.
    bool spreading_loss = true;
};

/// Transmitter-side cyclic shifts, spatial mapping and symbol window.
/// q[ki] is an n_tx x n_ss matrix stored row-major.
struct BasebandOps {
    std::vector<int> delta_a; // per tx chain (CDD)
    std::vector<int> delta_b; // per spatial stream
    std::vector<std::vector<Complex>> q;
    double window_alpha = 0.1;

    void validate(const OfdmConfig& cfg, const MimoConfig& mimo) const;
};

enum class SpatialMapping { Auto, Identity, Dft };

/// Serializable description from which BasebandOps is built.
struct BasebandConfig {
    std::vector<int> delta_a; // empty means all zeros
    std::vector<int> delta_b;
    SpatialMapping mapping = SpatialMapping::Auto;
    double window_alpha = 0.1;
    bool apply_window = true;
};

BasebandOps make_baseband_ops(const OfdmConfig& cfg, const MimoConfig& mimo, const BasebandConfig& bb);

/// Per-packet synchronization and gain state; shared by every (rx, ss) pair.
struct ImpairmentState {
    int n_sto = 0;
    int eps_pre = 0;
    double sfo_phase_slope = 0.0; // samples
    double cfo_phase = 0.0;       // cycles
    double phi_c = 0.0;           // cycles
    double alpha_agc = 1.0;
};

/// Random processes behind ImpairmentState.
///
/// SFO and CFO follow piecewise-linear accumulators zeta * g(n): at each
/// recalibration zeta is redrawn and g restarts at 1; intervals between
/// recalibrations are geometric with the given mean (in packets).
struct ImpairmentModel {
    bool enabled = true;
    double sfo_sigma = 0.05;           // samples
    double sfo_mean_interval = 1.0;    // packets
    double cfo_sigma = 0.05;           // cycles
    double cfo_mean_interval = 1.0;
    bool random_cpo = true;            // phi_c ~ U[0, 1)
    int sto_max = 3;                   // N_STO ~ U{0..sto_max}
    int pre_max = 3;                   // eps_pre ~ U{0..pre_max}
    int fixed_shift = -1;              // >= 0 forces N_STO = fixed_shift, eps_pre = 0
    double agc_sigma_db = 1.0;

    void validate() const;
};

enum class SnrMode { Fixed, PathLoss };

struct Scenario {
    OfdmConfig ofdm;
    MimoConfig mimo;
    BasebandConfig baseband;
    ImpairmentModel impairments;
    PathLossModel path_loss;
    NlosProfile nlos;

    double distance_m = 10.0;
    SnrMode snr_mode = SnrMode::Fixed;
    double snr_db = 30.0;              // +inf disables noise
    double noise_floor_db = 25.0;      // SnrMode::PathLoss: snr = mean rssi - noise_floor_db
    int n_packets = 100;
    double packet_interval_s = 0.01;
    double coherence_time_s = 10.0;
    std::uint64_t rng_seed = 1;

    void validate() const;
    /// Packets per channel realization (at least 1).
    int coherence_packets() const;
    double effective_snr_db() const;
};

struct ChannelSegment {
    int first_packet = 0;
    MultipathChannel channel;
};

struct GroundTruth {
    double distance_m = 0.0;
    std::vector<ChannelSegment> segments;
    std::vector<ImpairmentState> impairments;
};

struct Trace {
    std::vector<CsiRecord> records;
    GroundTruth truth;
};

MultipathChannel gen_channel(const Scenario& sc, Rng& rng);

/// CFR of every antenna pair, shaped [n_rx][n_tx][k].
CsiTensor channel_tensor(const OfdmConfig& cfg, const MultipathChannel& ch);

/// Spatial mapping and cyclic shifts; [n_rx][n_tx][k] -> [n_rx][n_ss][k].
CsiTensor apply_baseband(const CsiTensor& cfr, const BasebandOps& ops, const OfdmConfig& cfg);

/// Response of the windowed, CP-stripped, guard-limited symbol to a flat
/// channel, on data_indices.
std::vector<Complex> window_distortion(const OfdmConfig& cfg, double alpha_w);

/// Tukey window of the given length (alpha = 0 is rectangular, 1 is Hann).
std::vector<double> tukey_window(int length, double alpha);

CsiTensor apply_impairments(const CsiTensor& csi, const ImpairmentState& st, const OfdmConfig& cfg);

double gen_rssi(const Scenario& sc, Rng& rng);

/// Adds circular complex Gaussian noise at the given per-entry SNR.
void add_noise(CsiTensor& csi, double snr_db, Rng& rng);

Trace simulate_trace(const Scenario& sc);

std::string to_string(SpatialMapping m);
SpatialMapping spatial_mapping_from_string(const std::string& s);

} // namespace csirange
