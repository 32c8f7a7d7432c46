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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csirange/calibration.hpp"
#include "csirange/ofdm_model.hpp"

namespace csirange {

/// Which half-bands contribute subarrays to the smoothed covariance.
enum class Bands { Both, Lower, Upper };

struct SmoothingConfig {
    int sub_len = 20;
    bool use_fb = true;
    double grid_step_s = 1e-9;
    int model_order = 0;            // 0 selects the order from the eigenvalues
    double order_threshold = 0.01;
    Bands bands = Bands::Both;

    void validate(const OfdmConfig& cfg) const;
    /// Subarray count N_b per snapshot.
    int n_windows(const OfdmConfig& cfg) const;
};

struct PseudoSpectrum {
    std::vector<double> taus;      // s
    std::vector<double> values;
    std::vector<double> peak_taus; // descending by value
    std::vector<double> peak_values;
    int n_paths = 0;
    bool clamped = false;          // some denominator hit the 1e-18 floor
};

struct SubchannelResult {
    int rx = 0;
    int ss = 0;
    double d_m = 0.0;
    double weight = 0.0;
    double mad_m = 0.0;
    bool rejected = false;
};

struct RangeEstimate {
    double d_base_m = 0.0;
    double d_hat_m = 0.0;
    std::vector<SubchannelResult> per_subchannel;
    std::vector<double> hypothesis_set;
    std::vector<double> hypothesis_scores; // |predicted - observed| RSSI, dB
    int chosen_index = -1;
    double rssi_used = 0.0;
};

/// exp(-2 pi i r delta_f tau), r = 0..sub_len-1.
std::vector<Complex> steering_vector(const OfdmConfig& cfg, int sub_len, double tau);

/// Forward (and optionally backward) average over every sub_len window that
/// lies inside one run of contiguous subcarriers, so no window spans DC.
Eigen::MatrixXcd smoothed_covariance(std::span<const Complex> csi, const OfdmConfig& cfg, const SmoothingConfig& sm);

/// Same, pooled over several snapshots of one subchannel.
Eigen::MatrixXcd smoothed_covariance(const std::vector<std::span<const Complex>>& snapshots, const OfdmConfig& cfg,
                                     const SmoothingConfig& sm);

struct EigenPairs {
    Eigen::VectorXd values;  // descending
    Eigen::MatrixXcd vectors; // columns, matching order
};

EigenPairs hermitian_eig(const Eigen::MatrixXcd& a);

/// Smallest p with lambda[p] / lambda[0] < threshold, clamped to [1, n - 1].
int model_order(std::span<const double> eigenvalues, double threshold_ratio = 0.01);

PseudoSpectrum music_spectrum(const Eigen::MatrixXcd& r, const OfdmConfig& cfg, const SmoothingConfig& sm,
                              int n_paths);

/// Covariance, eigendecomposition, order selection and scan in one call.
PseudoSpectrum music_from_covariance(const Eigen::MatrixXcd& r, const OfdmConfig& cfg, const SmoothingConfig& sm);

/// Range from the first strong PDP peak (sample resolution).
double pdp_range(std::span<const Complex> csi, const OfdmConfig& cfg);

struct PeakPolicy {
    // A peak counts when log(value / median) reaches this fraction of
    // log(max / median).
    double significance = 0.5;
    int pre_rotation = 4; // samples
};

/// Earliest significant peak among the n_paths strongest, refined between grid
/// points, as a signed delay
/// (peaks in the last pre_rotation samples of the scan read as negative).
double first_peak_delay(const PseudoSpectrum& ps, const OfdmConfig& cfg, const PeakPolicy& pp);

/// Multiplies every snapshot by exp(-2 pi i k r / n_sc), delaying it by r samples.
std::vector<Complex> rotate_samples(std::span<const Complex> csi, const OfdmConfig& cfg, int r);

/// First-peak distance of one subchannel. When the first peak sits at or
/// before tau = 0 the snapshots are delayed by pre_rotation samples, rescanned,
/// and the delay is subtracted again.
double subchannel_distance(const std::vector<std::span<const Complex>>& snapshots, const OfdmConfig& cfg,
                           const SmoothingConfig& sm, const PeakPolicy& pp, PseudoSpectrum* spectrum = nullptr);

struct FusionOptions {
    double mad_factor = 3.0;
    double mad_floor_m = 0.3;
};

struct SubchannelObservation {
    int rx = 0;
    int ss = 0;
    double d_m = 0.0;
    std::vector<double> block_d_m; // per-block distances, for the spread test
};

/// Weighted average of the surviving subchannels' distances; weights are the
/// mean CSI magnitudes of the cleaned streams, normalized to 1.
RangeEstimate fuse(const std::vector<SubchannelObservation>& obs, const CleanedCsi& cleaned,
                   const FusionOptions& fo = {});

struct HypothesisOptions {
    double spacing_m = 0.0; // 0 means c * T_s
    double max_range_m = 100.0;
};

/// Picks d_base + j * spacing (j >= 0, non-negative, up to max_range_m) whose
/// predicted RSSI is closest to the observation.
void resolve_hypothesis(RangeEstimate& est, double rssi_obs, const PathLossModel& model, const OfdmConfig& cfg,
                        const HypothesisOptions& ho = {});

std::string to_string(Bands b);
Bands bands_from_string(const std::string& s);

} // namespace csirange
