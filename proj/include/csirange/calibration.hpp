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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csirange/ofdm_model.hpp"

namespace csirange {

enum class WindowMode { None, Polynomial, KnownWindow };

struct WindowCompensation {
    WindowMode mode = WindowMode::KnownWindow;
    // de-rotation polynomial c3 k^3 + c2 k^2 + c1 k (radians)
    std::array<double, 3> poly{-7e-5, 3e-5, 0.05};
    double window_alpha = 0.1;  // used when `wtilde` is empty
    std::vector<Complex> wtilde;
};

std::vector<CsiRecord> compensate_window(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                         const WindowCompensation& wc);

/// -angle of the mean adjacent product csi(k) conj(csi(k-1)); the pair that
/// straddles DC is left out. Radians per subcarrier.
double estimate_psi1_adjacent(const CsiRecord& rec, const OfdmConfig& cfg, int rx, int ss);

/// As above, pooled over every (rx, ss) before the angle is taken.
double estimate_psi1_averaged(const CsiRecord& rec, const OfdmConfig& cfg);

/// Multiplies the entry at k by exp(+i slope k).
CsiRecord derotate(const CsiRecord& rec, const OfdmConfig& cfg, double slope);

struct CalibrationReport {
    double eps_ch = 0.0;
    std::vector<double> eps_ch_streams; // per stream, only in per-stream mode
    int n_sto_hat = 0;                  // signed; negative means a leftward shift
    std::vector<double> psi1_hat;       // per packet (stream mean in per-stream mode)
    std::vector<std::pair<int, int>> masked_streams;
    int n_eff = 0;
};

struct LinearityOptions {
    bool per_stream = false;
};

/// Linear-phase (SFO) removal. Two passes: eps_ch = mean psi1_hat(n), then each packet is
/// de-rotated by psi1_hat(n) - eps_ch.
std::vector<CsiRecord> remove_linearity(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                        CalibrationReport& report, const LinearityOptions& opt = {});

/// First local maximum reaching `ratio` of the global maximum, scanning
/// cyclically from m = 0. Indices past n/2 come back as m - n.
int first_strong_peak(std::span<const double> pdp, double ratio = 0.5);

/// Integer STO alignment. Mode of the per-packet, per-stream first-peak indices (ties go
/// to the smaller shift); every record is de-rotated by that shift.
std::vector<CsiRecord> detect_sto(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                                  CalibrationReport& report);

struct CleanedCsi {
    CsiTensor csi;
    std::vector<std::uint8_t> masked; // per stream, index rx * n_ss + ss
    bool is_masked(int rx, int ss) const { return masked[static_cast<std::size_t>(rx * csi.n_ss() + ss)] != 0; }
    int n_active() const;
};

/// CFO removal and weak-stream masking. Element-wise geometric mean over packets followed by the
/// weak-stream mask (per-stream norm / global norm < mask_ratio).
CleanedCsi remove_cfo_weak_streams(const std::vector<CsiRecord>& records, CalibrationReport& report,
                                   double mask_ratio = 0.1);

/// Least-squares line through the unwrapped phase of one stream against signed k.
dsp::LineFit phase_line(std::span<const Complex> stream, const OfdmConfig& cfg);

struct PhaseDiffStats {
    std::vector<double> delta_psi1; // radians per subcarrier
    std::vector<double> delta_psi2; // radians, wrapped to (-pi, pi]
    double mean_psi1 = 0.0, var_psi1 = 0.0;
    double mean_psi2 = 0.0, var_psi2 = 0.0;
};

/// Consecutive-packet phase differences of stream (rx, ss).
PhaseDiffStats phase_diff_stats(const std::vector<CsiRecord>& records, const OfdmConfig& cfg, int rx = 0, int ss = 0);

struct CalibrationOptions {
    WindowCompensation window;
    LinearityOptions linearity;
    double mask_ratio = 0.1;
};

struct CalibrationResult {
    std::vector<CsiRecord> aligned; // after STO alignment
    CleanedCsi cleaned;
    CalibrationReport report;
};

/// Window compensation, then linear-phase removal, STO alignment and CFO removal.
CalibrationResult calibrate(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                            const CalibrationOptions& opt = {});

std::string to_string(WindowMode m);
WindowMode window_mode_from_string(const std::string& s);

} // namespace csirange
