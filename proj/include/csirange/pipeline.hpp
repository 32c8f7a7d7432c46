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

#include <optional>
#include <vector>

#include "csirange/calibration.hpp"
#include "csirange/estimator.hpp"
#include "csirange/ofdm_model.hpp"

namespace csirange {

struct PipelineOptions {
    CalibrationOptions calibration;
    SmoothingConfig smoothing;
    PeakPolicy peaks;
    FusionOptions fusion;
    HypothesisOptions hypothesis;
    PathLossModel path_loss;
    int block_packets = 10; // packets per block for the spread test
    bool resolve = true;
};

struct PipelineResult {
    CalibrationResult calibration;
    RangeEstimate estimate;
    std::vector<SubchannelObservation> observations;
};

/// compensate_window -> remove_linearity -> detect_sto -> remove_cfo_weak_streams -> MUSIC per subchannel ->
/// fuse -> resolve_hypothesis against the mean RSSI of the trace.
PipelineResult run_pipeline(const std::vector<CsiRecord>& records, const OfdmConfig& cfg,
                            const PipelineOptions& opt = {});

/// Range pipeline on CSI that is already cleaned (no calibration stage).
RangeEstimate estimate_cleaned(const CleanedCsi& cleaned, const std::vector<CsiRecord>& aligned, double rssi,
                               const OfdmConfig& cfg, const PipelineOptions& opt,
                               std::vector<SubchannelObservation>* observations = nullptr);

} // namespace csirange
