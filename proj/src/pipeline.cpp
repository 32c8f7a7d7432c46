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

#include "csirange/pipeline.hpp"

#include <algorithm>

#include "csirange/errors.hpp"

namespace csirange {

RangeEstimate estimate_cleaned(const CleanedCsi& cleaned, const std::vector<CsiRecord>& aligned, double rssi,
                               const OfdmConfig& cfg, const PipelineOptions& opt,
                               std::vector<SubchannelObservation>* observations)
{
    opt.smoothing.validate(cfg);
    std::vector<SubchannelObservation> obs;
    const int block = std::max(opt.block_packets, 1);
    for (int rx = 0; rx < cleaned.csi.n_rx(); ++rx)
        for (int ss = 0; ss < cleaned.csi.n_ss(); ++ss) {
            if (cleaned.is_masked(rx, ss))
                continue;
            SubchannelObservation o;
            o.rx = rx;
            o.ss = ss;
            o.d_m = subchannel_distance({cleaned.csi.stream(rx, ss)}, cfg, opt.smoothing, opt.peaks);
            for (std::size_t b = 0; b + block <= aligned.size(); b += block) {
                std::vector<std::span<const Complex>> snaps;
                for (std::size_t n = b; n < b + block; ++n)
                    snaps.push_back(aligned[n].csi.stream(rx, ss));
                o.block_d_m.push_back(subchannel_distance(snaps, cfg, opt.smoothing, opt.peaks));
            }
            obs.push_back(std::move(o));
        }
    auto est = fuse(obs, cleaned, opt.fusion);
    if (opt.resolve)
        resolve_hypothesis(est, rssi, opt.path_loss, cfg, opt.hypothesis);
    else
        est.rssi_used = rssi;
    if (observations)
        *observations = std::move(obs);
    return est;
}

PipelineResult run_pipeline(const std::vector<CsiRecord>& records, const OfdmConfig& cfg, const PipelineOptions& opt)
{
    if (records.empty())
        throw InsufficientDataError("pipeline: trace has no packets");
    PipelineResult res;
    res.calibration = calibrate(records, cfg, opt.calibration);
    double rssi = 0.0;
    for (const auto& r : records)
        rssi += r.rssi_db;
    rssi /= double(records.size());
    res.estimate = estimate_cleaned(res.calibration.cleaned, res.calibration.aligned, rssi, cfg, opt, &res.observations);
    return res;
}

} // namespace csirange
