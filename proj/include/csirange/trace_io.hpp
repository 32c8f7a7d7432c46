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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csirange/calibration.hpp"
#include "csirange/estimator.hpp"
#include "csirange/pipeline.hpp"
#include "csirange/simulator.hpp"

namespace csirange::io {

using Json = nlohmann::ordered_json;

Json to_json(const OfdmConfig& c);
Json to_json(const MimoConfig& m);
Json to_json(const Scenario& s); // without the ofdm/mimo parts, which the trace header carries
Json to_json(const SmoothingConfig& s);
Json to_json(const MultipathChannel& ch);
Json to_json(const ImpairmentState& st);
Json to_json(const CsiTensor& t);
Json to_json(const CalibrationReport& r);
Json to_json(const RangeEstimate& e);

// Parsers fill fields present in `j` on top of the defaults already in the
// output object and throw ConfigError naming the offending field.
void from_json(const Json& j, OfdmConfig& c, const std::string& path = "ofdm");
void from_json(const Json& j, MimoConfig& m, const std::string& path = "mimo");
void from_json(const Json& j, Scenario& s, const std::string& path = "scenario");
void from_json(const Json& j, SmoothingConfig& s, const std::string& path = "smoothing");
void from_json(const Json& j, PipelineOptions& p, const std::string& path = "pipeline");
CsiTensor tensor_from_json(const Json& j, const std::string& path);

struct TraceFile {
    OfdmConfig ofdm;
    MimoConfig mimo;
    Json scenario;          // null when unknown
    bool calibrated = false;
    std::optional<CleanedCsi> cleaned;
    std::optional<CalibrationReport> report;
    std::vector<CsiRecord> records;
};

void write_trace(std::ostream& os, const TraceFile& tf);
void write_trace(const std::string& path, const TraceFile& tf);
TraceFile read_trace(std::istream& is);
TraceFile read_trace(const std::string& path);

Json truth_to_json(const GroundTruth& gt);
GroundTruth truth_from_json(const Json& j);

/// Reads a JSON document from disk; ConfigError when missing or malformed.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

} // namespace csirange::io
