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

#include <catch_amalgamated.hpp>

#include <sstream>

#include "csirange/errors.hpp"
#include "csirange/simulator.hpp"
#include "csirange/trace_io.hpp"

using namespace csirange;
using namespace csirange::io;

namespace {

Trace small_trace()
{
    Scenario sc;
    sc.nlos.n_taps = 2;
    sc.n_packets = 6;
    sc.coherence_time_s = 0.03;
    sc.rng_seed = 31;
    return simulate_trace(sc);
}

} // namespace

TEST_CASE("trace round trip is exact")
{
    const auto tr = small_trace();
    TraceFile tf;
    tf.scenario = to_json(Scenario{});
    tf.records = tr.records;
    std::stringstream ss;
    write_trace(ss, tf);

    std::string header;
    std::getline(std::stringstream(ss.str()), header);
    const auto h = Json::parse(header);
    CHECK(h.at("format") == "csirange-trace");
    CHECK(h.at("version") == 1);

    const auto back = read_trace(ss);
    REQUIRE(back.records.size() == tr.records.size());
    CHECK(!back.calibrated);
    CHECK(!back.cleaned);
    for (std::size_t n = 0; n < tr.records.size(); ++n) {
        CHECK(back.records[n].n == tr.records[n].n);
        CHECK(back.records[n].t == tr.records[n].t);
        CHECK(back.records[n].rssi_db == tr.records[n].rssi_db);
        for (std::size_t i = 0; i < tr.records[n].csi.values().size(); ++i)
            REQUIRE(back.records[n].csi.values()[i] == tr.records[n].csi.values()[i]);
    }
}

TEST_CASE("calibrated trace keeps the cleaned tensor and report")
{
    const auto tr = small_trace();
    TraceFile tf;
    tf.calibrated = true;
    tf.records = tr.records;
    CleanedCsi c;
    c.csi = tr.records[0].csi;
    c.masked.assign(9, 0);
    c.masked[5] = 1;
    tf.cleaned = c;
    CalibrationReport rep;
    rep.eps_ch = 0.123;
    rep.n_sto_hat = -2;
    rep.masked_streams = {{1, 2}};
    rep.n_eff = 6;
    tf.report = rep;
    std::stringstream ss;
    write_trace(ss, tf);
    const auto back = read_trace(ss);
    CHECK(back.calibrated);
    REQUIRE(back.cleaned);
    CHECK(back.cleaned->is_masked(1, 2));
    CHECK(back.cleaned->n_active() == 8);
    REQUIRE(back.report);
    CHECK(back.report->eps_ch == 0.123);
    CHECK(back.report->n_sto_hat == -2);
    CHECK(back.report->masked_streams == rep.masked_streams);
}

TEST_CASE("ground truth round trip")
{
    const auto tr = small_trace();
    const auto gt = truth_from_json(Json::parse(truth_to_json(tr.truth).dump()));
    CHECK(gt.distance_m == tr.truth.distance_m);
    REQUIRE(gt.segments.size() == tr.truth.segments.size());
    for (std::size_t s = 0; s < gt.segments.size(); ++s) {
        CHECK(gt.segments[s].first_packet == tr.truth.segments[s].first_packet);
        const auto& a = gt.segments[s].channel.taps(2, 1);
        const auto& b = tr.truth.segments[s].channel.taps(2, 1);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].tau == b[i].tau);
            CHECK(a[i].beta == b[i].beta);
        }
    }
    REQUIRE(gt.impairments.size() == tr.truth.impairments.size());
    CHECK(gt.impairments[3].n_sto == tr.truth.impairments[3].n_sto);
    CHECK(gt.impairments[3].sfo_phase_slope == tr.truth.impairments[3].sfo_phase_slope);
}

TEST_CASE("scenario JSON round trip")
{
    Scenario sc;
    sc.distance_m = 12.5;
    sc.snr_mode = SnrMode::PathLoss;
    sc.nlos.n_taps = 4;
    sc.baseband.delta_a = {0, 8, 4};
    sc.impairments.fixed_shift = 3;
    sc.rng_seed = 99;
    Scenario back;
    from_json(to_json(sc), back);
    CHECK(back.distance_m == 12.5);
    CHECK(back.snr_mode == SnrMode::PathLoss);
    CHECK(back.nlos.n_taps == 4);
    CHECK(back.baseband.delta_a == sc.baseband.delta_a);
    CHECK(back.impairments.fixed_shift == 3);
    CHECK(back.rng_seed == 99);

    Scenario inf;
    inf.snr_db = std::numeric_limits<double>::infinity();
    Scenario inf_back;
    from_json(Json::parse(to_json(inf).dump()), inf_back);
    CHECK(std::isinf(inf_back.snr_db));
}

TEST_CASE("parse errors name the field")
{
    Scenario sc;
    try {
        from_json(Json{{"snr_db", "loud"}}, sc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("scenario.snr_db") != std::string::npos);
    }
    SmoothingConfig sm;
    CHECK_THROWS_AS(from_json(Json{{"sub_len", 2.5}}, sm), ConfigError);
    PipelineOptions p;
    CHECK_THROWS_AS(from_json(Json{{"calibration", {{"poly", {1, 2}}}}}, p), ConfigError);

    std::stringstream bad("{\"format\":\"csirange-trace\"}\n");
    CHECK_THROWS_AS(read_trace(bad), ConfigError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_trace(empty), ConfigError);
    CHECK_THROWS_AS(read_trace(std::string("/nonexistent/trace.jsonl")), ConfigError);
}

TEST_CASE("records must match the header shape")
{
    const auto tr = small_trace();
    TraceFile tf;
    tf.records = {tr.records[0]};
    tf.mimo.n_ss = 2;
    std::stringstream ss;
    write_trace(ss, tf);
    CHECK_THROWS_AS(read_trace(ss), ConfigError);
}
