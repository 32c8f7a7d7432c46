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

#include "csirange/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "csirange/errors.hpp"

namespace csirange::io {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const Json& j, const std::string& path)
{
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
}

// JSON has no infinity; +/-inf travel as strings.
Json number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

double get_double(const Json& v, const std::string& path)
{
    if (v.is_number())
        return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
    }
    throw ConfigError(path + ": expected a number");
}

void field(const Json& j, const char* key, double& out, const std::string& path)
{
    if (j.contains(key))
        out = get_double(j.at(key), join(path, key));
}

void field(const Json& j, const char* key, int& out, const std::string& path)
{
    if (!j.contains(key))
        return;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError(join(path, key) + ": expected an integer");
    out = v.get<int>();
}

void field(const Json& j, const char* key, std::uint64_t& out, const std::string& path)
{
    if (!j.contains(key))
        return;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(join(path, key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
}

void field(const Json& j, const char* key, bool& out, const std::string& path)
{
    if (!j.contains(key))
        return;
    if (!j.at(key).is_boolean())
        throw ConfigError(join(path, key) + ": expected true or false");
    out = j.at(key).get<bool>();
}

void field(const Json& j, const char* key, std::string& out, const std::string& path)
{
    if (!j.contains(key))
        return;
    if (!j.at(key).is_string())
        throw ConfigError(join(path, key) + ": expected a string");
    out = j.at(key).get<std::string>();
}

void field(const Json& j, const char* key, std::vector<int>& out, const std::string& path)
{
    if (!j.contains(key))
        return;
    const auto& v = j.at(key);
    if (!v.is_array())
        throw ConfigError(join(path, key) + ": expected an array of integers");
    out.clear();
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw ConfigError(join(path, key) + ": expected an array of integers");
        out.push_back(e.get<int>());
    }
}

Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Complex complex_from(const Json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + ": expected [re, im]");
    return {v[0].get<double>(), v[1].get<double>()};
}

template <class F>
void with_context(const std::string& what, F&& f)
{
    try {
        f();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

} // namespace

Json to_json(const OfdmConfig& c)
{
    return Json{{"n_sc", c.n_sc},       {"n_nz", c.n_nz}, {"n_g", c.n_g},   {"n_cp", c.n_cp},
                {"delta_f", c.delta_f}, {"f0", c.f0},     {"t_s", c.t_s}, {"data_indices", c.data_indices}};
}

Json to_json(const MimoConfig& m)
{
    return Json{{"n_tx", m.n_tx}, {"n_rx", m.n_rx}, {"n_ss", m.n_ss}, {"n_ltf", m.n_ltf}};
}

Json to_json(const Scenario& s)
{
    const auto& im = s.impairments;
    return Json{
        {"distance_m", s.distance_m},
        {"snr_mode", s.snr_mode == SnrMode::PathLoss ? "path_loss" : "fixed"},
        {"snr_db", number(s.snr_db)},
        {"noise_floor_db", s.noise_floor_db},
        {"n_packets", s.n_packets},
        {"packet_interval_s", s.packet_interval_s},
        {"coherence_time_s", s.coherence_time_s},
        {"rng_seed", s.rng_seed},
        {"nlos",
         {{"n_taps", s.nlos.n_taps},
          {"decay_db_per_ns", s.nlos.decay_db_per_ns},
          {"mean_excess_s", s.nlos.mean_excess_s},
          {"min_excess_s", s.nlos.min_excess_s},
          {"max_excess_s", s.nlos.max_excess_s},
          {"rel_power_db", s.nlos.rel_power_db},
          {"spreading_loss", s.nlos.spreading_loss}}},
        {"path_loss",
         {{"ref_rssi_db", s.path_loss.ref_rssi_db},
          {"exponent", s.path_loss.exponent},
          {"shadowing_db", s.path_loss.shadowing_db}}},
        {"impairments",
         {{"enabled", im.enabled},
          {"sfo_sigma", im.sfo_sigma},
          {"sfo_mean_interval", im.sfo_mean_interval},
          {"cfo_sigma", im.cfo_sigma},
          {"cfo_mean_interval", im.cfo_mean_interval},
          {"random_cpo", im.random_cpo},
          {"sto_max", im.sto_max},
          {"pre_max", im.pre_max},
          {"fixed_shift", im.fixed_shift},
          {"agc_sigma_db", im.agc_sigma_db}}},
        {"baseband",
         {{"delta_a", s.baseband.delta_a},
          {"delta_b", s.baseband.delta_b},
          {"mapping", to_string(s.baseband.mapping)},
          {"window_alpha", s.baseband.window_alpha},
          {"apply_window", s.baseband.apply_window}}},
    };
}

Json to_json(const SmoothingConfig& s)
{
    return Json{{"sub_len", s.sub_len},
                {"use_fb", s.use_fb},
                {"grid_step_s", s.grid_step_s},
                {"model_order", s.model_order},
                {"order_threshold", s.order_threshold},
                {"bands", to_string(s.bands)}};
}

Json to_json(const MultipathChannel& ch)
{
    Json out = Json::array();
    for (int rx = 0; rx < ch.n_rx(); ++rx) {
        Json row = Json::array();
        for (int tx = 0; tx < ch.n_tx(); ++tx) {
            Json taps = Json::array();
            for (const auto& t : ch.taps(rx, tx))
                taps.push_back(Json{{"tau", t.tau}, {"beta", complex_json(t.beta)}});
            row.push_back(std::move(taps));
        }
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json(const ImpairmentState& st)
{
    return Json{{"n_sto", st.n_sto},         {"eps_pre", st.eps_pre}, {"sfo_phase_slope", st.sfo_phase_slope},
                {"cfo_phase", st.cfo_phase}, {"phi_c", st.phi_c},     {"alpha_agc", st.alpha_agc}};
}

Json to_json(const CsiTensor& t)
{
    Json out = Json::array();
    for (int rx = 0; rx < t.n_rx(); ++rx) {
        Json row = Json::array();
        for (int ss = 0; ss < t.n_ss(); ++ss) {
            Json s = Json::array();
            for (const auto& v : t.stream(rx, ss))
                s.push_back(complex_json(v));
            row.push_back(std::move(s));
        }
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json(const CalibrationReport& r)
{
    Json masked = Json::array();
    for (const auto& [rx, ss] : r.masked_streams)
        masked.push_back(Json::array({rx, ss}));
    Json out{{"eps_ch", r.eps_ch}, {"n_sto_hat", r.n_sto_hat}, {"n_eff", r.n_eff}, {"masked_streams", masked}};
    if (!r.eps_ch_streams.empty())
        out["eps_ch_streams"] = r.eps_ch_streams;
    out["psi1_hat"] = r.psi1_hat;
    return out;
}

Json to_json(const RangeEstimate& e)
{
    Json subs = Json::array();
    for (const auto& s : e.per_subchannel)
        subs.push_back(Json{{"rx", s.rx},
                            {"ss", s.ss},
                            {"d_m", s.d_m},
                            {"weight", s.weight},
                            {"mad_m", s.mad_m},
                            {"rejected", s.rejected}});
    Json hyp = Json::array();
    for (std::size_t i = 0; i < e.hypothesis_set.size(); ++i)
        hyp.push_back(Json{{"d_m", e.hypothesis_set[i]}, {"rssi_mismatch_db", e.hypothesis_scores[i]}});
    return Json{{"d_hat_m", e.d_hat_m},
                {"d_base_m", e.d_base_m},
                {"rssi_used", e.rssi_used},
                {"chosen_index", e.chosen_index},
                {"hypotheses", hyp},
                {"per_subchannel", subs}};
}

void from_json(const Json& j, OfdmConfig& c, const std::string& path)
{
    require_object(j, path);
    field(j, "n_sc", c.n_sc, path);
    field(j, "n_nz", c.n_nz, path);
    field(j, "n_g", c.n_g, path);
    field(j, "n_cp", c.n_cp, path);
    field(j, "delta_f", c.delta_f, path);
    field(j, "f0", c.f0, path);
    field(j, "t_s", c.t_s, path);
    if (j.contains("data_indices"))
        field(j, "data_indices", c.data_indices, path);
    else if (j.contains("n_nz"))
        c.data_indices = symmetric_indices(c.n_nz);
}

void from_json(const Json& j, MimoConfig& m, const std::string& path)
{
    require_object(j, path);
    field(j, "n_tx", m.n_tx, path);
    field(j, "n_rx", m.n_rx, path);
    field(j, "n_ss", m.n_ss, path);
    field(j, "n_ltf", m.n_ltf, path);
}

void from_json(const Json& j, Scenario& s, const std::string& path)
{
    require_object(j, path);
    if (j.contains("ofdm"))
        from_json(j.at("ofdm"), s.ofdm, join(path, "ofdm"));
    if (j.contains("mimo"))
        from_json(j.at("mimo"), s.mimo, join(path, "mimo"));
    field(j, "distance_m", s.distance_m, path);
    field(j, "snr_db", s.snr_db, path);
    if (j.contains("snr_mode")) {
        std::string mode;
        field(j, "snr_mode", mode, path);
        if (mode == "fixed")
            s.snr_mode = SnrMode::Fixed;
        else if (mode == "path_loss")
            s.snr_mode = SnrMode::PathLoss;
        else
            throw ConfigError(join(path, "snr_mode") + ": expected fixed or path_loss");
    }
    field(j, "noise_floor_db", s.noise_floor_db, path);
    field(j, "n_packets", s.n_packets, path);
    field(j, "packet_interval_s", s.packet_interval_s, path);
    field(j, "coherence_time_s", s.coherence_time_s, path);
    field(j, "rng_seed", s.rng_seed, path);
    if (j.contains("nlos")) {
        const auto& n = j.at("nlos");
        const auto p = join(path, "nlos");
        require_object(n, p);
        field(n, "n_taps", s.nlos.n_taps, p);
        field(n, "decay_db_per_ns", s.nlos.decay_db_per_ns, p);
        field(n, "mean_excess_s", s.nlos.mean_excess_s, p);
        field(n, "min_excess_s", s.nlos.min_excess_s, p);
        field(n, "max_excess_s", s.nlos.max_excess_s, p);
        field(n, "rel_power_db", s.nlos.rel_power_db, p);
        field(n, "spreading_loss", s.nlos.spreading_loss, p);
    }
    if (j.contains("path_loss")) {
        const auto& n = j.at("path_loss");
        const auto p = join(path, "path_loss");
        require_object(n, p);
        field(n, "ref_rssi_db", s.path_loss.ref_rssi_db, p);
        field(n, "exponent", s.path_loss.exponent, p);
        field(n, "shadowing_db", s.path_loss.shadowing_db, p);
    }
    if (j.contains("impairments")) {
        const auto& n = j.at("impairments");
        const auto p = join(path, "impairments");
        auto& im = s.impairments;
        require_object(n, p);
        field(n, "enabled", im.enabled, p);
        field(n, "sfo_sigma", im.sfo_sigma, p);
        field(n, "sfo_mean_interval", im.sfo_mean_interval, p);
        field(n, "cfo_sigma", im.cfo_sigma, p);
        field(n, "cfo_mean_interval", im.cfo_mean_interval, p);
        field(n, "random_cpo", im.random_cpo, p);
        field(n, "sto_max", im.sto_max, p);
        field(n, "pre_max", im.pre_max, p);
        field(n, "fixed_shift", im.fixed_shift, p);
        field(n, "agc_sigma_db", im.agc_sigma_db, p);
    }
    if (j.contains("baseband")) {
        const auto& n = j.at("baseband");
        const auto p = join(path, "baseband");
        require_object(n, p);
        field(n, "delta_a", s.baseband.delta_a, p);
        field(n, "delta_b", s.baseband.delta_b, p);
        if (n.contains("mapping")) {
            std::string m;
            field(n, "mapping", m, p);
            s.baseband.mapping = spatial_mapping_from_string(m);
        }
        field(n, "window_alpha", s.baseband.window_alpha, p);
        field(n, "apply_window", s.baseband.apply_window, p);
    }
}

void from_json(const Json& j, SmoothingConfig& s, const std::string& path)
{
    require_object(j, path);
    field(j, "sub_len", s.sub_len, path);
    field(j, "use_fb", s.use_fb, path);
    field(j, "grid_step_s", s.grid_step_s, path);
    field(j, "model_order", s.model_order, path);
    field(j, "order_threshold", s.order_threshold, path);
    if (j.contains("bands")) {
        std::string b;
        field(j, "bands", b, path);
        s.bands = bands_from_string(b);
    }
}

void from_json(const Json& j, PipelineOptions& p, const std::string& path)
{
    require_object(j, path);
    if (j.contains("smoothing"))
        from_json(j.at("smoothing"), p.smoothing, join(path, "smoothing"));
    if (j.contains("calibration")) {
        const auto& c = j.at("calibration");
        const auto cp = join(path, "calibration");
        require_object(c, cp);
        if (c.contains("window_mode")) {
            std::string m;
            field(c, "window_mode", m, cp);
            p.calibration.window.mode = window_mode_from_string(m);
        }
        field(c, "window_alpha", p.calibration.window.window_alpha, cp);
        if (c.contains("poly")) {
            const auto& v = c.at("poly");
            if (!v.is_array() || v.size() != 3)
                throw ConfigError(join(cp, "poly") + ": expected [c3, c2, c1]");
            for (int i = 0; i < 3; ++i)
                p.calibration.window.poly[i] = get_double(v[i], join(cp, "poly"));
        }
        field(c, "per_stream", p.calibration.linearity.per_stream, cp);
        field(c, "mask_ratio", p.calibration.mask_ratio, cp);
    }
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        const auto ep = join(path, "estimator");
        require_object(e, ep);
        field(e, "peak_significance", p.peaks.significance, ep);
        field(e, "pre_rotation", p.peaks.pre_rotation, ep);
        field(e, "mad_factor", p.fusion.mad_factor, ep);
        field(e, "mad_floor_m", p.fusion.mad_floor_m, ep);
        field(e, "block_packets", p.block_packets, ep);
        field(e, "max_range_m", p.hypothesis.max_range_m, ep);
        field(e, "hypothesis_spacing_m", p.hypothesis.spacing_m, ep);
        field(e, "resolve", p.resolve, ep);
    }
    if (j.contains("path_loss")) {
        const auto& n = j.at("path_loss");
        const auto pp = join(path, "path_loss");
        require_object(n, pp);
        field(n, "ref_rssi_db", p.path_loss.ref_rssi_db, pp);
        field(n, "exponent", p.path_loss.exponent, pp);
        field(n, "shadowing_db", p.path_loss.shadowing_db, pp);
    }
}

CsiTensor tensor_from_json(const Json& j, const std::string& path)
{
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty() || !j[0][0].is_array())
        throw ConfigError(path + ": expected nested [rx][ss][k] arrays");
    const int n_rx = static_cast<int>(j.size());
    const int n_ss = static_cast<int>(j[0].size());
    const int n_k = static_cast<int>(j[0][0].size());
    CsiTensor t(n_rx, n_ss, n_k);
    for (int rx = 0; rx < n_rx; ++rx) {
        if (!j[rx].is_array() || static_cast<int>(j[rx].size()) != n_ss)
            throw ConfigError(path + ": ragged stream dimension");
        for (int ss = 0; ss < n_ss; ++ss) {
            const auto& s = j[rx][ss];
            if (!s.is_array() || static_cast<int>(s.size()) != n_k)
                throw ConfigError(path + ": ragged subcarrier dimension");
            for (int k = 0; k < n_k; ++k)
                t(rx, ss, k) = complex_from(s[k], path);
        }
    }
    if (!t.all_finite())
        throw ConfigError(path + ": non-finite CSI entry");
    return t;
}

void write_trace(std::ostream& os, const TraceFile& tf)
{
    Json header{{"format", "csirange-trace"},
                {"version", 1},
                {"ofdm", to_json(tf.ofdm)},
                {"mimo", to_json(tf.mimo)},
                {"scenario", tf.scenario},
                {"calibrated", tf.calibrated}};
    if (tf.cleaned) {
        Json masked = Json::array();
        for (int rx = 0; rx < tf.cleaned->csi.n_rx(); ++rx)
            for (int ss = 0; ss < tf.cleaned->csi.n_ss(); ++ss)
                if (tf.cleaned->is_masked(rx, ss))
                    masked.push_back(Json::array({rx, ss}));
        header["cleaned"] = Json{{"csi", to_json(tf.cleaned->csi)}, {"masked_streams", masked}};
    }
    if (tf.report)
        header["report"] = to_json(*tf.report);
    os << header.dump() << '\n';
    for (const auto& r : tf.records)
        os << Json{{"n", r.n}, {"t", r.t}, {"rssi_db", r.rssi_db}, {"csi", to_json(r.csi)}}.dump() << '\n';
}

void write_trace(const std::string& path, const TraceFile& tf)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot open '" + path + "' for writing");
    write_trace(os, tf);
}

TraceFile read_trace(std::istream& is)
{
    TraceFile tf;
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("trace: empty file");
    Json header;
    with_context("trace header", [&] { header = Json::parse(line); });
    require_object(header, "trace header");
    if (!header.contains("ofdm") || !header.contains("mimo"))
        throw ConfigError("trace header: needs ofdm and mimo objects");
    from_json(header.at("ofdm"), tf.ofdm, "ofdm");
    from_json(header.at("mimo"), tf.mimo, "mimo");
    tf.ofdm.validate();
    tf.mimo.validate();
    if (header.contains("scenario"))
        tf.scenario = header.at("scenario");
    field(header, "calibrated", tf.calibrated, "");
    if (header.contains("cleaned")) {
        const auto& c = header.at("cleaned");
        CleanedCsi cl;
        cl.csi = tensor_from_json(c.at("csi"), "cleaned.csi");
        cl.masked.assign(static_cast<std::size_t>(cl.csi.n_streams()), 0);
        for (const auto& m : c.value("masked_streams", Json::array())) {
            const int rx = m.at(0).get<int>(), ss = m.at(1).get<int>();
            if (rx < 0 || rx >= cl.csi.n_rx() || ss < 0 || ss >= cl.csi.n_ss())
                throw ConfigError("cleaned.masked_streams: index out of range");
            cl.masked[static_cast<std::size_t>(rx * cl.csi.n_ss() + ss)] = 1;
        }
        tf.cleaned = std::move(cl);
    }
    if (header.contains("report")) {
        const auto& r = header.at("report");
        CalibrationReport rep;
        with_context("report", [&] {
            rep.eps_ch = r.value("eps_ch", 0.0);
            rep.n_sto_hat = r.value("n_sto_hat", 0);
            rep.n_eff = r.value("n_eff", 0);
            rep.psi1_hat = r.value("psi1_hat", std::vector<double>{});
            rep.eps_ch_streams = r.value("eps_ch_streams", std::vector<double>{});
            for (const auto& m : r.value("masked_streams", Json::array()))
                rep.masked_streams.emplace_back(m.at(0).get<int>(), m.at(1).get<int>());
        });
        tf.report = std::move(rep);
    }

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const std::string where = "trace line " + std::to_string(lineno);
        Json j;
        with_context(where, [&] { j = Json::parse(line); });
        require_object(j, where);
        CsiRecord r;
        with_context(where, [&] {
            r.n = j.at("n").get<std::int64_t>();
            r.t = j.value("t", 0.0);
            r.rssi_db = j.at("rssi_db").get<double>();
        });
        if (!j.contains("csi"))
            throw ConfigError(where + ": missing csi");
        r.csi = tensor_from_json(j.at("csi"), where + ".csi");
        if (r.csi.n_rx() != tf.mimo.n_rx || r.csi.n_ss() != tf.mimo.n_ss || r.csi.n_k() != tf.ofdm.n_data())
            throw ConfigError(where + ": CSI dimensions do not match the header");
        tf.records.push_back(std::move(r));
    }
    return tf;
}

TraceFile read_trace(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open trace '" + path + "'");
    return read_trace(is);
}

Json truth_to_json(const GroundTruth& gt)
{
    Json segs = Json::array();
    for (const auto& s : gt.segments)
        segs.push_back(Json{{"first_packet", s.first_packet}, {"taps", to_json(s.channel)}});
    Json imp = Json::array();
    for (const auto& st : gt.impairments)
        imp.push_back(to_json(st));
    return Json{{"distance_m", gt.distance_m}, {"taps", segs}, {"per_packet_impairments", imp}};
}

GroundTruth truth_from_json(const Json& j)
{
    GroundTruth gt;
    with_context("truth", [&] {
        gt.distance_m = j.at("distance_m").get<double>();
        for (const auto& s : j.value("taps", Json::array())) {
            ChannelSegment seg;
            seg.first_packet = s.at("first_packet").get<int>();
            const auto& t = s.at("taps");
            const int n_rx = static_cast<int>(t.size());
            const int n_tx = n_rx > 0 ? static_cast<int>(t[0].size()) : 0;
            seg.channel = MultipathChannel(n_rx, n_tx);
            for (int rx = 0; rx < n_rx; ++rx)
                for (int tx = 0; tx < n_tx; ++tx)
                    for (const auto& tap : t[rx][tx])
                        seg.channel.taps(rx, tx).push_back(
                            {tap.at("tau").get<double>(), complex_from(tap.at("beta"), "truth.taps")});
            gt.segments.push_back(std::move(seg));
        }
        for (const auto& st : j.value("per_packet_impairments", Json::array())) {
            ImpairmentState s;
            s.n_sto = st.at("n_sto").get<int>();
            s.eps_pre = st.at("eps_pre").get<int>();
            s.sfo_phase_slope = st.at("sfo_phase_slope").get<double>();
            s.cfo_phase = st.at("cfo_phase").get<double>();
            s.phi_c = st.at("phi_c").get<double>();
            s.alpha_agc = st.at("alpha_agc").get<double>();
            gt.impairments.push_back(s);
        }
    });
    return gt;
}

Json read_json_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open '" + path + "'");
    Json j;
    with_context(path, [&] { j = Json::parse(is); });
    return j;
}

void write_json_file(const std::string& path, const Json& j)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot open '" + path + "' for writing");
    os << j.dump(2) << '\n';
}

} // namespace csirange::io
