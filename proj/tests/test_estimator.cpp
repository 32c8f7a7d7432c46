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

#include <cmath>
#include <random>

#include "csirange/errors.hpp"
#include "csirange/estimator.hpp"
#include "csirange/simulator.hpp"

using namespace csirange;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Complex> paths_cfr(const OfdmConfig& cfg, const std::vector<Tap>& taps)
{
    MultipathChannel ch(1, 1);
    ch.taps(0, 0) = taps;
    return channel_cfr(cfg, ch, 0, 0);
}

std::vector<Complex> noise_vector(int n, double sigma, Rng& rng)
{
    std::normal_distribution<double> g(0.0, sigma / std::sqrt(2.0));
    std::vector<Complex> v(static_cast<std::size_t>(n));
    for (auto& x : v)
        x = Complex(g(rng), g(rng));
    return v;
}

Eigen::MatrixXcd random_hermitian(int n, Rng& rng)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

CleanedCsi flat_cleaned(int n_rx, int n_ss, const std::vector<double>& gains)
{
    CleanedCsi c;
    c.csi = CsiTensor(n_rx, n_ss, 56);
    for (int rx = 0; rx < n_rx; ++rx)
        for (int ss = 0; ss < n_ss; ++ss)
            for (auto& v : c.csi.stream(rx, ss))
                v = gains[static_cast<std::size_t>(rx * n_ss + ss)];
    c.masked.assign(static_cast<std::size_t>(n_rx * n_ss), 0);
    return c;
}

} // namespace

TEST_CASE("steering_vector")
{
    const OfdmConfig cfg;
    for (const auto& v : steering_vector(cfg, 20, 0.0))
        CHECK(v == Complex(1.0, 0.0));
    const int L = 16;
    const auto a = steering_vector(cfg, L, 1.0 / (L * cfg.delta_f));
    Complex sum(0.0, 0.0);
    for (int r = 0; r < L; ++r) {
        CHECK(std::abs(std::pow(a[r], L) - 1.0) < 1e-9);
        CHECK(std::abs(a[r] - std::exp(Complex(0, -kTwoPi * r / L))) < 1e-12);
        sum += a[r];
    }
    // roots of unity sum to zero
    CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("SmoothingConfig")
{
    const OfdmConfig cfg;
    SmoothingConfig sm;
    CHECK(sm.n_windows(cfg) == 18);
    sm.sub_len = 29;
    CHECK_THROWS_AS(sm.validate(cfg), ConfigError);
    sm = SmoothingConfig{};
    sm.grid_step_s = 0.0;
    CHECK_THROWS_AS(sm.validate(cfg), ConfigError);
    sm = SmoothingConfig{};
    sm.bands = Bands::Lower;
    sm.sub_len = 28;
    CHECK(sm.n_windows(cfg) == 1);
    CHECK(bands_from_string(to_string(Bands::Upper)) == Bands::Upper);
    CHECK_THROWS_AS(bands_from_string("middle"), ConfigError);
}

TEST_CASE("smoothed_covariance structure")
{
    const OfdmConfig cfg;
    Rng rng(5);
    const auto h = paths_cfr(cfg, {{20e-9, 1.0}, {70e-9, Complex(0.3, 0.4)}});
    auto x = h;
    const auto n = noise_vector(cfg.n_data(), 0.1, rng);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += n[i];
    SmoothingConfig sm;
    const auto r = smoothed_covariance(x, cfg, sm);
    REQUIRE(r.rows() == 20);
    CHECK((r - r.adjoint()).norm() < 1e-12 * r.norm());
    CHECK((r - r.conjugate().reverse()).norm() < 1e-12 * r.norm());
    CHECK(hermitian_eig(r).values.minCoeff() > -1e-12 * r.norm());

    SECTION("matches a direct average of outer products")
    {
        sm.use_fb = false;
        const auto rf = smoothed_covariance(x, cfg, sm);
        Eigen::MatrixXcd ref = Eigen::MatrixXcd::Zero(20, 20);
        int count = 0;
        for (int begin : {0, 28})
            for (int b = begin; b + 20 <= begin + 28; ++b, ++count) {
                Eigen::VectorXcd v(20);
                for (int i = 0; i < 20; ++i)
                    v(i) = x[b + i];
                ref += v * v.adjoint();
            }
        ref /= count;
        CHECK((rf - ref).norm() < 1e-12 * ref.norm());
    }
}

TEST_CASE("smoothing restores rank for coherent paths")
{
    const OfdmConfig cfg;
    const auto h = paths_cfr(cfg, {{20e-9, 1.0}, {45e-9, 0.8}});
    SmoothingConfig one;
    one.bands = Bands::Lower;
    one.sub_len = 28;
    one.use_fb = false;
    const auto e1 = hermitian_eig(smoothed_covariance(h, cfg, one)).values;
    CHECK(e1(1) < 1e-12 * e1(0));
    const auto e2 = hermitian_eig(smoothed_covariance(h, cfg, SmoothingConfig{})).values;
    CHECK(e2(1) > 1e-6 * e2(0));
}

TEST_CASE("hermitian_eig")
{
    const auto id = hermitian_eig(Eigen::MatrixXcd::Identity(4, 4));
    for (int i = 0; i < 4; ++i)
        CHECK_THAT(id.values(i), WithinAbs(1.0, 1e-14));

    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 3.0;
    d(2, 2) = 2.0;
    const auto e = hermitian_eig(d);
    CHECK_THAT(e.values(0), WithinAbs(3.0, 1e-14));
    CHECK_THAT(e.values(1), WithinAbs(2.0, 1e-14));
    CHECK_THAT(e.values(2), WithinAbs(1.0, 1e-14));
    CHECK_THAT(std::abs(e.vectors(1, 0)), WithinAbs(1.0, 1e-14));
    CHECK_THAT(std::abs(e.vectors(2, 1)), WithinAbs(1.0, 1e-14));
    CHECK_THAT(std::abs(e.vectors(0, 2)), WithinAbs(1.0, 1e-14));

    Rng rng(12);
    const auto a = random_hermitian(20, rng);
    const auto eig = hermitian_eig(a);
    const Eigen::MatrixXcd rec = eig.vectors * eig.values.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    CHECK((rec - a).norm() / a.norm() < 1e-9);
    for (int i = 1; i < 20; ++i)
        CHECK(eig.values(i) <= eig.values(i - 1));

    Eigen::MatrixXcd bad = a;
    bad(0, 1) += 1.0;
    CHECK_THROWS_AS(hermitian_eig(bad), DomainError);
}

TEST_CASE("model_order")
{
    CHECK(model_order(std::vector<double>{1, 1e-9, 1e-10}) == 1);
    CHECK(model_order(std::vector<double>{1, 0.5, 1e-9}) == 2);
    CHECK(model_order(std::vector<double>{1, 0.5, 0.4}) == 2);

    const OfdmConfig cfg;
    const auto h = paths_cfr(cfg, {{10e-9, 1.0}, {80e-9, Complex(0.0, 0.7)}, {170e-9, 0.5}});
    const auto ev = hermitian_eig(smoothed_covariance(h, cfg, SmoothingConfig{})).values;
    CHECK(model_order(std::vector<double>(ev.data(), ev.data() + ev.size()), 1e-8) == 3);
}

TEST_CASE("music_spectrum")
{
    const OfdmConfig cfg;
    SmoothingConfig sm;
    SECTION("single on-grid path")
    {
        const auto h = paths_cfr(cfg, {{30e-9, 1.0}});
        const auto ps = music_spectrum(smoothed_covariance(h, cfg, sm), cfg, sm, 1);
        REQUIRE(!ps.peak_taus.empty());
        CHECK_THAT(ps.peak_taus[0], WithinAbs(30e-9, sm.grid_step_s));
        CHECK(ps.taus.size() == 3200);
        for (double v : ps.values)
            CHECK(v >= 0.0);
    }
    SECTION("white noise gives no path-like peak")
    {
        // Smoothing makes the noise covariance nearly Toeplitz, whose leading
        // eigenvector is close to a steering vector, so a single trial can
        // still show a modest bump. Count how often it stays under 10x.
        Rng rng(13);
        auto ratio = [&](const std::vector<std::vector<Complex>>& snaps) {
            std::vector<std::span<const Complex>> views(snaps.begin(), snaps.end());
            const auto ps = music_spectrum(smoothed_covariance(views, cfg, sm), cfg, sm, 1);
            std::vector<double> v = ps.values;
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return ps.peak_values.front() / v[v.size() / 2];
        };
        int flat = 0;
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            std::vector<std::vector<Complex>> snaps;
            for (int n = 0; n < 200; ++n)
                snaps.push_back(noise_vector(cfg.n_data(), 1.0, rng));
            const double r = ratio(snaps);
            flat += r < 10.0;
            worst = std::max(worst, r);
        }
        CHECK(flat >= 70);
        const double path = ratio({paths_cfr(cfg, {{30e-9, 1.0}})});
        CHECK(worst < 1e-3 * path);
    }
    SECTION("two paths 25 ns apart")
    {
        Rng rng(14);
        const double t1 = 40e-9, t2 = 65e-9;
        int ok = 0;
        for (int t = 0; t < 10; ++t) {
            const auto h = paths_cfr(cfg, {{t1, 1.0}, {t2, std::polar(1.0, 1.3)}});
            double p = 0.0;
            for (const auto& v : h)
                p += std::norm(v) / h.size();
            std::vector<std::vector<Complex>> snaps;
            for (int n = 0; n < 200; ++n) {
                auto x = noise_vector(cfg.n_data(), std::sqrt(p * 1e-3), rng);
                for (std::size_t i = 0; i < x.size(); ++i)
                    x[i] += h[i];
                snaps.push_back(x);
            }
            std::vector<std::span<const Complex>> views(snaps.begin(), snaps.end());
            const auto ps = music_spectrum(smoothed_covariance(views, cfg, sm), cfg, sm, 2);
            if (ps.peak_taus.size() >= 2) {
                const double a = std::min(ps.peak_taus[0], ps.peak_taus[1]);
                const double b = std::max(ps.peak_taus[0], ps.peak_taus[1]);
                ok += std::abs(a - t1) <= 5e-9 && std::abs(b - t2) <= 5e-9;
            }
        }
        CHECK(ok >= 8);
    }
    CHECK_THROWS_AS(music_spectrum(Eigen::MatrixXcd::Identity(20, 20), cfg, sm, 20), DomainError);
}

TEST_CASE("pdp_range")
{
    const OfdmConfig cfg;
    auto at = [&](double d) { return pdp_range(paths_cfr(cfg, {{d / kSpeedOfLight, 1.0}}), cfg); };
    CHECK_THAT(at(15.0), WithinAbs(cfg.sample_distance_m(), 1e-12));
    CHECK_THAT(at(15.0), WithinAbs(15.0, 0.02));
    CHECK(at(5.0) == 0.0);
    CHECK_THAT(at(30.0), WithinAbs(30.0, 0.05));
}

TEST_CASE("first_peak_delay")
{
    const OfdmConfig cfg;
    PseudoSpectrum ps;
    ps.taus.resize(3200);
    ps.values.assign(3200, 1.0);
    for (std::size_t g = 0; g < ps.taus.size(); ++g)
        ps.taus[g] = g * 1e-9;
    ps.peak_taus = {60e-9, 20e-9, 100e-9};
    ps.peak_values = {1000.0, 100.0, 1.5};
    ps.n_paths = 3;
    PeakPolicy pp;
    // 100 counts (log ratio 4.6 against 6.9 * 0.5), 1.5 does not
    CHECK_THAT(first_peak_delay(ps, cfg, pp), WithinAbs(20e-9, 1e-18));
    ps.n_paths = 1;
    CHECK_THAT(first_peak_delay(ps, cfg, pp), WithinAbs(60e-9, 1e-18));
    ps.n_paths = 2;
    ps.peak_taus = {60e-9, 3150e-9};
    CHECK_THAT(first_peak_delay(ps, cfg, pp), WithinAbs(-50e-9, 1e-15));
    ps.peak_taus.clear();
    ps.peak_values.clear();
    CHECK_THROWS_AS(first_peak_delay(ps, cfg, pp), DetectionError);
}

TEST_CASE("rotate_samples delays by whole samples")
{
    const OfdmConfig cfg;
    const auto h = paths_cfr(cfg, {{0.0, 1.0}});
    for (int r : {1, 4, 7}) {
        const auto p = power_delay_profile(cfg, rotate_samples(h, cfg, r));
        CHECK(std::max_element(p.begin(), p.end()) - p.begin() == r);
    }
}

TEST_CASE("subchannel_distance")
{
    const OfdmConfig cfg;
    SmoothingConfig sm;
    PeakPolicy pp;
    for (double d : {10.0, 22.0, 0.5}) {
        const auto h = paths_cfr(cfg, {{d / kSpeedOfLight, 1.0}});
        PseudoSpectrum ps;
        CHECK_THAT(subchannel_distance({h}, cfg, sm, pp, &ps), WithinAbs(d, 0.3));
        CHECK(!ps.values.empty());
    }
}

TEST_CASE("fuse")
{
    SECTION("consensus")
    {
        const auto c = flat_cleaned(2, 2, {1.0, 0.2, 3.0, 0.5});
        std::vector<SubchannelObservation> obs;
        for (int i = 0; i < 4; ++i)
            obs.push_back({i / 2, i % 2, 10.0, {10.0, 10.1, 9.9}});
        const auto e = fuse(obs, c);
        CHECK_THAT(e.d_base_m, WithinAbs(10.0, 1e-12));
        double w = 0.0;
        for (const auto& r : e.per_subchannel)
            w += r.weight;
        CHECK_THAT(w, WithinAbs(1.0, 1e-12));
    }
    SECTION("a weak subchannel with a wild value barely moves the result")
    {
        std::vector<double> g(9, 1.0);
        g[4] = std::pow(10.0, -30.0 / 20.0);
        const auto c = flat_cleaned(3, 3, g);
        std::vector<SubchannelObservation> obs;
        for (int i = 0; i < 9; ++i)
            obs.push_back({i / 3, i % 3, i == 4 ? 80.0 : 12.0, {}});
        const auto e = fuse(obs, c);
        CHECK(e.per_subchannel[4].weight < 0.05);
        CHECK_THAT(e.d_base_m, WithinAbs(12.0, 0.5));
    }
    SECTION("single subchannel")
    {
        const auto e = fuse({{0, 0, 7.5, {}}}, flat_cleaned(1, 1, {2.0}));
        CHECK(e.d_base_m == 7.5);
        CHECK(e.d_hat_m == 7.5);
    }
    SECTION("a jittery subchannel is rejected")
    {
        const auto c = flat_cleaned(1, 3, {1.0, 1.0, 1.0});
        std::vector<SubchannelObservation> obs{{0, 0, 10.0, {10.0, 10.1, 9.9}},
                                               {0, 1, 10.2, {10.2, 10.3, 10.1}},
                                               {0, 2, 40.0, {5.0, 40.0, 70.0}}};
        const auto e = fuse(obs, c);
        CHECK(e.per_subchannel[2].rejected);
        CHECK(e.per_subchannel[2].weight == 0.0);
        CHECK_THAT(e.d_base_m, WithinAbs(10.1, 1e-12));
    }
    SECTION("nothing left")
    {
        auto c = flat_cleaned(1, 2, {1.0, 1.0});
        c.masked = {1, 1};
        CHECK_THROWS_AS(fuse({{0, 0, 1.0, {}}, {0, 1, 1.0, {}}}, c), FusionError);
    }
}

TEST_CASE("resolve_hypothesis")
{
    const OfdmConfig cfg;
    const PathLossModel model;
    RangeEstimate e;
    e.d_base_m = 6.0;
    resolve_hypothesis(e, model.predict(36.0), model, cfg);
    CHECK_THAT(e.d_hat_m, WithinAbs(36.0, 0.05));
    CHECK(e.chosen_index == 2);
    CHECK(e.hypothesis_set.back() <= 100.0);
    CHECK(e.hypothesis_set.back() + cfg.sample_distance_m() > 100.0);
    CHECK(e.hypothesis_set.size() == e.hypothesis_scores.size());

    resolve_hypothesis(e, model.predict(6.0), model, cfg);
    CHECK(e.d_hat_m == 6.0);

    e.d_base_m = -5.0;
    resolve_hypothesis(e, model.predict(10.0), model, cfg);
    CHECK(e.hypothesis_set.front() >= 0.0);
    CHECK_THAT(e.d_hat_m, WithinAbs(-5.0 + cfg.sample_distance_m(), 1e-12));

    HypothesisOptions ho;
    ho.spacing_m = 15.0;
    e.d_base_m = 6.0;
    resolve_hypothesis(e, model.predict(36.0), model, cfg, ho);
    CHECK(e.d_hat_m == 36.0);

    PathLossModel bad;
    bad.exponent = 0.0;
    CHECK_THROWS_AS(resolve_hypothesis(e, 40.0, bad, cfg), ConfigError);
}

TEST_CASE("smoothing does not hurt single-path accuracy")
{
    const OfdmConfig cfg;
    Rng rng(15);
    std::uniform_real_distribution<double> delay(10e-9, 200e-9);
    SmoothingConfig smoothed;
    SmoothingConfig single;
    single.bands = Bands::Lower;
    single.sub_len = 28;
    single.use_fb = false;
    double se_smoothed = 0.0, se_single = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double tau = delay(rng);
        auto x = paths_cfr(cfg, {{tau, 1.0}});
        const auto n = noise_vector(cfg.n_data(), std::sqrt(0.01), rng);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += n[i];
        const auto a = music_spectrum(smoothed_covariance(x, cfg, smoothed), cfg, smoothed, 1);
        const auto b = music_spectrum(smoothed_covariance(x, cfg, single), cfg, single, 1);
        se_smoothed += std::pow(a.peak_taus.front() - tau, 2);
        se_single += std::pow(b.peak_taus.front() - tau, 2);
    }
    CHECK(se_smoothed <= se_single);
}
