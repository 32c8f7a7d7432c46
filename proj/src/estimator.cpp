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

#include "csirange/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "csirange/errors.hpp"

namespace csirange {

namespace {

struct Run {
    int begin, len; // positions inside data_indices
    bool lower;
};

// Maximal runs of physically adjacent subcarriers.
std::vector<Run> contiguous_runs(const OfdmConfig& cfg)
{
    std::vector<Run> runs;
    int start = 0;
    for (int i = 1; i <= cfg.n_data(); ++i)
        if (i == cfg.n_data() || cfg.data_indices[i] - cfg.data_indices[i - 1] != 1) {
            runs.push_back({start, i - start, cfg.data_indices[start] < 0});
            start = i;
        }
    return runs;
}

bool uses(Bands b, const Run& r) { return b == Bands::Both || (b == Bands::Lower) == r.lower; }

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1)
        return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

} // namespace

void SmoothingConfig::validate(const OfdmConfig& cfg) const
{
    if (sub_len < 2)
        throw ConfigError("smoothing: sub_len must be >= 2");
    if (sub_len > cfg.half_band())
        throw ConfigError("smoothing: sub_len " + std::to_string(sub_len) + " exceeds the half band of " +
                          std::to_string(cfg.half_band()) + " subcarriers");
    if (!(grid_step_s > 0.0))
        throw ConfigError("smoothing: grid_step_s must be positive");
    if (model_order < 0 || model_order >= sub_len)
        throw ConfigError("smoothing: model_order must be 0 (auto) or below sub_len");
    if (!(order_threshold > 0.0 && order_threshold < 1.0))
        throw ConfigError("smoothing: order_threshold must lie in (0, 1)");
    if (n_windows(cfg) < 1)
        throw ConfigError("smoothing: no subarray fits inside the selected bands");
}

int SmoothingConfig::n_windows(const OfdmConfig& cfg) const
{
    int n = 0;
    for (const auto& r : contiguous_runs(cfg))
        if (uses(bands, r) && r.len >= sub_len)
            n += r.len - sub_len + 1;
    return n;
}

std::vector<Complex> steering_vector(const OfdmConfig& cfg, int sub_len, double tau)
{
    std::vector<Complex> a(static_cast<std::size_t>(sub_len));
    for (int r = 0; r < sub_len; ++r)
        a[r] = std::polar(1.0, -kTwoPi * std::fmod(r * cfg.delta_f * tau, 1.0));
    return a;
}

Eigen::MatrixXcd smoothed_covariance(std::span<const Complex> csi, const OfdmConfig& cfg, const SmoothingConfig& sm)
{
    return smoothed_covariance(std::vector<std::span<const Complex>>{csi}, cfg, sm);
}

Eigen::MatrixXcd smoothed_covariance(const std::vector<std::span<const Complex>>& snapshots, const OfdmConfig& cfg,
                                     const SmoothingConfig& sm)
{
    sm.validate(cfg);
    if (snapshots.empty())
        throw InsufficientDataError("covariance needs at least one snapshot");
    const int L = sm.sub_len;
    const auto runs = contiguous_runs(cfg);
    Eigen::MatrixXcd x(L, static_cast<Eigen::Index>(snapshots.size()) * sm.n_windows(cfg));
    Eigen::Index count = 0;
    for (const auto& s : snapshots) {
        if (static_cast<int>(s.size()) != cfg.n_data())
            throw DomainError("covariance: snapshot length does not match the grid");
        for (const auto& run : runs) {
            if (!uses(sm.bands, run))
                continue;
            for (int b = run.begin; b + L <= run.begin + run.len; ++b)
                x.col(count++) = Eigen::Map<const Eigen::VectorXcd>(s.data() + b, L);
        }
    }
    Eigen::MatrixXcd r = x * x.adjoint();
    r /= double(count);
    if (sm.use_fb) {
        // J conj(R) J reverses both axes of conj(R)
        Eigen::MatrixXcd back = r.conjugate().reverse();
        r = 0.5 * (r + back);
    }
    return r;
}

EigenPairs hermitian_eig(const Eigen::MatrixXcd& a)
{
    if (a.rows() != a.cols() || a.rows() == 0)
        throw DomainError("hermitian_eig: matrix must be square and non-empty");
    const double scale = std::max(a.norm(), 1e-300);
    if ((a - a.adjoint()).norm() > 1e-9 * scale)
        throw DomainError("hermitian_eig: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    if (es.info() != Eigen::Success)
        throw DomainError("hermitian_eig: decomposition did not converge");
    EigenPairs out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

int model_order(std::span<const double> eigenvalues, double threshold_ratio)
{
    const int n = static_cast<int>(eigenvalues.size());
    if (n < 2)
        return 1;
    const double top = eigenvalues[0];
    int p = n - 1;
    if (top > 0.0)
        for (int i = 1; i < n; ++i)
            if (eigenvalues[i] / top < threshold_ratio) {
                p = i;
                break;
            }
    return std::clamp(p, 1, n - 1);
}

namespace {

PseudoSpectrum scan(const EigenPairs& eig, const OfdmConfig& cfg, const SmoothingConfig& sm, int n_paths)
{
    const int L = static_cast<int>(eig.values.size());
    if (n_paths < 1 || n_paths >= L)
        throw DomainError("music: need 1 <= n_paths < sub_len");
    const Eigen::MatrixXcd en = eig.vectors.rightCols(L - n_paths);
    const Eigen::MatrixXcd p = en * en.adjoint();

    // a^H P a = c_0 + 2 Re sum_{d>0} c_d z^d with z = exp(2 pi i delta_f tau)
    // and c_d the d-th sub-diagonal sum of P.
    std::vector<Complex> c(static_cast<std::size_t>(L), Complex(0.0, 0.0));
    for (int row = 0; row < L; ++row)
        for (int col = 0; col <= row; ++col)
            c[row - col] += p(row, col);

    PseudoSpectrum ps;
    ps.n_paths = n_paths;
    const double period = 1.0 / cfg.delta_f;
    const int n_grid = std::max(1, static_cast<int>(std::floor(period / sm.grid_step_s + 1e-9)));
    ps.taus.resize(static_cast<std::size_t>(n_grid));
    ps.values.resize(static_cast<std::size_t>(n_grid));
    std::vector<double> cr(c.size()), ci(c.size());
    for (std::size_t d = 0; d < c.size(); ++d) {
        cr[d] = c[d].real();
        ci[d] = c[d].imag();
    }
    for (int g = 0; g < n_grid; ++g) {
        const double tau = g * sm.grid_step_s;
        const double th = kTwoPi * std::fmod(cfg.delta_f * tau, 1.0);
        const double zr = std::cos(th), zi = std::sin(th);
        double pr = zr, pi = zi;
        double den = cr[0];
        for (int d = 1; d < L; ++d) {
            den += 2.0 * (cr[d] * pr - ci[d] * pi);
            const double t = pr * zr - pi * zi;
            pi = pr * zi + pi * zr;
            pr = t;
        }
        if (den < 1e-18) {
            den = 1e-18;
            ps.clamped = true;
        }
        ps.taus[g] = tau;
        ps.values[g] = L / den;
    }

    std::vector<int> idx;
    for (int g = 0; g < n_grid; ++g) {
        const double v = ps.values[g];
        if (n_grid > 2 && v > ps.values[(g + n_grid - 1) % n_grid] && v >= ps.values[(g + 1) % n_grid])
            idx.push_back(g);
    }
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ps.values[a] > ps.values[b]; });
    for (int g : idx) {
        ps.peak_taus.push_back(ps.taus[g]);
        ps.peak_values.push_back(ps.values[g]);
    }
    return ps;
}

} // namespace

PseudoSpectrum music_spectrum(const Eigen::MatrixXcd& r, const OfdmConfig& cfg, const SmoothingConfig& sm,
                              int n_paths)
{
    return scan(hermitian_eig(r), cfg, sm, n_paths);
}

PseudoSpectrum music_from_covariance(const Eigen::MatrixXcd& r, const OfdmConfig& cfg, const SmoothingConfig& sm)
{
    const auto eig = hermitian_eig(r);
    int order = sm.model_order;
    if (order == 0) {
        std::vector<double> ev(eig.values.data(), eig.values.data() + eig.values.size());
        order = model_order(ev, sm.order_threshold);
    }
    return scan(eig, cfg, sm, order);
}

double pdp_range(std::span<const Complex> csi, const OfdmConfig& cfg)
{
    const auto pdp = power_delay_profile(cfg, csi);
    return first_strong_peak(pdp) * cfg.sample_distance_m();
}

namespace {

// Vertex of the parabola through the log-spectrum at the peak and its two
// neighbours; stays within half a grid step of the scan point.
double refine_peak(const PseudoSpectrum& ps, double tau)
{
    const std::size_t n = ps.taus.size();
    if (n < 3 || ps.values.size() != n)
        return tau;
    const auto it = std::lower_bound(ps.taus.begin(), ps.taus.end(), tau);
    if (it == ps.taus.end() || *it != tau)
        return tau;
    const std::size_t g = static_cast<std::size_t>(it - ps.taus.begin());
    const double lo = ps.values[(g + n - 1) % n], mid = ps.values[g], hi = ps.values[(g + 1) % n];
    if (!(lo > 0.0 && mid > 0.0 && hi > 0.0))
        return tau;
    const double a = std::log(lo), b = std::log(mid), c = std::log(hi);
    const double curv = a - 2.0 * b + c;
    if (!(curv < 0.0))
        return tau;
    const double shift = std::clamp(0.5 * (a - c) / curv, -0.5, 0.5);
    return tau + shift * (ps.taus[1] - ps.taus[0]);
}

} // namespace

double first_peak_delay(const PseudoSpectrum& ps, const OfdmConfig& cfg, const PeakPolicy& pp)
{
    if (ps.peak_taus.empty())
        throw DetectionError("pseudo-spectrum has no peaks");
    const double period = 1.0 / cfg.delta_f;
    const double wrap_from = period - std::max(pp.pre_rotation, 0) * cfg.t_s;
    const double med = std::max(median(ps.values), 1e-300);
    const double top = std::log(std::max(ps.peak_values.front(), med) / med);
    const std::size_t n = std::min<std::size_t>(ps.peak_taus.size(), std::max(ps.n_paths, 1));

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double level = std::log(std::max(ps.peak_values[i], med) / med);
        if (i > 0 && level < pp.significance * top)
            continue;
        double tau = refine_peak(ps, ps.peak_taus[i]);
        if (tau >= wrap_from)
            tau -= period;
        best = std::min(best, tau);
    }
    return best;
}

std::vector<Complex> rotate_samples(std::span<const Complex> csi, const OfdmConfig& cfg, int r)
{
    std::vector<Complex> out(csi.begin(), csi.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] *= std::polar(1.0, -kTwoPi * double(cfg.data_indices[i] * r % cfg.n_sc) / cfg.n_sc);
    return out;
}

double subchannel_distance(const std::vector<std::span<const Complex>>& snapshots, const OfdmConfig& cfg,
                           const SmoothingConfig& sm, const PeakPolicy& pp, PseudoSpectrum* spectrum)
{
    auto ps = music_from_covariance(smoothed_covariance(snapshots, cfg, sm), cfg, sm);
    double tau = first_peak_delay(ps, cfg, pp);
    if (pp.pre_rotation > 0 && tau < sm.grid_step_s) {
        std::vector<std::vector<Complex>> rotated;
        rotated.reserve(snapshots.size());
        for (const auto& s : snapshots)
            rotated.push_back(rotate_samples(s, cfg, pp.pre_rotation));
        std::vector<std::span<const Complex>> views(rotated.begin(), rotated.end());
        ps = music_from_covariance(smoothed_covariance(views, cfg, sm), cfg, sm);
        tau = first_peak_delay(ps, cfg, pp) - pp.pre_rotation * cfg.t_s;
    }
    if (spectrum)
        *spectrum = std::move(ps);
    return tau * kSpeedOfLight;
}

RangeEstimate fuse(const std::vector<SubchannelObservation>& obs, const CleanedCsi& cleaned, const FusionOptions& fo)
{
    RangeEstimate est;
    std::vector<double> mads;
    for (const auto& o : obs) {
        if (cleaned.is_masked(o.rx, o.ss))
            continue;
        SubchannelResult r;
        r.rx = o.rx;
        r.ss = o.ss;
        r.d_m = o.d_m;
        if (o.block_d_m.size() >= 2) {
            const double m = median(o.block_d_m);
            std::vector<double> dev;
            for (double v : o.block_d_m)
                dev.push_back(std::abs(v - m));
            r.mad_m = median(dev);
        }
        mads.push_back(r.mad_m);
        est.per_subchannel.push_back(r);
    }
    if (est.per_subchannel.empty())
        throw FusionError("fusion: every subchannel is masked");

    const double limit = fo.mad_factor * std::max(median(mads), fo.mad_floor_m);
    double wsum = 0.0;
    for (auto& r : est.per_subchannel) {
        r.rejected = r.mad_m > limit;
        if (r.rejected)
            continue;
        double mag = 0.0;
        for (const auto& v : cleaned.csi.stream(r.rx, r.ss))
            mag += std::abs(v);
        r.weight = mag / cleaned.csi.n_k();
        wsum += r.weight;
    }
    if (!(wsum > 0.0))
        throw FusionError("fusion: every subchannel was rejected");

    est.d_base_m = 0.0;
    for (auto& r : est.per_subchannel) {
        r.weight = r.rejected ? 0.0 : r.weight / wsum;
        est.d_base_m += r.weight * r.d_m;
    }
    est.d_hat_m = est.d_base_m;
    return est;
}

void resolve_hypothesis(RangeEstimate& est, double rssi_obs, const PathLossModel& model, const OfdmConfig& cfg,
                        const HypothesisOptions& ho)
{
    if (!(model.exponent > 0.0) || !std::isfinite(model.ref_rssi_db))
        throw ConfigError("hypothesis: path loss model is empty or invalid");
    if (!std::isfinite(rssi_obs))
        throw DomainError("hypothesis: RSSI must be finite");
    const double step = ho.spacing_m > 0.0 ? ho.spacing_m : cfg.sample_distance_m();

    est.hypothesis_set.clear();
    est.hypothesis_scores.clear();
    for (int j = 0;; ++j) {
        const double d = est.d_base_m + j * step;
        if (d > ho.max_range_m && !est.hypothesis_set.empty())
            break;
        if (d < 0.0)
            continue;
        est.hypothesis_set.push_back(d);
        est.hypothesis_scores.push_back(std::abs(model.predict(d) - rssi_obs));
        if (d > ho.max_range_m)
            break;
    }
    const auto it = std::min_element(est.hypothesis_scores.begin(), est.hypothesis_scores.end());
    est.chosen_index = static_cast<int>(it - est.hypothesis_scores.begin());
    est.d_hat_m = est.hypothesis_set[static_cast<std::size_t>(est.chosen_index)];
    est.rssi_used = rssi_obs;
}

std::string to_string(Bands b)
{
    switch (b) {
    case Bands::Lower:
        return "lower";
    case Bands::Upper:
        return "upper";
    default:
        return "both";
    }
}

Bands bands_from_string(const std::string& s)
{
    if (s == "both")
        return Bands::Both;
    if (s == "lower")
        return Bands::Lower;
    if (s == "upper")
        return Bands::Upper;
    throw ConfigError("bands: expected both, lower or upper, got '" + s + "'");
}

} // namespace csirange
