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

#include "csirange/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace csirange::dsp {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative Cooley-Tukey; sign = -1 forward, +1 inverse (unscaled).
void fft_radix2(std::vector<Complex>& a, int sign)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        const Complex wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const Complex u = a[i + j];
                const Complex v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<Complex> direct(std::span<const Complex> x, int sign)
{
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = sign * kTwoPi * static_cast<double>((k * m) % n) / static_cast<double>(n);
            acc += x[m] * Complex(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

std::vector<Complex> dft(std::span<const Complex> x)
{
    if (is_power_of_two(x.size())) {
        std::vector<Complex> a(x.begin(), x.end());
        fft_radix2(a, -1);
        return a;
    }
    return direct(x, -1);
}

std::vector<Complex> idft(std::span<const Complex> X)
{
    std::vector<Complex> a;
    if (is_power_of_two(X.size())) {
        a.assign(X.begin(), X.end());
        fft_radix2(a, +1);
    } else {
        a = direct(X, +1);
    }
    const double scale = 1.0 / static_cast<double>(X.size());
    for (auto& v : a)
        v *= scale;
    return a;
}

double wrap_to_pi(double angle)
{
    double w = std::remainder(angle, kTwoPi);
    if (w <= -kPi)
        w += kTwoPi;
    return w;
}

std::vector<double> unwrap(std::span<const double> phase)
{
    std::vector<double> out(phase.begin(), phase.end());
    double offset = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        const double d = phase[i] - phase[i - 1];
        if (d > kPi)
            offset -= kTwoPi * std::ceil((d - kPi) / kTwoPi);
        else if (d < -kPi)
            offset += kTwoPi * std::ceil((-d - kPi) / kTwoPi);
        out[i] = phase[i] + offset;
    }
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two paired samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_line: abscissae are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

} // namespace csirange::dsp
