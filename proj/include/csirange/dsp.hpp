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

#include <complex>
#include <span>
#include <vector>

namespace csirange {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace dsp {

// Forward DFT, X[k] = sum_m x[m] exp(-2 pi i k m / N). Radix-2 for powers of
// two, direct evaluation otherwise.
std::vector<Complex> dft(std::span<const Complex> x);

// Inverse DFT with 1/N normalisation, x[m] = 1/N sum_k X[k] exp(+2 pi i k m / N).
std::vector<Complex> idft(std::span<const Complex> X);

// Wrap an angle to (-pi, pi].
double wrap_to_pi(double angle);

// Standard +-pi jump correction along the sequence.
std::vector<double> unwrap(std::span<const double> phase);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

} // namespace dsp
} // namespace csirange
